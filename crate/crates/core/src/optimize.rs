//! Derivative-free local search and deterministic multistart.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop once the value spread of the simplex is below `f_tol` and every
    /// vertex is within `x_tol` of the best one.
    pub f_tol: f64,
    pub x_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evaluations: 4000, f_tol: 1e-12, x_tol: 1e-10, initial_step: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder-Mead with dimension-adaptive coefficients.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    if n == 0 {
        return Minimum { x: Vec::new(), value: f(x0), evaluations: 1 };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    while evals < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if worst - best <= opts.f_tol && spread <= opts.x_tol {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = along(alpha * rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
                    let v = eval(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals }
}

/// Runs `restarts` independent local searches from points drawn by `init`,
/// restart `k` using a generator seeded with `(seed, k)`. Each search is
/// restarted from its own endpoint `polish` extra times. Results do not
/// depend on the thread count.
pub fn multistart<F, I>(
    f: F,
    init: I,
    restarts: usize,
    polish: usize,
    seed: u64,
    opts: &NelderMeadOptions,
) -> Option<Minimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
    I: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    let runs: Vec<Minimum> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let x0 = init(&mut rng);
            let mut m = nelder_mead(&f, &x0, opts);
            for _ in 0..polish {
                let total = m.evaluations;
                let next = nelder_mead(&f, &m.x, opts);
                let improved = next.value < m.value;
                m = if improved { next } else { m };
                m.evaluations += total;
                if !improved {
                    break;
                }
            }
            m
        })
        .collect();
    runs.into_iter().min_by(|a, b| a.value.total_cmp(&b.value))
}

/// Unit vector from polar and azimuthal angles.
pub fn unit_from_angles(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Softmax map from unconstrained reals onto the open probability simplex.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &NelderMeadOptions { max_evaluations: 5000, ..Default::default() });
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m);
    }

    #[test]
    fn multistart_is_deterministic_and_finds_global_minimum() {
        // Two wells, the deeper one at x = 2.
        let f = |x: &[f64]| ((x[0] + 1.0).powi(2) + 0.1).min((x[0] - 2.0).powi(2));
        let init = |r: &mut ChaCha8Rng| vec![r.gen_range(-3.0..3.0)];
        let a = multistart(f, init, 8, 1, 5, &NelderMeadOptions::default()).unwrap();
        let b = multistart(f, init, 8, 1, 5, &NelderMeadOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!((a.x[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn softmax_is_on_simplex() {
        let w = softmax(&[0.3, -2.0, 5.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|&v| v > 0.0));
        let n = unit_from_angles(0.7, 2.1);
        assert!((n.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
