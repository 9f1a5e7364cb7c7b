//! Randomness of the maximally mixed qubit under N weighted projective
//! measurements.
//!
//! A sign string `C` selects outcome `c_k` of measurement `k`; the guessing
//! probability is `(1 + max_C |n_C|)/2` with `n_C = sum_k q_k c_k n_k`.
//! `g_N` is the minimum of `max_C |n_C|` over ensembles of size `N`.

use crate::error::{Error, Result};
use crate::optimize::{multistart, softmax, unit_from_angles, NelderMeadOptions};
use crate::quantum::{min_entropy, pauli_measurement, Measurement};
use rand::Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Largest ensemble handled by exhaustive sign-string enumeration.
pub const MAX_EXHAUSTIVE: usize = 24;
/// Largest ensemble accepted by [`optimize_gn`].
pub const MAX_OPTIMIZE: usize = 12;
pub const DEFAULT_RESTARTS: usize = 64;
const UNIT_TOL: f64 = 1e-12;
/// Relative slack under which two sign strings count as tied.
const TIE_TOL: f64 = 1e-12;

type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    directions: Vec<Vec3>,
    weights: Vec<f64>,
}

impl MeasurementEnsemble {
    pub fn new(directions: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidArgument("ensemble needs at least one measurement".into()));
        }
        if directions.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: directions.len(), found: weights.len() });
        }
        for n in &directions {
            if (norm(n) - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!("direction {n:?} is not a unit vector")));
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&q| !(q >= 0.0)) || (total - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!("weights {weights:?} are not on the simplex")));
        }
        Ok(Self { directions, weights })
    }

    /// Equal weights.
    pub fn uniform(directions: Vec<Vec3>) -> Result<Self> {
        let n = directions.len().max(1);
        Self::new(directions, vec![1.0 / n as f64; n])
    }

    /// Orthogonal axes `x, z` (N = 2) or `x, y, z` (N = 3), equal weights.
    pub fn orthogonal(n: usize) -> Result<Self> {
        match n {
            1 => Self::uniform(vec![[0.0, 0.0, 1.0]]),
            2 => Self::uniform(vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            3 => Self::uniform(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            _ => Err(Error::InvalidArgument(format!("no orthogonal ensemble of size {n}"))),
        }
    }

    /// `z` with weight `1 - 3q` and three in-plane directions `n_1, n_2, -n_3`
    /// 120 degrees apart, each with weight `q`.
    pub fn tripod(q: f64) -> Result<Self> {
        let at = |deg: f64| {
            let t = deg.to_radians();
            [t.cos(), t.sin(), 0.0]
        };
        let n3 = at(240.0);
        Self::new(vec![[0.0, 0.0, 1.0], at(0.0), at(120.0), [-n3[0], -n3[1], 0.0]], vec![1.0 - 3.0 * q, q, q, q])
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `n_C` for one sign string.
    pub fn bloch_vector(&self, signs: &SignString) -> Result<Vec3> {
        if signs.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: signs.len() });
        }
        let mut v = [0.0; 3];
        for ((n, q), &c) in self.directions.iter().zip(&self.weights).zip(signs.signs()) {
            for i in 0..3 {
                v[i] += q * f64::from(c) * n[i];
            }
        }
        Ok(v)
    }

    /// `sqrt(sum_k q_k^2)`, a lower bound on `max_C |n_C|`.
    pub fn norm_lower_bound(&self) -> f64 {
        self.weights.iter().map(|q| q * q).sum::<f64>().sqrt()
    }

    /// The ensemble as weighted `n.sigma` measurements with outcomes `+1, -1`.
    pub fn measurements(&self) -> Result<Vec<(Measurement, f64)>> {
        self.directions.iter().zip(&self.weights).map(|(n, &q)| Ok((pauli_measurement(*n)?, q))).collect()
    }
}

/// A choice `c_k` in `{-1, +1}` per measurement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignString(Vec<i8>);

impl SignString {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&c| c != 1 && c != -1) {
            return Err(Error::InvalidArgument(format!("signs {signs:?} must be +1 or -1")));
        }
        Ok(Self(signs))
    }

    /// The `index`-th string of length `n` in lexicographic order, `-1 < +1`.
    pub fn from_index(index: u64, n: usize) -> Self {
        Self((0..n).map(|k| if index >> (n - 1 - k) & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_exhaustive(n: usize) -> Result<()> {
    if n > MAX_EXHAUSTIVE {
        return Err(Error::InvalidArgument(format!(
            "{n} measurements exceed the exhaustive enumeration cap {MAX_EXHAUSTIVE}"
        )));
    }
    Ok(())
}

fn scaled(dirs: &[Vec3], weights: &[f64]) -> Vec<Vec3> {
    dirs.iter().zip(weights).map(|(d, q)| [q * d[0], q * d[1], q * d[2]]).collect()
}

/// Calls `visit(index, |n_C|^2)` for every sign string, `index` in
/// lexicographic order. Gray-code traversal makes each step one vector update.
fn for_each_squared_norm(scaled: &[Vec3], mut visit: impl FnMut(usize, f64)) {
    let n = scaled.len();
    let mut v = [0.0; 3];
    for s in scaled {
        for i in 0..3 {
            v[i] -= s[i];
        }
    }
    let mut gray: usize = 0;
    for step in 0usize..(1 << n) {
        if step > 0 {
            let bit = step.trailing_zeros() as usize;
            gray ^= 1 << bit;
            // Bit `b` set flips measurement `n - 1 - b` from -1 to +1.
            let s = &scaled[n - 1 - bit];
            let sign = if gray >> bit & 1 == 1 { 2.0 } else { -2.0 };
            for i in 0..3 {
                v[i] += sign * s[i];
            }
        }
        visit(gray, dot(&v, &v));
    }
}

/// `max_C |n_C|^2`, enumerating only strings with `c_1 = -1` since `C` and
/// `-C` give the same norm.
fn max_squared_norm(scaled: &[Vec3]) -> f64 {
    let Some((_, rest)) = scaled.split_first() else {
        return 0.0;
    };
    let mut best = 0.0f64;
    let mut v = [0.0; 3];
    for s in scaled {
        for i in 0..3 {
            v[i] -= s[i];
        }
    }
    let m = rest.len();
    let mut gray: usize = 0;
    for step in 0usize..(1 << m) {
        if step > 0 {
            let bit = step.trailing_zeros() as usize;
            gray ^= 1 << bit;
            let s = &rest[m - 1 - bit];
            let sign = if gray >> bit & 1 == 1 { 2.0 } else { -2.0 };
            for i in 0..3 {
                v[i] += sign * s[i];
            }
        }
        best = best.max(dot(&v, &v));
    }
    best
}

/// `max_C |n_C|` by exhaustive enumeration, with the lexicographically
/// smallest maximizer among (near-)ties.
pub fn max_bloch_norm(ensemble: &MeasurementEnsemble) -> Result<(f64, SignString)> {
    let n = ensemble.len();
    check_exhaustive(n)?;
    let sc = scaled(&ensemble.directions, &ensemble.weights);
    let mut sq = vec![0.0; 1 << n];
    for_each_squared_norm(&sc, |i, v| sq[i] = v);
    let best = sq.iter().copied().fold(0.0, f64::max);
    let index = sq.iter().position(|&v| v >= best * (1.0 - TIE_TOL)).unwrap_or(0);
    let signs = SignString::from_index(index as u64, n);
    let value = norm(&ensemble.bloch_vector(&signs)?);
    Ok((value, signs))
}

/// `G(1/2, ensemble) = (1 + max_C |n_C|)/2`.
pub fn guessing_white_noise(ensemble: &MeasurementEnsemble) -> Result<f64> {
    Ok((1.0 + max_bloch_norm(ensemble)?.0) / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnEstimate {
    /// Best `max_C |n_C|` found; an upper bound on `g_N`.
    pub value: f64,
    pub ensemble: MeasurementEnsemble,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnOptions {
    pub restarts: usize,
    pub co_optimize_weights: bool,
    pub seed: u64,
    pub local: NelderMeadOptions,
    /// Extra local searches restarted from each endpoint.
    pub polish: usize,
}

impl Default for GnOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            co_optimize_weights: true,
            seed: 0,
            local: NelderMeadOptions { max_evaluations: 4000, f_tol: 1e-14, x_tol: 1e-11, initial_step: 0.4 },
            polish: 20,
        }
    }
}

/// Parameter layout: the first direction is pinned to `z` and the second to
/// the `xz` half-plane, which removes the rotational gauge. Then one polar
/// angle for the second direction, polar and azimuthal angles for the rest,
/// and `N` softmax logits when weights are free.
fn decode(p: &[f64], n: usize, free_weights: bool) -> (Vec<Vec3>, Vec<f64>) {
    let mut dirs = Vec::with_capacity(n);
    dirs.push([0.0, 0.0, 1.0]);
    let mut it = p.iter().copied();
    if n > 1 {
        dirs.push(unit_from_angles(it.next().unwrap_or(0.0), 0.0));
    }
    for _ in 2..n {
        let theta = it.next().unwrap_or(0.0);
        let phi = it.next().unwrap_or(0.0);
        dirs.push(unit_from_angles(theta, phi));
    }
    let weights = if free_weights { softmax(&it.collect::<Vec<_>>()) } else { vec![1.0 / n as f64; n] };
    (dirs, weights)
}

fn angle_count(n: usize) -> usize {
    if n < 2 {
        0
    } else {
        1 + 2 * (n - 2)
    }
}

/// Upper bound on `g_N` by multistart Nelder-Mead over ensembles, with the
/// inner maximum over sign strings computed exactly.
pub fn optimize_gn(n: usize, options: &GnOptions) -> Result<GnEstimate> {
    if !(2..=MAX_OPTIMIZE).contains(&n) {
        return Err(Error::InvalidArgument(format!("N = {n} outside 2..={MAX_OPTIMIZE}")));
    }
    if options.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let free = options.co_optimize_weights;
    let dim = angle_count(n) + if free { n } else { 0 };
    let objective = |p: &[f64]| {
        let (dirs, weights) = decode(p, n, free);
        max_squared_norm(&scaled(&dirs, &weights)).sqrt()
    };
    let init = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let mut p = Vec::with_capacity(dim);
        for k in 0..angle_count(n) {
            // Polar angles come first in each pair after the leading one.
            let polar = k == 0 || k % 2 == 1;
            p.push(if polar { rng.gen_range(0.0..PI) } else { rng.gen_range(0.0..2.0 * PI) });
        }
        if free {
            p.extend((0..n).map(|_| rng.gen_range(-0.5..0.5)));
        }
        p
    };
    let best = multistart(objective, init, options.restarts, options.polish, options.seed, &options.local)
        .ok_or_else(|| Error::InvalidArgument("no restart produced a result".into()))?;
    let (mut dirs, weights) = decode(&best.x, n, free);
    for d in &mut dirs {
        let len = norm(d);
        d.iter_mut().for_each(|v| *v /= len);
    }
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|q| q / total).collect();
    let ensemble = MeasurementEnsemble::new(dirs, weights)?;
    let value = max_bloch_norm(&ensemble)?.0;
    Ok(GnEstimate { value, ensemble, evaluations: best.evaluations })
}

/// `N` points of a Fibonacci lattice on the upper half-sphere, equal-area.
pub fn hemisphere_lattice(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Number of probe directions used by [`sampled_max_norm`].
const PROBES: usize = 400;

/// Lower estimate of `max_C |n_C|` for large ensembles. Uses
/// `max_C |n_C| = max_u sum_k q_k |n_k . u|`: the best sign string for a
/// probe `u` is `c_k = sign(n_k . u)`, and alternating `u <- n_C/|n_C|`
/// never decreases the value.
pub fn sampled_max_norm(ensemble: &MeasurementEnsemble) -> f64 {
    let mut probes = hemisphere_lattice(PROBES);
    probes.extend(ensemble.directions.iter().copied());
    let mut best = 0.0f64;
    for u0 in probes {
        let mut u = u0;
        let mut value = 0.0;
        for _ in 0..100 {
            let mut v = [0.0; 3];
            for (n, q) in ensemble.directions.iter().zip(&ensemble.weights) {
                let c = if dot(n, &u) >= 0.0 { *q } else { -*q };
                for i in 0..3 {
                    v[i] += c * n[i];
                }
            }
            let len = norm(&v);
            if len <= value * (1.0 + 1e-15) || len == 0.0 {
                break;
            }
            value = len;
            u = [v[0] / len, v[1] / len, v[2] / len];
        }
        best = best.max(value);
    }
    best
}

/// `max_C |n_C|` for `N` equally weighted directions spread uniformly over the
/// half-sphere. Exact up to [`MAX_EXHAUSTIVE`], sampled beyond. A heuristic
/// ensemble: its value upper-bounds `g_N`.
pub fn hemisphere_limit_estimate(n: usize) -> Result<f64> {
    if n == 0 || n > 2000 {
        return Err(Error::InvalidArgument(format!("N = {n} outside 1..=2000")));
    }
    let ensemble = MeasurementEnsemble::uniform(hemisphere_lattice(n))?;
    if n <= 20 {
        Ok(max_bloch_norm(&ensemble)?.0)
    } else {
        Ok(sampled_max_norm(&ensemble))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationReport {
    /// `max_C |n_C|` for `{sigma_x, sigma_z}` with equal weights.
    pub g2: f64,
    pub guessing_probability: f64,
    /// `H_min` of one measurement on the optimal decomposition.
    pub min_entropy_each: f64,
    /// `H_min(sigma_z) + H_min(sigma_x)`.
    pub sum_bits: f64,
    /// `-2 log2((1 + 1/sqrt 2)/2)`, the uncertainty-relation bound.
    pub bound_bits: f64,
    /// Bloch vectors `+-n_C/|n_C|` of the optimal decomposition states.
    pub optimal_bloch_directions: [Vec3; 2],
    pub saturated: bool,
}

/// Checks that `{sigma_x, sigma_z}` on the maximally mixed qubit meets the
/// two-min-entropy uncertainty relation with equality, and that equality is
/// reached by eigenstates of `(sigma_x + sigma_z)/sqrt 2`.
pub fn check_uncertainty_saturation() -> Result<SaturationReport> {
    let ensemble = MeasurementEnsemble::orthogonal(2)?;
    let (g2, signs) = max_bloch_norm(&ensemble)?;
    let n_c = ensemble.bloch_vector(&signs)?;
    let len = norm(&n_c);
    let mut dir = [n_c[0] / len, n_c[1] / len, n_c[2] / len];
    // Report the `+` state first, oriented along `x + z`.
    if dot(&dir, &[1.0, 0.0, 1.0]) < 0.0 {
        dir = dir.map(|v| -v);
    }
    let guessing = (1.0 + g2) / 2.0;
    // With `rho_C` aligned to `n_C`, each setting alone is guessed with
    // `(1 + n_C . n_k / |n_C|)/2`, equal for both settings here.
    let each: Vec<f64> = ensemble
        .directions()
        .iter()
        .map(|n| min_entropy((1.0 + dot(n, &dir).abs()) / 2.0))
        .collect::<Result<_>>()?;
    let sum_bits: f64 = each.iter().sum();
    let bound_bits = -2.0 * ((1.0 + FRAC_1_SQRT_2) / 2.0).log2();
    Ok(SaturationReport {
        g2,
        guessing_probability: guessing,
        min_entropy_each: each[0],
        sum_bits,
        bound_bits,
        optimal_bloch_directions: [dir, dir.map(|v| -v)],
        saturated: (sum_bits - bound_bits).abs() <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::DensityMatrix;
    use crate::sdp::SolverOptions;
    use crate::tomographic::{guessing_probability_multi, DecompositionProblem};
    use proptest::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> Vec3 {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let r = (1.0 - z * z).sqrt();
        let v = [r * phi.cos(), r * phi.sin(), z];
        let l = norm(&v);
        v.map(|x| x / l)
    }

    fn random_ensemble(rng: &mut impl Rng, n: usize) -> MeasurementEnsemble {
        let dirs = (0..n).map(|_| random_unit(rng)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        MeasurementEnsemble::new(dirs, w).unwrap()
    }

    /// Direct enumeration without the Gray-code update.
    fn naive_max(e: &MeasurementEnsemble) -> (f64, SignString) {
        let n = e.len();
        let mut best = (-1.0, SignString::from_index(0, n));
        for i in 0..(1u64 << n) {
            let s = SignString::from_index(i, n);
            let v = norm(&e.bloch_vector(&s).unwrap());
            if v > best.0 * (1.0 + TIE_TOL) {
                best = (v, s);
            }
        }
        best
    }

    #[test]
    fn analytic_examples() {
        let one = MeasurementEnsemble::orthogonal(1).unwrap();
        assert!((max_bloch_norm(&one).unwrap().0 - 1.0).abs() < 1e-15);
        let two = MeasurementEnsemble::orthogonal(2).unwrap();
        assert!((max_bloch_norm(&two).unwrap().0 - FRAC_1_SQRT_2).abs() < 1e-15);
        let anti = MeasurementEnsemble::uniform(vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).unwrap();
        let (v, c) = max_bloch_norm(&anti).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(c.signs(), &[-1, 1]);
        let three = MeasurementEnsemble::orthogonal(3).unwrap();
        let g3 = guessing_white_noise(&three).unwrap();
        assert!((g3 - (1.0 + 1.0 / 3f64.sqrt()) / 2.0).abs() < 1e-15);
        let tripod = MeasurementEnsemble::tripod(3.0 / 13.0).unwrap();
        assert!((max_bloch_norm(&tripod).unwrap().0 - (4.0f64 / 13.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // All four strings of two orthogonal vectors tie.
        let (_, c) = max_bloch_norm(&MeasurementEnsemble::orthogonal(2).unwrap()).unwrap();
        assert_eq!(c.signs(), &[-1, -1]);
        assert_eq!(SignString::from_index(0b011, 3).signs(), &[-1, 1, 1]);
        assert!(max_bloch_norm(&MeasurementEnsemble::uniform(vec![[0.0, 0.0, 1.0]; 25]).unwrap()).is_err());
    }

    #[test]
    fn gray_code_matches_direct_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=10 {
            for _ in 0..20 {
                let e = random_ensemble(&mut rng, n);
                let (fast, c) = max_bloch_norm(&e).unwrap();
                let (slow, c_slow) = naive_max(&e);
                assert!((fast - slow).abs() < 1e-14);
                assert_eq!(c, c_slow);
            }
        }
    }

    #[test]
    fn cross_terms_cancel_over_all_strings() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 2..=8 {
            let e = random_ensemble(&mut rng, n);
            let mut total = 0.0;
            for i in 0..(1u64 << n) {
                let s = SignString::from_index(i, n);
                let v = norm(&e.bloch_vector(&s).unwrap()).powi(2);
                let diag: f64 = e.weights().iter().map(|q| q * q).sum();
                total += v - diag;
            }
            assert!(total.abs() < 1e-9, "n = {n}: {total}");
        }
    }

    #[test]
    fn max_norm_exceeds_weight_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=8);
            let e = random_ensemble(&mut rng, n);
            assert!(max_bloch_norm(&e).unwrap().0 >= e.norm_lower_bound() - 1e-12);
        }
    }

    #[test]
    fn analytic_path_matches_sdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = DensityMatrix::maximally_mixed(2);
        for n in 1..=4 {
            for _ in 0..5 {
                let e = random_ensemble(&mut rng, n);
                let problem = DecompositionProblem::new(rho.clone(), e.measurements().unwrap(), usize::MAX).unwrap();
                let sdp = guessing_probability_multi(&problem, &SolverOptions::default()).unwrap();
                assert!(sdp.is_certified());
                let analytic = guessing_white_noise(&e).unwrap();
                assert!((sdp.guessing_probability - analytic).abs() < 1e-6, "{} vs {analytic}", sdp.guessing_probability);
            }
        }
    }

    #[test]
    fn small_n_optimum_is_analytic() {
        let opts = GnOptions { restarts: 16, ..Default::default() };
        let g2 = optimize_gn(2, &opts).unwrap();
        assert!((g2.value - FRAC_1_SQRT_2).abs() < 1e-6, "{}", g2.value);
        let g3 = optimize_gn(3, &opts).unwrap();
        assert!((g3.value - 1.0 / 3f64.sqrt()).abs() < 1e-6, "{}", g3.value);
        for g in [&g2, &g3] {
            assert!(g.value >= g.ensemble.norm_lower_bound() - 1e-12);
        }
        let again = optimize_gn(3, &opts).unwrap();
        assert_eq!(g3, again);
        assert!(optimize_gn(13, &opts).is_err());
        assert!(optimize_gn(1, &opts).is_err());
    }

    #[test]
    fn hemisphere_spread_approaches_one_half() {
        let h6 = hemisphere_limit_estimate(6).unwrap();
        // Any ensemble bounds the minimum from above.
        assert!(h6 >= 0.5270 - 1e-3);
        let h: Vec<f64> = [50, 100, 200].iter().map(|&n| hemisphere_limit_estimate(n).unwrap()).collect();
        assert!(h[2] > 0.5 && h[2] < 0.5270 + 0.05, "{h:?}");
        assert!(h[1] <= h[0] + 0.01 && h[2] <= h[1] + 0.01, "{h:?}");
        // The sampled ascent agrees with enumeration where both apply.
        let e = MeasurementEnsemble::uniform(hemisphere_lattice(16)).unwrap();
        assert!((sampled_max_norm(&e) - max_bloch_norm(&e).unwrap().0).abs() < 1e-12);
    }

    #[test]
    fn two_settings_saturate_the_uncertainty_relation() {
        let r = check_uncertainty_saturation().unwrap();
        assert!((r.g2 - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((r.sum_bits - 0.456894).abs() < 1e-6, "{}", r.sum_bits);
        assert!(r.saturated);
        let s = FRAC_1_SQRT_2;
        for (d, sign) in r.optimal_bloch_directions.iter().zip([1.0, -1.0]) {
            for (a, b) in d.iter().zip([s, 0.0, s]) {
                assert!((a - sign * b).abs() < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn rejects_invalid_ensembles(q in 0.0f64..1.0) {
            prop_assert!(MeasurementEnsemble::new(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]], vec![q, 0.5]).is_err() == ((q + 0.5 - 1.0).abs() > UNIT_TOL));
            prop_assert!(MeasurementEnsemble::new(vec![[0.0, 0.0, 1.1]], vec![1.0]).is_err());
        }
    }
}
