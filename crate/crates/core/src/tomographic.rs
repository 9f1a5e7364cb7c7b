//! Guessing probability when the state and the measurements are known.
//!
//! The adversary knows a decomposition `rho = sum_C rho_C` into
//! subnormalized states, one per outcome string `C = (c_1, ..., c_m)`, and
//! guesses `c_z` when the source emits `rho_C`. Her success probability for
//! settings `z` drawn with weights `q_z` is `sum_C tr(rho_C M_C)` with
//! `M_C = sum_z q_z Pi^z_{c_z}`; maximizing over decompositions is an SDP.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::optimize::{multistart, softmax, unit_from_angles, NelderMeadOptions};
use crate::quantum::{pauli_measurement, CMatrix, DensityMatrix, Measurement};
use crate::sdp::embed::{compress, hermitian_basis, HermitianSdp};
use crate::sdp::{self, BlockCoefficients, BlockSdp, Constraint, SdpStatus, Sense, SolverOptions};

/// Default limit on the number of outcome strings `d^m`.
pub const DEFAULT_STRING_CAP: usize = 256;

/// Decomposition problem for a fixed state and weighted settings.
#[derive(Debug, Clone)]
pub struct DecompositionProblem {
    state: DensityMatrix,
    settings: Vec<(Measurement, f64)>,
    strings: Vec<Vec<usize>>,
    effective: Vec<CMatrix>,
}

impl DecompositionProblem {
    pub fn new(state: DensityMatrix, settings: Vec<(Measurement, f64)>, cap: usize) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::InvalidArgument("at least one setting is required".into()));
        }
        let d = state.dim();
        for (m, q) in &settings {
            if m.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: m.dim() });
            }
            if !(*q >= 0.0) {
                return Err(Error::InvalidArgument(format!("weight {q} is negative")));
            }
        }
        let total: f64 = settings.iter().map(|s| s.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        let mut count: usize = 1;
        for (m, _) in &settings {
            count = count.saturating_mul(m.num_outcomes());
        }
        if count > cap {
            return Err(Error::CapExceeded { required: count, cap });
        }
        let mut strings = Vec::with_capacity(count);
        let mut effective = Vec::with_capacity(count);
        for k in 0..count {
            let mut rest = k;
            let mut string = Vec::with_capacity(settings.len());
            let mut op = CMatrix::zeros(d, d);
            for (m, q) in &settings {
                let c = rest % m.num_outcomes();
                rest /= m.num_outcomes();
                op += &m.effects()[c] * Complex::new(*q, 0.0);
                string.push(c);
            }
            strings.push(string);
            effective.push(op);
        }
        Ok(Self { state, settings, strings, effective })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn settings(&self) -> &[(Measurement, f64)] {
        &self.settings
    }

    /// Outcome strings, first setting varying fastest.
    pub fn strings(&self) -> &[Vec<usize>] {
        &self.strings
    }

    /// `M_C` for each string.
    pub fn effective_operators(&self) -> &[CMatrix] {
        &self.effective
    }

    /// `max_C tr(rho M_C)`, the value without decomposition knowledge.
    pub fn trivial_lower_bound(&self) -> f64 {
        self.effective
            .iter()
            .map(|m| self.state.expectation(m).map(|z| z.re).unwrap_or(f64::NAN))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Orthonormal basis `V` of the support of `rho`, real when `rho` is.
    ///
    /// Every `rho_C <= rho` lives on that support, so the problem can be
    /// posed over `V^dag rho_C V`, which has a strictly feasible point even
    /// for rank-deficient states.
    fn support(&self) -> CMatrix {
        const RANK_TOL: f64 = 1e-12;
        let rho = self.state.matrix();
        let d = rho.nrows();
        let (values, vectors): (Vec<f64>, CMatrix) = if rho.iter().all(|z| z.im == 0.0) {
            let e = rho.map(|z| z.re).symmetric_eigen();
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|v| Complex::new(v, 0.0)))
        } else {
            let e = rho.clone().symmetric_eigen();
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
        };
        let keep: Vec<usize> = (0..d).filter(|&k| values[k] > RANK_TOL).collect();
        if keep.len() == d {
            return CMatrix::identity(d, d);
        }
        CMatrix::from_fn(d, keep.len(), |i, j| vectors[(i, keep[j])])
    }

    /// Builds the SDP over the support of the state, using real symmetric
    /// blocks when all data are real.
    ///
    /// Real data lose nothing: the feasible set is closed under complex
    /// conjugation and the objective is invariant, so averaging an optimum
    /// with its conjugate gives a real optimum.
    fn build(&self) -> Result<(BlockSdp, bool, CMatrix)> {
        let v = self.support();
        let r = v.ncols();
        let k = self.effective.len();
        let rho = v.adjoint() * self.state.matrix() * &v;
        let effective: Vec<CMatrix> = self.effective.iter().map(|m| v.adjoint() * m * &v).collect();
        let real = |m: &CMatrix| m.iter().all(|z| z.im.abs() <= 1e-15 * (1.0 + z.re.abs()));
        if real(&rho) && effective.iter().all(real) {
            let mut objective = BlockCoefficients::new();
            for (b, m) in effective.iter().enumerate() {
                for i in 0..r {
                    for j in i..r {
                        let x = 0.5 * (m[(i, j)].re + m[(j, i)].re);
                        if x != 0.0 {
                            objective.add(b, i, j, x);
                        }
                    }
                }
            }
            let mut constraints = Vec::with_capacity(r * (r + 1) / 2);
            for i in 0..r {
                for j in i..r {
                    let mut c = BlockCoefficients::new();
                    let w = if i == j { 1.0 } else { 0.5 };
                    for b in 0..k {
                        c.add(b, i, j, w);
                    }
                    let rhs = 0.5 * (rho[(i, j)].re + rho[(j, i)].re);
                    constraints.push(Constraint { coefficients: c, rhs });
                }
            }
            Ok((BlockSdp::new(vec![r; k], Sense::Maximize, objective, constraints)?, true, v))
        } else {
            let herm = |m: &CMatrix| (m + m.adjoint()) * Complex::new(0.5, 0.0);
            let rho = herm(&rho);
            let mut h = HermitianSdp::new(vec![r; k], Sense::Maximize);
            for (b, m) in effective.iter().enumerate() {
                h.set_objective(b, herm(m))?;
            }
            for basis in hermitian_basis(r) {
                let rhs = (&rho * &basis).trace().re;
                h.add_constraint((0..k).map(|b| (b, basis.clone())).collect(), rhs)?;
            }
            Ok((h.to_real()?, false, v))
        }
    }

    pub fn solve(&self, options: &SolverOptions) -> Result<GuessingResult> {
        let (problem, real, v) = self.build()?;
        let sol = sdp::solve(&problem, options)?;
        if let SdpStatus::Infeasible(side) = sol.status {
            return Err(Error::SolverFailure(format!(
                "decomposition problem reported {side:?} infeasibility, which cannot happen"
            )));
        }
        let decomposition = sol
            .primal_blocks
            .iter()
            .map(|x| {
                let sigma = if real { x.map(|t| Complex::new(t, 0.0)) } else { compress(x) };
                &v * sigma * v.adjoint()
            })
            .collect();
        Ok(GuessingResult {
            guessing_probability: sol.primal_value,
            upper_bound: sol.dual_value,
            duality_gap: sol.duality_gap,
            status: sol.status,
            decomposition,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GuessingResult {
    /// Value of the returned decomposition.
    pub guessing_probability: f64,
    /// Dual certificate; the exact optimum lies between the two values.
    pub upper_bound: f64,
    pub duality_gap: f64,
    pub status: SdpStatus,
    /// Subnormalized `rho_C`, in the order of [`DecompositionProblem::strings`].
    pub decomposition: Vec<CMatrix>,
}

impl GuessingResult {
    pub fn is_certified(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// One setting, `G = max sum_c tr(rho_c Pi_c)` over `rho = sum_c rho_c`.
pub fn guessing_probability_single(rho: &DensityMatrix, m: &Measurement, options: &SolverOptions) -> Result<GuessingResult> {
    DecompositionProblem::new(rho.clone(), vec![(m.clone(), 1.0)], usize::MAX)?.solve(options)
}

pub fn guessing_probability_multi(problem: &DecompositionProblem, options: &SolverOptions) -> Result<GuessingResult> {
    problem.solve(options)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform,
    Fixed(Vec<f64>),
    /// Co-optimize weights with the settings.
    Optimize,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub local: NelderMeadOptions,
    pub solver: SolverOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            local: NelderMeadOptions { max_evaluations: 600, f_tol: 1e-10, x_tol: 1e-7, initial_step: 0.5 },
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementSearch {
    pub guessing_probability: f64,
    /// Chosen settings with their weights.
    pub settings: Vec<(Measurement, f64)>,
    /// Bloch direction of each qubit factor of each setting.
    pub directions: Vec<Vec<[f64; 3]>>,
}

/// Searches settings minimizing the guessing probability of `rho`.
///
/// Qubit states use rank-one projective settings; two-qubit states use
/// products of such settings. The inner SDP is exact, the outer search is a
/// multistart Nelder-Mead, so the returned value upper-bounds the minimum.
pub fn minimize_over_measurements(
    rho: &DensityMatrix,
    n_settings: usize,
    weights: Weights,
    opts: &SearchOptions,
) -> Result<MeasurementSearch> {
    if n_settings == 0 {
        return Err(Error::InvalidArgument("at least one setting is required".into()));
    }
    let factors = match rho.dim() {
        2 => 1,
        4 => 2,
        d => return Err(Error::InvalidArgument(format!("state dimension {d} is not one or two qubits"))),
    };
    let fixed = match &weights {
        Weights::Uniform => Some(vec![1.0 / n_settings as f64; n_settings]),
        Weights::Fixed(w) => {
            if w.len() != n_settings {
                return Err(Error::DimensionMismatch { expected: n_settings, found: w.len() });
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument("weights must lie on the simplex".into()));
            }
            Some(w.clone())
        }
        Weights::Optimize => None,
    };
    let n_angles = 2 * factors * n_settings;
    let decode = |p: &[f64]| -> (Vec<Vec<[f64; 3]>>, Vec<f64>) {
        let dirs = (0..n_settings)
            .map(|s| {
                (0..factors)
                    .map(|f| {
                        let k = 2 * (s * factors + f);
                        unit_from_angles(p[k], p[k + 1])
                    })
                    .collect()
            })
            .collect();
        let w = match &fixed {
            Some(w) => w.clone(),
            None => softmax(&p[n_angles..]),
        };
        (dirs, w)
    };
    let settings_of = |dirs: &[Vec<[f64; 3]>], w: &[f64]| -> Result<Vec<(Measurement, f64)>> {
        dirs.iter()
            .zip(w)
            .map(|(d, &q)| {
                let mut m = pauli_measurement(d[0])?;
                for n in &d[1..] {
                    m = m.product(&pauli_measurement(*n)?);
                }
                Ok((m, q))
            })
            .collect()
    };
    let cost = |p: &[f64]| -> f64 {
        let (dirs, w) = decode(p);
        settings_of(&dirs, &w)
            .and_then(|s| DecompositionProblem::new(rho.clone(), s, DEFAULT_STRING_CAP))
            .and_then(|prob| prob.solve(&opts.solver))
            .map(|r| r.guessing_probability)
            .unwrap_or(f64::INFINITY)
    };
    let dim = n_angles + if fixed.is_none() { n_settings } else { 0 };
    let init = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        use rand::Rng;
        (0..dim)
            .map(|k| {
                if k < n_angles {
                    if k % 2 == 0 {
                        // Uniform on the sphere.
                        rng.gen_range(-1.0f64..1.0).acos()
                    } else {
                        rng.gen_range(0.0..std::f64::consts::TAU)
                    }
                } else {
                    rng.gen_range(-0.5..0.5)
                }
            })
            .collect()
    };
    let best = multistart(cost, init, opts.restarts.max(1), 1, opts.seed, &opts.local)
        .ok_or_else(|| Error::SolverFailure("no restart completed".into()))?;
    let (dirs, w) = decode(&best.x);
    let settings = settings_of(&dirs, &w)?;
    Ok(MeasurementSearch { guessing_probability: best.value, settings, directions: dirs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{hermitian_eigenvalues, sigma_x, sigma_y, sigma_z, werner_state};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn pure_state_complementary_measurement() {
        let rho = DensityMatrix::from_bloch([0.0, 0.0, 1.0]).unwrap();
        let r = guessing_probability_single(&rho, &sigma_x(), &opts()).unwrap();
        assert!(r.is_certified());
        assert!((r.guessing_probability - 0.5).abs() < 1e-7);
    }

    #[test]
    fn mixed_state_gives_no_randomness() {
        let rho = DensityMatrix::maximally_mixed(2);
        let r = guessing_probability_single(&rho, &sigma_z(), &opts()).unwrap();
        assert!((r.guessing_probability - 1.0).abs() < 1e-7);
        assert!(r.duality_gap <= 1e-7);
    }

    #[test]
    fn bell_state_in_complementary_bases() {
        let rho = werner_state(1.0).unwrap();
        let m = sigma_z().product(&sigma_x());
        let r = guessing_probability_single(&rho, &m, &opts()).unwrap();
        assert!((r.guessing_probability - 0.25).abs() < 1e-6);
        assert!((crate::quantum::min_entropy(r.guessing_probability).unwrap() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn two_and_three_mutually_unbiased_settings() {
        let rho = DensityMatrix::maximally_mixed(2);
        let p = DecompositionProblem::new(rho.clone(), vec![(sigma_x(), 0.5), (sigma_z(), 0.5)], DEFAULT_STRING_CAP).unwrap();
        let r = p.solve(&opts()).unwrap();
        assert!((r.guessing_probability - (1.0 + FRAC_1_SQRT_2) / 2.0).abs() < 1e-7);
        let third = 1.0 / 3.0;
        let p = DecompositionProblem::new(
            rho,
            vec![(sigma_x(), third), (sigma_y(), third), (sigma_z(), 1.0 - 2.0 * third)],
            DEFAULT_STRING_CAP,
        )
        .unwrap();
        let r = p.solve(&opts()).unwrap();
        assert!((r.guessing_probability - (1.0 + 1.0 / 3f64.sqrt()) / 2.0).abs() < 1e-7);
    }

    #[test]
    fn decomposition_sums_to_state() {
        let rho = DensityMatrix::from_bloch([0.2, 0.3, -0.4]).unwrap();
        let p = DecompositionProblem::new(rho.clone(), vec![(sigma_x(), 0.3), (sigma_y(), 0.7)], DEFAULT_STRING_CAP).unwrap();
        let r = p.solve(&opts()).unwrap();
        let sum = r.decomposition.iter().fold(CMatrix::zeros(2, 2), |a, b| a + b);
        assert!((sum - rho.matrix()).norm() < 1e-7);
        for part in &r.decomposition {
            assert!(hermitian_eigenvalues(part)[0] > -1e-9);
        }
        let value: f64 = r
            .decomposition
            .iter()
            .zip(p.effective_operators())
            .map(|(x, m)| (x * m).trace().re)
            .sum();
        assert!((value - r.guessing_probability).abs() < 1e-7);
    }

    #[test]
    fn single_setting_consistency() {
        let rho = DensityMatrix::from_bloch([0.5, 0.1, 0.2]).unwrap();
        let m = pauli_measurement([0.6, 0.0, 0.8]).unwrap();
        let a = guessing_probability_single(&rho, &m, &opts()).unwrap();
        let b = DecompositionProblem::new(rho, vec![(m, 1.0)], 2).unwrap().solve(&opts()).unwrap();
        assert!((a.guessing_probability - b.guessing_probability).abs() < 1e-9);
    }

    #[test]
    fn string_cap_is_enforced() {
        let rho = DensityMatrix::maximally_mixed(2);
        let settings: Vec<_> = (0..9).map(|_| (sigma_z(), 1.0 / 9.0)).collect();
        let err = DecompositionProblem::new(rho, settings, DEFAULT_STRING_CAP).unwrap_err();
        assert_eq!(err, Error::CapExceeded { required: 512, cap: 256 });
    }

    #[test]
    fn pure_states_collapse_to_born_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = unit_from_angles(rng.gen_range(0.0..3.14), rng.gen_range(0.0..6.28));
            let n = unit_from_angles(rng.gen_range(0.0..3.14), rng.gen_range(0.0..6.28));
            let rho = DensityMatrix::from_bloch(r).unwrap();
            let m = pauli_measurement(n).unwrap();
            let g = guessing_probability_single(&rho, &m, &opts()).unwrap().guessing_probability;
            let born = m.probabilities(&rho).unwrap().into_iter().fold(0.0, f64::max);
            assert!((g - born).abs() < 1e-6, "{g} vs {born}");
        }
    }

    /// Random decomposition `rho^{1/2} S^{-1/2} W_C S^{-1/2} rho^{1/2}` with
    /// `S = sum_C W_C`.
    fn random_decomposition(rng: &mut impl Rng, rho: &CMatrix, k: usize) -> Vec<CMatrix> {
        let d = rho.nrows();
        let w: Vec<CMatrix> = (0..k)
            .map(|_| {
                let g = CMatrix::from_fn(d, d, |_, _| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                // Occasionally near rank one, which is where optima live.
                let scale = if rng.gen_bool(0.5) { 1.0 } else { 0.05 };
                let v = g.column(0).into_owned();
                &v * v.adjoint() + &g * g.adjoint() * Complex::new(scale, 0.0)
            })
            .collect();
        let s = w.iter().fold(CMatrix::zeros(d, d), |a, b| a + b);
        let inv_sqrt = |m: &CMatrix, p: f64| {
            let e = m.clone().symmetric_eigen();
            let diag = CMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex::new(l.max(0.0).powf(p), 0.0)));
            &e.eigenvectors * diag * e.eigenvectors.adjoint()
        };
        let s_half = inv_sqrt(&s, -0.5);
        let r_half = inv_sqrt(rho, 0.5);
        w.iter().map(|wc| &r_half * &s_half * wc * &s_half * &r_half).collect()
    }

    #[test]
    fn random_decompositions_never_beat_the_sdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..6 {
            let r = unit_from_angles(rng.gen_range(0.0..3.14), rng.gen_range(0.0..6.28));
            let len = rng.gen_range(0.0..0.95);
            let rho = DensityMatrix::from_bloch([r[0] * len, r[1] * len, r[2] * len]).unwrap();
            let m = if case % 2 == 0 { 1 } else { 2 };
            let mut settings = Vec::new();
            let q = rng.gen_range(0.2..0.8);
            for s in 0..m {
                let n = unit_from_angles(rng.gen_range(0.0..3.14), rng.gen_range(0.0..6.28));
                let w = if m == 1 { 1.0 } else if s == 0 { q } else { 1.0 - q };
                settings.push((pauli_measurement(n).unwrap(), w));
            }
            let p = DecompositionProblem::new(rho.clone(), settings, DEFAULT_STRING_CAP).unwrap();
            let g = p.solve(&opts()).unwrap().guessing_probability;
            assert!(g >= p.trivial_lower_bound() - 1e-9 && g <= 1.0 + 1e-9);
            let mut best: f64 = 0.0;
            for _ in 0..10_000 {
                let parts = random_decomposition(&mut rng, rho.matrix(), p.effective_operators().len());
                let v: f64 = parts.iter().zip(p.effective_operators()).map(|(x, m)| (x * m).trace().re).sum();
                best = best.max(v);
            }
            assert!(best <= g + 1e-6, "case {case}: oracle {best} exceeds SDP {g}");
            assert!(best >= p.trivial_lower_bound() - 1e-9);
        }
    }

    fn quick_search() -> SearchOptions {
        SearchOptions { restarts: 6, ..SearchOptions::default() }
    }

    #[test]
    fn search_single_setting_on_pure_state() {
        let rho = DensityMatrix::from_bloch([0.0, 0.0, 1.0]).unwrap();
        let s = minimize_over_measurements(&rho, 1, Weights::Uniform, &quick_search()).unwrap();
        assert!((s.guessing_probability - 0.5).abs() < 1e-5);
        assert!(s.directions[0][0][2].abs() < 1e-2);
    }

    #[test]
    fn search_on_mixed_state() {
        let rho = DensityMatrix::maximally_mixed(2);
        let one = minimize_over_measurements(&rho, 1, Weights::Uniform, &quick_search()).unwrap();
        assert!((one.guessing_probability - 1.0).abs() < 1e-6);
        let two = minimize_over_measurements(&rho, 2, Weights::Optimize, &quick_search()).unwrap();
        assert!((two.guessing_probability - (1.0 + FRAC_1_SQRT_2) / 2.0).abs() < 1e-4);
        let (a, b) = (two.directions[0][0], two.directions[1][0]);
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!(dot.abs() < 2e-2);
        assert!((two.settings[0].1 - 0.5).abs() < 2e-2);
        let three = minimize_over_measurements(&rho, 3, Weights::Uniform, &quick_search()).unwrap();
        assert!(three.guessing_probability <= two.guessing_probability + 1e-6);
        assert!(two.guessing_probability <= one.guessing_probability + 1e-6);
    }
}
