//! Guessing bounds for POVMs on the maximally mixed state.
//!
//! With ranks `r_c` of the effects, `G >= d_s / sum_c r_c`, so at most
//! `log2(sum_c r_c) - log2(d_s)` bits are certified. That amount is
//! carried by the dimensions a dilation adds to the system.

use crate::error::{Error, Result};
use crate::quantum::{hermitian_eigenvalues, min_entropy, CMatrix, DensityMatrix, Measurement, C64};
use crate::sdp::{SdpStatus, SolverOptions};
use crate::tomographic::guessing_probability_single;
use nalgebra::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigenvalues above this count toward an effect's rank.
pub const RANK_TOL: f64 = 1e-9;
/// Eigenvalues within this factor of [`RANK_TOL`] make the rank ambiguous.
const BORDERLINE_FACTOR: f64 = 1e3;
const MASS_TOL: f64 = 1e-8;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmAnalysis {
    pub system_dim: usize,
    pub effects: Vec<CMatrix>,
    pub ranks: Vec<usize>,
    /// Eigenvalues `mu_{c,k}` of each effect, descending, rank-many.
    pub eigenvalues: Vec<Vec<f64>>,
    pub sum_ranks: usize,
    /// `d_s / sum_c r_c`.
    pub guessing_lower_bound: f64,
    /// `log2(sum_c r_c) - log2(d_s)`.
    pub min_entropy_upper_bound: f64,
    /// Value `sum_c tr(Pi_c^2)/d_s` of the decomposition
    /// `rho_c = Pi_c / d_s`; at least the lower bound.
    pub decomposition_guessing: f64,
    /// `sum_c r_c / d_s` when it divides evenly: the ancilla dimension of a
    /// tensor-product dilation.
    pub ancilla_dim: Option<usize>,
    /// `sum_c r_c - d_s`: dimension added by a direct-sum dilation.
    pub hidden_dim: usize,
    /// `log2 d_h`, which bounds the certified bits when `d_s, d_h >= 2`.
    pub hidden_dim_bound: Option<f64>,
    /// Effects with an eigenvalue close to the rank threshold.
    pub warnings: Vec<String>,
}

pub fn analyze_povm(povm: &Measurement, system_dim: usize) -> Result<PovmAnalysis> {
    if povm.dim() != system_dim {
        return Err(Error::DimensionMismatch { expected: system_dim, found: povm.dim() });
    }
    let d = system_dim as f64;
    let mut ranks = Vec::new();
    let mut eigenvalues = Vec::new();
    let mut warnings = Vec::new();
    let mut mass = 0.0;
    let mut decomposition = 0.0;
    for (i, e) in povm.effects().iter().enumerate() {
        let mut ev = hermitian_eigenvalues(e);
        ev.reverse();
        mass += ev.iter().sum::<f64>();
        if ev.iter().any(|&l| l > RANK_TOL / BORDERLINE_FACTOR && l < RANK_TOL * BORDERLINE_FACTOR) {
            warnings.push(format!("effect {i} has an eigenvalue near the rank threshold {RANK_TOL:e}"));
        }
        let kept: Vec<f64> = ev.into_iter().filter(|&l| l > RANK_TOL).collect();
        decomposition += (e * e).trace().re / d;
        ranks.push(kept.len());
        eigenvalues.push(kept);
    }
    if (mass - d).abs() > MASS_TOL {
        return Err(Error::NotComplete((mass - d).abs()));
    }
    let sum_ranks: usize = ranks.iter().sum();
    let hidden_dim = sum_ranks - system_dim;
    Ok(PovmAnalysis {
        system_dim,
        effects: povm.effects().to_vec(),
        ranks,
        eigenvalues,
        sum_ranks,
        guessing_lower_bound: d / sum_ranks as f64,
        min_entropy_upper_bound: (sum_ranks as f64).log2() - d.log2(),
        decomposition_guessing: decomposition,
        ancilla_dim: (sum_ranks % system_dim == 0).then_some(sum_ranks / system_dim),
        hidden_dim,
        hidden_dim_bound: (system_dim >= 2 && hidden_dim >= 2).then(|| (hidden_dim as f64).log2()),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmVerification {
    pub analysis: PovmAnalysis,
    pub sdp_guessing: f64,
    pub sdp_upper_bound: f64,
    pub sdp_min_entropy: f64,
    pub duality_gap: f64,
    pub status: SdpStatus,
    /// `G_sdp >= d_s / sum r_c` and `H_sdp <= log2(sum r_c) - log2 d_s`,
    /// both to `1e-6`.
    pub bound_respected: bool,
}

/// Solves the single-setting guessing SDP for `povm` on `1/d_s` and checks it
/// against the rank bound.
pub fn verify_povm_vs_sdp(povm: &Measurement, system_dim: usize, options: &SolverOptions) -> Result<PovmVerification> {
    if system_dim > 4 || povm.num_outcomes() > 6 {
        return Err(Error::InvalidArgument(format!(
            "verification supports d_s <= 4 and at most 6 outcomes, got {system_dim} and {}",
            povm.num_outcomes()
        )));
    }
    let analysis = analyze_povm(povm, system_dim)?;
    let rho = DensityMatrix::maximally_mixed(system_dim);
    let sol = guessing_probability_single(&rho, povm, options)?;
    // The certified optimum lies below the dual value.
    let sdp_min_entropy = min_entropy(sol.upper_bound.min(1.0))?;
    let bound_respected = sol.upper_bound >= analysis.guessing_lower_bound - 1e-6
        && sdp_min_entropy <= analysis.min_entropy_upper_bound + 1e-6;
    Ok(PovmVerification {
        analysis,
        sdp_guessing: sol.guessing_probability,
        sdp_upper_bound: sol.upper_bound,
        sdp_min_entropy,
        duality_gap: sol.duality_gap,
        status: sol.status,
        bound_respected,
    })
}

/// `(I + n.sigma) w/2` for a unit Bloch vector `n`.
fn qubit_effect(n: [f64; 3], w: f64) -> CMatrix {
    (CMatrix::identity(2, 2) + crate::quantum::bloch_operator(n)) * c(w / 2.0)
}

/// Qubit SIC POVM: four effects `|psi_i><psi_i|/2` with tetrahedral Bloch
/// vectors.
pub fn sic_povm() -> Measurement {
    let s = 1.0 / 3f64.sqrt();
    let dirs = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    Measurement::povm("sic", dirs.iter().map(|&n| qubit_effect(n, 0.5)).collect()).expect("tetrahedral POVM is complete")
}

/// Qubit trine POVM: three effects `2/3 |psi_i><psi_i|` at 120 degrees in
/// the `xz` plane.
pub fn trine_povm() -> Measurement {
    let dirs: Vec<[f64; 3]> = (0..3)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            [t.sin(), 0.0, t.cos()]
        })
        .collect();
    Measurement::povm("trine", dirs.iter().map(|&n| qubit_effect(n, 2.0 / 3.0)).collect()).expect("trine POVM is complete")
}

/// A projective qubit measurement along `n`, as a POVM.
pub fn projective_povm(n: [f64; 3]) -> Result<Measurement> {
    Ok(crate::quantum::pauli_measurement(n)?.as_povm())
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal absorbed.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / c(d.norm()) } else { c(1.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// POVM on the system induced by the projective measurement in the basis
/// `unitary |c>` of system (x) ancilla, with the ancilla prepared in `|0>`.
/// Effects are `(I (x) <0|) U|c><c|U^dag (I (x) |0>)`, one per basis vector.
pub fn ancilla_povm(system_dim: usize, ancilla_dim: usize, unitary: &CMatrix) -> Result<Measurement> {
    let n = system_dim * ancilla_dim;
    if unitary.nrows() != n || unitary.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: unitary.nrows() });
    }
    let defect = (unitary.adjoint() * unitary - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!("matrix is not unitary (defect {defect:.3e})")));
    }
    let effects = (0..n)
        .map(|col| {
            // Ancilla index fastest: entry `s * d_a + 0` holds system component `s`.
            let v = nalgebra::DVector::from_fn(system_dim, |s, _| unitary[(s * ancilla_dim, col)]);
            &v * v.adjoint()
        })
        .collect();
    Measurement::povm(format!("dilation d_s={system_dim} d_a={ancilla_dim}"), effects)
}

/// Random POVM with `outcomes` effects of rank at most `max_rank`:
/// `Pi_c = S^{-1/2} G_c S^{-1/2}` with Wishart-like `G_c` and `S = sum G_c`.
pub fn random_povm(rng: &mut impl Rng, system_dim: usize, outcomes: usize, max_rank: usize) -> Result<Measurement> {
    if system_dim == 0 || outcomes == 0 || max_rank == 0 {
        return Err(Error::InvalidArgument("dimensions and counts must be positive".into()));
    }
    let raw: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let rank = rng.gen_range(1..=max_rank.min(system_dim));
            let a = CMatrix::from_fn(system_dim, rank, |_, _| {
                Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            &a * a.adjoint()
        })
        .collect();
    let total = raw.iter().fold(CMatrix::zeros(system_dim, system_dim), |acc, g| acc + g);
    let eig = ((&total + total.adjoint()) * c(0.5)).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 1e-8) {
        return Err(Error::InvalidArgument("random effects do not span the system".into()));
    }
    let inv_sqrt = &eig.eigenvectors
        * CMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(1.0 / l.sqrt())))
        * eig.eigenvectors.adjoint();
    let effects = raw
        .iter()
        .map(|g| {
            let e = &inv_sqrt * g * &inv_sqrt;
            (&e + e.adjoint()) * c(0.5)
        })
        .collect();
    Measurement::povm("random", effects)
}
