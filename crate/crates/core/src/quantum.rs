//! States, measurements, Born-rule statistics and Bell functionals.
//!
//! Conventions: tensor products are ordered Alice then Bob. Dichotomic
//! outcomes are labeled `+1` (index 0, effect `(I + n.sigma)/2`) and `-1`
//! (index 1).

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-10;
/// Normalization and no-signaling tolerance for statistics tables.
pub const STATISTICS_TOL: f64 = 1e-9;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Pauli matrices `[sigma_x, sigma_y, sigma_z]`.
pub fn paulis() -> [CMatrix; 3] {
    let i = Complex::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        CMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
        CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
    ]
}

/// `n . sigma` for a real 3-vector.
pub fn bloch_operator(n: [f64; 3]) -> CMatrix {
    let [x, y, z] = paulis();
    x * c(n[0]) + y * c(n[1]) + z * c(n[2])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * c(0.5);
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidArgument("matrix must be square and nonempty".into()));
    }
    Ok(m.nrows())
}

/// A Hermitian PSD matrix of unit trace, or of trace at most one when built
/// with [`DensityMatrix::subnormalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    subnormalized: bool,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let rho = Self::validated(matrix, true)?;
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { expected: 1.0, found: tr });
        }
        Ok(rho)
    }

    /// A decomposition component `q_c rho_c` with trace in `[0, 1]`.
    pub fn subnormalized(matrix: CMatrix) -> Result<Self> {
        let rho = Self::validated(matrix, true)?;
        let tr = rho.trace();
        if tr > 1.0 + TRACE_TOL {
            return Err(Error::BadTrace { expected: 1.0, found: tr });
        }
        Ok(Self { subnormalized: true, ..rho })
    }

    fn validated(matrix: CMatrix, check_psd: bool) -> Result<Self> {
        check_square(&matrix)?;
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        if check_psd {
            let lmin = hermitian_eigenvalues(&matrix)[0];
            if lmin < -PSD_TOL {
                return Err(Error::NotPositive(lmin));
            }
        }
        Ok(Self { matrix, subnormalized: false })
    }

    /// `|psi><psi|` for a normalized vector.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("state vector has norm {norm}")));
        }
        Self::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64), subnormalized: false }
    }

    /// Qubit state `(I + r.sigma)/2` with `|r| <= 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("Bloch vector has length {len}")));
        }
        Self::new((CMatrix::identity(2, 2) + bloch_operator(r)) * c(0.5))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - self.trace() * self.trace()).abs() <= tol
    }

    /// `<n.sigma>` for a qubit.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.dim() });
        }
        let p = paulis();
        Ok([0, 1, 2].map(|k| (&self.matrix * &p[k]).trace().re))
    }

    /// `tr(rho E)`.
    pub fn expectation(&self, op: &CMatrix) -> Result<C64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.nrows() });
        }
        Ok((&self.matrix * op).trace())
    }

    /// Reduced state on the first factor of `C^da (x) C^db`.
    pub fn partial_trace_second(&self, da: usize, db: usize) -> Result<DensityMatrix> {
        self.check_bipartite(da, db)?;
        let m = CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| self.matrix[(i * db + k, j * db + k)]).sum());
        Ok(Self { matrix: m, subnormalized: self.subnormalized })
    }

    /// Reduced state on the second factor of `C^da (x) C^db`.
    pub fn partial_trace_first(&self, da: usize, db: usize) -> Result<DensityMatrix> {
        self.check_bipartite(da, db)?;
        let m = CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| self.matrix[(k * db + i, k * db + j)]).sum());
        Ok(Self { matrix: m, subnormalized: self.subnormalized })
    }

    fn check_bipartite(&self, da: usize, db: usize) -> Result<()> {
        if da * db != self.dim() {
            return Err(Error::DimensionMismatch { expected: da * db, found: self.dim() });
        }
        Ok(())
    }
}

/// `|Phi+> = (|00> + |11>)/sqrt 2`.
pub fn phi_plus() -> DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)])
}

/// `V |Phi+><Phi+| + (1 - V) I/4`.
pub fn werner_state(v: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("visibility {v} outside [0, 1]")));
    }
    let phi = phi_plus();
    let m = &phi * phi.adjoint() * c(v) + CMatrix::identity(4, 4) * c((1.0 - v) / 4.0);
    DensityMatrix::new(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Projective,
    Povm,
}

/// A measurement given by its effects, in outcome order.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    label: String,
    effects: Vec<CMatrix>,
    kind: MeasurementKind,
    outcome_labels: Vec<i32>,
}

impl Measurement {
    pub fn new(
        label: impl Into<String>,
        effects: Vec<CMatrix>,
        kind: MeasurementKind,
        outcome_labels: Vec<i32>,
    ) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidArgument("measurement has no effects".into()));
        }
        if outcome_labels.len() != effects.len() {
            return Err(Error::DimensionMismatch { expected: effects.len(), found: outcome_labels.len() });
        }
        let d = check_square(&effects[0])?;
        let mut sum = CMatrix::zeros(d, d);
        for e in &effects {
            if check_square(e)? != d {
                return Err(Error::DimensionMismatch { expected: d, found: e.nrows() });
            }
            let defect = hermiticity_defect(e);
            if defect > HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
            let lmin = hermitian_eigenvalues(e)[0];
            if lmin < -PSD_TOL {
                return Err(Error::NotPositive(lmin));
            }
            sum += e;
        }
        let dev = (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > COMPLETENESS_TOL {
            return Err(Error::NotComplete(dev));
        }
        if kind == MeasurementKind::Projective {
            for (i, a) in effects.iter().enumerate() {
                for (j, b) in effects.iter().enumerate() {
                    let prod = a * b;
                    let want = if i == j { a.clone() } else { CMatrix::zeros(d, d) };
                    let dev = (prod - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if dev > COMPLETENESS_TOL {
                        return Err(Error::InvalidArgument(format!(
                            "effects {i} and {j} violate projector relations by {dev:.3e}"
                        )));
                    }
                }
            }
        }
        Ok(Self { label: label.into(), effects, kind, outcome_labels })
    }

    /// A POVM with outcomes labeled `0, 1, ...`.
    pub fn povm(label: impl Into<String>, effects: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..effects.len() as i32).collect();
        Self::new(label, effects, MeasurementKind::Povm, labels)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn outcome_labels(&self) -> &[i32] {
        &self.outcome_labels
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    /// Same effects, reclassified as a POVM.
    pub fn as_povm(&self) -> Self {
        Self { kind: MeasurementKind::Povm, ..self.clone() }
    }

    /// Observable `sum_c label_c Pi_c`.
    pub fn observable(&self) -> CMatrix {
        let d = self.dim();
        self.effects
            .iter()
            .zip(&self.outcome_labels)
            .fold(CMatrix::zeros(d, d), |acc, (e, &l)| acc + e * c(l as f64))
    }

    /// Joint measurement of `self (x) other`. Outcome `a + d_a b` pairs
    /// outcome `a` of `self` with outcome `b` of `other`.
    pub fn product(&self, other: &Measurement) -> Measurement {
        let na = self.num_outcomes();
        let mut effects = Vec::with_capacity(na * other.num_outcomes());
        for eb in &other.effects {
            for ea in &self.effects {
                effects.push(kron(ea, eb));
            }
        }
        let labels = (0..effects.len() as i32).collect();
        let kind = if self.kind == MeasurementKind::Projective && other.kind == MeasurementKind::Projective {
            MeasurementKind::Projective
        } else {
            MeasurementKind::Povm
        };
        Measurement { label: format!("{} x {}", self.label, other.label), effects, kind, outcome_labels: labels }
    }

    /// Outcome distribution `tr(rho Pi_c)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.effects.iter().map(|e| Ok(rho.expectation(e)?.re)).collect()
    }
}

/// Projective measurement of `n.sigma` with outcomes `+1, -1`.
pub fn pauli_measurement(direction: [f64; 3]) -> Result<Measurement> {
    let len = (direction.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction has length {len}, expected 1")));
    }
    let id = CMatrix::identity(2, 2);
    let n = bloch_operator(direction);
    let plus = (&id + &n) * c(0.5);
    let minus = (&id - &n) * c(0.5);
    let label = format!("({:.4},{:.4},{:.4}).sigma", direction[0], direction[1], direction[2]);
    Measurement::new(label, vec![plus, minus], MeasurementKind::Projective, vec![1, -1])
}

fn named_pauli(label: &str, direction: [f64; 3]) -> Measurement {
    let mut m = pauli_measurement(direction).expect("unit direction");
    m.label = label.into();
    m
}

pub fn sigma_x() -> Measurement {
    named_pauli("sigma_x", [1.0, 0.0, 0.0])
}

pub fn sigma_y() -> Measurement {
    named_pauli("sigma_y", [0.0, 1.0, 0.0])
}

pub fn sigma_z() -> Measurement {
    named_pauli("sigma_z", [0.0, 0.0, 1.0])
}

/// `(sigma_x + sigma_z)/sqrt 2`.
pub fn sigma_plus() -> Measurement {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    named_pauli("sigma_plus", [s, 0.0, s])
}

/// `(sigma_x - sigma_z)/sqrt 2`.
pub fn sigma_minus() -> Measurement {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    named_pauli("sigma_minus", [s, 0.0, -s])
}

/// Alice's two settings `(sigma_x, sigma_z)` of the standard Werner scenario.
pub fn standard_alice() -> Vec<Measurement> {
    vec![sigma_x(), sigma_z()]
}

/// Bob's four settings `(sigma_x, sigma_z, sigma_plus, sigma_minus)`.
pub fn standard_bob() -> Vec<Measurement> {
    vec![sigma_x(), sigma_z(), sigma_plus(), sigma_minus()]
}

/// Joint conditional distribution `P(a, b | x, y)` stored with `a` varying
/// fastest, then `b`, `x`, `y`.
///
/// One-party data use a single trivial Bob setting with one outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Statistics {
    outputs_a: usize,
    outputs_b: usize,
    inputs_a: usize,
    inputs_b: usize,
    probs: Vec<f64>,
}

impl Statistics {
    /// Validates nonnegativity, normalization and no-signaling.
    pub fn new(
        inputs_a: usize,
        inputs_b: usize,
        outputs_a: usize,
        outputs_b: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if inputs_a == 0 || inputs_b == 0 || outputs_a == 0 || outputs_b == 0 {
            return Err(Error::InvalidStatistics("empty input or output alphabet".into()));
        }
        let expected = inputs_a * inputs_b * outputs_a * outputs_b;
        if probs.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: probs.len() });
        }
        let s = Self { outputs_a, outputs_b, inputs_a, inputs_b, probs };
        s.validate()?;
        Ok(s)
    }

    pub fn single_party(inputs: usize, outputs: usize, probs: Vec<f64>) -> Result<Self> {
        Self::new(inputs, 1, outputs, 1, probs)
    }

    fn validate(&self) -> Result<()> {
        for (k, &p) in self.probs.iter().enumerate() {
            if !p.is_finite() || p < -STATISTICS_TOL {
                return Err(Error::InvalidStatistics(format!("entry {k} is {p}")));
            }
        }
        for x in 0..self.inputs_a {
            for y in 0..self.inputs_b {
                let total: f64 = (0..self.outputs_a)
                    .flat_map(|a| (0..self.outputs_b).map(move |b| (a, b)))
                    .map(|(a, b)| self.get(a, b, x, y))
                    .sum();
                if (total - 1.0).abs() > STATISTICS_TOL {
                    return Err(Error::InvalidStatistics(format!(
                        "distribution for settings ({x},{y}) sums to {total}"
                    )));
                }
            }
        }
        for x in 0..self.inputs_a {
            for a in 0..self.outputs_a {
                let m0 = self.marginal_alice_given(a, x, 0);
                for y in 1..self.inputs_b {
                    let m = self.marginal_alice_given(a, x, y);
                    if (m - m0).abs() > STATISTICS_TOL {
                        return Err(Error::InvalidStatistics(format!(
                            "Alice's marginal for x={x} depends on Bob's input"
                        )));
                    }
                }
            }
        }
        for y in 0..self.inputs_b {
            for b in 0..self.outputs_b {
                let m0 = self.marginal_bob_given(b, y, 0);
                for x in 1..self.inputs_a {
                    let m = self.marginal_bob_given(b, y, x);
                    if (m - m0).abs() > STATISTICS_TOL {
                        return Err(Error::InvalidStatistics(format!(
                            "Bob's marginal for y={y} depends on Alice's input"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        a + self.outputs_a * (b + self.outputs_b * (x + self.inputs_a * y))
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.probs[self.index(a, b, x, y)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn inputs_a(&self) -> usize {
        self.inputs_a
    }

    pub fn inputs_b(&self) -> usize {
        self.inputs_b
    }

    pub fn outputs_a(&self) -> usize {
        self.outputs_a
    }

    pub fn outputs_b(&self) -> usize {
        self.outputs_b
    }

    fn marginal_alice_given(&self, a: usize, x: usize, y: usize) -> f64 {
        (0..self.outputs_b).map(|b| self.get(a, b, x, y)).sum()
    }

    fn marginal_bob_given(&self, b: usize, y: usize, x: usize) -> f64 {
        (0..self.outputs_a).map(|a| self.get(a, b, x, y)).sum()
    }

    /// `P(a | x)`.
    pub fn marginal_alice(&self, a: usize, x: usize) -> f64 {
        self.marginal_alice_given(a, x, 0)
    }

    /// `P(b | y)`.
    pub fn marginal_bob(&self, b: usize, y: usize) -> f64 {
        self.marginal_bob_given(b, y, 0)
    }

    fn require_dichotomic(&self) -> Result<()> {
        if self.outputs_a != 2 || self.outputs_b != 2 {
            return Err(Error::InvalidStatistics("correlators need two outcomes per party".into()));
        }
        Ok(())
    }

    fn check_settings(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.inputs_a || y >= self.inputs_b {
            return Err(Error::InvalidStatistics(format!("settings ({x},{y}) are not in the table")));
        }
        Ok(())
    }

    /// `<A_x B_y>` with outcome index 0 meaning `+1`.
    pub fn correlator(&self, x: usize, y: usize) -> Result<f64> {
        self.require_dichotomic()?;
        self.check_settings(x, y)?;
        Ok(self.get(0, 0, x, y) + self.get(1, 1, x, y) - self.get(0, 1, x, y) - self.get(1, 0, x, y))
    }

    /// `<A_x>`.
    pub fn alice_mean(&self, x: usize) -> Result<f64> {
        self.require_dichotomic()?;
        self.check_settings(x, 0)?;
        Ok(self.marginal_alice(0, x) - self.marginal_alice(1, x))
    }

    /// `<B_y>`.
    pub fn bob_mean(&self, y: usize) -> Result<f64> {
        self.require_dichotomic()?;
        self.check_settings(0, y)?;
        Ok(self.marginal_bob(0, y) - self.marginal_bob(1, y))
    }

    /// Uniform `1/(d_A d_B)` on every setting pair.
    pub fn uniform(inputs_a: usize, inputs_b: usize, outputs_a: usize, outputs_b: usize) -> Self {
        let n = inputs_a * inputs_b * outputs_a * outputs_b;
        let p = 1.0 / (outputs_a * outputs_b) as f64;
        Self { outputs_a, outputs_b, inputs_a, inputs_b, probs: vec![p; n] }
    }
}

/// Exact Born-rule table `P(a, b | x, y) = tr(rho Pi^x_a (x) Pi^y_b)`.
pub fn born_statistics(
    state: &DensityMatrix,
    alice: &[Measurement],
    bob: &[Measurement],
) -> Result<Statistics> {
    if alice.is_empty() || bob.is_empty() {
        return Err(Error::InvalidArgument("each party needs at least one setting".into()));
    }
    let da = alice[0].dim();
    let db = bob[0].dim();
    let oa = alice[0].num_outcomes();
    let ob = bob[0].num_outcomes();
    if alice.iter().any(|m| m.dim() != da || m.num_outcomes() != oa)
        || bob.iter().any(|m| m.dim() != db || m.num_outcomes() != ob)
    {
        return Err(Error::InvalidArgument("settings of one party must share dimension and outcome count".into()));
    }
    if da * db != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: da * db });
    }
    let mut probs = vec![0.0; alice.len() * bob.len() * oa * ob];
    for (y, mb) in bob.iter().enumerate() {
        for (x, ma) in alice.iter().enumerate() {
            for (b, eb) in mb.effects().iter().enumerate() {
                for (a, ea) in ma.effects().iter().enumerate() {
                    let idx = a + oa * (b + ob * (x + alice.len() * y));
                    probs[idx] = state.expectation(&kron(ea, eb))?.re;
                }
            }
        }
    }
    Statistics::new(alice.len(), bob.len(), oa, ob, probs)
}

/// One-party table `P(c | z) = tr(rho Pi^z_c)`.
pub fn born_statistics_single(state: &DensityMatrix, settings: &[Measurement]) -> Result<Statistics> {
    if settings.is_empty() {
        return Err(Error::InvalidArgument("at least one setting is required".into()));
    }
    let d = settings[0].num_outcomes();
    let mut probs = Vec::with_capacity(settings.len() * d);
    for m in settings {
        if m.num_outcomes() != d {
            return Err(Error::InvalidArgument("settings must share an outcome count".into()));
        }
        probs.extend(m.probabilities(state)?);
    }
    Statistics::single_party(settings.len(), d, probs)
}

/// Linear functional `sum c_xy <A_x B_y>` over correlators.
#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    pub name: String,
    pub terms: Vec<(usize, usize, f64)>,
    pub classical_bound: f64,
}

impl BellFunctional {
    pub fn new(name: impl Into<String>, terms: Vec<(usize, usize, f64)>, classical_bound: f64) -> Result<Self> {
        if terms.iter().any(|t| !t.2.is_finite()) || !classical_bound.is_finite() {
            return Err(Error::InvalidArgument("functional coefficients must be finite".into()));
        }
        Ok(Self { name: name.into(), terms, classical_bound })
    }

    /// `<A_0 B_p> + <A_0 B_q> + <A_1 B_p> - <A_1 B_q>` with `[p, q] = bob`.
    pub fn chsh(bob: [usize; 2]) -> Self {
        let [p, q] = bob;
        Self {
            name: "CHSH".into(),
            terms: vec![(0, p, 1.0), (0, q, 1.0), (1, p, 1.0), (1, q, -1.0)],
            classical_bound: 2.0,
        }
    }

    /// CHSH on `bob[0], bob[1]` plus `<A_0 B_r>` with `r = bob[2]`.
    pub fn chsh3(bob: [usize; 3]) -> Self {
        let mut f = Self::chsh([bob[0], bob[1]]);
        f.name = "CHSH3".into();
        f.terms.push((0, bob[2], 1.0));
        f.classical_bound = 3.0;
        f
    }

    /// CHSH over `(sigma_plus, sigma_minus)` in the standard Bob ordering.
    pub fn standard_chsh() -> Self {
        Self::chsh([2, 3])
    }

    /// CHSH3 with the extra `<A_1 sigma_x>` term in the standard ordering.
    pub fn standard_chsh3() -> Self {
        Self::chsh3([2, 3, 0])
    }

    /// Largest setting indices used, `(max x, max y)`.
    pub fn max_settings(&self) -> (usize, usize) {
        self.terms.iter().fold((0, 0), |(mx, my), &(x, y, _)| (mx.max(x), my.max(y)))
    }

    pub fn evaluate(&self, stats: &Statistics) -> Result<f64> {
        self.terms
            .iter()
            .map(|&(x, y, w)| Ok(w * stats.correlator(x, y)?))
            .sum()
    }
}

/// `-log2 G`.
pub fn min_entropy(g: f64) -> Result<f64> {
    if !(g > 0.0) || g > 1.0 + 1e-9 {
        return Err(Error::InvalidArgument(format!("guessing probability {g} outside (0, 1]")));
    }
    Ok((-g.min(1.0).log2()).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Characterization {
    Tomographic,
    OneSided,
    DeviceIndependent,
}

/// Observed data together with what is trusted about the devices.
#[derive(Debug, Clone)]
pub struct Scenario {
    statistics: Statistics,
    characterization: Characterization,
    known_side: Option<Vec<Measurement>>,
}

impl Scenario {
    pub fn new(
        statistics: Statistics,
        characterization: Characterization,
        known_side: Option<Vec<Measurement>>,
    ) -> Result<Self> {
        if let Some(bob) = &known_side {
            if bob.len() != statistics.inputs_b() {
                return Err(Error::DimensionMismatch { expected: statistics.inputs_b(), found: bob.len() });
            }
            if bob.iter().any(|m| m.num_outcomes() != statistics.outputs_b()) {
                return Err(Error::InvalidArgument("known measurements disagree with the outcome count".into()));
            }
        }
        if characterization == Characterization::OneSided && known_side.is_none() {
            return Err(Error::InvalidArgument("one-sided scenarios need Bob's measurements".into()));
        }
        Ok(Self { statistics, characterization, known_side })
    }

    pub fn parties(&self) -> usize {
        if self.statistics.inputs_b() == 1 && self.statistics.outputs_b() == 1 {
            1
        } else {
            2
        }
    }

    pub fn statistics(&self) -> &Statistics {
        &self.statistics
    }

    pub fn characterization(&self) -> Characterization {
        self.characterization
    }

    pub fn known_side(&self) -> Option<&[Measurement]> {
        self.known_side.as_deref()
    }
}

/// Standard Werner-state statistics with Alice `(sigma_x, sigma_z)` and Bob
/// `(sigma_x, sigma_z, sigma_plus, sigma_minus)`.
pub fn standard_werner_statistics(v: f64) -> Result<Statistics> {
    born_statistics(&werner_state(v)?, &standard_alice(), &standard_bob())
}
