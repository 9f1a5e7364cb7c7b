//! Guessing-probability relaxations over moment matrices.
//!
//! Eve's guess `c = (a, b)` for the target pair `(x*, y*)` labels one
//! moment matrix `Gamma_c` of a sub-normalized state. The relaxation is
//!
//! ```text
//!   max  sum_c P_c(a, b | x*, y*)
//!   s.t. affine constraints on sum_c Gamma_c,  Gamma_c PSD,
//! ```
//!
//! with `P_c(a, b | x, y) = (L_c(1) + a L_c(A_x) + b L_c(B_y) + ab L_c(A_x B_y)) / 4`
//! for outcome labels `a, b = +-1` (index 0 is `+1`).
//!
//! The affine constraints are eliminated first; the remaining linear
//! matrix inequality is handed to the solver as the dual of a
//! minimization, whose primal value certifies the upper bound.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::algebra::BobAlgebra;
use super::structure::{resolve, KeyKind, LinearForm, MomentMatrixStructure, MomentMode};
use crate::error::{Error, Result};
use crate::quantum::{BellFunctional, CMatrix, Scenario, Statistics, C64};
use crate::sdp::embed::embed;
use crate::sdp::{self, BlockCoefficients, BlockSdp, Constraint, InfeasibleSide, SdpStatus, Sense, SolverOptions};

/// Tolerance for relations detected from Bob's known observables.
pub const ALGEBRA_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const FACIAL_STEPS: usize = 3;
/// Eigenvalue margin treated as zero in the facial reduction test.
const FACE_TOL: f64 = 1e-6;
const FACE_EIG_RATIO: f64 = 1e-5;
/// Singular-value cutoff, relative to the largest, for face equalities.
const FACE_SV_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyOptions {
    pub level: usize,
    pub mode: MomentMode,
    pub solver: SolverOptions,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self { level: 2, mode: MomentMode::Real, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct HierarchyBound {
    /// Certified upper bound, capped at 1.
    pub guessing_probability: f64,
    /// Solver primal value before capping.
    pub upper_bound: f64,
    /// Objective of the recovered moment matrices.
    pub lower_value: f64,
    pub duality_gap: f64,
    pub status: SdpStatus,
    /// `Gamma_c` for `c = a + 2 b`.
    pub moment_matrices: Vec<CMatrix>,
    pub rows: Vec<String>,
}

impl HierarchyBound {
    pub fn is_certified(&self, gap_tol: f64) -> bool {
        self.status == SdpStatus::Optimal && self.duality_gap <= gap_tol
    }

    /// `sum_c L_c(1)`.
    pub fn total_weight(&self) -> f64 {
        self.moment_matrices.iter().map(|g| g[(0, 0)].re).sum()
    }
}

/// Real-valued affine function of the per-block unknowns, `sum v_k t_k`.
type Affine = Vec<(usize, f64)>;

/// Unknowns of one block and their matrices in the solver's real layout.
struct BlockLayout {
    /// `(re, im)` unknown indices per key.
    vars: Vec<(Option<usize>, Option<usize>)>,
    count: usize,
    /// Upper-triangular entries of each unknown's coefficient matrix.
    matrices: Vec<Vec<(usize, usize, f64)>>,
    size: usize,
}

impl BlockLayout {
    fn new(s: &MomentMatrixStructure) -> Self {
        let mut vars = Vec::with_capacity(s.keys().len());
        let mut count = 0;
        let mut next = || {
            count += 1;
            Some(count - 1)
        };
        for kind in s.key_kinds() {
            vars.push(match (s.mode(), kind) {
                (MomentMode::Real, _) | (_, KeyKind::RealValued) => (next(), None),
                (_, KeyKind::Imaginary) => (None, next()),
                (_, KeyKind::General) => (next(), next()),
            });
        }
        let d = s.dim();
        let mut dense = vec![CMatrix::zeros(d, d); count];
        for i in 0..d {
            for j in 0..d {
                let Some(r) = s.entry(i, j) else { continue };
                let (re, im) = vars[r.key];
                if let Some(v) = re {
                    dense[v][(i, j)] += C64::new(r.sign, 0.0);
                }
                if let Some(v) = im {
                    let z = if r.conj { -r.sign } else { r.sign };
                    dense[v][(i, j)] += C64::new(0.0, z);
                }
            }
        }
        let real = s.mode() == MomentMode::Real;
        let size = if real { d } else { 2 * d };
        let matrices = dense
            .iter()
            .map(|h| {
                let m: DMatrix<f64> = if real { h.map(|z| z.re) } else { embed(h) };
                let mut e = Vec::new();
                for i in 0..size {
                    for j in i..size {
                        if m[(i, j)] != 0.0 {
                            e.push((i, j, m[(i, j)]));
                        }
                    }
                }
                e
            })
            .collect();
        Self { vars, count, matrices, size }
    }

    /// Real part of a linear form in terms of unknowns.
    fn real_affine(&self, form: &LinearForm) -> Affine {
        form.iter().filter_map(|(c, r)| self.vars[r.key].0.map(|v| (v, c * r.sign))).collect()
    }

    fn values(&self, t: &[f64], kinds: &[KeyKind]) -> Vec<C64> {
        self.vars
            .iter()
            .zip(kinds)
            .map(|(&(re, im), _)| C64::new(re.map_or(0.0, |v| t[v]), im.map_or(0.0, |v| t[v])))
            .collect()
    }
}

/// Problem data in terms of the stacked unknowns of all blocks.
struct Relaxation<'a> {
    structure: &'a MomentMatrixStructure,
    layout: BlockLayout,
    blocks: usize,
    objective: Vec<f64>,
    equalities: Vec<Equality>,
}

impl<'a> Relaxation<'a> {
    fn new(structure: &'a MomentMatrixStructure, target: (usize, usize)) -> Result<Self> {
        let (x, y) = target;
        if x >= structure.inputs_a() || y >= structure.inputs_b() {
            return Err(Error::InvalidArgument(format!("target setting ({x},{y}) out of range")));
        }
        let layout = BlockLayout::new(structure);
        let blocks = 4;
        let n = blocks * layout.count;
        let mut objective = vec![0.0; n];
        let one = layout.real_affine(&structure.linear_form(&[], &[])?);
        let ax = layout.real_affine(&structure.linear_form(&[x], &[])?);
        let by = layout.real_affine(&structure.linear_form(&[], &[y])?);
        let axby = layout.real_affine(&structure.linear_form(&[x], &[y])?);
        for c in 0..blocks {
            let a = if c % 2 == 0 { 1.0 } else { -1.0 };
            let b = if c / 2 == 0 { 1.0 } else { -1.0 };
            let off = c * layout.count;
            for (form, w) in [(&one, 1.0), (&ax, a), (&by, b), (&axby, a * b)] {
                for &(v, k) in form.iter() {
                    objective[off + v] += 0.25 * w * k;
                }
            }
        }
        Ok(Self { structure, layout, blocks, objective, equalities: Vec::new() })
    }

    /// Adds `sum_c L_c(form) = rhs`.
    fn add_summed(&mut self, form: &LinearForm, rhs: f64) {
        let aff = self.layout.real_affine(form);
        let mut row = vec![0.0; self.blocks * self.layout.count];
        for c in 0..self.blocks {
            for &(v, k) in &aff {
                row[c * self.layout.count + v] += k;
            }
        }
        self.equalities.push(Equality::exact(row, rhs));
    }

    /// Eliminates the affine constraints: `t = t0 + N u` over the free
    /// unknowns `u`.
    fn eliminate(&self, equalities: &[Equality]) -> Result<Elimination> {
        let n = self.objective.len();
        let (pivots, reduced) = rref(equalities, n)?;
        let mut is_pivot = vec![false; n];
        for &(p, _) in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();
        let g0 = pivots.iter().zip(&reduced).map(|(&(p, _), (_, rhs))| self.objective[p] * rhs).sum();
        let g = free
            .iter()
            .map(|&j| {
                self.objective[j]
                    - pivots.iter().zip(&reduced).map(|(&(p, _), (row, _))| self.objective[p] * row[j]).sum::<f64>()
            })
            .collect();
        Ok(Elimination { pivots: pivots.into_iter().map(|(p, _)| p).collect(), reduced, free, g0, g })
    }

    fn entries<'f>(&'f self, face: &'f Face, var: usize) -> &'f [(usize, usize, f64)] {
        let per = self.layout.count;
        match &face.projected[var / per] {
            Some(p) => &p[var % per],
            None => &self.layout.matrices[var % per],
        }
    }

    /// `min <F0, X>  s.t.  <-F_j, X> = g_j`, whose dual is the LMI
    /// `max g'u  s.t.  F0 + sum_j u_j F_j >= 0`. With `aux` the objective
    /// becomes the largest `s` with `F0 + sum_j u_j F_j >= s I`.
    fn lmi_problem(&self, el: &Elimination, face: &Face, aux: bool) -> Result<BlockSdp> {
        let per = self.layout.count;
        let blocks: Vec<usize> = (0..self.blocks).filter(|&c| face.dims[c] > 0).collect();
        let mut index = vec![usize::MAX; self.blocks];
        for (a, &c) in blocks.iter().enumerate() {
            index[c] = a;
        }
        let add_var = |coeffs: &mut BlockCoefficients, var: usize, scale: f64| {
            let b = index[var / per];
            if b != usize::MAX {
                for &(i, j, v) in self.entries(face, var) {
                    coeffs.add(b, i, j, scale * v);
                }
            }
        };
        let mut f0 = BlockCoefficients::new();
        for (&p, (_, rhs)) in el.pivots.iter().zip(&el.reduced) {
            add_var(&mut f0, p, *rhs);
        }
        let mut constraints = Vec::with_capacity(el.free.len() + 1);
        for (&j, &gj) in el.free.iter().zip(&el.g) {
            let mut fj = BlockCoefficients::new();
            add_var(&mut fj, j, -1.0);
            for (&p, (row, _)) in el.pivots.iter().zip(&el.reduced) {
                if row[j] != 0.0 {
                    add_var(&mut fj, p, row[j]);
                }
            }
            constraints.push(Constraint { coefficients: fj, rhs: if aux { 0.0 } else { gj } });
        }
        if aux {
            let mut id = BlockCoefficients::new();
            for (a, &c) in blocks.iter().enumerate() {
                for i in 0..face.dims[c] {
                    id.add(a, i, i, 1.0);
                }
            }
            constraints.push(Constraint { coefficients: id, rhs: 1.0 });
        }
        let dims = blocks.iter().map(|&c| face.dims[c]).collect();
        BlockSdp::new(dims, Sense::Minimize, f0, constraints)
    }

    fn unknowns(&self, el: &Elimination, u: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.objective.len()];
        for (&j, &v) in el.free.iter().zip(u) {
            t[j] = v;
        }
        for (&p, (row, rhs)) in el.pivots.iter().zip(&el.reduced) {
            t[p] = rhs - el.free.iter().map(|&j| row[j] * t[j]).sum::<f64>();
        }
        t
    }

    fn dense_var(&self, k: usize) -> DMatrix<f64> {
        let s = self.layout.size;
        let mut m = DMatrix::zeros(s, s);
        for &(i, j, v) in &self.layout.matrices[k] {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    }

    /// Restricts every block to the complement of the directions exposed by
    /// the auxiliary solution `w`, and returns the equalities
    /// `(V U)^T Gamma_c (V [U U']) = 0` that make the restriction exact.
    fn reduce_face(&self, face: &mut Face, w: &[DMatrix<f64>]) -> Vec<Equality> {
        let per = self.layout.count;
        let n = self.objective.len();
        let active: Vec<usize> = (0..self.blocks).filter(|&c| face.dims[c] > 0).collect();
        let eig: Vec<SymmetricEigen<f64, nalgebra::Dyn>> = w.iter().map(|m| SymmetricEigen::new(m.clone())).collect();
        let top = eig.iter().flat_map(|e| e.eigenvalues.iter().copied()).fold(0.0, f64::max);
        let mut rows = Vec::new();
        let dense: Vec<DMatrix<f64>> = (0..per).map(|k| self.dense_var(k)).collect();
        for (e, &c) in eig.iter().zip(&active) {
            let r = face.dims[c];
            let exposed: Vec<usize> = (0..r).filter(|&i| e.eigenvalues[i] > FACE_EIG_RATIO * top).collect();
            if exposed.is_empty() {
                continue;
            }
            let rest: Vec<usize> = (0..r).filter(|i| !exposed.contains(i)).collect();
            let ordered: Vec<usize> = exposed.iter().chain(&rest).copied().collect();
            let rotation = DMatrix::from_fn(r, r, |i, j| e.eigenvectors[(i, ordered[j])]);
            let basis = face.basis[c].clone().unwrap_or_else(|| DMatrix::identity(self.layout.size, self.layout.size));
            let vb = &basis * &rotation;
            let q = exposed.len();
            let vu = vb.columns(0, q).into_owned();
            let mut block_rows = vec![vec![0.0; n]; q * r];
            for (k, m) in dense.iter().enumerate() {
                let qm = vu.transpose() * m * &vb;
                for a in 0..q {
                    for b in 0..r {
                        block_rows[a * r + b][c * per + k] = qm[(a, b)];
                    }
                }
            }
            for a in 0..q {
                for b in 0..r {
                    if b >= a || b >= q {
                        rows.push(Equality::exact(std::mem::take(&mut block_rows[a * r + b]), 0.0));
                    }
                }
            }
            face.basis[c] = Some(vb.columns(q, r - q).into_owned());
            face.dims[c] = r - q;
        }
        for c in 0..self.blocks {
            face.projected[c] = face.basis[c].as_ref().map(|v| {
                dense
                    .iter()
                    .map(|m| {
                        let p = v.transpose() * m * v;
                        let mut e = Vec::new();
                        for i in 0..p.nrows() {
                            for j in i..p.ncols() {
                                if p[(i, j)].abs() > 1e-14 {
                                    e.push((i, j, 0.5 * (p[(i, j)] + p[(j, i)])));
                                }
                            }
                        }
                        e
                    })
                    .collect()
            });
        }
        rows
    }

    fn solve(self, opts: &SolverOptions) -> Result<HierarchyBound> {
        let mut equalities = self.equalities.clone();
        let mut face = Face {
            basis: vec![None; self.blocks],
            projected: vec![None; self.blocks],
            dims: vec![self.layout.size; self.blocks],
        };
        let mut step = 0;
        loop {
            let el = self.eliminate(&equalities)?;
            let sol = sdp::solve(&self.lmi_problem(&el, &face, false)?, opts)?;
            match sol.status {
                SdpStatus::Infeasible(InfeasibleSide::Dual) => {
                    return Err(Error::Infeasible("constraints admit no positive moment matrices".into()))
                }
                SdpStatus::Infeasible(InfeasibleSide::Primal) => {
                    return Err(Error::SolverFailure("relaxation reported unbounded".into()))
                }
                _ => {}
            }
            if sol.status != SdpStatus::Optimal && step < FACIAL_STEPS {
                // Slow convergence usually means the constraints leave no
                // strictly positive moment matrices. Find the largest
                // eigenvalue margin; a zero margin exposes a smaller face.
                step += 1;
                let aux = sdp::solve(&self.lmi_problem(&el, &face, true)?, opts)?;
                if aux.status == SdpStatus::Optimal {
                    if aux.dual_value < -FACE_TOL {
                        return Err(Error::Infeasible("constraints admit no positive moment matrices".into()));
                    }
                    if aux.primal_value <= FACE_TOL {
                        let extra = self.reduce_face(&mut face, &aux.primal_blocks);
                        let extra = face_equalities(&equalities, extra);
                        if !extra.is_empty() {
                            equalities.extend(extra);
                            continue;
                        }
                    }
                }
            }
            let t = self.unknowns(&el, &sol.dual_vector);
            return Ok(self.bound(&t, el.g0 + sol.primal_value, &sol));
        }
    }

    fn bound(&self, t: &[f64], upper: f64, sol: &sdp::SdpSolution) -> HierarchyBound {
        let per = self.layout.count;
        let lower_value = self.objective.iter().zip(t).map(|(a, b)| a * b).sum();
        let kinds = self.structure.key_kinds();
        let moment_matrices = (0..self.blocks)
            .map(|c| self.structure.fill(&self.layout.values(&t[c * per..(c + 1) * per], kinds)))
            .collect();
        HierarchyBound {
            guessing_probability: upper.min(1.0),
            upper_bound: upper,
            lower_value,
            duality_gap: sol.duality_gap,
            status: sol.status,
            moment_matrices,
            rows: self.structure.rows().iter().map(|m| m.to_string()).collect(),
        }
    }
}

/// Affine constraints solved for the pivot unknowns.
struct Elimination {
    pivots: Vec<usize>,
    reduced: Vec<(Vec<f64>, f64)>,
    free: Vec<usize>,
    g0: f64,
    /// Objective coefficients of the free unknowns.
    g: Vec<f64>,
}

/// Current face of each block: `Gamma_c = V_c S_c V_c^T`.
struct Face {
    basis: Vec<Option<DMatrix<f64>>>,
    /// Upper-triangular entries of `V_c^T M_k V_c` per unknown.
    projected: Vec<Option<Vec<Vec<(usize, usize, f64)>>>>,
    dims: Vec<usize>,
}

/// Replaces equalities read off a numerical face by an orthonormal set
/// orthogonal to the `base` rows.
///
/// Face directions are only accurate to roughly the square root of the
/// auxiliary margin, so their rows are consistent with `base` only up to
/// that level. Projecting out `base` and keeping the dominant singular
/// directions separates genuine new constraints from that noise.
fn face_equalities(base: &[Equality], extra: Vec<Equality>) -> Vec<Equality> {
    if extra.is_empty() {
        return extra;
    }
    let n = extra[0].row.len();
    let m0 = base.len();
    let b = DMatrix::from_fn(m0, n, |i, j| base[i].row[j]);
    let rhs = DVector::from_iterator(m0, base.iter().map(|e| e.rhs));
    // Orthonormal row space of `base` and its minimum-norm solution.
    let eig = SymmetricEigen::new(&b * b.transpose());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut q_cols = Vec::new();
    let mut t0 = DVector::zeros(n);
    for i in 0..m0 {
        let lam = eig.eigenvalues[i];
        if lam > 1e-20 * top.max(1e-300) && lam > 0.0 {
            let u = eig.eigenvectors.column(i);
            let v = b.transpose() * u / lam.sqrt();
            t0 += &v * (u.dot(&rhs) / lam.sqrt());
            q_cols.push(v);
        }
    }
    let k = extra.len();
    let mut f = DMatrix::from_fn(k, n, |i, j| extra[i].row[j]);
    let r = DVector::from_iterator(k, (0..k).map(|i| extra[i].rhs - f.row(i).transpose().dot(&t0)));
    for q in &q_cols {
        let c = &f * q;
        f -= c * q.transpose();
    }
    let gram = f.transpose() * &f;
    let fr = f.transpose() * &r;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for i in 0..n {
        let lam = eig.eigenvalues[i];
        if lam > FACE_SV_RATIO * FACE_SV_RATIO * top {
            let v = eig.eigenvectors.column(i);
            let rhs = v.dot(&fr) / lam + v.dot(&t0);
            out.push(Equality::exact(v.iter().copied().collect(), rhs));
        }
    }
    out
}

/// `row . t = rhs`. Reduced rows with no entry above `tol` times the
/// original magnitude are dependent.
#[derive(Debug, Clone)]
struct Equality {
    row: Vec<f64>,
    rhs: f64,
    tol: f64,
}

impl Equality {
    fn exact(row: Vec<f64>, rhs: f64) -> Self {
        Self { row, rhs, tol: PIVOT_TOL }
    }
}

/// Reduced row echelon form with column pivoting, rows taken in order.
/// Returns the pivot of each independent row and the reduced rows;
/// contradictory rows fail.
fn rref(rows: &[Equality], n: usize) -> Result<(Vec<(usize, usize)>, Vec<(Vec<f64>, f64)>)> {
    let mut pivots = Vec::new();
    let mut done: Vec<(Vec<f64>, f64)> = Vec::new();
    for eq in rows {
        let (mut row, mut rhs) = (eq.row.clone(), eq.rhs);
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            if rhs.abs() > 1e-8 {
                return Err(Error::Infeasible("contradictory linear constraints".into()));
            }
            continue;
        }
        for (&(p, _), (prow, prhs)) in pivots.iter().zip(&done) {
            let f = row[p];
            if f != 0.0 {
                for k in 0..n {
                    row[k] -= f * prow[k];
                }
                rhs -= f * prhs;
            }
        }
        let (col, max) = row.iter().enumerate().fold((0, 0.0f64), |(bc, bm), (k, v)| {
            if v.abs() > bm {
                (k, v.abs())
            } else {
                (bc, bm)
            }
        });
        if max <= eq.tol * scale {
            if rhs.abs() > 1e-8 + eq.tol {
                return Err(Error::Infeasible("contradictory linear constraints".into()));
            }
            continue;
        }
        let piv = row[col];
        for v in row.iter_mut() {
            *v /= piv;
        }
        rhs /= piv;
        row[col] = 1.0;
        for (prow, prhs) in done.iter_mut() {
            let f = prow[col];
            if f != 0.0 {
                for k in 0..n {
                    prow[k] -= f * row[k];
                }
                prow[col] = 0.0;
                *prhs -= f * rhs;
            }
        }
        pivots.push((col, pivots.len()));
        done.push((row, rhs));
    }
    Ok((pivots, done))
}

fn check_dichotomic(stats: &Statistics) -> Result<()> {
    if stats.outputs_a() != 2 || stats.outputs_b() != 2 {
        return Err(Error::InvalidArgument("moment relaxations need two outcomes per setting".into()));
    }
    Ok(())
}

/// Structure for a two-party dichotomic scenario.
pub fn build_structure(
    scenario: &Scenario,
    level: usize,
    algebra: Option<&BobAlgebra>,
) -> Result<MomentMatrixStructure> {
    let s = scenario.statistics();
    check_dichotomic(s)?;
    MomentMatrixStructure::new(s.inputs_a(), s.inputs_b(), level, algebra, MomentMode::Real)
}

/// Bound from full statistics on a prepared structure.
pub fn guessing_with_statistics(
    structure: &MomentMatrixStructure,
    stats: &Statistics,
    target: (usize, usize),
    opts: &SolverOptions,
) -> Result<HierarchyBound> {
    check_dichotomic(stats)?;
    if stats.inputs_a() != structure.inputs_a() || stats.inputs_b() != structure.inputs_b() {
        return Err(Error::DimensionMismatch { expected: structure.inputs_a(), found: stats.inputs_a() });
    }
    let mut r = Relaxation::new(structure, target)?;
    r.add_summed(&structure.linear_form(&[], &[])?, 1.0);
    for x in 0..stats.inputs_a() {
        r.add_summed(&structure.linear_form(&[x], &[])?, stats.alice_mean(x)?);
    }
    for y in 0..stats.inputs_b() {
        r.add_summed(&structure.linear_form(&[], &[y])?, stats.bob_mean(y)?);
    }
    for x in 0..stats.inputs_a() {
        for y in 0..stats.inputs_b() {
            r.add_summed(&structure.linear_form(&[x], &[y])?, stats.correlator(x, y)?);
        }
    }
    r.solve(opts)
}

/// Device-independent bound from the full observed statistics.
pub fn di_guessing_probability(
    scenario: &Scenario,
    target: (usize, usize),
    opts: &HierarchyOptions,
) -> Result<HierarchyBound> {
    let s = scenario.statistics();
    check_dichotomic(s)?;
    let st = MomentMatrixStructure::new(s.inputs_a(), s.inputs_b(), opts.level, None, opts.mode)?;
    guessing_with_statistics(&st, s, target, &opts.solver)
}

/// Relations among Bob's known observables.
pub fn known_algebra(scenario: &Scenario) -> Result<BobAlgebra> {
    let bob = scenario
        .known_side()
        .ok_or_else(|| Error::InvalidArgument("scenario has no known measurements".into()))?;
    for m in bob {
        if m.outcome_labels() != [1, -1] {
            return Err(Error::InvalidArgument(format!("{} is not a dichotomic +1/-1 measurement", m.label())));
        }
    }
    let ops: Vec<CMatrix> = bob.iter().map(|m| m.observable()).collect();
    BobAlgebra::from_operators(&ops, ALGEBRA_TOL)
}

/// One-sided device-independent bound: full statistics plus the relations
/// satisfied by Bob's known measurements.
pub fn steering_guessing_probability(
    scenario: &Scenario,
    target: (usize, usize),
    opts: &HierarchyOptions,
) -> Result<HierarchyBound> {
    let s = scenario.statistics();
    check_dichotomic(s)?;
    let alg = known_algebra(scenario)?;
    let st = MomentMatrixStructure::new(s.inputs_a(), s.inputs_b(), opts.level, Some(&alg), opts.mode)?;
    guessing_with_statistics(&st, s, target, &opts.solver)
}

/// Device-independent bound given only the value of a correlator
/// functional. Settings the functional does not use are dropped.
pub fn di_guessing_from_functional(
    f: &BellFunctional,
    value: f64,
    target: (usize, usize),
    opts: &HierarchyOptions,
) -> Result<HierarchyBound> {
    if !value.is_finite() || f.terms.is_empty() {
        return Err(Error::InvalidArgument("functional value must be finite".into()));
    }
    let mut xs: Vec<usize> = f.terms.iter().map(|t| t.0).chain([target.0]).collect();
    let mut ys: Vec<usize> = f.terms.iter().map(|t| t.1).chain([target.1]).collect();
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let xi = |x: usize| xs.iter().position(|&v| v == x).unwrap();
    let yi = |y: usize| ys.iter().position(|&v| v == y).unwrap();
    let st = MomentMatrixStructure::new(xs.len(), ys.len(), opts.level, None, opts.mode)?;
    let mut r = Relaxation::new(&st, (xi(target.0), yi(target.1)))?;
    r.add_summed(&st.linear_form(&[], &[])?, 1.0);
    let mut form = LinearForm::new();
    for &(x, y, w) in &f.terms {
        form.extend(st.linear_form(&[xi(x)], &[yi(y)])?.into_iter().map(|(c, m)| (c * w, m)));
    }
    r.add_summed(&form, value);
    r.solve(&opts.solver)
}

/// Value of a linear form on representative values.
pub fn evaluate_form(form: &LinearForm, values: &[C64]) -> C64 {
    form.iter().map(|(c, r)| resolve(*r, values) * *c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{hermitian_eigenvalues, min_entropy, standard_alice, standard_bob, standard_werner_statistics, Characterization};

    fn werner(v: f64, known: bool) -> Scenario {
        let stats = standard_werner_statistics(v).unwrap();
        if known {
            Scenario::new(stats, Characterization::OneSided, Some(standard_bob())).unwrap()
        } else {
            Scenario::new(stats, Characterization::DeviceIndependent, None).unwrap()
        }
    }

    fn level(level: usize) -> HierarchyOptions {
        HierarchyOptions { level, ..Default::default() }
    }

    #[test]
    fn rref_detects_contradictions() {
        let rows: Vec<Equality> = [(vec![1.0, 1.0, 0.0], 1.0), (vec![2.0, 2.0, 0.0], 2.0), (vec![0.0, 1.0, 1.0], 0.5)]
            .into_iter()
            .map(|(r, b)| Equality::exact(r, b))
            .collect();
        let (p, r) = rref(&rows, 3).unwrap();
        assert_eq!(p.len(), 2);
        for ((col, _), (row, _)) in p.iter().zip(&r) {
            assert!((row[*col] - 1.0).abs() < 1e-15);
        }
        let bad = vec![Equality::exact(vec![1.0, 1.0], 1.0), Equality::exact(vec![1.0, 1.0], 2.0)];
        assert!(matches!(rref(&bad, 2), Err(Error::Infeasible(_))));
    }

    #[test]
    fn uniform_statistics_give_no_randomness() {
        let stats = Statistics::uniform(2, 2, 2, 2);
        let sc = Scenario::new(stats, Characterization::DeviceIndependent, None).unwrap();
        let b = di_guessing_probability(&sc, (0, 0), &level(1)).unwrap();
        assert!((b.guessing_probability - 1.0).abs() < 1e-6, "{}", b.upper_bound);
    }

    #[test]
    fn local_werner_region_gives_no_randomness() {
        for v in [0.5, std::f64::consts::FRAC_1_SQRT_2 - 1e-3] {
            for target in [(1, 0), (0, 2)] {
                let b = di_guessing_probability(&werner(v, false), target, &level(1)).unwrap();
                assert!((b.guessing_probability - 1.0).abs() < 1e-6, "v={v} G={}", b.upper_bound);
            }
        }
    }

    #[test]
    fn complex_moments_agree_with_real_moments() {
        let sc = werner(0.9, false);
        let real = di_guessing_probability(&sc, (1, 2), &level(1)).unwrap();
        let complex = di_guessing_probability(&sc, (1, 2), &HierarchyOptions { mode: MomentMode::Complex, ..level(1) }).unwrap();
        assert!((real.upper_bound - complex.upper_bound).abs() < 1e-6, "{} vs {}", real.upper_bound, complex.upper_bound);
        let sc = werner(0.6, true);
        let real = steering_guessing_probability(&sc, (1, 0), &level(2)).unwrap();
        let complex = steering_guessing_probability(&sc, (1, 0), &HierarchyOptions { mode: MomentMode::Complex, ..level(2) }).unwrap();
        assert!((real.upper_bound - complex.upper_bound).abs() < 1e-6, "{} vs {}", real.upper_bound, complex.upper_bound);
    }

    #[test]
    fn chsh_value_fixes_the_bound() {
        let f = BellFunctional::standard_chsh();
        let classical = di_guessing_from_functional(&f, 2.0, (1, 2), &level(2)).unwrap();
        assert!((classical.guessing_probability - 1.0).abs() < 1e-6);
        let max = di_guessing_from_functional(&f, 2.0 * std::f64::consts::SQRT_2, (1, 2), &level(2)).unwrap();
        let h = min_entropy(max.guessing_probability).unwrap();
        let tight = di_guessing_from_functional(&f, 2.0 * std::f64::consts::SQRT_2, (1, 2), &level(3)).unwrap();
        let h3 = min_entropy(tight.guessing_probability).unwrap();
        assert!((h - 1.23).abs() < 0.02, "H = {h}");
        assert!(h3 >= h - 1e-7 && (h3 - 1.23).abs() < 5e-3, "H = {h3}");
        assert!(max.is_certified(1e-7), "{:?} gap {:e} it {}", max.status, max.duality_gap, 0);
        let beyond = di_guessing_from_functional(&f, 2.0 * std::f64::consts::SQRT_2 + 0.05, (1, 2), &level(2));
        assert!(matches!(beyond, Err(Error::Infeasible(_))), "{beyond:?}");
    }

    #[test]
    fn steering_recovers_randomness_below_the_local_threshold() {
        let at = |v: f64| steering_guessing_probability(&werner(v, true), (1, 0), &level(2)).unwrap();
        let zero = at(0.0);
        assert!((zero.guessing_probability - 1.0).abs() < 1e-6, "{}", zero.upper_bound);
        let low = at(0.4);
        assert!(low.guessing_probability < 1.0 - 1e-3, "{}", low.upper_bound);
        let top = at(1.0);
        assert!((min_entropy(top.guessing_probability).unwrap() - 2.0).abs() < 0.01, "{}", top.upper_bound);
    }

    #[test]
    fn recovered_blocks_are_normalized_and_positive() {
        let b = steering_guessing_probability(&werner(0.8, true), (1, 0), &level(2)).unwrap();
        assert!((b.total_weight() - 1.0).abs() < 1e-9);
        for g in &b.moment_matrices {
            assert!(hermitian_eigenvalues(g)[0] > -1e-6);
        }
        assert!((b.upper_bound - b.lower_value).abs() < 1e-6);
        let _ = standard_alice();
    }
}
