//! Infeasible-start primal-dual interior-point method with the HKM search
//! direction and a Mehrotra predictor-corrector.
//!
//! Internally every problem is brought to
//!
//! ```text
//!   min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0
//!   max b'y     s.t.  C - sum_i y_i A_i = Z >= 0
//! ```
//!
//! with unit-norm constraint rows, a unit-norm objective and a unit-norm
//! right-hand side. All stopping decisions are taken on that normalized
//! problem.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::{
    BlockSdp, InfeasibleSide, IterateRecord, SdpSolution, SdpStatus, Sense, SolverOptions,
};
use crate::error::{Error, Result};

/// Expanded (both triangles) coefficients of one constraint inside one block.
#[derive(Debug, Clone)]
struct Part {
    block: usize,
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
struct Row {
    parts: Vec<Part>,
}

impl Row {
    fn inner(&self, x: &[DMatrix<f64>]) -> f64 {
        self.parts
            .iter()
            .map(|p| p.entries.iter().map(|&(r, c, v)| v * x[p.block][(r, c)]).sum::<f64>())
            .sum()
    }
}

struct Prepared {
    dims: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    rows: Vec<Row>,
    b: DVector<f64>,
    /// Original index of each kept row.
    kept: Vec<usize>,
    row_norm: Vec<f64>,
    removed: Vec<usize>,
    c_scale: f64,
    b_scale: f64,
    /// +1 for minimization, -1 for maximization.
    sign: f64,
    /// Strictly feasible primal starting point, when one was found cheaply.
    start: Option<Vec<DMatrix<f64>>>,
    /// Cholesky factors of `A A^T` per component, indexed by kept position.
    gram: Vec<(Vec<usize>, DMatrix<f64>)>,
}

fn expand(entries: &[super::Entry]) -> Vec<Part> {
    let mut parts: Vec<Part> = Vec::new();
    for e in entries {
        let part = match parts.last_mut() {
            Some(p) if p.block == e.block => p,
            _ => {
                parts.push(Part { block: e.block, entries: Vec::new() });
                parts.last_mut().unwrap()
            }
        };
        part.entries.push((e.row, e.col, e.value));
        if e.row != e.col {
            part.entries.push((e.col, e.row, e.value));
        }
    }
    parts
}

fn row_norm(parts: &[Part]) -> f64 {
    parts
        .iter()
        .flat_map(|p| p.entries.iter())
        .map(|&(_, _, v)| v * v)
        .sum::<f64>()
        .sqrt()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut k = i;
        while self.0[k] != r {
            let next = self.0[k];
            self.0[k] = r;
            k = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Linear dependence analysis of the constraint rows.
struct RowAnalysis {
    kept: Vec<usize>,
    removed: Vec<usize>,
    /// Components over kept rows with the Cholesky factor of their Gram block,
    /// used to build a feasible starting point.
    components: Vec<(Vec<usize>, DMatrix<f64>)>,
}

/// Drops rows that are linear combinations of others using a greedy pivoted
/// Cholesky factorization of the Gram matrix, one connected component of the
/// sparsity pattern at a time. Dependent rows with inconsistent right-hand
/// sides make the primal infeasible.
fn analyze_rows(rows: &[Row], b: &[f64], pivot_tol: f64) -> std::result::Result<RowAnalysis, usize> {
    let m = rows.len();
    let mut by_position: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for (i, row) in rows.iter().enumerate() {
        for p in &row.parts {
            for &(r, c, v) in &p.entries {
                by_position.entry((p.block, r, c)).or_default().push((i, v));
            }
        }
    }
    let mut uf = UnionFind((0..m).collect());
    for users in by_position.values() {
        for w in users.windows(2) {
            uf.union(w[0].0, w[1].0);
        }
    }
    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..m {
        let root = uf.find(i);
        components.entry(root).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = components.into_values().collect();
    comps.sort_by_key(|c| c[0]);

    let mut kept = Vec::new();
    let mut removed = Vec::new();
    let mut factored = Vec::new();
    for comp in comps {
        let k = comp.len();
        let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(a, &i)| (i, a)).collect();
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for users in by_position.values() {
            if !local.contains_key(&users[0].0) {
                continue;
            }
            for &(i, vi) in users {
                for &(j, vj) in users {
                    gram[(local[&i], local[&j])] += vi * vj;
                }
            }
        }
        // Greedy pivoted Cholesky.
        let mut l = DMatrix::<f64>::zeros(k, k);
        let mut diag: Vec<f64> = (0..k).map(|a| gram[(a, a)]).collect();
        let mut chosen: Vec<usize> = Vec::new();
        let mut used = vec![false; k];
        loop {
            let mut best = None;
            for a in 0..k {
                if !used[a] && best.map_or(true, |(_, d)| diag[a] > d) {
                    best = Some((a, diag[a]));
                }
            }
            let Some((piv, d)) = best else { break };
            if d <= pivot_tol {
                break;
            }
            let col = chosen.len();
            used[piv] = true;
            let lpp = d.sqrt();
            l[(piv, col)] = lpp;
            for a in 0..k {
                if used[a] {
                    continue;
                }
                let mut s = gram[(a, piv)];
                for t in 0..col {
                    s -= l[(a, t)] * l[(piv, t)];
                }
                l[(a, col)] = s / lpp;
                diag[a] -= l[(a, col)] * l[(a, col)];
            }
            chosen.push(piv);
        }
        let r = chosen.len();
        // Triangular factor restricted to chosen rows, in chosen order.
        let mut lk = DMatrix::<f64>::zeros(r, r);
        for (s, &ps) in chosen.iter().enumerate() {
            for t in 0..=s {
                lk[(s, t)] = l[(ps, t)];
            }
        }
        let bk = DVector::from_iterator(r, chosen.iter().map(|&a| b[comp[a]]));
        for a in 0..k {
            if used[a] {
                continue;
            }
            // Express row a through the chosen rows: G_KK alpha = G_Ka.
            let g = DVector::from_iterator(r, chosen.iter().map(|&s| gram[(s, a)]));
            let alpha = solve_llt(&lk, &g);
            let implied = alpha.dot(&bk);
            let rhs = b[comp[a]];
            if (implied - rhs).abs() > 1e-8 * (1.0 + rhs.abs()) {
                return Err(comp[a]);
            }
            removed.push(comp[a]);
        }
        let chosen_rows: Vec<usize> = chosen.iter().map(|&a| comp[a]).collect();
        kept.extend(chosen_rows.iter().copied());
        factored.push((chosen_rows, lk));
    }
    kept.sort_unstable();
    removed.sort_unstable();
    Ok(RowAnalysis { kept, removed, components: factored })
}

fn solve_llt(l: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let y = l.solve_lower_triangular(rhs).expect("nonsingular pivoted factor");
    l.transpose().solve_upper_triangular(&y).expect("nonsingular pivoted factor")
}

/// A trace-type constraint whose coefficients are `alpha * I` on a set of whole blocks.
fn trace_type(row: &Row, dims: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut alpha = None;
    let mut blocks = Vec::new();
    for p in &row.parts {
        if p.entries.len() != dims[p.block] {
            return None;
        }
        let mut seen = vec![false; dims[p.block]];
        for &(r, c, v) in &p.entries {
            if r != c || seen[r] {
                return None;
            }
            seen[r] = true;
            match alpha {
                None => alpha = Some(v),
                Some(a) if a == v => {}
                _ => return None,
            }
        }
        blocks.push(p.block);
    }
    alpha.map(|a| (blocks, a))
}

fn prepare(problem: &BlockSdp, opts: &SolverOptions) -> Result<std::result::Result<Prepared, usize>> {
    let dims = problem.block_dims().to_vec();
    let sign = match problem.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut c: Vec<DMatrix<f64>> = dims
        .iter()
        .enumerate()
        .map(|(k, &n)| problem.objective().block_dense(k, n) * sign)
        .collect();
    let mut rows = Vec::new();
    let mut norms = Vec::new();
    let mut b_raw = Vec::new();
    for (k, con) in problem.constraints().iter().enumerate() {
        let parts = expand(con.coefficients.entries());
        let norm = row_norm(&parts);
        if norm == 0.0 {
            if con.rhs != 0.0 {
                return Ok(Err(k));
            }
            // An all-zero row with zero right-hand side is trivially redundant.
            norms.push(0.0);
            rows.push(Row { parts: Vec::new() });
            b_raw.push(0.0);
            continue;
        }
        let parts = parts
            .into_iter()
            .map(|p| Part {
                block: p.block,
                entries: p.entries.into_iter().map(|(r, c, v)| (r, c, v / norm)).collect(),
            })
            .collect();
        rows.push(Row { parts });
        norms.push(norm);
        b_raw.push(con.rhs / norm);
    }
    let zero_rows: Vec<usize> = (0..rows.len()).filter(|&i| norms[i] == 0.0).collect();
    let analysis = match analyze_rows(&rows, &b_raw, opts.pivot_tol) {
        Ok(a) => a,
        Err(bad) => return Ok(Err(bad)),
    };
    let kept: Vec<usize> = analysis.kept.iter().copied().filter(|i| norms[*i] != 0.0).collect();
    let mut removed = analysis.removed.clone();
    removed.extend(zero_rows);
    removed.sort_unstable();
    if kept.is_empty() {
        return Err(Error::MalformedSdp("every constraint is trivial".into()));
    }

    let c_norm = c.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
    let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
    for m in &mut c {
        *m /= c_scale;
    }
    let b_norm = kept.iter().map(|&i| b_raw[i] * b_raw[i]).sum::<f64>().sqrt();
    let b_scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let b = DVector::from_iterator(kept.len(), kept.iter().map(|&i| b_raw[i] / b_scale));
    let kept_rows: Vec<Row> = kept.iter().map(|&i| rows[i].clone()).collect();

    // Starting point: a multiple of the identity, sized by trace-type rows
    // when present, projected onto the affine constraint set. Used only if
    // the projection stays safely inside the cone.
    let mut xi: Vec<Option<f64>> = vec![None; dims.len()];
    for (row, &bi) in kept_rows.iter().zip(b.iter()) {
        if let Some((blocks, alpha)) = trace_type(row, &dims) {
            let total: usize = blocks.iter().map(|&k| dims[k]).sum();
            let s = bi / (alpha * total as f64);
            if s > 0.0 {
                for &k in &blocks {
                    xi[k].get_or_insert(s);
                }
            }
        }
    }
    let start = if xi.iter().any(|s| s.is_some()) {
        let fallback = xi.iter().flatten().copied().fold(0.0, f64::max);
        let x0: Vec<DMatrix<f64>> = dims
            .iter()
            .enumerate()
            .map(|(k, &n)| DMatrix::identity(n, n) * xi[k].unwrap_or(fallback))
            .collect();
        project_start(&x0, &kept_rows, &b, &kept, &analysis.components, &dims)
    } else {
        None
    };

    let position: HashMap<usize, usize> = kept.iter().enumerate().map(|(a, &i)| (i, a)).collect();
    let gram = analysis
        .components
        .iter()
        .filter(|(comp, _)| comp.iter().all(|i| position.contains_key(i)))
        .map(|(comp, l)| (comp.iter().map(|i| position[i]).collect(), l.clone()))
        .collect();
    Ok(Ok(Prepared {
        gram,
        dims,
        c,
        rows: kept_rows,
        b,
        row_norm: kept.iter().map(|&i| norms[i]).collect(),
        kept,
        removed,
        c_scale,
        b_scale,
        sign,
        start,
    }))
}

fn project_start(
    x0: &[DMatrix<f64>],
    rows: &[Row],
    b: &DVector<f64>,
    kept: &[usize],
    components: &[(Vec<usize>, DMatrix<f64>)],
    dims: &[usize],
) -> Option<Vec<DMatrix<f64>>> {
    let position: HashMap<usize, usize> = kept.iter().enumerate().map(|(a, &i)| (i, a)).collect();
    let mut w = vec![0.0; rows.len()];
    for (comp, l) in components {
        if comp.iter().any(|i| !position.contains_key(i)) {
            return None;
        }
        let r = DVector::from_iterator(
            comp.len(),
            comp.iter().map(|i| {
                let a = position[i];
                b[a] - rows[a].inner(x0)
            }),
        );
        let sol = solve_llt(l, &r);
        for (s, i) in comp.iter().enumerate() {
            w[position[i]] = sol[s];
        }
    }
    let mut x: Vec<DMatrix<f64>> = x0.to_vec();
    add_adjoint(&mut x, rows, &w, 1.0);
    for (k, xb) in x.iter().enumerate() {
        let floor = x0[k][(0, 0)] * 0.1;
        if super::min_eigenvalue(xb) < floor || dims[k] == 0 {
            return None;
        }
    }
    Some(x)
}

/// `out += scale * sum_i w_i A_i`.
fn add_adjoint(out: &mut [DMatrix<f64>], rows: &[Row], w: &[f64], scale: f64) {
    for (row, &wi) in rows.iter().zip(w) {
        if wi == 0.0 {
            continue;
        }
        for p in &row.parts {
            let blk = &mut out[p.block];
            for &(r, c, v) in &p.entries {
                blk[(r, c)] += scale * wi * v;
            }
        }
    }
}

fn apply(rows: &[Row], x: &[DMatrix<f64>]) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|r| r.inner(x)))
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn chol_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = Cholesky::new(m.clone())?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

/// Largest `alpha` with `X + alpha dX` PSD (infinite if unbounded).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else { return 0.0 };
    let l = ch.l();
    let Some(t) = l.solve_lower_triangular(dx) else { return 0.0 };
    let Some(w) = l.solve_lower_triangular(&t.transpose()) else { return 0.0 };
    let mut w = w.transpose();
    symmetrize(&mut w);
    let lmin = SymmetricEigen::new(w).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn block_max_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> f64 {
    x.iter().zip(dx).map(|(a, d)| max_step(a, d)).fold(f64::INFINITY, f64::min)
}

/// Row ordering of the Schur complement: rows local to one block first,
/// grouped by block, then rows coupling several blocks.
struct SchurLayout {
    order: Vec<usize>,
    position: Vec<usize>,
    groups: Vec<Range<usize>>,
    coupling: Range<usize>,
    /// Rows touching each block, as (row, part index).
    by_block: Vec<Vec<(usize, usize)>>,
}

impl SchurLayout {
    fn new(rows: &[Row], nblocks: usize) -> Self {
        let mut local: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
        let mut coupled = Vec::new();
        let mut by_block: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nblocks];
        for (i, row) in rows.iter().enumerate() {
            for (pi, p) in row.parts.iter().enumerate() {
                by_block[p.block].push((i, pi));
            }
            if row.parts.len() == 1 {
                local[row.parts[0].block].push(i);
            } else {
                coupled.push(i);
            }
        }
        let mut order = Vec::with_capacity(rows.len());
        let mut groups = Vec::new();
        for g in local {
            if g.is_empty() {
                continue;
            }
            let start = order.len();
            order.extend(g);
            groups.push(start..order.len());
        }
        let start = order.len();
        order.extend(coupled);
        let coupling = start..order.len();
        let mut position = vec![0; rows.len()];
        for (a, &i) in order.iter().enumerate() {
            position[i] = a;
        }
        Self { order, position, groups, coupling, by_block }
    }
}

/// HKM Schur complement `M_ij = <A_i, X A_j Z^{-1}>`, in layout order.
fn schur_matrix(
    rows: &[Row],
    layout: &SchurLayout,
    x: &[DMatrix<f64>],
    zinv: &[DMatrix<f64>],
) -> DMatrix<f64> {
    let m = rows.len();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for (blk, members) in layout.by_block.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let n = x[blk].nrows();
        let xb = &x[blk];
        let zb = &zinv[blk];
        let mut t = DMatrix::<f64>::zeros(n, n);
        let mut w = DMatrix::<f64>::zeros(n, n);
        let mut cols: Vec<usize> = Vec::new();
        let mut col_used = vec![false; n];
        for (jj, &(j, pj)) in members.iter().enumerate() {
            let part = &rows[j].parts[pj];
            // T = X A_j
            for &q in &cols {
                t.column_mut(q).fill(0.0);
                col_used[q] = false;
            }
            cols.clear();
            for &(p, q, v) in &part.entries {
                if !col_used[q] {
                    col_used[q] = true;
                    cols.push(q);
                }
                t.column_mut(q).axpy(v, &xb.column(p), 1.0);
            }
            // W = T Z^{-1}
            if cols.len() * 2 >= n {
                w.gemm(1.0, &t, zb, 0.0);
            } else {
                w.fill(0.0);
                for &q in &cols {
                    w.ger(1.0, &t.column(q), &zb.row(q).transpose(), 1.0);
                }
            }
            let pj_pos = layout.position[j];
            for &(i, pi) in &members[..=jj] {
                let val: f64 = rows[i].parts[pi].entries.iter().map(|&(p, q, v)| v * w[(p, q)]).sum();
                let pi_pos = layout.position[i];
                mat[(pi_pos, pj_pos)] += val;
                if pi_pos != pj_pos {
                    mat[(pj_pos, pi_pos)] += val;
                }
            }
        }
    }
    mat
}

enum SchurFactor {
    Arrow {
        groups: Vec<(Range<usize>, Cholesky<f64, Dyn>, DMatrix<f64>)>,
        coupling: Range<usize>,
        schur: Option<Cholesky<f64, Dyn>>,
    },
    Lu(nalgebra::LU<f64, Dyn, Dyn>),
}

impl SchurFactor {
    fn new(mat: &DMatrix<f64>, layout: &SchurLayout) -> Option<Self> {
        for attempt in 0..3 {
            let shift = if attempt == 0 {
                0.0
            } else {
                let dmax = (0..mat.nrows()).map(|i| mat[(i, i)].abs()).fold(0.0, f64::max);
                dmax * 1e-14 * 100f64.powi(attempt - 1)
            };
            if let Some(f) = Self::arrow(mat, layout, shift) {
                return Some(f);
            }
        }
        let lu = nalgebra::LU::new(mat.clone());
        if lu.is_invertible() {
            Some(SchurFactor::Lu(lu))
        } else {
            None
        }
    }

    fn arrow(mat: &DMatrix<f64>, layout: &SchurLayout, shift: f64) -> Option<Self> {
        let cp = layout.coupling.clone();
        let nc = cp.len();
        let mut schur_c = mat.view((cp.start, cp.start), (nc, nc)).into_owned();
        let mut groups = Vec::new();
        for g in &layout.groups {
            let mut d = mat.view((g.start, g.start), (g.len(), g.len())).into_owned();
            for i in 0..g.len() {
                d[(i, i)] += shift;
            }
            let ch = Cholesky::new(d)?;
            let border = mat.view((g.start, cp.start), (g.len(), nc)).into_owned();
            let dinv_b = if nc > 0 { ch.solve(&border) } else { DMatrix::zeros(g.len(), 0) };
            if nc > 0 {
                schur_c -= border.transpose() * &dinv_b;
            }
            groups.push((g.clone(), ch, dinv_b));
        }
        let schur = if nc > 0 {
            for i in 0..nc {
                schur_c[(i, i)] += shift;
            }
            symmetrize(&mut schur_c);
            Some(Cholesky::new(schur_c)?)
        } else {
            None
        };
        Some(SchurFactor::Arrow { groups, coupling: cp, schur })
    }

    /// Solve followed by iterative refinement against the unshifted matrix.
    fn solve_refined(&self, mat: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        let mut sol = self.solve(mat, rhs);
        let scale = rhs.norm();
        for _ in 0..3 {
            let r = rhs - mat * &sol;
            if r.norm() <= 1e-15 * scale {
                break;
            }
            sol += self.solve(mat, &r);
        }
        sol
    }

    fn solve(&self, mat: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            SchurFactor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
            SchurFactor::Arrow { groups, coupling, schur } => {
                let mut out = DVector::zeros(rhs.len());
                let mut rc = rhs.rows(coupling.start, coupling.len()).into_owned();
                let mut xg = Vec::with_capacity(groups.len());
                for (g, ch, _) in groups {
                    let x = ch.solve(&rhs.rows(g.start, g.len()).into_owned());
                    if !coupling.is_empty() {
                        let border = mat.view((g.start, coupling.start), (g.len(), coupling.len()));
                        rc -= border.transpose() * &x;
                    }
                    xg.push(x);
                }
                let xc = match schur {
                    Some(s) => s.solve(&rc),
                    None => DVector::zeros(0),
                };
                for ((g, _, dinv_b), mut x) in groups.iter().zip(xg) {
                    if !coupling.is_empty() {
                        x -= dinv_b * &xc;
                    }
                    out.rows_mut(g.start, g.len()).copy_from(&x);
                }
                out.rows_mut(coupling.start, coupling.len()).copy_from(&xc);
                out
            }
        }
    }
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
}

struct Measures {
    primal_user: f64,
    dual_user: f64,
    rel_gap: f64,
    pinf: f64,
    dinf: f64,
}

impl Prepared {
    fn measures(&self, it: &Iterate) -> Measures {
        let p = inner(&self.c, &it.x);
        let d = self.b.dot(&it.y);
        let s = self.c_scale * self.b_scale * self.sign;
        let (pu, du) = (p * s, d * s);
        let rp = &self.b - apply(&self.rows, &it.x);
        let pinf = rp.norm() / (1.0 + self.b.norm());
        let rd = self.dual_residual(it);
        let dinf = rd.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt() / 2.0;
        let rel_gap = (pu - du).abs() / 1f64.max(pu.abs()).max(du.abs());
        Measures { primal_user: pu, dual_user: du, rel_gap, pinf, dinf }
    }

    fn dual_residual(&self, it: &Iterate) -> Vec<DMatrix<f64>> {
        let mut rd: Vec<DMatrix<f64>> =
            self.c.iter().zip(&it.z).map(|(c, z)| c - z).collect();
        add_adjoint(&mut rd, &self.rows, it.y.as_slice(), -1.0);
        rd
    }

    /// Least-norm symmetric `W` with `A(W) = e`.
    fn lift(&self, e: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut w = vec![0.0; self.rows.len()];
        for (comp, l) in &self.gram {
            let r = DVector::from_iterator(comp.len(), comp.iter().map(|&a| e[a]));
            let sol = solve_llt(l, &r);
            for (s, &a) in comp.iter().enumerate() {
                w[a] = sol[s];
            }
        }
        let mut out: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        add_adjoint(&mut out, &self.rows, &w, 1.0);
        out
    }

    fn initial(&self) -> Iterate {
        let m = self.rows.len();
        let x = match &self.start {
            Some(x) => x.clone(),
            None => self
                .dims
                .iter()
                .map(|&n| {
                    let bmax = self.b.iter().map(|v| 1.0 + v.abs()).fold(0.0, f64::max);
                    let xi = 10f64.max((n as f64).sqrt()).max(n as f64 * bmax / 2.0);
                    DMatrix::identity(n, n) * xi
                })
                .collect(),
        };
        let z = self
            .dims
            .iter()
            .map(|&n| DMatrix::identity(n, n) * 10f64.max((n as f64).sqrt()))
            .collect();
        Iterate { x, y: DVector::zeros(m), z }
    }

    /// Maps an internal iterate back to the user's problem.
    fn unscale(&self, it: &Iterate, original_rows: usize) -> (Vec<DMatrix<f64>>, Vec<f64>, Vec<DMatrix<f64>>) {
        let x = it.x.iter().map(|m| m * self.b_scale).collect();
        let mut y = vec![0.0; original_rows];
        for (a, &i) in self.kept.iter().enumerate() {
            y[i] = it.y[a] * self.c_scale / self.row_norm[a] * self.sign;
        }
        let z = it.z.iter().map(|m| m * self.c_scale).collect();
        (x, y, z)
    }
}

/// Solves a block SDP.
///
/// Infeasibility and iteration exhaustion are reported through
/// [`SdpSolution::status`]; `Err` is returned only for problems the solver
/// cannot process at all.
pub fn solve(problem: &BlockSdp, opts: &SolverOptions) -> Result<SdpSolution> {
    let original_rows = problem.constraints().len();
    let prep = match prepare(problem, opts)? {
        Ok(p) => p,
        Err(_bad_row) => {
            return Ok(infeasible_solution(problem, InfeasibleSide::Primal, Vec::new()));
        }
    };
    let ntot: usize = prep.dims.iter().sum();
    let layout = SchurLayout::new(&prep.rows, prep.dims.len());
    let mut it = prep.initial();
    let mut history = Vec::new();
    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut status = SdpStatus::MaxIterations;
    let mut converged_at: Option<(usize, f64)> = None;
    let mut iterations = 0;

    for iter in 0..=opts.max_iterations {
        iterations = iter;
        let ms = prep.measures(&it);
        if opts.record_history {
            history.push(IterateRecord {
                primal_value: ms.primal_user,
                dual_value: ms.dual_user,
                primal_residual: ms.pinf,
                dual_residual: ms.dinf,
                mu: inner(&it.x, &it.z) / ntot as f64,
            });
        }
        let merit = ms.rel_gap.max(ms.pinf).max(ms.dinf);
        let feasible = ms.pinf <= opts.feas_tol && ms.dinf <= opts.feas_tol;
        let converged = feasible && ms.rel_gap <= opts.gap_tol;
        if best.as_ref().map_or(true, |(m, _, _)| merit < *m) {
            best = Some((merit, Iterate { x: it.x.clone(), y: it.y.clone(), z: it.z.clone() }, iter));
        }
        if converged {
            status = SdpStatus::Optimal;
            match converged_at {
                None => converged_at = Some((iter, ms.rel_gap)),
                Some((first, gap)) => {
                    // Polish: a few extra steps while the gap keeps shrinking.
                    if iter - first >= 3 || ms.rel_gap > 0.5 * gap {
                        break;
                    }
                    converged_at = Some((first, ms.rel_gap));
                }
            }
            if ms.rel_gap < 1e-13 {
                break;
            }
        } else if converged_at.is_some() {
            break;
        }
        if let Some(side) = detect_infeasibility(&prep, &it) {
            status = SdpStatus::Infeasible(side);
            break;
        }
        if iter == opts.max_iterations {
            break;
        }
        match step(&prep, &layout, &it, ntot) {
            Some(next) => it = next,
            None => break,
        }
    }

    let (_, chosen, _) = best.expect("at least one iterate");
    let final_it = if matches!(status, SdpStatus::Infeasible(_)) { it } else { chosen };
    let ms = prep.measures(&final_it);
    if status == SdpStatus::Optimal
        && !(ms.pinf <= opts.feas_tol && ms.dinf <= opts.feas_tol && ms.rel_gap <= opts.gap_tol)
    {
        status = SdpStatus::MaxIterations;
    }
    let (x, y, z) = prep.unscale(&final_it, original_rows);
    let primal_residual = problem.max_residual(&x);
    let dual_residual = ms.dinf * prep.c_scale;
    Ok(SdpSolution {
        status,
        primal_value: ms.primal_user,
        dual_value: ms.dual_user,
        duality_gap: (ms.primal_user - ms.dual_user).abs(),
        primal_blocks: x,
        dual_vector: y,
        dual_slack: z,
        primal_residual,
        dual_residual,
        iterations,
        removed_constraints: prep.removed.clone(),
        history,
    })
}

fn infeasible_solution(problem: &BlockSdp, side: InfeasibleSide, history: Vec<IterateRecord>) -> SdpSolution {
    let dims = problem.block_dims();
    let nan = f64::NAN;
    SdpSolution {
        status: SdpStatus::Infeasible(side),
        primal_value: nan,
        dual_value: nan,
        duality_gap: nan,
        primal_blocks: dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        dual_vector: vec![0.0; problem.constraints().len()],
        dual_slack: dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        primal_residual: nan,
        dual_residual: nan,
        iterations: 0,
        removed_constraints: Vec::new(),
        history,
    }
}

/// Farkas-type tests on the current iterate of the normalized problem.
fn detect_infeasibility(prep: &Prepared, it: &Iterate) -> Option<InfeasibleSide> {
    const BIG: f64 = 1e8;
    let d = prep.b.dot(&it.y);
    if d > BIG {
        // y with A*(y) <= 0 and b'y > 0 certifies an empty primal.
        let mut aty: Vec<DMatrix<f64>> = prep.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        add_adjoint(&mut aty, &prep.rows, it.y.as_slice(), 1.0);
        let lmax = aty
            .into_iter()
            .map(|m| SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::NEG_INFINITY, f64::max);
        if lmax <= 1e-6 * d {
            return Some(InfeasibleSide::Primal);
        }
    }
    let p = inner(&prep.c, &it.x);
    if p < -BIG {
        // X >= 0 with A(X) ~ 0 and <C, X> < 0 certifies an empty dual.
        let ax = apply(&prep.rows, &it.x).norm();
        if ax <= 1e-6 * p.abs() {
            return Some(InfeasibleSide::Dual);
        }
    }
    None
}

fn step(prep: &Prepared, layout: &SchurLayout, it: &Iterate, ntot: usize) -> Option<Iterate> {
    let nb = prep.dims.len();
    let mu = inner(&it.x, &it.z) / ntot as f64;
    let zinv: Vec<DMatrix<f64>> = it.z.iter().map(chol_inverse).collect::<Option<_>>()?;
    let rd = prep.dual_residual(it);
    let mat = schur_matrix(&prep.rows, layout, &it.x, &zinv);
    let factor = SchurFactor::new(&mat, layout)?;

    // Shared right-hand side piece: b + A(X Rd Z^{-1}).
    let x_rd_zinv: Vec<DMatrix<f64>> =
        (0..nb).map(|k| &it.x[k] * &rd[k] * &zinv[k]).collect();
    let base = &prep.b + apply_nonsym(&prep.rows, &x_rd_zinv);

    let rp = &prep.b - apply(&prep.rows, &it.x);
    let direction = |target: &[DMatrix<f64>]| -> (DVector<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        // target_k = (sigma mu I - G_k) Z^{-1}
        let rhs = &base - apply_nonsym(&prep.rows, target);
        let perm_rhs = DVector::from_iterator(rhs.len(), layout.order.iter().map(|&i| rhs[i]));
        let sol = factor.solve_refined(&mat, &perm_rhs);
        let mut dy = DVector::zeros(rhs.len());
        for (a, &i) in layout.order.iter().enumerate() {
            dy[i] = sol[a];
        }
        let mut dz = rd.clone();
        add_adjoint(&mut dz, &prep.rows, dy.as_slice(), -1.0);
        let mut dx: Vec<DMatrix<f64>> = (0..nb)
            .map(|k| {
                let mut d = &target[k] - &it.x[k] - &it.x[k] * &dz[k] * &zinv[k];
                symmetrize(&mut d);
                d
            })
            .collect();
        // Remove the linear-algebra error in A(dX) = rp, which grows with
        // the conditioning of X and Z.
        let err = &rp - apply(&prep.rows, &dx);
        if err.norm() > 1e-14 * (1.0 + rp.norm()) {
            for (d, c) in dx.iter_mut().zip(prep.lift(&err)) {
                *d += c;
            }
        }
        (dy, dx, dz)
    };

    // Predictor.
    let (_, dx_a, dz_a) = direction(&zinv.iter().map(|m| m * 0.0).collect::<Vec<_>>());
    let ap = block_max_step(&it.x, &dx_a).min(1.0);
    let ad = block_max_step(&it.z, &dz_a).min(1.0);
    let x_aff: Vec<DMatrix<f64>> = (0..nb).map(|k| &it.x[k] + &dx_a[k] * ap).collect();
    let z_aff: Vec<DMatrix<f64>> = (0..nb).map(|k| &it.z[k] + &dz_a[k] * ad).collect();
    let mu_aff = inner(&x_aff, &z_aff) / ntot as f64;
    let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

    // Corrector with the second-order term.
    let target: Vec<DMatrix<f64>> = (0..nb)
        .map(|k| {
            let n = prep.dims[k];
            (DMatrix::identity(n, n) * (sigma * mu) - &dx_a[k] * &dz_a[k]) * &zinv[k]
        })
        .collect();
    let (dy, dx, dz) = direction(&target);
    let gamma = 0.9 + 0.09 * ap.min(ad);
    let ap = (gamma * block_max_step(&it.x, &dx)).min(1.0);
    let ad = (gamma * block_max_step(&it.z, &dz)).min(1.0);
    if !(ap.is_finite() && ad.is_finite()) || (ap == 0.0 && ad == 0.0) {
        return None;
    }
    let x = (0..nb).map(|k| &it.x[k] + &dx[k] * ap).collect();
    let z = (0..nb)
        .map(|k| {
            let mut m = &it.z[k] + &dz[k] * ad;
            symmetrize(&mut m);
            m
        })
        .collect();
    let y = &it.y + dy * ad;
    Some(Iterate { x, y, z })
}

/// `A(W)` for possibly non-symmetric blocks.
fn apply_nonsym(rows: &[Row], w: &[DMatrix<f64>]) -> DVector<f64> {
    apply(rows, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{BlockCoefficients, Constraint};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trace_constraint(dims: &[usize], rhs: f64) -> Constraint {
        let mut c = BlockCoefficients::new();
        for (b, &n) in dims.iter().enumerate() {
            for i in 0..n {
                c.add(b, i, i, 1.0);
            }
        }
        Constraint { coefficients: c, rhs }
    }

    fn dense(blocks: &[DMatrix<f64>]) -> BlockCoefficients {
        let mut c = BlockCoefficients::new();
        for (b, m) in blocks.iter().enumerate() {
            c.add_dense(b, m).unwrap();
        }
        c
    }

    fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn lambda_max(m: &DMatrix<f64>) -> f64 {
        SymmetricEigen::new(m.clone()).eigenvalues.max()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn trace_objective_is_forced() {
        let mut obj = BlockCoefficients::new();
        obj.add(0, 0, 0, 1.0);
        obj.add(0, 1, 1, 1.0);
        let p = BlockSdp::new(vec![2], Sense::Maximize, obj, vec![trace_constraint(&[2], 1.0)]).unwrap();
        let s = solve(&p, &opts()).unwrap();
        assert!(s.is_optimal());
        assert!((s.primal_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn extremal_eigenvalue_projector() {
        let mut obj = BlockCoefficients::new();
        obj.add(0, 0, 0, 1.0);
        let p = BlockSdp::new(vec![2], Sense::Maximize, obj, vec![trace_constraint(&[2], 1.0)]).unwrap();
        let s = solve(&p, &opts()).unwrap();
        assert!(s.is_optimal());
        assert!((s.primal_value - 1.0).abs() < 1e-8);
        let x = &s.primal_blocks[0];
        assert!((x[(0, 0)] - 1.0).abs() < 1e-6 && x[(1, 1)].abs() < 1e-6);
        assert!(s.duality_gap <= 1e-7);
    }

    #[test]
    fn minimization_returns_smallest_eigenvalue() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, -1.0]);
        let p = BlockSdp::new(vec![2], Sense::Minimize, dense(&[c.clone()]), vec![trace_constraint(&[2], 1.0)]).unwrap();
        let s = solve(&p, &opts()).unwrap();
        let want = SymmetricEigen::new(c).eigenvalues.min();
        assert!(s.is_optimal());
        assert!((s.primal_value - want).abs() < 1e-8);
        assert!((s.dual_value - want).abs() < 1e-7);
    }

    #[test]
    fn multipliers_certify_maximization() {
        // max <C, X>, tr X = 1 has dual min y, y I - C PSD.
        let c = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.2, -0.3, 0.7, 0.0, 0.7, 0.1]);
        let p = BlockSdp::new(vec![3], Sense::Maximize, dense(&[c.clone()]), vec![trace_constraint(&[3], 1.0)]).unwrap();
        let s = solve(&p, &opts()).unwrap();
        let y = s.dual_vector[0];
        assert!((y - lambda_max(&c)).abs() < 1e-7);
        let z = DMatrix::identity(3, 3) * y - &c;
        assert!((&z - &s.dual_slack[0]).norm() < 1e-6);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let mut obj = BlockCoefficients::new();
        obj.add(0, 0, 1, 1.0);
        let mut cons = vec![trace_constraint(&[2], 1.0), trace_constraint(&[2], 1.0)];
        let mut scaled = trace_constraint(&[2], 3.0);
        scaled.coefficients = scaled.coefficients.scaled(3.0);
        cons.push(scaled);
        let mut d = BlockCoefficients::new();
        d.add(0, 0, 0, 1.0);
        cons.push(Constraint { coefficients: d, rhs: 0.5 });
        let p = BlockSdp::new(vec![2], Sense::Maximize, obj, cons).unwrap();
        let s = solve(&p, &opts()).unwrap();
        assert!(s.is_optimal());
        assert_eq!(s.removed_constraints.len(), 2);
        // X = [[1/2, t], [t, 1/2]], objective 2t with t <= 1/2.
        assert!((s.primal_value - 1.0).abs() < 1e-7);
        assert_eq!(s.dual_vector.len(), 4);
    }

    #[test]
    fn contradictory_rows_are_primal_infeasible() {
        let cons = vec![trace_constraint(&[2], 1.0), trace_constraint(&[2], 2.0)];
        let p = BlockSdp::new(vec![2], Sense::Maximize, BlockCoefficients::new(), cons).unwrap();
        let s = solve(&p, &opts()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible(InfeasibleSide::Primal));
    }

    #[test]
    fn negative_trace_is_primal_infeasible() {
        let p = BlockSdp::new(vec![2], Sense::Maximize, BlockCoefficients::new(), vec![trace_constraint(&[2], -1.0)]).unwrap();
        let s = solve(&p, &opts()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible(InfeasibleSide::Primal));
    }

    #[test]
    fn unbounded_objective_is_dual_infeasible() {
        // max X_00 s.t. X_11 = 1: X_00 grows without limit.
        let mut obj = BlockCoefficients::new();
        obj.add(0, 0, 0, 1.0);
        let mut c = BlockCoefficients::new();
        c.add(0, 1, 1, 1.0);
        let p = BlockSdp::new(vec![2], Sense::Maximize, obj, vec![Constraint { coefficients: c, rhs: 1.0 }]).unwrap();
        let s = solve(&p, &opts()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible(InfeasibleSide::Dual));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, -1.0]);
        let p = BlockSdp::new(vec![2], Sense::Maximize, dense(&[c]), vec![trace_constraint(&[2], 1.0)]).unwrap();
        let s = solve(&p, &SolverOptions { max_iterations: 2, ..opts() }).unwrap();
        assert_eq!(s.status, SdpStatus::MaxIterations);
        assert!(s.duality_gap.is_finite());
    }

    /// Strictly feasible random problem with coupled blocks.
    fn random_problem(rng: &mut impl Rng, sense: Sense) -> BlockSdp {
        let nb = rng.gen_range(1..=3);
        let dims: Vec<usize> = (0..nb).map(|_| rng.gen_range(1..=4)).collect();
        let x0: Vec<DMatrix<f64>> = dims
            .iter()
            .map(|&n| {
                let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                &g * g.transpose() + DMatrix::identity(n, n) * 0.5
            })
            .collect();
        let m = rng.gen_range(1..=6);
        let mut cons = Vec::new();
        let mut a_dense = Vec::new();
        for _ in 0..m {
            let blocks: Vec<DMatrix<f64>> = dims
                .iter()
                .map(|&n| if rng.gen_bool(0.6) { random_symmetric(rng, n) } else { DMatrix::zeros(n, n) })
                .collect();
            let rhs: f64 = blocks.iter().zip(&x0).map(|(a, x)| a.dot(x)).sum();
            cons.push(Constraint { coefficients: dense(&blocks), rhs });
            a_dense.push(blocks);
        }
        cons.push(trace_constraint(&dims, x0.iter().map(|x| x.trace()).sum()));
        // C = s (A*(y0) + Z0) keeps the dual strictly feasible in either sense.
        let s = if sense == Sense::Maximize { -1.0 } else { 1.0 };
        let c: Vec<DMatrix<f64>> = dims
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let mut z = DMatrix::identity(n, n);
                for a in &a_dense {
                    z += &a[k] * rng.gen_range(-1.0..1.0);
                }
                z * s
            })
            .collect();
        BlockSdp::new(dims, sense, dense(&c), cons).unwrap()
    }

    #[test]
    fn eigenvalue_oracle_and_weak_duality_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..200 {
            let nb = rng.gen_range(1..=3);
            let dims: Vec<usize> = (0..nb).map(|_| rng.gen_range(1..=5)).collect();
            let c: Vec<DMatrix<f64>> = dims.iter().map(|&n| random_symmetric(&mut rng, n)).collect();
            let p = BlockSdp::new(dims.clone(), Sense::Maximize, dense(&c), vec![trace_constraint(&dims, 1.0)]).unwrap();
            let s = solve(&p, &SolverOptions { record_history: true, ..opts() }).unwrap();
            let oracle = c.iter().map(lambda_max).fold(f64::NEG_INFINITY, f64::max);
            assert!(s.is_optimal(), "case {case}");
            assert!((s.primal_value - oracle).abs() < 1e-7, "case {case}: {} vs {oracle}", s.primal_value);
            assert!(s.dual_value >= s.primal_value - 1e-12 * (1.0 + oracle.abs()), "case {case}");
            assert!(s.duality_gap <= 1e-7);
            assert!(s.min_primal_eigenvalue() >= -1e-9);
            assert!(s.primal_residual <= 1e-8);
            for rec in &s.history {
                if rec.primal_residual <= 1e-12 && rec.dual_residual <= 1e-12 {
                    assert!(rec.dual_value >= rec.primal_value - 1e-12 * (1.0 + oracle.abs()));
                }
            }
        }
    }

    #[test]
    fn random_coupled_problems_certify() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..100 {
            let sense = if case % 2 == 0 { Sense::Maximize } else { Sense::Minimize };
            let p = random_problem(&mut rng, sense);
            let s = solve(&p, &opts()).unwrap();
            assert!(s.is_optimal(), "case {case}: {:?}", s.status);
            assert!(s.duality_gap <= 1e-7 * 1f64.max(s.primal_value.abs()));
            assert!(s.primal_residual <= 1e-8 * 10.0, "case {case}: residual {}", s.primal_residual);
            assert!(s.min_primal_eigenvalue() >= -1e-9);
            // Weak duality up to the residual terms of the duality-gap identity.
            let slack = residual_bound(&p, &s);
            match sense {
                Sense::Maximize => assert!(s.dual_value >= s.primal_value - slack - 1e-12, "case {case}"),
                Sense::Minimize => assert!(s.dual_value <= s.primal_value + slack + 1e-12, "case {case}"),
            }
        }
    }

    /// `|y'(b - A(X))| + |<X, R>|` with `R` the dual residual in the sense of `p`.
    fn residual_bound(p: &BlockSdp, s: &SdpSolution) -> f64 {
        let sign = if p.sense() == Sense::Maximize { 1.0 } else { -1.0 };
        let x = &s.primal_blocks;
        let mut primal = 0.0;
        let mut rd: Vec<DMatrix<f64>> = p
            .block_dims()
            .iter()
            .enumerate()
            .map(|(k, &n)| -p.objective().block_dense(k, n) * sign - &s.dual_slack[k])
            .collect();
        for (c, &y) in p.constraints().iter().zip(&s.dual_vector) {
            primal += y * (c.rhs - c.coefficients.inner(x));
            for (k, &n) in p.block_dims().iter().enumerate() {
                rd[k] += c.coefficients.block_dense(k, n) * (y * sign);
            }
        }
        primal.abs() + rd.iter().zip(x).map(|(r, x)| r.dot(x)).sum::<f64>().abs()
    }

    fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        g.qr().q()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn objective_scaling_is_exact(seed in 0u64..1000, lambda in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, Sense::Maximize);
            let a = solve(&p, &opts()).unwrap();
            let b = solve(&p.with_scaled_objective(lambda), &opts()).unwrap();
            prop_assert!(a.is_optimal() && b.is_optimal());
            let rel = (b.primal_value - lambda * a.primal_value).abs() / (lambda * a.primal_value).abs().max(lambda);
            prop_assert!(rel <= 1e-9, "relative deviation {rel:e}");
        }

        #[test]
        fn orthogonal_change_of_basis(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, Sense::Minimize);
            let q: Vec<DMatrix<f64>> = p.block_dims().iter().map(|&n| random_orthogonal(&mut rng, n)).collect();
            let rotate = |c: &BlockCoefficients| {
                let blocks: Vec<DMatrix<f64>> = p
                    .block_dims()
                    .iter()
                    .enumerate()
                    .map(|(k, &n)| {
                        let mut m = q[k].transpose() * c.block_dense(k, n) * &q[k];
                        let t = m.transpose();
                        m = (m + t) * 0.5;
                        m
                    })
                    .collect();
                dense(&blocks)
            };
            let cons = p
                .constraints()
                .iter()
                .map(|c| Constraint { coefficients: rotate(&c.coefficients), rhs: c.rhs })
                .collect();
            let r = BlockSdp::new(p.block_dims().to_vec(), p.sense(), rotate(p.objective()), cons).unwrap();
            let a = solve(&p, &opts()).unwrap();
            let b = solve(&r, &opts()).unwrap();
            prop_assert!(a.is_optimal() && b.is_optimal());
            prop_assert!((a.primal_value - b.primal_value).abs() <= 1e-7 * 1f64.max(a.primal_value.abs()));
        }
    }
}
