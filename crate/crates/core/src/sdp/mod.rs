//! Block-diagonal semidefinite programs in standard primal form.
//!
//! A [`BlockSdp`] describes
//!
//! ```text
//!   max / min   <C, X>
//!   subject to  <A_i, X> = b_i      i = 1..m
//!               X = diag(X_1, ..., X_k),  X_j PSD
//! ```
//!
//! with real symmetric data. The dual used for certification is
//! `min b'y  s.t.  sum_i y_i A_i - C = Z >= 0` for maximization and
//! `max b'y  s.t.  C - sum_i y_i A_i = Z >= 0` for minimization.
//!
//! Complex Hermitian problems must be embedded first, see [`embed`].

pub mod embed;
mod ipm;
pub mod sdpa;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use ipm::solve;

/// Optimization direction of the primal objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// One stored coefficient of a symmetric block matrix, `row <= col`.
///
/// An off-diagonal entry stands for both `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A symmetric block-diagonal coefficient matrix in triplet form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockCoefficients {
    entries: Vec<Entry>,
}

impl BlockCoefficients {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` and its mirror. Repeated positions accumulate.
    pub fn add(&mut self, block: usize, row: usize, col: usize, value: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push(Entry { block, row, col, value });
    }

    /// Adds every upper-triangular entry of a dense symmetric matrix.
    ///
    /// The matrix must be exactly symmetric.
    pub fn add_dense(&mut self, block: usize, matrix: &DMatrix<f64>) -> Result<()> {
        if !matrix.is_square() {
            return Err(Error::MalformedSdp("coefficient matrix is not square".into()));
        }
        let n = matrix.nrows();
        for i in 0..n {
            for j in i..n {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(Error::MalformedSdp(format!(
                        "coefficient matrix of block {block} is not symmetric at ({i},{j})"
                    )));
                }
                if matrix[(i, j)] != 0.0 {
                    self.add(block, i, j, matrix[(i, j)]);
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts entries, merges repeated positions and drops exact zeros.
    fn canonicalize(&mut self) {
        self.entries
            .sort_by(|a, b| (a.block, a.row, a.col).cmp(&(b.block, b.row, b.col)));
        let mut merged: Vec<Entry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last) if (last.block, last.row, last.col) == (e.block, e.row, e.col) => {
                    last.value += e.value;
                }
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        self.entries = merged;
    }

    /// Dense copy of one block.
    pub fn block_dense(&self, block: usize, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for e in self.entries.iter().filter(|e| e.block == block) {
            m[(e.row, e.col)] += e.value;
            if e.row != e.col {
                m[(e.col, e.row)] += e.value;
            }
        }
        m
    }

    /// `<self, X>` for a block-diagonal `X`.
    pub fn inner(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let v = e.value * x[e.block][(e.row, e.col)];
                if e.row == e.col {
                    v
                } else {
                    2.0 * v
                }
            })
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| Entry { value: e.value * factor, ..*e })
                .collect(),
        }
    }
}

/// Equality constraint `<A, X> = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: BlockCoefficients,
    pub rhs: f64,
}

/// A validated block semidefinite program. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSdp {
    block_dims: Vec<usize>,
    objective: BlockCoefficients,
    constraints: Vec<Constraint>,
    sense: Sense,
}

impl BlockSdp {
    /// Validates and assembles a problem.
    pub fn new(
        block_dims: Vec<usize>,
        sense: Sense,
        mut objective: BlockCoefficients,
        mut constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if block_dims.is_empty() || block_dims.iter().any(|&d| d == 0) {
            return Err(Error::MalformedSdp("block dimensions must be positive".into()));
        }
        if constraints.is_empty() {
            return Err(Error::MalformedSdp("constraint list is empty".into()));
        }
        let check = |c: &BlockCoefficients, what: &str| -> Result<()> {
            for e in c.entries() {
                if e.block >= block_dims.len() {
                    return Err(Error::MalformedSdp(format!("{what}: block {} out of range", e.block)));
                }
                if e.col >= block_dims[e.block] {
                    return Err(Error::MalformedSdp(format!(
                        "{what}: index ({},{}) outside block {} of size {}",
                        e.row, e.col, e.block, block_dims[e.block]
                    )));
                }
                if !e.value.is_finite() {
                    return Err(Error::MalformedSdp(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        check(&objective, "objective")?;
        objective.canonicalize();
        for (k, c) in constraints.iter_mut().enumerate() {
            check(&c.coefficients, &format!("constraint {k}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::MalformedSdp(format!("constraint {k}: non-finite right-hand side")));
            }
            c.coefficients.canonicalize();
        }
        Ok(Self { block_dims, objective, constraints, sense })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn objective(&self) -> &BlockCoefficients {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Objective value `<C, X>`.
    pub fn objective_value(&self, x: &[DMatrix<f64>]) -> f64 {
        self.objective.inner(x)
    }

    /// Largest absolute constraint residual `|<A_i, X> - b_i|`.
    pub fn max_residual(&self, x: &[DMatrix<f64>]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.coefficients.inner(x) - c.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Copy with the objective multiplied by `factor`.
    pub fn with_scaled_objective(&self, factor: f64) -> Self {
        Self { objective: self.objective.scaled(factor), ..self.clone() }
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative duality gap `|p - d| / max(1, |p|, |d|)` required for optimality.
    pub gap_tol: f64,
    /// Relative primal and dual residual required for optimality.
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Pivot threshold for dropping linearly dependent constraints.
    pub pivot_tol: f64,
    /// Record every iterate in [`SdpSolution::history`].
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            feas_tol: 1e-8,
            max_iterations: 200,
            pivot_tol: 1e-10,
            record_history: false,
        }
    }
}

/// Which side of the primal-dual pair has no feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleSide {
    Primal,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible(InfeasibleSide),
    MaxIterations,
}

/// Objective values and residuals of one interior-point iterate, in the
/// user's sense and scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `|primal_value - dual_value|`.
    pub duality_gap: f64,
    pub primal_blocks: Vec<DMatrix<f64>>,
    /// Multipliers of the original constraints; dropped redundant rows get zero.
    pub dual_vector: Vec<f64>,
    /// Dual slack `Z`, PSD at every iterate.
    pub dual_slack: Vec<DMatrix<f64>>,
    /// Largest absolute residual of the original constraints at `primal_blocks`.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Indices of constraints removed as linearly dependent.
    pub removed_constraints: Vec<usize>,
    pub history: Vec<IterateRecord>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Smallest eigenvalue over all primal blocks.
    pub fn min_primal_eigenvalue(&self) -> f64 {
        self.primal_blocks
            .iter()
            .map(|b| min_eigenvalue(b))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
