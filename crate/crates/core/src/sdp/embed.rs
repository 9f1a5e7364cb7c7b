//! Real embedding of complex Hermitian semidefinite programs.
//!
//! `H = P + iQ` maps to `[[P, -Q], [Q, P]]`. The embedding is a real
//! symmetric matrix that is PSD exactly when `H` is, and
//! `<embed(H1), embed(H2)> = 2 Re tr(H1 H2)`.
//!
//! A Hermitian program is solved as a real one over unstructured `2n x 2n`
//! blocks. Any real solution can be compressed back without loss: averaging
//! it with its image under `J = [[0, -1], [1, 0]]` yields an embedded matrix
//! with the same objective and constraint values.

use nalgebra::{Complex, DMatrix};

use super::{BlockCoefficients, BlockSdp, Constraint, Sense};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex<f64>>;

/// Largest `|H_ij - conj(H_ji)|`.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `[[Re H, -Im H], [Im H, Re H]]`.
pub fn embed(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Hermitian matrix represented by a real symmetric `2n x 2n` matrix
/// `[[P, R^T], [R, S]]`: `(P + S)/2 + i (R - R^T)/2`.
pub fn compress(x: &DMatrix<f64>) -> CMatrix {
    let n = x.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(j + n, i)]);
        Complex::new(re, im)
    })
}

/// Appends the embedded, halved matrix so that `<A, X_real> = Re tr(H X)`.
fn push_embedded(coeffs: &mut BlockCoefficients, block: usize, h: &CMatrix) {
    let e = embed(h);
    let m = e.nrows();
    for i in 0..m {
        for j in i..m {
            let v = 0.5 * e[(i, j)];
            if v != 0.0 {
                coeffs.add(block, i, j, v);
            }
        }
    }
}

/// Builder for `opt Re sum_k tr(C_k X_k)  s.t.  Re sum_k tr(A_ik X_k) = b_i`,
/// `X_k` Hermitian PSD.
#[derive(Debug, Clone)]
pub struct HermitianSdp {
    dims: Vec<usize>,
    sense: Sense,
    objective: Vec<Option<CMatrix>>,
    constraints: Vec<(Vec<(usize, CMatrix)>, f64)>,
}

impl HermitianSdp {
    pub fn new(dims: Vec<usize>, sense: Sense) -> Self {
        let k = dims.len();
        Self { dims, sense, objective: vec![None; k], constraints: Vec::new() }
    }

    fn check(&self, block: usize, h: &CMatrix) -> Result<()> {
        let n = *self
            .dims
            .get(block)
            .ok_or_else(|| Error::MalformedSdp(format!("block {block} out of range")))?;
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: h.nrows() });
        }
        let defect = hermiticity_defect(h);
        if defect > 1e-12 * (1.0 + h.norm()) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }

    pub fn set_objective(&mut self, block: usize, c: CMatrix) -> Result<()> {
        self.check(block, &c)?;
        self.objective[block] = Some(c);
        Ok(())
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, CMatrix)>, rhs: f64) -> Result<()> {
        for (b, h) in &terms {
            self.check(*b, h)?;
        }
        self.constraints.push((terms, rhs));
        Ok(())
    }

    /// The equivalent real program over `2n x 2n` blocks.
    pub fn to_real(&self) -> Result<BlockSdp> {
        let dims = self.dims.iter().map(|&n| 2 * n).collect();
        let mut objective = BlockCoefficients::new();
        for (k, c) in self.objective.iter().enumerate() {
            if let Some(c) = c {
                push_embedded(&mut objective, k, c);
            }
        }
        let constraints = self
            .constraints
            .iter()
            .map(|(terms, rhs)| {
                let mut coefficients = BlockCoefficients::new();
                for (b, h) in terms {
                    push_embedded(&mut coefficients, *b, h);
                }
                Constraint { coefficients, rhs: *rhs }
            })
            .collect();
        BlockSdp::new(dims, self.sense, objective, constraints)
    }
}

/// Real-symmetric basis of the Hermitian `d x d` matrices, orthogonal under
/// `Re tr(A B)`: `E_ii`, `E_ij + E_ji` and `-i E_ij + i E_ji` for `i < j`.
///
/// Equality of two Hermitian matrices is equivalent to equality of their
/// pairings with each element, which gives `d^2` real constraints.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = Complex::new(1.0, 0.0);
        out.push(m);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = Complex::new(1.0, 0.0);
            m[(j, i)] = Complex::new(1.0, 0.0);
            out.push(m);
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = Complex::new(0.0, -1.0);
            m[(j, i)] = Complex::new(0.0, 1.0);
            out.push(m);
        }
    }
    out
}
