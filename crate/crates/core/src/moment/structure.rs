//! Symbolic moment matrices.
//!
//! Rows are products `a (x) n` of a reduced Alice word and a normal Bob core
//! word. Entry `(i, j)` is the expectation `L(a_i^dag a_j (x) n_i^dag n_j)`,
//! represented as `sign * L_k` or `sign * conj(L_k)` for a class
//! representative `k`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::algebra::BobAlgebra;
use super::monomial::{cancel_squares, monomials_up_to, Monomial};
use crate::error::{Error, Result};
use crate::quantum::{kron, CMatrix, DensityMatrix, C64};

/// How expectation values are carried.
///
/// `Real` identifies `L(w)` with `L(w^dag)`. For problems with real data this
/// loses nothing: averaging a feasible moment matrix with its complex
/// conjugate keeps it feasible and leaves real objectives unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentMode {
    #[default]
    Real,
    Complex,
}

/// What is known about the value of a class representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    General,
    /// `w^dag` reduces to `w`.
    RealValued,
    /// `w^dag` reduces to `-w`; only occurs in complex mode.
    Imaginary,
}

/// `sign * L_key`, conjugated when `conj` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRef {
    pub sign: f64,
    pub key: usize,
    pub conj: bool,
}

/// Linear combination of class representatives.
pub type LinearForm = Vec<(f64, MomentRef)>;

#[derive(Debug, Clone)]
pub struct MomentMatrixStructure {
    level: usize,
    inputs_a: usize,
    inputs_b: usize,
    algebra: BobAlgebra,
    constrained: bool,
    mode: MomentMode,
    rows: Vec<Monomial>,
    keys: Vec<Monomial>,
    kinds: Vec<KeyKind>,
    /// Row-major; `None` marks entries that vanish identically.
    entries: Vec<Option<MomentRef>>,
    lookup: HashMap<Monomial, Option<MomentRef>>,
}

/// Algebra with one unrelated core generator per Bob setting.
fn free_algebra(inputs_b: usize) -> Result<BobAlgebra> {
    let gens = (0..inputs_b).map(|i| (0..inputs_b).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    BobAlgebra::new(inputs_b, gens, Vec::new(), Vec::new())
}

impl MomentMatrixStructure {
    /// Level-`level` structure for dichotomic observables. Without an
    /// algebra Bob's settings are unrelated.
    pub fn new(
        inputs_a: usize,
        inputs_b: usize,
        level: usize,
        algebra: Option<&BobAlgebra>,
        mode: MomentMode,
    ) -> Result<Self> {
        if !(1..=3).contains(&level) {
            return Err(Error::InvalidArgument(format!("hierarchy level {level} not in 1..=3")));
        }
        if inputs_a == 0 || inputs_b == 0 {
            return Err(Error::InvalidArgument("both parties need settings".into()));
        }
        let constrained = algebra.is_some();
        let algebra = match algebra {
            Some(a) if a.num_settings() != inputs_b => {
                return Err(Error::DimensionMismatch { expected: inputs_b, found: a.num_settings() })
            }
            Some(a) => a.clone(),
            None => free_algebra(inputs_b)?,
        };
        let mut rows: Vec<Monomial> = Vec::new();
        for m in monomials_up_to(inputs_a, inputs_b, level) {
            for (_, n) in algebra.expand(m.bob()) {
                let row = Monomial::from_parts(m.alice(), &n);
                if !rows.contains(&row) {
                    rows.push(row);
                }
            }
        }
        let mut s = Self {
            level,
            inputs_a,
            inputs_b,
            algebra,
            constrained,
            mode,
            rows,
            keys: vec![Monomial::identity()],
            kinds: vec![KeyKind::RealValued],
            entries: Vec::new(),
            lookup: HashMap::new(),
        };
        s.lookup.insert(Monomial::identity(), Some(MomentRef { sign: 1.0, key: 0, conj: false }));
        let d = s.rows.len();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let adj = s.rows[i].adjoint();
                let (sign, m) = s.product(&adj, &s.rows[j]);
                let r = s.register(&m);
                entries.push(r.map(|r| MomentRef { sign: sign * r.sign, ..r }));
            }
        }
        s.entries = entries;
        Ok(s)
    }

    /// Signed canonical form of `left * right`; `left` may carry a
    /// non-normal Bob word.
    fn product(&self, left: &Monomial, right: &Monomial) -> (f64, Monomial) {
        let a: Vec<usize> = left.alice().iter().chain(right.alice()).copied().collect();
        let b: Vec<usize> = left.bob().iter().chain(right.bob()).copied().collect();
        let (sign, nb) = self.algebra.reduce_core(&b);
        (sign, Monomial::from_parts(&cancel_squares(&a), &nb))
    }

    /// `(sign, m')` with `m^dag = sign * m'` and `m'` canonical.
    fn adjoint_of(&self, m: &Monomial) -> (f64, Monomial) {
        let adj = m.adjoint();
        let (sign, nb) = self.algebra.reduce_core(adj.bob());
        (sign, Monomial::from_parts(adj.alice(), &nb))
    }

    fn register(&mut self, m: &Monomial) -> Option<MomentRef> {
        if let Some(r) = self.lookup.get(m) {
            return *r;
        }
        let (s, adj) = self.adjoint_of(m);
        let r = if adj == *m {
            match (s > 0.0, self.mode) {
                (false, MomentMode::Real) => None,
                (real, _) => {
                    self.keys.push(m.clone());
                    self.kinds.push(if real { KeyKind::RealValued } else { KeyKind::Imaginary });
                    Some(MomentRef { sign: 1.0, key: self.keys.len() - 1, conj: false })
                }
            }
        } else {
            self.keys.push(m.clone());
            self.kinds.push(KeyKind::General);
            let k = self.keys.len() - 1;
            // L(m') = s * conj(L(m)).
            self.lookup.insert(adj, Some(MomentRef { sign: s, key: k, conj: true }));
            Some(MomentRef { sign: 1.0, key: k, conj: false })
        };
        self.lookup.insert(m.clone(), r);
        r
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn inputs_a(&self) -> usize {
        self.inputs_a
    }

    pub fn inputs_b(&self) -> usize {
        self.inputs_b
    }

    pub fn mode(&self) -> MomentMode {
        self.mode
    }

    pub fn algebra(&self) -> &BobAlgebra {
        &self.algebra
    }

    /// Whether Bob's relations were supplied rather than assumed free.
    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Monomial] {
        &self.rows
    }

    pub fn keys(&self) -> &[Monomial] {
        &self.keys
    }

    pub fn key_kinds(&self) -> &[KeyKind] {
        &self.kinds
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<MomentRef> {
        self.entries[i * self.rows.len() + j]
    }

    /// Real unknowns per block.
    pub fn free_variable_count(&self) -> usize {
        match self.mode {
            MomentMode::Real => self.keys.len(),
            MomentMode::Complex => {
                self.kinds.iter().map(|k| if *k == KeyKind::General { 2 } else { 1 }).sum()
            }
        }
    }

    /// Class of a canonical monomial occurring in the matrix. `Ok(None)`
    /// means the moment vanishes identically.
    pub fn lookup(&self, m: &Monomial) -> Result<Option<MomentRef>> {
        self.lookup
            .get(m)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("moment {m} is not in the level-{} matrix", self.level)))
    }

    /// `L(A_{alice} (x) B_{bob})` for words in Bob's settings, with derived
    /// settings expanded through the algebra.
    pub fn linear_form(&self, alice: &[usize], bob_settings: &[usize]) -> Result<LinearForm> {
        let a = cancel_squares(alice);
        let mut out = Vec::new();
        for (c, n) in self.algebra.expand(bob_settings) {
            if let Some(r) = self.lookup(&Monomial::from_parts(&a, &n))? {
                out.push((c, r));
            }
        }
        Ok(out)
    }

    /// Moment matrix for given representative values.
    pub fn fill(&self, values: &[C64]) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| match self.entry(i, j) {
            Some(r) => resolve(r, values),
            None => C64::new(0.0, 0.0),
        })
    }

    /// Representative values for a concrete realization on `H_A (x) H_B`.
    /// Bob's operators are the core generators.
    pub fn realize(&self, state: &DensityMatrix, alice: &[CMatrix], bob_core: &[CMatrix]) -> Result<Vec<C64>> {
        if alice.len() != self.inputs_a || bob_core.len() != self.algebra.num_core() {
            return Err(Error::DimensionMismatch { expected: self.inputs_a, found: alice.len() });
        }
        let mut values: Vec<C64> = self
            .keys
            .iter()
            .map(|k| state.expectation(&word_operator(k, alice, bob_core)))
            .collect::<Result<_>>()?;
        if self.mode == MomentMode::Real {
            for v in &mut values {
                v.im = 0.0;
            }
        }
        Ok(values)
    }

    /// Moment matrix of a realization computed from operator products,
    /// without the symbolic reduction.
    pub fn direct_matrix(&self, state: &DensityMatrix, alice: &[CMatrix], bob_core: &[CMatrix]) -> Result<CMatrix> {
        let ops: Vec<CMatrix> = self.rows.iter().map(|r| word_operator(r, alice, bob_core)).collect();
        let d = self.dim();
        let mut g = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = state.expectation(&(ops[i].adjoint() * &ops[j]))?;
            }
        }
        Ok(g)
    }
}

pub fn resolve(r: MomentRef, values: &[C64]) -> C64 {
    let v = values[r.key];
    (if r.conj { v.conj() } else { v }) * r.sign
}

/// `A_{w_A} (x) B_{w_B}` with Bob's letters read as core generators.
pub fn word_operator(m: &Monomial, alice: &[CMatrix], bob_core: &[CMatrix]) -> CMatrix {
    let prod = |w: &[usize], ops: &[CMatrix]| {
        let d = ops[0].nrows();
        w.iter().fold(CMatrix::identity(d, d), |acc, &l| acc * &ops[l])
    };
    kron(&prod(m.alice(), alice), &prod(m.bob(), bob_core))
}

/// Real part of a moment matrix as a real symmetric matrix.
pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        nalgebra::Complex::new(re, 0.0)
    }
    use crate::quantum::{bloch_operator, hermitian_eigenvalues, paulis, werner_state};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn standard_ops() -> (Vec<CMatrix>, Vec<CMatrix>) {
        let [x, _, z] = paulis();
        (vec![x.clone(), z.clone()], vec![x, z])
    }

    #[test]
    fn level_one_rows() {
        let s = MomentMatrixStructure::new(2, 2, 1, None, MomentMode::Real).unwrap();
        let names: Vec<String> = s.rows().iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "A1", "A2", "B1", "B2"]);
        assert_eq!(s.entry(1, 3), s.entry(3, 1));
        assert_eq!(s.entry(0, 0).unwrap().key, 0);
    }

    #[test]
    fn algebra_shrinks_the_structure() {
        let free = MomentMatrixStructure::new(2, 4, 2, None, MomentMode::Real).unwrap();
        let alg = BobAlgebra::standard();
        let known = MomentMatrixStructure::new(2, 4, 2, Some(&alg), MomentMode::Real).unwrap();
        assert_eq!(free.dim(), 29);
        assert_eq!(known.dim(), 12);
        assert!(known.free_variable_count() < free.free_variable_count());
        // No B3 or B4 letters survive as unknowns.
        assert!(known.keys().iter().all(|k| k.bob().iter().all(|&l| l < 2)));
    }

    #[test]
    fn structure_is_hermitian() {
        let alg = BobAlgebra::standard();
        for mode in [MomentMode::Real, MomentMode::Complex] {
            for s in [
                MomentMatrixStructure::new(2, 4, 2, Some(&alg), mode).unwrap(),
                MomentMatrixStructure::new(2, 3, 2, None, mode).unwrap(),
            ] {
                let mut rng = ChaCha8Rng::seed_from_u64(1);
                let values: Vec<C64> = s
                    .key_kinds()
                    .iter()
                    .map(|k| match (k, mode) {
                        (KeyKind::RealValued, _) | (_, MomentMode::Real) => c(rng.gen_range(-1.0..1.0)),
                        (KeyKind::Imaginary, _) => C64::new(0.0, rng.gen_range(-1.0..1.0)),
                        (KeyKind::General, _) => C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    })
                    .collect();
                let g = s.fill(&values);
                assert!((&g - g.adjoint()).norm() < 1e-15);
            }
        }
    }

    fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
        loop {
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.1 && n <= 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    fn orthogonal_to(u: [f64; 3], rng: &mut impl Rng) -> [f64; 3] {
        let r = random_unit(rng);
        let d = r[0] * u[0] + r[1] * u[1] + r[2] * u[2];
        let w = [r[0] - d * u[0], r[1] - d * u[1], r[2] - d * u[2]];
        let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        [w[0] / n, w[1] / n, w[2] / n]
    }

    fn random_two_qubit_state(rng: &mut impl Rng) -> DensityMatrix {
        let m = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let p = &m * m.adjoint();
        let t = p.trace().re;
        DensityMatrix::new(p / c(t)).unwrap()
    }

    #[test]
    fn symbolic_matrix_matches_realizations() {
        // Random states and observables obeying the standard relations:
        // B1, B2 anticommute, Alice's observables are arbitrary.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let alg = BobAlgebra::standard();
        let sc = MomentMatrixStructure::new(2, 4, 2, Some(&alg), MomentMode::Complex).unwrap();
        let sr = MomentMatrixStructure::new(2, 4, 2, Some(&alg), MomentMode::Real).unwrap();
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        for _ in 0..100 {
            let rho = random_two_qubit_state(&mut rng);
            let alice = vec![bloch_operator(random_unit(&mut rng)), bloch_operator(random_unit(&mut rng))];
            let u = random_unit(&mut rng);
            let bob_core = vec![bloch_operator(u), bloch_operator(orthogonal_to(u, &mut rng))];
            let direct = sc.direct_matrix(&rho, &alice, &bob_core).unwrap();
            let values = sc.realize(&rho, &alice, &bob_core).unwrap();
            assert!((sc.fill(&values) - &direct).norm() < 1e-12);
            let real_values = sr.realize(&rho, &alice, &bob_core).unwrap();
            assert!((real_part(&sr.fill(&real_values)) - real_part(&direct)).norm() < 1e-12);
            // Every rewritten Bob relation, checked on settings products.
            let bob_settings = {
                let (b1, b2) = (&bob_core[0], &bob_core[1]);
                vec![b1.clone(), b2.clone(), (b1 + b2) * c(s2), (b1 - b2) * c(s2)]
            };
            for x in 0..2 {
                for y1 in 0..4 {
                    for y2 in 0..4 {
                        let op = kron(&alice[x], &(&bob_settings[y1] * &bob_settings[y2]));
                        let want = rho.expectation(&op).unwrap();
                        let got: C64 = sc
                            .linear_form(&[x], &[y1, y2])
                            .unwrap()
                            .iter()
                            .map(|(k, r)| resolve(*r, &values) * *k)
                            .sum();
                        assert!((want - got).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn werner_moments_are_positive() {
        let (alice, bob) = standard_ops();
        let alg = BobAlgebra::standard();
        for v in [0.0, 0.4, 0.75, 1.0] {
            let rho = werner_state(v).unwrap();
            for (s, core) in [
                (MomentMatrixStructure::new(2, 4, 2, Some(&alg), MomentMode::Real).unwrap(), bob.clone()),
                (MomentMatrixStructure::new(2, 2, 2, None, MomentMode::Complex).unwrap(), bob.clone()),
            ] {
                let vals = s.realize(&rho, &alice, &core).unwrap();
                let lmin = hermitian_eigenvalues(&s.fill(&vals))[0];
                assert!(lmin > -1e-12, "v={v} lmin={lmin}");
            }
        }
    }
}
