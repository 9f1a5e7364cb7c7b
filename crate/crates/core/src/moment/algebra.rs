//! Known operator relations on Bob's side.
//!
//! Bob's settings are expressed as real linear combinations of a few *core*
//! dichotomic generators. Pairs of core generators may commute or
//! anticommute; other pairs are unrelated. Every Bob word then rewrites to a
//! unique linear combination of normal core words.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::quantum::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    Commute,
    Anticommute,
}

impl PairRelation {
    fn sign(self) -> f64 {
        match self {
            PairRelation::Commute => 1.0,
            PairRelation::Anticommute => -1.0,
        }
    }
}

/// Linear combination of normal core words.
pub type Combination = Vec<(f64, Vec<usize>)>;

const COEFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BobAlgebra {
    n_core: usize,
    /// Coefficients over the core generators, one row per Bob setting.
    generators: Vec<Vec<f64>>,
    /// `relation[i][j]` for core generators `i != j`.
    relation: Vec<Vec<Option<PairRelation>>>,
    derived_relations: Vec<(usize, usize, PairRelation)>,
}

fn name(y: usize) -> String {
    format!("B{}", y + 1)
}

impl BobAlgebra {
    /// Validates the relations: every setting must square to the identity
    /// and every declared relation between settings must follow from the
    /// core relations.
    pub fn new(
        n_core: usize,
        generators: Vec<Vec<f64>>,
        core_relations: Vec<(usize, usize, PairRelation)>,
        derived_relations: Vec<(usize, usize, PairRelation)>,
    ) -> Result<Self> {
        if n_core == 0 || generators.is_empty() {
            return Err(Error::InvalidArgument("algebra needs generators".into()));
        }
        for g in &generators {
            if g.len() != n_core {
                return Err(Error::DimensionMismatch { expected: n_core, found: g.len() });
            }
            if g.iter().any(|v| !v.is_finite()) || g.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidArgument("generator coefficients must be finite and nonzero".into()));
            }
        }
        let mut relation = vec![vec![None; n_core]; n_core];
        for &(i, j, r) in &core_relations {
            if i >= n_core || j >= n_core || i == j {
                return Err(Error::InvalidArgument(format!("bad core pair ({i},{j})")));
            }
            if relation[i][j].is_some_and(|old| old != r) {
                return Err(Error::InconsistentAlgebra { left: format!("core {i}"), right: format!("core {j}") });
            }
            relation[i][j] = Some(r);
            relation[j][i] = Some(r);
        }
        let alg = Self { n_core, generators, relation, derived_relations };
        for y in 0..alg.generators.len() {
            if !is_identity(&alg.expand(&[y, y])) {
                return Err(Error::InconsistentAlgebra { left: name(y), right: name(y) });
            }
        }
        for &(g, h, r) in &alg.derived_relations {
            if g >= alg.generators.len() || h >= alg.generators.len() {
                return Err(Error::InvalidArgument(format!("bad setting pair ({g},{h})")));
            }
            if !alg.relation_holds(g, h, r) {
                return Err(Error::InconsistentAlgebra { left: name(g), right: name(h) });
            }
        }
        Ok(alg)
    }

    /// `B1 = sigma_x`, `B2 = sigma_z` anticommuting, `B3 = (B1 + B2)/sqrt 2`,
    /// `B4 = (B1 - B2)/sqrt 2`, with `B3 B4 = -B4 B3`.
    pub fn standard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s], vec![s, -s]],
            vec![(0, 1, PairRelation::Anticommute)],
            vec![(2, 3, PairRelation::Anticommute)],
        )
        .expect("standard relations are consistent")
    }

    /// Detects core generators, linear dependencies and pairwise
    /// (anti)commutation of concrete Hermitian dichotomic operators.
    ///
    /// Relations between derived settings are declared only when they
    /// follow from the core relations.
    pub fn from_operators(ops: &[CMatrix], tol: f64) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidArgument("no operators".into()));
        }
        let d = ops[0].nrows();
        let id = CMatrix::identity(d, d);
        for (y, o) in ops.iter().enumerate() {
            if o.nrows() != d || !o.is_square() {
                return Err(Error::DimensionMismatch { expected: d, found: o.nrows() });
            }
            if (o * o - &id).norm() > tol {
                return Err(Error::InvalidArgument(format!("{} does not square to the identity", name(y))));
            }
        }
        let vec_of = |m: &CMatrix| -> Vec<f64> { m.iter().flat_map(|z| [z.re, z.im]).collect() };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut core: Vec<usize> = Vec::new();
        let mut coeffs: Vec<Vec<f64>> = Vec::new();
        for (y, o) in ops.iter().enumerate() {
            let v = vec_of(o);
            let c = if core.is_empty() {
                None
            } else {
                let k = core.len();
                let basis: Vec<Vec<f64>> = core.iter().map(|&i| vec_of(&ops[i])).collect();
                let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &basis[j]));
                let rhs = nalgebra::DVector::from_fn(k, |i, _| dot(&basis[i], &v));
                let sol = gram.lu().solve(&rhs).ok_or_else(|| Error::SolverFailure("singular Gram matrix".into()))?;
                let resid: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, &x)| x - (0..k).map(|i| sol[i] * basis[i][t]).sum::<f64>())
                    .map(|r| r * r)
                    .sum::<f64>()
                    .sqrt();
                (resid <= tol).then(|| sol.iter().copied().collect::<Vec<f64>>())
            };
            match c {
                Some(c) => coeffs.push(c),
                None => {
                    core.push(y);
                    coeffs.push(Vec::new());
                }
            }
        }
        let n_core = core.len();
        let generators: Vec<Vec<f64>> = coeffs
            .into_iter()
            .enumerate()
            .map(|(y, mut c)| {
                if let Some(pos) = core.iter().position(|&i| i == y) {
                    let mut e = vec![0.0; n_core];
                    e[pos] = 1.0;
                    e
                } else {
                    c.resize(n_core, 0.0);
                    c
                }
            })
            .collect();
        let classify = |a: &CMatrix, b: &CMatrix| -> Option<PairRelation> {
            if (a * b - b * a).norm() <= tol {
                Some(PairRelation::Commute)
            } else if (a * b + b * a).norm() <= tol {
                Some(PairRelation::Anticommute)
            } else {
                None
            }
        };
        let mut core_relations = Vec::new();
        for i in 0..n_core {
            for j in (i + 1)..n_core {
                if let Some(r) = classify(&ops[core[i]], &ops[core[j]]) {
                    core_relations.push((i, j, r));
                }
            }
        }
        let base = Self::new(n_core, generators, core_relations, Vec::new())?;
        let mut derived = Vec::new();
        for g in 0..ops.len() {
            for h in (g + 1)..ops.len() {
                if core.contains(&g) && core.contains(&h) {
                    continue;
                }
                if let Some(r) = classify(&ops[g], &ops[h]) {
                    if base.relation_holds(g, h, r) {
                        derived.push((g, h, r));
                    }
                }
            }
        }
        Ok(Self { derived_relations: derived, ..base })
    }

    pub fn num_core(&self) -> usize {
        self.n_core
    }

    pub fn num_settings(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, y: usize) -> &[f64] {
        &self.generators[y]
    }

    pub fn core_relation(&self, i: usize, j: usize) -> Option<PairRelation> {
        if i == j {
            None
        } else {
            self.relation[i][j]
        }
    }

    pub fn derived_relations(&self) -> &[(usize, usize, PairRelation)] {
        &self.derived_relations
    }

    fn relation_holds(&self, g: usize, h: usize, r: PairRelation) -> bool {
        let gh = self.expand(&[g, h]);
        let hg = self.expand(&[h, g]);
        let diff = add(&gh, &scale(&hg, -r.sign()));
        diff.is_empty()
    }

    fn related(&self, a: usize, b: usize) -> Option<f64> {
        if a == b {
            Some(1.0)
        } else {
            self.relation[a][b].map(PairRelation::sign)
        }
    }

    /// Signed normal form of a word in core generators.
    ///
    /// Squares are cancelled whenever two equal letters can be brought
    /// together through related letters; the result is the lexicographically
    /// smallest word reachable by reordering related neighbours.
    pub fn reduce_core(&self, word: &[usize]) -> (f64, Vec<usize>) {
        let mut w = word.to_vec();
        let mut sign = 1.0;
        'cancel: loop {
            for i in 0..w.len() {
                for j in (i + 1)..w.len() {
                    if w[j] != w[i] {
                        continue;
                    }
                    let between = &w[i + 1..j];
                    if between.iter().all(|&b| self.related(b, w[i]).is_some()) {
                        for &b in between {
                            sign *= self.related(b, w[i]).unwrap();
                        }
                        w.remove(j);
                        w.remove(i);
                        continue 'cancel;
                    }
                    break;
                }
            }
            break;
        }
        let mut out = Vec::with_capacity(w.len());
        while !w.is_empty() {
            let mut best: Option<(usize, usize)> = None;
            for p in 0..w.len() {
                let l = w[p];
                if w[..p].iter().any(|&b| b == l || self.related(b, l).is_none()) {
                    continue;
                }
                if best.map_or(true, |(bl, _)| l < bl) {
                    best = Some((l, p));
                }
            }
            let (l, p) = best.expect("the first letter is always movable");
            for &b in &w[..p] {
                sign *= self.related(b, l).unwrap();
            }
            w.remove(p);
            out.push(l);
        }
        (sign, out)
    }

    /// Rewrites a word in Bob's settings as a combination of normal words.
    pub fn expand(&self, settings: &[usize]) -> Combination {
        let mut terms: Vec<(f64, Vec<usize>)> = vec![(1.0, Vec::new())];
        for &y in settings {
            let mut next = Vec::new();
            for (c, w) in &terms {
                for (i, &a) in self.generators[y].iter().enumerate() {
                    if a != 0.0 {
                        let mut v = w.clone();
                        v.push(i);
                        next.push((c * a, v));
                    }
                }
            }
            terms = next;
        }
        let reduced: Combination = terms
            .into_iter()
            .map(|(c, w)| {
                let (s, n) = self.reduce_core(&w);
                (c * s, n)
            })
            .collect();
        add(&reduced, &[])
    }

    /// Normal core words of length at most `len`.
    pub fn normal_words_up_to(&self, len: usize) -> Vec<Vec<usize>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut frontier = vec![Vec::new()];
        seen.insert(Vec::new());
        for _ in 0..len {
            let mut next = Vec::new();
            for w in &frontier {
                for l in 0..self.n_core {
                    let mut v: Vec<usize> = w.clone();
                    v.push(l);
                    let (_, n) = self.reduce_core(&v);
                    if seen.insert(n.clone()) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        let mut out: Vec<Vec<usize>> = seen.into_iter().collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }
}

fn is_identity(c: &Combination) -> bool {
    c.len() == 1 && c[0].1.is_empty() && (c[0].0 - 1.0).abs() <= COEFF_TOL
}

/// Sum of two combinations with merged terms and tiny coefficients dropped.
pub fn add(a: &[(f64, Vec<usize>)], b: &[(f64, Vec<usize>)]) -> Combination {
    let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (c, w) in a.iter().chain(b) {
        *acc.entry(w.clone()).or_insert(0.0) += c;
    }
    acc.into_iter().filter(|(_, c)| c.abs() > COEFF_TOL).map(|(w, c)| (c, w)).collect()
}

fn scale(a: &[(f64, Vec<usize>)], s: f64) -> Combination {
    a.iter().map(|(c, w)| (c * s, w.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bloch_operator, paulis};
    use nalgebra::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn word_operator(ops: &[CMatrix], w: &[usize]) -> CMatrix {
        let d = ops[0].nrows();
        w.iter().fold(CMatrix::identity(d, d), |acc, &l| acc * &ops[l])
    }

    fn combination_operator(ops: &[CMatrix], c: &Combination) -> CMatrix {
        let d = ops[0].nrows();
        c.iter().fold(CMatrix::zeros(d, d), |acc, (k, w)| acc + word_operator(ops, w) * Complex::new(*k, 0.0))
    }

    #[test]
    fn standard_algebra_basis() {
        let alg = BobAlgebra::standard();
        assert_eq!(alg.normal_words_up_to(4), vec![vec![], vec![0], vec![1], vec![0, 1]]);
        assert_eq!(alg.reduce_core(&[1, 0]), (-1.0, vec![0, 1]));
        assert_eq!(alg.reduce_core(&[1, 0, 1]), (-1.0, vec![0]));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b34 = alg.expand(&[2, 3]);
        assert_eq!(b34.len(), 1);
        assert_eq!(b34[0].1, vec![0, 1]);
        assert!((b34[0].0 + 1.0).abs() < 1e-15);
        let b13 = alg.expand(&[0, 2]);
        assert_eq!(b13.len(), 2);
        assert!(b13.iter().all(|(c, _)| (c - s).abs() < 1e-15));
    }

    #[test]
    fn inconsistent_relations_name_the_pair() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Commuting cores make (B1 + B2)/sqrt 2 fail to square to one.
        let err = BobAlgebra::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s]], vec![(0, 1, PairRelation::Commute)], vec![])
            .unwrap_err();
        assert_eq!(err, Error::InconsistentAlgebra { left: "B3".into(), right: "B3".into() });
        // B3 and B4 do not commute under anticommuting cores.
        let err = BobAlgebra::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s], vec![s, -s]],
            vec![(0, 1, PairRelation::Anticommute)],
            vec![(2, 3, PairRelation::Commute)],
        )
        .unwrap_err();
        assert_eq!(err, Error::InconsistentAlgebra { left: "B3".into(), right: "B4".into() });
    }

    #[test]
    fn detects_standard_relations_from_matrices() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ops = vec![
            bloch_operator([1.0, 0.0, 0.0]),
            bloch_operator([0.0, 0.0, 1.0]),
            bloch_operator([s, 0.0, s]),
            bloch_operator([s, 0.0, -s]),
        ];
        let alg = BobAlgebra::from_operators(&ops, 1e-10).unwrap();
        assert_eq!(alg.num_core(), 2);
        assert_eq!(alg.core_relation(0, 1), Some(PairRelation::Anticommute));
        assert!(alg.derived_relations().contains(&(2, 3, PairRelation::Anticommute)));
        assert!((alg.generator(2)[0] - s).abs() < 1e-12 && (alg.generator(3)[1] + s).abs() < 1e-12);
    }

    fn random_algebra(rng: &mut impl Rng) -> BobAlgebra {
        let n = rng.gen_range(2..=4);
        let mut rel = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                match rng.gen_range(0..3) {
                    0 => rel.push((i, j, PairRelation::Commute)),
                    1 => rel.push((i, j, PairRelation::Anticommute)),
                    _ => {}
                }
            }
        }
        let gens = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        BobAlgebra::new(n, gens, rel, vec![]).unwrap()
    }

    /// Applies one random legal rewrite: a relation swap or a square insertion.
    fn random_rewrite(alg: &BobAlgebra, rng: &mut impl Rng, sign: &mut f64, w: &mut Vec<usize>) {
        if w.len() >= 2 && rng.gen_bool(0.7) {
            let i = rng.gen_range(0..w.len() - 1);
            if w[i] != w[i + 1] {
                if let Some(s) = alg.core_relation(w[i], w[i + 1]) {
                    *sign *= s.sign();
                    w.swap(i, i + 1);
                }
            }
        } else {
            let l = rng.gen_range(0..alg.num_core());
            let p = rng.gen_range(0..=w.len());
            w.insert(p, l);
            w.insert(p, l);
        }
    }

    #[test]
    fn reduction_is_confluent() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let alg = random_algebra(&mut rng);
            let len = rng.gen_range(0..8);
            let w: Vec<usize> = (0..len).map(|_| rng.gen_range(0..alg.num_core())).collect();
            let (s0, n0) = alg.reduce_core(&w);
            let (mut s, mut v) = (1.0, w.clone());
            for _ in 0..rng.gen_range(1..12) {
                random_rewrite(&alg, &mut rng, &mut s, &mut v);
            }
            let (s1, n1) = alg.reduce_core(&v);
            assert_eq!(n0, n1, "word {w:?} rewritten to {v:?}");
            assert_eq!(s0, s * s1);
            // Normal forms are fixed points.
            assert_eq!(alg.reduce_core(&n0), (1.0, n0.clone()));
        }
    }

    #[test]
    fn rewriting_matches_random_qubit_realizations() {
        // B1, B2 anticommuting Pauli observables in random orientation.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alg = BobAlgebra::standard();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for _ in 0..100 {
            let u: [f64; 3] = {
                let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / n, v[1] / n, v[2] / n]
            };
            // Any vector orthogonal to u.
            let t = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let mut w = [u[1] * t[2] - u[2] * t[1], u[2] * t[0] - u[0] * t[2], u[0] * t[1] - u[1] * t[0]];
            let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            w = [w[0] / n, w[1] / n, w[2] / n];
            let b1 = bloch_operator(u);
            let b2 = bloch_operator(w);
            let core = vec![b1.clone(), b2.clone()];
            let settings = vec![
                b1.clone(),
                b2.clone(),
                (&b1 + &b2) * Complex::new(s, 0.0),
                (&b1 - &b2) * Complex::new(s, 0.0),
            ];
            for _ in 0..5 {
                let len = rng.gen_range(0..6);
                let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..4)).collect();
                let direct = word_operator(&settings, &word);
                let via = combination_operator(&core, &alg.expand(&word));
                assert!((direct - via).norm() < 1e-12);
            }
        }
        let _ = paulis();
    }
}
