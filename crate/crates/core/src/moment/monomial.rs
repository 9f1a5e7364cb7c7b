//! Words in dichotomic observables of two commuting parties.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Alice,
    Bob,
}

/// One observable `A_x` or `B_y` (0-based setting index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub party: Party,
    pub index: usize,
}

impl Letter {
    pub fn alice(index: usize) -> Self {
        Self { party: Party::Alice, index }
    }

    pub fn bob(index: usize) -> Self {
        Self { party: Party::Bob, index }
    }
}

/// Removes adjacent equal letters until none remain (`X^2 = 1`).
pub fn cancel_squares(word: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(word.len());
    for &l in word {
        if out.last() == Some(&l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// A canonical monomial: Alice's word followed by Bob's, each free of
/// adjacent repeats. Letters of different parties commute, letters of the
/// same party do not.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    alice: Vec<usize>,
    bob: Vec<usize>,
}

impl Monomial {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Canonical form of an arbitrary product of letters.
    pub fn from_letters(letters: &[Letter]) -> Self {
        let pick = |p: Party| -> Vec<usize> {
            letters.iter().filter(|l| l.party == p).map(|l| l.index).collect()
        };
        Self { alice: cancel_squares(&pick(Party::Alice)), bob: cancel_squares(&pick(Party::Bob)) }
    }

    pub fn from_parts(alice: &[usize], bob: &[usize]) -> Self {
        Self { alice: cancel_squares(alice), bob: cancel_squares(bob) }
    }

    pub fn alice(&self) -> &[usize] {
        &self.alice
    }

    pub fn bob(&self) -> &[usize] {
        &self.bob
    }

    pub fn len(&self) -> usize {
        self.alice.len() + self.bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn letters(&self) -> Vec<Letter> {
        self.alice
            .iter()
            .map(|&i| Letter::alice(i))
            .chain(self.bob.iter().map(|&i| Letter::bob(i)))
            .collect()
    }

    /// `w^dag`: each party's word reversed.
    pub fn adjoint(&self) -> Self {
        Self {
            alice: self.alice.iter().rev().copied().collect(),
            bob: self.bob.iter().rev().copied().collect(),
        }
    }

    /// Canonical form of `self * other`.
    pub fn mul(&self, other: &Monomial) -> Self {
        let a: Vec<usize> = self.alice.iter().chain(&other.alice).copied().collect();
        let b: Vec<usize> = self.bob.iter().chain(&other.bob).copied().collect();
        Self::from_parts(&a, &b)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        for i in &self.alice {
            write!(f, "A{}", i + 1)?;
        }
        for i in &self.bob {
            write!(f, "B{}", i + 1)?;
        }
        Ok(())
    }
}

/// All canonical monomials of length at most `level`, shortest first.
pub fn monomials_up_to(inputs_a: usize, inputs_b: usize, level: usize) -> Vec<Monomial> {
    fn words(n: usize, len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        let mut frontier = vec![Vec::new()];
        for _ in 0..len {
            let mut next = Vec::new();
            for w in &frontier {
                for l in 0..n {
                    if w.last() != Some(&l) {
                        let mut v: Vec<usize> = w.clone();
                        v.push(l);
                        next.push(v);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
    let wa = words(inputs_a, level);
    let wb = words(inputs_b, level);
    let mut out = Vec::new();
    for total in 0..=level {
        for b in &wb {
            for a in &wa {
                if a.len() + b.len() == total {
                    out.push(Monomial { alice: a.clone(), bob: b.clone() });
                }
            }
        }
    }
    out
}
