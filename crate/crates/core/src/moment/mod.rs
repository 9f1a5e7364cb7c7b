//! Moment-matrix relaxations for device-independent and one-sided
//! device-independent randomness.

pub mod algebra;
pub mod guessing;
pub mod monomial;
pub mod structure;

pub use algebra::{BobAlgebra, PairRelation};
pub use guessing::{
    build_structure, di_guessing_from_functional, di_guessing_probability, guessing_with_statistics,
    known_algebra, steering_guessing_probability, HierarchyBound, HierarchyOptions,
};
pub use monomial::{Letter, Monomial, Party};
pub use structure::{KeyKind, MomentMatrixStructure, MomentMode, MomentRef};
