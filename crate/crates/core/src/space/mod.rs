//! Finite measure spaces, ball-bases, hulls and the covering-chain lemmas.
//!
//! B3 (σ-additivity of increasing unions of balls) holds automatically in a
//! finite atomic space and is recorded in the axiom report rather than
//! checked.

mod axioms;
mod basis;
mod chains;
mod json;
mod measure;
mod region;

pub use axioms::{check_axioms, AxiomReport};
pub use basis::{grid_id, Ball, BallBasis, BasisKind, Filtration, MAX_DYADIC_LEVELS, MAX_GRID};
pub use chains::{
    chain_exhausts, double_star, doubling_chain, enlarge, exhausting_sequence, DoublingChain,
    Enlarged, Enlargement,
};
pub use json::{basis_from_json, basis_to_json, BasisDoc};
pub use measure::MeasureSpace;
pub use region::{atoms_of, set_of, AtomSet, Region};
