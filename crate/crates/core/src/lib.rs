//! Ball-bases on finite atomic measure spaces: covering lemmas, sparse
//! trees, martingale disjointification and sparse domination of
//! bounded-oscillation operators, with an empirical inequality harness.

pub mod cli;
pub mod domination;
pub mod error;
pub mod functional;
pub mod operators;
pub mod seeds;
pub mod space;
pub mod sparsify;
pub mod tail;
pub mod verify;

pub use error::{Error, Result};
