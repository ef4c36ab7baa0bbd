//! Sparse domination pipelines: fractional means for bounded-oscillation
//! operators, the oscillation decomposition and mean-oscillation bounds for
//! restricted families.

mod bo;
mod bound;
mod lerner;
mod meanosc;

pub use bo::{dominate_bo, DominateOptions};
pub use bound::{measured_constant, verify_sparse_bound, BoundKind, SparseBound, VerificationReport};
pub use lerner::{lerner_decompose, BETA_ESCALATIONS};
pub use meanosc::{
    check_restricted, dominate_mean_osc, family_constants, restricted_osc_bound, FamilyConstants, OscReport,
};
