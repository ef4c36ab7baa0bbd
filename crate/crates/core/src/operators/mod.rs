//! Concrete bounded-oscillation operators, truncation, maximal modulation,
//! the connectivity functional and estimators of the operator constants.

mod checks;
mod descriptor;
mod estimate;
mod spec;

pub use checks::{kernel_consistency, linearity_defect, sublinearity_excess};
pub use descriptor::{
    conditional_expectation, conditional_expectations, constant_signs, discrete_hilbert, identity,
    kernel_operator, martingale_transform, maximal_modulation, random_signs, riesz_potential,
    sparse_operator, square_function, truncate, zero, OpKind, Operator, KERNEL_LIMIT,
};
pub use estimate::{
    delta, estimate_bo_constants, sample_balls, BOConstants, DeltaEstimate, Method, Probe,
    Restrictions, Witness, SIGN_TRIALS,
};
pub use spec::{OperatorSpec, SignSpec};
