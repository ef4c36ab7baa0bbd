//! Fractional means, oscillations, α-oscillations, medians, BMO norms and
//! maximal functions of vector-valued functions on a ball-basis.

mod alpha;
mod averages;
mod function;
mod maximal;
mod regular;

pub use alpha::{
    alpha_core, alpha_oscillation, alpha_oscillation_exhaustive, median, median_exhaustive,
    median_spread, AlphaCore, Median, MAX_EXHAUSTIVE,
};
pub use averages::{
    average, average_with_mode, ball_averages, ball_extrema, ball_integrals, ball_oscillations,
    ball_sharps, bmo_norm,
    fractional_mean, mean, mean_oscillation, oscillation, oscillation_stats, per_atom_max,
    powered_norms, sharp, sup_average, sup_averages, sup_norm, sup_over_supersets, sup_sharps,
    AverageMode, OscMode, OscStats, OscValue,
};
pub use function::{FunctionDoc, NormKind, Params, VecFunction};
pub use maximal::{maximal, maximal_classical, MaximalMode};
pub use regular::{build_regular_family, general_maximal, Completeness, Modulus, RegularFamily};
