//! Empirical inequality harness: weak type, good-λ, exponential decay,
//! John–Nirenberg, BMO boundedness, strong domination and Muckenhoupt
//! characteristics. Every report is a pure function of its inputs.

mod bmo;
mod corpus;
mod decay;
mod growth;
mod report;
mod weak;
mod weights;

pub use bmo::{bmo_bounded_report, BmoMode, BmoTarget};
pub use corpus::{Case, Corpus, CorpusSpec, FamilySpec, Generator};
pub use decay::{
    default_alpha_grid, exp_decay_report, john_nirenberg_report, relabel, strong_domination_check, DecayMode,
    MAX_TAIL_BINS, TAIL_STEP,
};
pub use growth::delta_growth_report;
pub use report::{fmt_num, normalize, num, round_sig, tail_table, Report, Row, TailPoint, TailTable};
pub use weak::{good_lambda_ratio, good_lambda_report, weak_sup, weak_type_report, GoodLambdaOptions, WeakTarget};
pub use weights::{
    ap_characteristic, ap_characteristics, apq_characteristic, boyd_norm, weighted_norm_estimate, NormEstimate,
    NormMethod, Weight,
};

#[cfg(test)]
mod tests;
