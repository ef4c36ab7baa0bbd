//! BMO boundedness ratios over a corpus.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::report::Report;
use crate::error::Result;
use crate::functional::{bmo_norm, general_maximal, sup_norm, Completeness, RegularFamily, VecFunction};
use crate::operators::Operator;
use crate::space::BallBasis;

#[derive(Clone, Copy, Debug)]
pub enum BmoTarget<'a> {
    Operator(&'a Operator),
    /// `M^{φ,𝒢}` of a regular kernel family.
    GeneralMaximal {
        family: &'a RegularFamily,
        complete: &'a Completeness,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BmoMode {
    /// `‖Tf‖_BMO/‖f‖_BMO`.
    Bmo,
    /// `‖Tf‖_BMO/‖f‖_∞`.
    Linf,
}

/// Per-case ratio; inputs with a vanishing denominator are excluded.
pub fn bmo_bounded_report(
    target: BmoTarget,
    corpus: &Corpus,
    basis: &BallBasis,
    mode: BmoMode,
    threshold: f64,
) -> Result<Report> {
    let apply = |f: &VecFunction| -> Result<VecFunction> {
        match target {
            BmoTarget::Operator(op) => op.apply(f),
            BmoTarget::GeneralMaximal { family, complete } => {
                general_maximal(basis, f, family, complete).map(VecFunction::scalar)
            }
        }
    };
    let ratios = corpus
        .cases
        .par_iter()
        .map(|case| {
            let den = match mode {
                BmoMode::Bmo => bmo_norm(basis, &case.f),
                BmoMode::Linf => sup_norm(basis.space(), &case.f),
            };
            if den == 0.0 {
                return Ok(None);
            }
            Ok(Some(bmo_norm(basis, &apply(&case.f)?) / den))
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match target {
        BmoTarget::Operator(op) => op.name.clone(),
        BmoTarget::GeneralMaximal { .. } => "general_maximal".into(),
    };
    let mut rep = Report::new(format!("bmo_bounded:{name}"));
    let mut excluded = 0;
    for (case, r) in corpus.cases.iter().zip(&ratios) {
        match r {
            Some(r) => rep.row(&case.id, "bmo_ratio", *r, *r <= threshold && r.is_finite()),
            None => excluded += 1,
        }
    }
    rep.stat(
        "mode",
        match mode {
            BmoMode::Bmo => "bmo",
            BmoMode::Linf => "linf",
        },
    );
    rep.stat_num("threshold", threshold);
    rep.stat_num("max_ratio", rep.max_value("bmo_ratio"));
    rep.stat("cases", corpus.len());
    rep.stat("excluded_degenerate_inputs", excluded);
    rep.pass = rep.rows_pass();
    Ok(rep)
}
