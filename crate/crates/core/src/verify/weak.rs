//! Weak-type and good-λ distribution scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::report::Report;
use crate::error::{Error, Result};
use crate::functional::{maximal, powered_norms, MaximalMode, Params};
use crate::operators::{truncate, BOConstants, Operator};
use crate::space::BallBasis;

/// What the weak-type scan is applied to.
#[derive(Clone, Copy, Debug)]
pub enum WeakTarget<'a> {
    Operator(&'a Operator),
    /// The fractional maximal function of the scan's exponent triple.
    Maximal,
}

/// `sup_λ λ^{1/ρ} μ{g > λ}`. Between consecutive values the distribution is
/// constant, so the supremum is approached from below each value `v`, where
/// the level set is `{g ≥ v}`.
pub fn weak_sup(g: &[f64], weights: &[f64], rho: f64) -> f64 {
    let mut order: Vec<usize> = (0..g.len()).filter(|&x| g[x] > 0.0).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    let mut best: f64 = 0.0;
    let mut mass = 0.0;
    let mut i = 0;
    while i < order.len() {
        let v = g[order[i]];
        while i < order.len() && g[order[i]] == v {
            mass += weights[order[i]];
            i += 1;
        }
        best = best.max(v.powf(1.0 / rho) * mass);
    }
    best
}

/// Per-case `sup_λ λ^{1/ρ}μ{‖Tf‖ > λ}/(∫‖f‖^r)^{ϱ/ρ}`. For the maximal
/// function each case must stay at or below `K`.
pub fn weak_type_report(target: WeakTarget, corpus: &Corpus, basis: &BallBasis, p: &Params) -> Result<Report> {
    p.validate()?;
    let w = basis.space().weights();
    let ratios = corpus
        .cases
        .par_iter()
        .map(|case| {
            let g = match target {
                WeakTarget::Operator(op) => op.apply(&case.f)?.norms(),
                WeakTarget::Maximal => maximal(basis, &case.f, p, MaximalMode::FractionalBasis)?,
            };
            let mass: f64 = powered_norms(&case.f, p.r).iter().zip(w).map(|(a, b)| a * b).sum();
            if mass == 0.0 {
                return Ok(None);
            }
            Ok(Some(weak_sup(&g, w, p.rho) / mass.powf(p.varrho / p.rho)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (name, bound) = match target {
        WeakTarget::Operator(op) => (format!("weak_type:{}", op.name), f64::INFINITY),
        WeakTarget::Maximal => ("weak_type:maximal".to_string(), basis.k()),
    };
    let mut rep = Report::new(name);
    let mut excluded = 0;
    for (case, r) in corpus.cases.iter().zip(&ratios) {
        match r {
            Some(r) => rep.row(&case.id, "weak_ratio", *r, *r <= bound && r.is_finite()),
            None => excluded += 1,
        }
    }
    rep.stat_num("r", p.r);
    rep.stat_num("rho", p.rho);
    rep.stat_num("varrho", p.varrho);
    rep.stat_num("bound", bound);
    rep.stat_num("max_ratio", rep.max_value("weak_ratio"));
    rep.stat("cases", corpus.len());
    rep.stat("excluded_zero_inputs", excluded);
    rep.pass = rep.rows_pass();
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoodLambdaOptions {
    /// `δ = c/(L0 + L1)`.
    pub c: f64,
    /// Pass threshold for the measure ratio.
    pub threshold: f64,
}

impl Default for GoodLambdaOptions {
    fn default() -> Self {
        GoodLambdaOptions {
            c: 0.5,
            threshold: f64::INFINITY,
        }
    }
}

/// `sup_λ μ{T*f > λ, Mf < δλ} / μ{‖Tf‖ > λ/2}`; ratios with an empty left
/// set are 0. The sets only change at the breakpoints `T*f(x)`, `Mf(x)/δ`
/// and `2‖Tf(x)‖`, so breakpoints and midpoints cover every λ.
pub fn good_lambda_ratio(ts: &[f64], m: &[f64], tn: &[f64], w: &[f64], delta: f64) -> (f64, f64) {
    let mut brk: Vec<f64> = ts.iter().copied().chain(tn.iter().map(|v| 2.0 * v)).collect();
    if delta.is_finite() {
        brk.extend(m.iter().map(|v| v / delta));
    }
    brk.retain(|v| *v > 0.0 && v.is_finite());
    brk.sort_by(f64::total_cmp);
    brk.dedup();
    let mut lambdas = brk.clone();
    lambdas.extend(brk.windows(2).map(|p| 0.5 * (p[0] + p[1])));
    if let Some(&first) = brk.first() {
        lambdas.push(0.5 * first);
    }
    let mut best = (0.0, 0.0);
    for &l in &lambdas {
        let mut num = 0.0;
        let mut den = 0.0;
        for x in 0..ts.len() {
            if ts[x] > l && m[x] < delta * l {
                num += w[x];
            }
            if tn[x] > 0.5 * l {
                den += w[x];
            }
        }
        if num == 0.0 {
            continue;
        }
        let r = if den == 0.0 { f64::INFINITY } else { num / den };
        if r > best.0 {
            best = (r, l);
        }
    }
    best
}

pub fn good_lambda_report(
    t: &Operator,
    consts: &BOConstants,
    corpus: &Corpus,
    basis: &BallBasis,
    opts: &GoodLambdaOptions,
) -> Result<Report> {
    if !(consts.l0.is_finite() && consts.l1.is_finite()) {
        return Err(Error::Invalid("good-lambda needs finite L0 and L1".into()));
    }
    if !(opts.c > 0.0) {
        return Err(Error::Invalid(format!("c = {} must be positive", opts.c)));
    }
    let sum = consts.l0 + consts.l1;
    let delta = if sum > 0.0 { opts.c / sum } else { f64::INFINITY };
    let star = truncate(t);
    let w = basis.space().weights();
    let results = corpus
        .cases
        .par_iter()
        .map(|case| {
            let ts = star.apply(&case.f)?.norms();
            let tn = t.apply(&case.f)?.norms();
            let m = maximal(basis, &case.f, &t.params, MaximalMode::FractionalBasis)?;
            Ok(good_lambda_ratio(&ts, &m, &tn, w, delta))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = Report::new(format!("good_lambda:{}", t.name));
    for (case, (r, l)) in corpus.cases.iter().zip(&results) {
        rep.row(&case.id, "measure_ratio", *r, *r <= opts.threshold && r.is_finite());
        rep.row(&case.id, "worst_lambda", *l, true);
    }
    rep.stat_num("delta", delta);
    rep.stat_num("c", opts.c);
    rep.stat_num("threshold", opts.threshold);
    rep.stat_num("max_ratio", rep.max_value("measure_ratio"));
    rep.stat("cases", corpus.len());
    rep.pass = rep.rows_pass();
    Ok(rep)
}
