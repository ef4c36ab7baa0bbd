//! Exponential tails: decay against maximal functions, John–Nirenberg and
//! strong domination.

use serde::{Deserialize, Serialize};

use super::report::{tail_table, Report, TailTable};
use crate::error::{Error, Result};
use crate::functional::{alpha_oscillation, bmo_norm, maximal, mean, median, MaximalMode, VecFunction};
use crate::operators::{OpKind, Operator};
use crate::space::{AtomSet, BallBasis};
use crate::tail::fit_exponential;

pub const MAX_TAIL_BINS: usize = 10_000;

/// Bin width of the ratio tails. Desk-scale ratios rarely pass `t = 4`, so
/// integer bins would leave too few points to fit.
pub const TAIL_STEP: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// `‖Tf‖` against `Mf`.
    VsMaximal,
    /// `‖Tf − m_{Tf}(B)‖` against `M_# f`.
    VsSharp,
}

fn linear_classical(op: &Operator) -> bool {
    op.linear && op.params.is_classical()
}

/// Linear classical operators and maximal modulations of them.
fn is_restricted_shape(op: &Operator) -> bool {
    match op.kind() {
        OpKind::MaxModulation(family) => family.iter().all(linear_classical),
        _ => linear_classical(op),
    }
}

/// Quotients `target/ref` on the atoms of `set`; atoms with `ref = 0` and a
/// positive target are returned separately.
fn quotients(target: &[f64], reference: &[f64], set: &AtomSet) -> (Vec<usize>, Vec<f64>, Vec<usize>) {
    let mut atoms = Vec::new();
    let mut q = Vec::new();
    let mut violations = Vec::new();
    for x in set.ones() {
        if reference[x] > 0.0 {
            atoms.push(x);
            q.push(target[x] / reference[x]);
        } else if target[x] > 0.0 {
            violations.push(x);
        } else {
            atoms.push(x);
            q.push(0.0);
        }
    }
    (atoms, q, violations)
}

fn weights_of(basis: &BallBasis, atoms: &[usize]) -> Vec<f64> {
    atoms.iter().map(|&x| basis.space().weight(x)).collect()
}

/// Tail `t ↦ μ{x∈B : target(x) > t·ref(x)}/μ(B)` at integer `t` with an
/// exponential fit.
pub fn exp_decay_report(t: &Operator, f: &VecFunction, ball: usize, mode: DecayMode) -> Result<Report> {
    let basis = t.basis();
    basis.try_ball(ball)?;
    let set = basis.ball_set(ball);
    let tf = t.apply(f)?;
    let (target, reference) = match mode {
        DecayMode::VsMaximal => (
            tf.norms(),
            maximal(basis, f, &t.params, MaximalMode::FractionalBasis)?,
        ),
        DecayMode::VsSharp => {
            if basis.eta().is_none() {
                return Err(Error::NotDoubling);
            }
            if !is_restricted_shape(t) {
                return Err(Error::NotRestricted(format!(
                    "{} is neither linear classical nor a maximal modulation of such",
                    t.name
                )));
            }
            let m = median(basis.space(), &tf, &set)?;
            let centred: Vec<f64> = (0..tf.len())
                .map(|x| tf.norm_kind().dist(tf.value(x), &m.representative))
                .collect();
            (centred, maximal(basis, f, &t.params, MaximalMode::Sharp)?)
        }
    };
    let (atoms, q, violations) = quotients(&target, &reference, &set);
    let label = match mode {
        DecayMode::VsMaximal => "vs_maximal",
        DecayMode::VsSharp => "vs_sharp",
    };
    let mut rep = Report::new(format!("exp_decay:{label}:{}", t.name));
    let tail = tail_table("tail", &q, &weights_of(basis, &atoms), basis.measure(ball), TAIL_STEP, MAX_TAIL_BINS);
    let fit = fit_exponential(&tail.fractions());
    rep.fit("tail", &fit);
    rep.row("tail", "ref_zero_violations", violations.len() as f64, violations.is_empty());
    if !violations.is_empty() {
        rep.warnings.push(format!(
            "{} atoms have a vanishing reference and a positive target, first {}",
            violations.len(),
            violations[0]
        ));
    }
    rep.stat("ball", ball);
    rep.stat("mode", label);
    rep.stat_num("max_quotient", q.iter().copied().fold(0.0, f64::max));
    rep.stat_num("rate", fit.rate.unwrap_or(f64::NAN));
    rep.stat("degenerate", fit.degenerate);
    rep.tails.push(tail);
    rep.pass = rep.rows_pass();
    Ok(rep)
}

/// Renames case ids to `prefix` (or `prefix/old`) so merged reports stay unique.
pub fn relabel(mut rep: Report, prefix: &str) -> Report {
    let name = |c: &str| if c == "tail" { prefix.to_string() } else { format!("{prefix}/{c}") };
    rep.rows.iter_mut().for_each(|r| r.case = name(&r.case));
    rep.tails.iter_mut().for_each(|t| t.case = name(&t.case));
    rep.warnings.iter_mut().for_each(|w| *w = format!("{prefix}: {w}"));
    rep
}

/// `μ{x∈B : ‖f(x) − c‖ > t·s}/μ(B)` at integer `t`.
fn centred_tail(basis: &BallBasis, f: &VecFunction, ball: usize, c: &[f64], s: f64, case: String) -> TailTable {
    let atoms: Vec<usize> = basis.ball(ball).members.iter().collect();
    let q: Vec<f64> = atoms.iter().map(|&x| f.norm_kind().dist(f.value(x), c) / s).collect();
    tail_table(case, &q, &weights_of(basis, &atoms), basis.measure(ball), TAIL_STEP, MAX_TAIL_BINS)
}

fn pointwise_max(acc: &mut Vec<f64>, tail: &TailTable) {
    if acc.len() < tail.points.len() {
        acc.resize(tail.points.len(), 0.0);
    }
    for (a, p) in acc.iter_mut().zip(&tail.points) {
        *a = a.max(p.fraction);
    }
}

fn profile(v: &[f64]) -> Vec<(f64, f64)> {
    v.iter().enumerate().map(|(k, &y)| (k as f64 * TAIL_STEP, y)).collect()
}

fn at(v: &[f64], t: usize) -> f64 {
    v.get(t).copied().unwrap_or(0.0)
}

/// First grid point `t ≥ 2` where one centring's tail at `2t` exceeds the
/// other's at `t`, if any.
fn shift_failure(a: &[f64], b: &[f64]) -> Option<f64> {
    let len = a.len().max(b.len());
    let start = (2.0 / TAIL_STEP) as usize;
    (start..len)
        .find(|&k| at(a, 2 * k) > at(b, k) || at(b, 2 * k) > at(a, k))
        .map(|k| k as f64 * TAIL_STEP)
}

/// Tails of `‖f − m‖/‖f‖_BMO` per ball with the median and the mean as
/// centres. The fit runs on the whole space (when it is a ball) and on the
/// supremum over balls of the tails.
pub fn john_nirenberg_report(f: &VecFunction, basis: &BallBasis) -> Result<Report> {
    let s = bmo_norm(basis, f);
    if s == 0.0 {
        return Err(Error::ZeroBmoNorm);
    }
    let mut rep = Report::new("john_nirenberg");
    let scalar = f.as_scalar().is_some();
    if !scalar {
        rep.warnings.push("vector function: median centring skipped".into());
    }
    let space = basis.space();
    let mut sup_med = Vec::new();
    let mut sup_mean = Vec::new();
    for b in 0..basis.n_balls() {
        let set = basis.ball_set(b);
        let fb = mean(space, f, &set)?;
        let t_mean = centred_tail(basis, f, b, &fb, s, format!("mean/{b}"));
        pointwise_max(&mut sup_mean, &t_mean);
        let t_med = if scalar {
            let m = median(space, f, &set)?;
            let t = centred_tail(basis, f, b, &m.representative, s, format!("median/{b}"));
            pointwise_max(&mut sup_med, &t);
            Some(t)
        } else {
            None
        };
        if basis.whole() == Some(b) {
            for (label, t) in [("whole/mean", Some(t_mean)), ("whole/median", t_med)] {
                if let Some(mut t) = t {
                    let fit = fit_exponential(&t.fractions());
                    rep.fit(label, &fit);
                    t.case = label.to_string();
                    rep.tails.push(t);
                }
            }
        }
    }
    let mut profiles = vec![("sup/mean", sup_mean.clone())];
    if scalar {
        profiles.push(("sup/median", sup_med.clone()));
    }
    for (label, v) in &profiles {
        let fit = fit_exponential(&profile(v));
        rep.fit(label, &fit);
        rep.stat_num(&format!("{}_rate", label.replace('/', "_")), fit.rate.unwrap_or(f64::NAN));
    }
    if scalar {
        let bad = shift_failure(&sup_med, &sup_mean);
        rep.row("sup", "centring_shift_ok", bad.unwrap_or(0.0), bad.is_none());
    }
    rep.stat_num("bmo_norm", s);
    rep.stat("whole_space_is_ball", basis.whole().is_some());
    rep.pass = rep.rows_pass();
    Ok(rep)
}

pub fn default_alpha_grid() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

/// `β(α) = OSC_{B,α}(f)/INF_B(g)` over the grid, then the tail of
/// `‖f − m_f(B)‖/‖g‖` on `B` with its fit.
pub fn strong_domination_check(
    f: &VecFunction,
    g: &VecFunction,
    basis: &BallBasis,
    ball: usize,
    alphas: &[f64],
) -> Result<Report> {
    basis.try_ball(ball)?;
    if f.len() != basis.n_atoms() || g.len() != basis.n_atoms() {
        return Err(Error::Invalid("functions must live on the atoms of the basis".into()));
    }
    let space = basis.space();
    let set = basis.ball_set(ball);
    let inf = set
        .ones()
        .filter(|&x| space.weight(x) > 0.0)
        .map(|x| g.norm_at(x))
        .fold(f64::INFINITY, f64::min);
    if inf == 0.0 {
        return Err(Error::InfZero { ball });
    }
    let mut rep = Report::new("strong_domination");
    let mut sup_beta: f64 = 0.0;
    for &a in alphas {
        let beta = alpha_oscillation(space, f, &set, a)? / inf;
        sup_beta = sup_beta.max(beta);
        rep.row(&format!("alpha={a}"), "beta", beta, beta.is_finite());
    }
    let m = median(space, f, &set)?;
    let atoms: Vec<usize> = set.ones().collect();
    let q: Vec<f64> = atoms
        .iter()
        .map(|&x| f.norm_kind().dist(f.value(x), &m.representative) / g.norm_at(x))
        .collect();
    let tail = tail_table("tail", &q, &weights_of(basis, &atoms), basis.measure(ball), TAIL_STEP, MAX_TAIL_BINS);
    let fit = fit_exponential(&tail.fractions());
    rep.fit("tail", &fit);
    rep.tails.push(tail);
    rep.stat("ball", ball);
    rep.stat_num("inf_g", inf);
    rep.stat_num("sup_beta", sup_beta);
    rep.stat_num("rate", fit.rate.unwrap_or(f64::NAN));
    rep.pass = rep.rows_pass();
    Ok(rep)
}
