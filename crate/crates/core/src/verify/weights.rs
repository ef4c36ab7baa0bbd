//! Muckenhoupt characteristics and weighted norm estimates.

use serde::Serialize;

use super::corpus::Corpus;
use super::report::Report;
use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::space::BallBasis;

/// A strictly positive weight on the atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    w: Vec<f64>,
}

impl Weight {
    pub fn new(w: Vec<f64>) -> Result<Weight> {
        if w.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(x) = w.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Invalid(format!("weight at atom {x} is {}", w[x])));
        }
        Ok(Weight { w })
    }

    pub fn constant(n: usize, c: f64) -> Result<Weight> {
        Weight::new(vec![c; n])
    }

    /// `w(i) = (1 + i)^e`.
    pub fn power(n: usize, e: f64) -> Result<Weight> {
        Weight::new((0..n).map(|i| (1.0 + i as f64).powf(e)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// `sup_B ⟨w^a⟩_B ⟨w^{−b}⟩_B^c` with `⟨·⟩_B` the μ-average, attained ball.
/// Both characteristics are invariant under scaling `w`, so the weight is
/// divided by its maximum first; constant weights then give exactly 1.
fn product_sup(basis: &BallBasis, w: &[f64], a: f64, b: f64, c: f64) -> (f64, usize) {
    let top = w.iter().copied().fold(0.0, f64::max);
    let u: Vec<f64> = w.iter().map(|v| v / top).collect();
    let pos: Vec<f64> = u.iter().map(|v| if a == 1.0 { *v } else { v.powf(a) }).collect();
    let neg: Vec<f64> = u.iter().map(|v| v.powf(-b)).collect();
    let space = basis.space();
    let mut best = (0.0, 0);
    for ball in basis.balls() {
        let (mut sp, mut sn, mut m) = (0.0, 0.0, 0.0);
        for x in ball.members.iter() {
            let wx = space.weight(x);
            sp += wx * pos[x];
            sn += wx * neg[x];
            m += wx;
        }
        let v = (sp / m) * (sn / m).powf(c);
        if v > best.0 {
            best = (v, ball.id);
        }
    }
    best
}

/// `[w]_{A_p} = sup_B ⟨w⟩_B ⟨w^{−1/(p−1)}⟩_B^{p−1}`.
pub fn ap_characteristic(basis: &BallBasis, w: &Weight, p: f64) -> Result<(f64, usize)> {
    if !(p > 1.0) {
        return Err(Error::Invalid(format!("p = {p} must exceed 1")));
    }
    check_len(basis, w)?;
    Ok(product_sup(basis, &w.w, 1.0, 1.0 / (p - 1.0), p - 1.0))
}

/// `[w]_{A_{p,q}} = sup_B ⟨w^q⟩_B ⟨w^{−p'}⟩_B^{q/p'}`.
pub fn apq_characteristic(basis: &BallBasis, w: &Weight, p: f64, q: f64) -> Result<(f64, usize)> {
    if !(p > 1.0 && q > p) {
        return Err(Error::Invalid(format!("need 1 < p < q, got p = {p}, q = {q}")));
    }
    check_len(basis, w)?;
    let pd = p / (p - 1.0);
    Ok(product_sup(basis, &w.w, q, pd, q / pd))
}

fn check_len(basis: &BallBasis, w: &Weight) -> Result<()> {
    if w.len() != basis.n_atoms() {
        return Err(Error::Invalid(format!("weight has {} entries for {} atoms", w.len(), basis.n_atoms())));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// Boyd's iteration on the absolute kernel.
    PowerIterationAbsKernel,
    CorpusMax,
}

/// Estimate of `‖T‖_{L^p(w^p) → L^q(w^q)}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
}

fn psi(v: f64, s: f64) -> f64 {
    v.abs().powf(s - 1.0).copysign(v)
}

fn lp(v: &[f64], p: f64) -> f64 {
    v.iter().map(|a| a.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `‖B‖_{ℓ^p→ℓ^q}` for a nonnegative matrix and `p ≤ q`.
pub fn boyd_norm(b: &[f64], n: usize, p: f64, q: f64, max_iter: usize) -> (f64, usize) {
    let pd = p / (p - 1.0);
    let mut x = vec![1.0; n];
    let s = lp(&x, p);
    x.iter_mut().for_each(|v| *v /= s);
    let mut last = 0.0;
    for it in 1..=max_iter {
        let y: Vec<f64> = (0..n).map(|i| (0..n).map(|j| b[i * n + j] * x[j]).sum()).collect();
        let est = lp(&y, q);
        if est == 0.0 {
            return (0.0, it);
        }
        let z: Vec<f64> = y.iter().map(|v| psi(*v, q)).collect();
        let u: Vec<f64> = (0..n).map(|j| (0..n).map(|i| b[i * n + j] * z[i]).sum()).collect();
        x = u.iter().map(|v| psi(*v, pd)).collect();
        let s = lp(&x, p);
        x.iter_mut().for_each(|v| *v /= s);
        if (est - last).abs() <= 1e-13 * est {
            return (est, it);
        }
        last = est;
    }
    (last, max_iter)
}

/// Kernel operators use Boyd's iteration on `|K|` (an estimate of the norm of
/// the positive majorant); others take the corpus maximum of the ratio.
pub fn weighted_norm_estimate(op: &Operator, w: &Weight, p: f64, q: f64, corpus: Option<&Corpus>) -> Result<NormEstimate> {
    let basis = op.basis();
    check_len(basis, w)?;
    if !(p > 1.0 && q >= p) {
        return Err(Error::Invalid(format!("need 1 < p <= q, got p = {p}, q = {q}")));
    }
    let mu = basis.space().weights();
    let n = basis.n_atoms();
    let wv = &w.w;
    if let Some(k) = op.kernel() {
        let mut b = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                b[x * n + y] = mu[x].powf(1.0 / q) * wv[x] * k[x * n + y].abs() * mu[y].powf(1.0 - 1.0 / p) / wv[y];
            }
        }
        let (value, iterations) = boyd_norm(&b, n, p, q, 1000);
        return Ok(NormEstimate {
            value,
            method: NormMethod::PowerIterationAbsKernel,
            iterations,
        });
    }
    let corpus = corpus.ok_or_else(|| Error::Invalid(format!("{} has no kernel; a corpus is required", op.name)))?;
    let wnorm = |v: &[f64], e: f64| -> f64 {
        v.iter()
            .zip(wv)
            .zip(mu)
            .map(|((a, w), m)| m * (a * w).powf(e))
            .sum::<f64>()
            .powf(1.0 / e)
    };
    let mut best: f64 = 0.0;
    for case in &corpus.cases {
        let den = wnorm(&case.f.norms(), p);
        if den > 0.0 {
            best = best.max(wnorm(&op.apply(&case.f)?.norms(), q) / den);
        }
    }
    Ok(NormEstimate {
        value: best,
        method: NormMethod::CorpusMax,
        iterations: corpus.len(),
    })
}

/// Exact characteristics, and when an operator is given its weighted norm
/// estimate against the characteristic.
pub fn ap_characteristics(
    w: &Weight,
    basis: &BallBasis,
    p: f64,
    q: Option<f64>,
    norm_of: Option<(&Operator, Option<&Corpus>)>,
) -> Result<Report> {
    let (ap, ap_ball) = ap_characteristic(basis, w, p)?;
    let mut rep = Report::new("ap_characteristics");
    rep.row("weight", "a_p", ap, ap.is_finite() && ap >= 1.0 - 1e-12);
    rep.stat_num("p", p);
    rep.stat_num("a_p", ap);
    rep.stat("a_p_ball", ap_ball);
    let mut reference = ap;
    if let Some(q) = q {
        let (apq, apq_ball) = apq_characteristic(basis, w, p, q)?;
        rep.row("weight", "a_pq", apq, apq.is_finite());
        rep.stat_num("q", q);
        rep.stat_num("a_pq", apq);
        rep.stat("a_pq_ball", apq_ball);
        reference = apq;
    }
    if let Some((op, corpus)) = norm_of {
        let est = weighted_norm_estimate(op, w, p, q.unwrap_or(p), corpus)?;
        rep.row(&op.name, "norm_estimate", est.value, est.value.is_finite());
        rep.row(&op.name, "norm_over_characteristic", est.value / reference, true);
        rep.stat_num("norm_estimate", est.value);
        rep.stat("norm_method", serde_json::to_value(&est.method).expect("enum serializes"));
        rep.stat("norm_iterations", est.iterations);
    }
    rep.pass = rep.rows_pass();
    Ok(rep)
}
