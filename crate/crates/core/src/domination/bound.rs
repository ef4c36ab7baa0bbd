//! Sparse bounds and their pointwise verification.

use serde::Serialize;
use serde_json::{json, Value};

use crate::space::{atoms_of, AtomSet, BallBasis};
use crate::sparsify::TreeStats;
use crate::tail::{fit_exponential, integer_tail, TailFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `‖Tf(x)‖ ≤ C Σ ⟨f⟩_G 1_{Ḡ}(x)`.
    FractionalMean,
    /// `|Tf(x) − m| ≤ C Σ ⟨f⟩*_{#,G} 1_{Ḡ}(x)`.
    MeanOscillation,
    /// `‖f(x) − m‖ ≤ C Σ OSC_{G,β}(f) 1_{Ḡ}(x)`.
    AlphaOscillation,
}

/// A pointwise bound by a sparse sum over a tree of balls.
#[derive(Clone, Debug)]
pub struct SparseBound {
    pub kind: BoundKind,
    pub family: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    /// `Ḡ` for every member, a martingale family over the tree.
    pub indicators: Vec<AtomSet>,
    /// The per-ball coefficient of the sum.
    pub coefficients: Vec<f64>,
    /// The ball `B` on which the bound is claimed.
    pub domain: usize,
    /// `B′ ⊇ ∪ family`.
    pub enclosing: usize,
    /// Smallest `C` making the bound hold on `B`.
    pub constant: f64,
    pub center: Option<Vec<f64>>,
    /// Left-hand side at every atom.
    pub target: Vec<f64>,
    pub lambda: Option<f64>,
    /// Largest `μ(F)/μ(ball)` over the exceptional sets the tree used.
    pub alpha: f64,
    pub beta: Option<f64>,
    pub tree: TreeStats,
}

impl SparseBound {
    /// `Σ_G c_G 1_{Ḡ}(x)` at every atom.
    pub fn sparse_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.target.len()];
        for (set, &c) in self.indicators.iter().zip(&self.coefficients) {
            for x in set.ones() {
                s[x] += c;
            }
        }
        s
    }

    /// `Σ_G 1_{Ḡ}(x)` at every atom.
    pub fn overlap(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.target.len()];
        for set in &self.indicators {
            for x in set.ones() {
                s[x] += 1.0;
            }
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "family": self.family,
            "parent": self.parent,
            "indicators": self.indicators.iter().map(atoms_of).collect::<Vec<_>>(),
            "coefficients": self.coefficients,
            "domain": self.domain,
            "enclosing": self.enclosing,
            "constant": self.constant,
            "center": self.center,
            "lambda": self.lambda,
            "alpha": self.alpha,
            "beta": self.beta,
        })
    }
}

/// Smallest `C` with `target ≤ C·sum` on `domain`; `None` when some atom
/// has a positive target and a zero sum.
pub fn measured_constant(target: &[f64], sum: &[f64], domain: &AtomSet) -> Option<f64> {
    let mut c: f64 = 0.0;
    for x in domain.ones() {
        if target[x] <= 0.0 {
            continue;
        }
        if sum[x] <= 0.0 {
            return None;
        }
        c = c.max(target[x] / sum[x]);
    }
    Some(c)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub margin_min: f64,
    pub margin_median: f64,
    pub violations: usize,
    /// `μ(B′)/μ(B)`.
    pub enclosing_ratio: f64,
    /// `∪ family ⊆ B′`.
    pub enclosed: bool,
    /// `(λ, μ{Σ1_{Ḡ} > λ}/μ(B))`.
    pub overlap_tail: Vec<(f64, f64)>,
    pub fit: TailFit,
    pub pass: bool,
}

/// Margins `C·Σ c_G 1_{Ḡ}(x) − target(x)` on the domain, the enclosing
/// ratio and the overlap tail with its exponential fit.
pub fn verify_sparse_bound(basis: &BallBasis, bound: &SparseBound, target: &[f64], domain: usize) -> VerificationReport {
    let sum = bound.sparse_sum();
    let mut margins = Vec::new();
    let mut violations = 0;
    for x in basis.ball(domain).members.iter() {
        let m = bound.constant * sum[x] - target[x];
        if m < -1e-12 * target[x].abs().max(1e-300) {
            violations += 1;
        }
        margins.push(m);
    }
    margins.sort_by(f64::total_cmp);
    let margin_min = margins.first().copied().unwrap_or(0.0);
    let margin_median = margins.get(margins.len() / 2).copied().unwrap_or(0.0);

    let outer = &basis.ball(bound.enclosing).members;
    let enclosed = bound.family.iter().all(|&g| basis.ball(g).members.is_subset(outer));
    let enclosing_ratio = basis.measure(bound.enclosing) / basis.measure(domain);
    let overlap_tail = integer_tail(&bound.overlap(), basis.space().weights(), basis.measure(domain));
    let fit = fit_exponential(&overlap_tail);
    VerificationReport {
        margin_min,
        margin_median,
        violations,
        enclosing_ratio,
        enclosed,
        pass: violations == 0 && enclosed && fit.passes(),
        overlap_tail,
        fit,
    }
}
