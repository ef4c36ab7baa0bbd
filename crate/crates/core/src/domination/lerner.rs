//! Oscillation decomposition of a function over a sparse tree.

use std::cell::RefCell;
use std::collections::HashMap;

use super::bound::{measured_constant, verify_sparse_bound, BoundKind, SparseBound};
use crate::error::{Error, Result};
use crate::functional::{alpha_core, median, AlphaCore, VecFunction};
use crate::space::{AtomSet, BallBasis};
use crate::sparsify::{disjointify, sparsify_tree, SetTree};

/// Number of times `β` is moved halfway to 1 after a failed construction.
pub const BETA_ESCALATIONS: usize = 12;

/// `‖f(x) − m_f(A₀)‖ ≤ C Σ OSC_{[A],β}(f) 1_{Ā}(x)` on `A₀`.
///
/// The exceptional set of a ball `B` is `[B] ∖ E_B` with `E_B` the optimal
/// β-core of `f` on `[B]`. When the tree cannot be built, or the core
/// chain property fails, `β` moves halfway to 1 and the construction is
/// repeated; the `β` used is reported.
pub fn lerner_decompose(basis: &BallBasis, f: &VecFunction, a0: usize, beta: f64) -> Result<SparseBound> {
    if basis.eta().is_none() {
        return Err(Error::NotDoubling);
    }
    if !(beta > 0.5 && beta < 1.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    basis.try_ball(a0)?;
    if f.as_scalar().is_none() {
        return Err(Error::Invalid("oscillation decomposition needs a scalar function".into()));
    }
    if f.len() != basis.n_atoms() {
        return Err(Error::Invalid("function does not match the basis".into()));
    }
    let space = basis.space();
    let domain = basis.ball_set(a0);
    let k = basis.k();
    let center = median(space, f, &domain)?.representative;
    let target: Vec<f64> = (0..f.len()).map(|x| f.norm_kind().dist(f.value(x), &center)).collect();

    let mut beta = beta;
    let mut transcript = Vec::new();
    for _ in 0..=BETA_ESCALATIONS {
        let alpha = (1.0 - beta) * k;
        if alpha >= 1.0 {
            transcript.push(format!("beta {beta}: alpha {alpha} too large"));
            beta = (1.0 + beta) / 2.0;
            continue;
        }
        match attempt(basis, f, a0, beta, alpha, &domain, &target, &center) {
            Ok(bound) => return Ok(bound),
            Err(Error::AlphaViolated { .. }) | Err(Error::ConstructionFailure { .. }) | Err(Error::NestingViolated { .. }) => {
                transcript.push(format!("beta {beta}: construction failed"));
            }
            Err(Error::PostconditionFailure { condition, witness }) => {
                transcript.push(format!("beta {beta}: {condition} ({witness})"));
            }
            Err(e) => return Err(e),
        }
        beta = (1.0 + beta) / 2.0;
    }
    Err(Error::ConstructionFailure {
        reason: "no beta gave an admissible oscillation tree".into(),
        transcript,
    })
}

#[allow(clippy::too_many_arguments)]
fn attempt(
    basis: &BallBasis,
    f: &VecFunction,
    a0: usize,
    beta: f64,
    alpha: f64,
    domain: &AtomSet,
    target: &[f64],
    center: &[f64],
) -> Result<SparseBound> {
    let space = basis.space();
    let cores: RefCell<HashMap<usize, AlphaCore>> = RefCell::new(HashMap::new());
    let core = |ball: usize| -> AlphaCore {
        cores
            .borrow_mut()
            .entry(ball)
            .or_insert_with(|| {
                alpha_core(space, f, &basis.ball_set(basis.hull(ball)), beta).expect("balls are non-empty")
            })
            .clone()
    };
    let fmap = |ball: usize| -> AtomSet {
        let mut s = basis.ball_set(basis.hull(ball));
        s.difference_with(&core(ball).set);
        s
    };
    let tree = sparsify_tree(basis, &fmap, a0, alpha)?;
    let nodes = &tree.nodes;
    let es: Vec<AlphaCore> = nodes.iter().map(|nd| core(nd.ball)).collect();
    for (i, nd) in nodes.iter().enumerate() {
        for &c in &nd.children {
            if es[i].set.is_disjoint(&es[c].set) {
                return Err(Error::PostconditionFailure {
                    condition: "core chain".into(),
                    witness: format!("cores of nodes {i} and {c} are disjoint"),
                });
            }
        }
    }
    let sets = SetTree {
        sets: nodes.iter().map(|nd| basis.ball_set(basis.hull(nd.ball))).collect(),
        parent: nodes.iter().map(|nd| nd.parent).collect(),
    };
    let e_map: Vec<AtomSet> = es.iter().map(|c| c.set.clone()).collect();
    let fam = disjointify(&sets, &e_map, &|s| space.measure(s))?;

    let enclosing = basis.hull(nodes[0].ball);
    if basis.measure(enclosing) > basis.k().powi(3) * basis.measure(a0) * (1.0 + 1e-12) {
        return Err(Error::PostconditionFailure {
            condition: "enclosing ball".into(),
            witness: format!("ball {enclosing} exceeds K^3 times ball {a0}"),
        });
    }
    let worst = nodes
        .iter()
        .map(|nd| space.measure(&nd.exceptional) / basis.measure(nd.ball))
        .fold(0.0, f64::max);
    let mut bound = SparseBound {
        kind: BoundKind::AlphaOscillation,
        family: nodes.iter().map(|nd| basis.hull(nd.ball)).collect(),
        parent: sets.parent.clone(),
        indicators: fam.shrink,
        coefficients: es.iter().map(|c| c.osc).collect(),
        domain: a0,
        enclosing,
        constant: 0.0,
        center: Some(center.to_vec()),
        target: target.to_vec(),
        lambda: None,
        alpha: worst,
        beta: Some(beta),
        tree: tree.stats.clone(),
    };
    let sum = bound.sparse_sum();
    bound.constant = measured_constant(target, &sum, domain).ok_or_else(|| Error::PostconditionFailure {
        condition: "oscillation domination".into(),
        witness: "an atom with positive target has an empty sparse sum".into(),
    })?;
    let report = verify_sparse_bound(basis, &bound, target, a0);
    if report.violations > 0 {
        return Err(Error::PostconditionFailure {
            condition: "oscillation domination".into(),
            witness: format!("{} negative margins", report.violations),
        });
    }
    Ok(bound)
}
