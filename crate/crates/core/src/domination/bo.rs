//! Sparse domination of a bounded-oscillation operator by fractional means.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bound::{measured_constant, verify_sparse_bound, BoundKind, SparseBound};
use crate::error::{Error, Result};
use crate::functional::{average, maximal, MaximalMode, VecFunction};
use crate::operators::{truncate, BOConstants, Operator};
use crate::space::{double_star, AtomSet};
use crate::sparsify::{disjointify, sparsify_tree};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DominateOptions {
    /// First `λ` tried; each failure doubles it.
    pub lambda0: f64,
    pub max_doublings: usize,
    /// Bound required of every `μ(F_A)/μ(A)` the tree touches.
    pub alpha: f64,
    /// Dominate `T*f` instead of `Tf`.
    pub truncated_target: bool,
}

impl Default for DominateOptions {
    fn default() -> Self {
        DominateOptions {
            lambda0: 10.0,
            max_doublings: 24,
            alpha: 0.05,
            truncated_target: false,
        }
    }
}

/// `Γg = max{‖Tg‖, T*g, 𝔏·Mg}` at every atom.
fn gamma(op: &Operator, tstar: &Operator, big_l: f64, g: &VecFunction) -> Result<Vec<f64>> {
    let t = op.apply(g)?.norms();
    let ts = tstar.apply(g)?.norms();
    let m = maximal(op.basis(), g, &op.params, MaximalMode::FractionalBasis)?;
    Ok((0..t.len()).map(|x| t[x].max(ts[x]).max(big_l * m[x])).collect())
}

/// Builds the sparse tree from the exceptional sets
/// `F_A = {Γ(f·1_{A**}) > 𝔏λ⟨f⟩_{A**}}`, raising `λ` until the tree exists,
/// and returns the bound with its measured constant.
pub fn dominate_bo(
    op: &Operator,
    consts: &BOConstants,
    f: &VecFunction,
    b: usize,
    opts: &DominateOptions,
) -> Result<SparseBound> {
    let basis = op.basis();
    let n = basis.n_atoms();
    basis.try_ball(b)?;
    if f.len() != n {
        return Err(Error::Invalid(format!("function has {} atoms, basis has {n}", f.len())));
    }
    let domain = basis.ball_set(b);
    if !f.support().is_subset(&domain) {
        return Err(Error::Invalid(format!("support of f is not inside ball {b}")));
    }
    let p = op.params;
    let sum_l = consts.l0 + consts.l1 + consts.l2;
    let big_l = if sum_l > 0.0 { sum_l } else { 1.0 };
    let tstar = truncate(op);

    // Γ(f·1_{A**}) and ⟨f⟩_{A**} do not depend on λ.
    let cache: RefCell<HashMap<usize, (Vec<f64>, f64)>> = RefCell::new(HashMap::new());
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut last_alpha = 0.0;
    let mut lambda = opts.lambda0;
    for attempt in 0..=opts.max_doublings {
        if attempt > 0 {
            lambda *= 2.0;
        }
        let worst = Cell::new(0.0f64);
        let fmap = |ball: usize| -> AtomSet {
            let mut out = AtomSet::with_capacity(n);
            let mut cache = cache.borrow_mut();
            if !cache.contains_key(&ball) {
                let ss = double_star(basis, ball);
                let g = f.restricted(&ss);
                let value = gamma(op, &tstar, big_l, &g).and_then(|gm| Ok((gm, average(basis.space(), f, &ss, &p)?)));
                match value {
                    Ok(v) => {
                        cache.insert(ball, v);
                    }
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        return out;
                    }
                }
            }
            let (gm, avg) = &cache[&ball];
            let level = big_l * lambda * avg;
            for (x, &v) in gm.iter().enumerate() {
                if v > level {
                    out.insert(x);
                }
            }
            worst.set(worst.get().max(basis.space().measure(&out) / basis.measure(ball)));
            out
        };
        let built = sparsify_tree(basis, &fmap, b, opts.alpha);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        last_alpha = worst.get();
        let tree = match built {
            Ok(tree) => tree,
            Err(Error::AlphaViolated { .. }) | Err(Error::ConstructionFailure { .. }) => continue,
            Err(e) => return Err(e),
        };

        let sets = tree.set_tree(basis);
        let e_map: Vec<AtomSet> = tree
            .nodes
            .iter()
            .zip(&sets.sets)
            .map(|(node, s)| {
                let mut e = s.clone();
                e.difference_with(&node.exceptional);
                e
            })
            .collect();
        let space = basis.space();
        let fam = disjointify(&sets, &e_map, &|s| space.measure(s))?;
        let coefficients = sets
            .sets
            .iter()
            .map(|s| average(space, f, s, &p))
            .collect::<Result<Vec<f64>>>()?;
        let target_fn = if opts.truncated_target { tstar.apply(f)? } else { op.apply(f)? };
        let target = target_fn.norms();
        let enclosing = basis.hull(tree.nodes[0].ball);
        let k3 = basis.k().powi(3);
        if basis.measure(enclosing) > k3 * basis.measure(b) * (1.0 + 1e-12) {
            return Err(Error::PostconditionFailure {
                condition: "enclosing ball".into(),
                witness: format!("ball {enclosing} exceeds K^3 times ball {b}"),
            });
        }
        let mut bound = SparseBound {
            kind: BoundKind::FractionalMean,
            family: tree.balls(),
            parent: tree.nodes.iter().map(|nd| nd.parent).collect(),
            indicators: fam.shrink,
            coefficients,
            domain: b,
            enclosing,
            constant: 0.0,
            center: None,
            target,
            lambda: Some(lambda),
            alpha: last_alpha,
            beta: None,
            tree: tree.stats.clone(),
        };
        let sum = bound.sparse_sum();
        bound.constant = measured_constant(&bound.target, &sum, &domain).ok_or_else(|| {
            Error::PostconditionFailure {
                condition: "sparse domination".into(),
                witness: "an atom with positive target has an empty sparse sum".into(),
            }
        })?;
        let report = verify_sparse_bound(basis, &bound, &bound.target, b);
        if report.violations > 0 {
            return Err(Error::PostconditionFailure {
                condition: "sparse domination".into(),
                witness: format!("{} negative margins", report.violations),
            });
        }
        return Ok(bound);
    }
    Err(Error::LambdaExhausted {
        lambda,
        alpha: last_alpha,
    })
}
