//! Covers of a set by balls in which a larger set has density at most 1/2.

use super::vitali::vitali_cover;
use crate::error::{Error, Result};
use crate::functional::ball_integrals;
use crate::space::{AtomSet, BallBasis};

/// Atoms of `e` that are density points of `f`: some ball through the atom
/// lies inside `f`. With positive weights this is the limit of the
/// `μ(B∩F) > (1−ε)μ(B)` criterion as `ε → 0`.
pub fn density_points(basis: &BallBasis, f: &AtomSet, e: &AtomSet) -> AtomSet {
    let mut out = AtomSet::with_capacity(basis.n_atoms());
    for x in e.ones() {
        let inside = basis
            .containing(x)
            .iter()
            .any(|&b| basis.ball(b as usize).members.is_subset_of_bits(f));
        if inside {
            out.insert(x);
        }
    }
    out
}

fn fail(condition: &str, witness: String) -> Error {
    Error::PostconditionFailure {
        condition: condition.into(),
        witness,
    }
}

/// Balls `G` covering the density points of `f` in `e` with
/// `Σμ(G) ≤ 2Kμ(F)` and `μ(G'∩F) < μ(G')/2` for every `G' ⊋ G`.
///
/// On a doubling basis each hull is replaced by its smallest strict superset
/// of measure at most `ημ`, which extends the density bound to `G' = G` and
/// the mass bound becomes `2ηKμ(F)`. Balls missing `e` are dropped.
pub fn child_cover(basis: &BallBasis, f: &AtomSet, e: &AtomSet) -> Result<Vec<usize>> {
    let n = basis.n_atoms();
    if !e.is_subset(f) {
        return Err(Error::Invalid("child cover needs E inside F".into()));
    }
    if e.count_ones(..) == 0 {
        return Ok(Vec::new());
    }
    let ind: Vec<f64> = (0..n).map(|x| if f.contains(x) { 1.0 } else { 0.0 }).collect();
    let in_f = ball_integrals(basis, &ind);
    let heavy = |b: usize| in_f[b] >= basis.measure(b) / 2.0;

    let dense = density_points(basis, f, e);
    let mut family = Vec::new();
    for x in dense.ones() {
        // Largest ball through x in which F has density at least 1/2;
        // `containing` is sorted by (measure, id) so ties keep the lower id.
        let mut best: Option<usize> = None;
        for &b in basis.containing(x) {
            let b = b as usize;
            if heavy(b) && best.map_or(true, |c| basis.measure(b) > basis.measure(c)) {
                best = Some(b);
            }
        }
        family.push(best.expect("x lies in a ball inside F"));
    }
    let selected = vitali_cover(basis, &dense, &family)?;

    let eta = basis.eta();
    let mut out: Vec<usize> = selected
        .iter()
        .map(|&b| {
            let g = basis.hull(b);
            match eta {
                Some(eta) => basis
                    .supersets(g, true)
                    .into_iter()
                    .next()
                    .filter(|&s| basis.measure(s) <= eta * basis.measure(g))
                    .unwrap_or(g),
                None => g,
            }
        })
        .filter(|&g| basis.ball(g).members.intersects_bits(e))
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|&g| seen.insert(g));

    let mut union = AtomSet::with_capacity(n);
    for &g in &out {
        basis.ball(g).members.union_into(&mut union);
    }
    if let Some(x) = dense.difference(&union).next() {
        return Err(fail("cover", format!("density point {x} not covered")));
    }
    let mass: f64 = out.iter().map(|&g| basis.measure(g)).sum();
    let bound = 2.0 * eta.unwrap_or(1.0) * basis.k() * basis.space().measure(f);
    if mass > bound * (1.0 + 1e-12) {
        return Err(fail("mass", format!("sum {mass} exceeds {bound}")));
    }
    for &g in &out {
        let own = eta.is_some() && basis.supersets(g, true).is_empty();
        let check = basis.supersets(g, eta.is_none() || own);
        if let Some(&s) = check.iter().find(|&&s| heavy(s)) {
            return Err(fail("half density", format!("ball {s} over {g}")));
        }
    }
    Ok(out)
}
