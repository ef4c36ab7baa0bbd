//! Greedy Vitali selection.

use crate::error::{Error, Result};
use crate::space::{AtomSet, BallBasis};

/// Positions into `balls` chosen by the greedy rule: take the largest
/// remaining ball disjoint from everything chosen so far. Ties go to the
/// lower ball id, then the earlier position. Repeated ids are allowed and
/// only the first copy can be chosen.
pub fn vitali_indices(basis: &BallBasis, balls: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (balls[i], balls[j]);
        basis
            .measure(b)
            .total_cmp(&basis.measure(a))
            .then(a.cmp(&b))
            .then(i.cmp(&j))
    });
    let mut taken = AtomSet::with_capacity(basis.n_atoms());
    let mut chosen = Vec::new();
    for i in order {
        let members = &basis.ball(balls[i]).members;
        if !members.intersects_bits(&taken) {
            members.union_into(&mut taken);
            chosen.push(i);
        }
    }
    chosen
}

/// Pairwise disjoint balls drawn from `family` whose stars cover `e`.
///
/// Taking the largest available ball at each step satisfies the half-supremum
/// rule, and every rejected ball meets a chosen one at least as large, so it
/// sits inside that ball's star.
pub fn vitali_cover(basis: &BallBasis, e: &AtomSet, family: &[usize]) -> Result<Vec<usize>> {
    let n = basis.n_atoms();
    let mut covered = AtomSet::with_capacity(n);
    for &b in family {
        basis.try_ball(b)?.members.union_into(&mut covered);
    }
    if let Some(x) = e.difference(&covered).next() {
        return Err(Error::NotACover { atom: x });
    }
    let mut ids = family.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let chosen: Vec<usize> = vitali_indices(basis, &ids).into_iter().map(|i| ids[i]).collect();

    let mut stars = AtomSet::with_capacity(n);
    for &b in &chosen {
        basis.star(b).union_into(&mut stars);
    }
    if let Some(x) = e.difference(&stars).next() {
        return Err(Error::PostconditionFailure {
            condition: "vitali star cover".into(),
            witness: format!("atom {x} outside every selected star"),
        });
    }
    Ok(chosen)
}
