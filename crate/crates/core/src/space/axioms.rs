//! Audit of the ball-basis axioms and the doubling condition.

use serde::Serialize;

use super::basis::BallBasis;
use super::region::{AtomSet, Region};

/// Outcome of `check_axioms`. Failures are listed, never raised.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub atoms: usize,
    pub balls: usize,
    /// Positive atom weights and positive, correctly cached ball measures.
    pub b1: bool,
    pub b1_failures: Vec<String>,
    /// Every pair of atoms lies in a common ball.
    pub b2: bool,
    pub b2_failure: Option<(usize, usize)>,
    /// Finite atomic sigma-algebras make B3 automatic.
    pub b3_note: &'static str,
    /// The cached stars agree with an exact recomputation.
    pub stars_consistent: bool,
    pub star_mismatches: Vec<usize>,
    /// `B ⊆ B* ⊆ [B]` for every ball.
    pub hull_contains_star: bool,
    pub hull_failures: Vec<usize>,
    /// Largest `μ([B])/μ(B)` of the stored hull map.
    pub k_stored_ratio: f64,
    /// Largest `μ(H)/μ(B)` where `H` is the smallest ball containing `B*`.
    pub k_optimal: f64,
    pub k_declared: f64,
    pub k_valid: bool,
    /// Smallest eta witnessing the doubling condition, if any ball needs one.
    pub eta_minimal: Option<f64>,
    pub eta_declared: Option<f64>,
    pub eta_valid: bool,
    /// A ball with `B* ≠ X` and no strict superset.
    pub eta_counterexample: Option<usize>,
    pub pass: bool,
}

/// Exhaustive audit of B1, B2, B4 and the doubling condition.
pub fn check_axioms(basis: &BallBasis) -> AxiomReport {
    let n = basis.n_atoms();
    let space = basis.space();
    let mut b1_failures = Vec::new();
    for x in 0..n {
        if !(space.weight(x) > 0.0) {
            let holder = basis.containing(x).first().map(|&b| b as usize);
            b1_failures.push(match holder {
                Some(b) => format!("atom {x} has zero weight (inside ball {b})"),
                None => format!("atom {x} has zero weight"),
            });
        }
    }
    for ball in basis.balls() {
        let recomputed = space.region_measure(&ball.members);
        if !(ball.measure > 0.0) {
            b1_failures.push(format!("ball {} has measure {}", ball.id, ball.measure));
        } else if recomputed != ball.measure {
            b1_failures.push(format!("ball {} caches a stale measure", ball.id));
        }
    }

    let b2_failure = b2_witness(basis);

    let mut star_mismatches = Vec::new();
    let mut hull_failures = Vec::new();
    let mut k_stored: f64 = 0.0;
    let mut k_opt: f64 = 0.0;
    let mut eta_min: Option<f64> = None;
    let mut eta_counterexample = None;
    for ball in basis.balls() {
        let id = ball.id;
        let star = basis.star_generic(id);
        if !star.iter().eq(basis.star(id).iter()) {
            star_mismatches.push(id);
        }
        let hull = basis.ball(basis.hull(id));
        if !(ball.members.is_subset(&star) && star.is_subset(&hull.members)) {
            hull_failures.push(id);
        }
        if ball.measure > 0.0 {
            k_stored = k_stored.max(hull.measure / ball.measure);
            let star_bits = star.to_bits(n);
            if let Some(h) = smallest_over(basis, &star, &star_bits, hull.measure) {
                k_opt = k_opt.max(basis.measure(h) / ball.measure);
            }
        }
        if !basis.is_whole_region(&star) {
            match basis.supersets(id, true).first() {
                Some(&s) => {
                    let r = basis.measure(s) / ball.measure;
                    eta_min = Some(eta_min.map_or(r, |e: f64| e.max(r)));
                }
                None => {
                    eta_counterexample.get_or_insert(id);
                }
            }
        }
    }
    let k_valid = hull_failures.is_empty() && k_stored <= basis.k();
    let eta_valid = match basis.eta() {
        None => true,
        Some(e) => eta_counterexample.is_none() && eta_min.map_or(true, |m| m <= e),
    };
    let b1 = b1_failures.is_empty();
    let pass = b1
        && b2_failure.is_none()
        && star_mismatches.is_empty()
        && hull_failures.is_empty()
        && k_valid
        && eta_valid;
    AxiomReport {
        atoms: n,
        balls: basis.n_balls(),
        b1,
        b1_failures,
        b2: b2_failure.is_none(),
        b2_failure,
        b3_note: "finite atomic sigma-algebra: every increasing union of balls stabilizes",
        stars_consistent: star_mismatches.is_empty(),
        star_mismatches,
        hull_contains_star: hull_failures.is_empty(),
        hull_failures,
        k_stored_ratio: k_stored,
        k_optimal: k_opt,
        k_declared: basis.k(),
        k_valid,
        eta_minimal: eta_min,
        eta_declared: basis.eta(),
        eta_valid,
        eta_counterexample,
        pass,
    }
}

/// Smallest ball containing `set` whose measure does not exceed `cap`
/// (the stored hull is always a candidate when it is valid).
fn smallest_over(basis: &BallBasis, set: &Region, bits: &AtomSet, cap: f64) -> Option<usize> {
    let lower = basis.space().region_measure(set);
    let x0 = set.first();
    basis
        .containing(x0)
        .iter()
        .map(|&b| b as usize)
        .filter(|&b| basis.measure(b) >= lower)
        .take_while(|&b| basis.measure(b) <= cap)
        .find(|&b| basis.ball(b).members.contains_bits(bits))
        .or_else(|| basis.smallest_containing(bits))
}

fn b2_witness(basis: &BallBasis) -> Option<(usize, usize)> {
    if basis.whole().is_some() {
        return None;
    }
    let n = basis.n_atoms();
    let mut reach = AtomSet::with_capacity(n);
    for x in 0..n {
        reach.clear();
        for &b in basis.containing(x) {
            basis.ball(b as usize).members.union_into(&mut reach);
        }
        if let Some(y) = (0..n).find(|&y| !reach.contains(y)) {
            return Some((x, y));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{MeasureSpace, Region};

    #[test]
    fn dyadic_constants() {
        for levels in 0..=6 {
            let r = check_axioms(&BallBasis::dyadic(levels).unwrap());
            assert!(r.pass, "levels {levels}: {r:?}");
            assert_eq!(r.k_stored_ratio, if levels == 0 { 1.0 } else { 2.0 });
            if levels >= 2 {
                assert_eq!(r.eta_minimal, Some(2.0));
                assert_eq!(r.k_optimal, 2.0);
            }
        }
    }

    #[test]
    fn zero_weight_atom_is_reported() {
        let space = MeasureSpace::new(vec![0.5, 0.0]).unwrap();
        let members = vec![Region::span(0, 0), Region::span(1, 1), Region::span(0, 1)];
        let basis = BallBasis::new(space, members, vec![2, 2, 2], 2.0, None).unwrap();
        let r = check_axioms(&basis);
        assert!(!r.b1);
        assert!(r.b1_failures.iter().any(|f| f.contains("ball 1")));
    }

    #[test]
    fn short_hull_is_reported() {
        let space = MeasureSpace::uniform(4, 1.0).unwrap();
        let g = BallBasis::grid(4).unwrap();
        let members: Vec<Region> = g.balls().iter().map(|b| b.members.clone()).collect();
        let mut hull = g.hull_map().to_vec();
        let victim = g.grid_ball(1, 1).unwrap();
        hull[victim] = victim;
        let basis = BallBasis::new(space, members, hull, 5.0, Some(2.0)).unwrap();
        let r = check_axioms(&basis);
        assert!(!r.hull_contains_star);
        assert_eq!(r.hull_failures, vec![victim]);
    }

    #[test]
    fn missing_pair_breaks_b2() {
        let space = MeasureSpace::uniform(2, 1.0).unwrap();
        let basis = BallBasis::new(
            space,
            vec![Region::span(0, 0), Region::span(1, 1)],
            vec![0, 1],
            1.0,
            None,
        )
        .unwrap();
        assert_eq!(check_axioms(&basis).b2_failure, Some((0, 1)));
    }
}
