use std::sync::Arc;

use ballbasis::functional::{alpha_oscillation, maximal_classical, median, VecFunction};
use ballbasis::operators::{discrete_hilbert, martingale_transform, random_signs};
use ballbasis::space::{atoms_of, basis_from_json, basis_to_json, check_axioms, set_of, AtomSet, BallBasis};
use ballbasis::sparsify::{disjointify, vitali_cover, SetTree};
use ballbasis::verify::{ap_characteristic, Weight};
use proptest::prelude::*;

fn bases() -> Vec<Arc<BallBasis>> {
    vec![
        Arc::new(BallBasis::dyadic(5).unwrap()),
        Arc::new(BallBasis::grid(24).unwrap()),
    ]
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_weight_has_unit_characteristic(c in 0.01..100.0f64, p in 1.05..6.0f64) {
        for b in bases() {
            let w = Weight::constant(b.n_atoms(), c).unwrap();
            let (a, _) = ap_characteristic(&b, &w, p).unwrap();
            prop_assert!((a - 1.0).abs() < 1e-9, "got {a}");
        }
    }

    #[test]
    fn characteristic_is_at_least_one(w in prop::collection::vec(0.01..50.0f64, 24), p in 1.05..6.0f64) {
        let b = BallBasis::grid(24).unwrap();
        let (a, _) = ap_characteristic(&b, &Weight::new(w).unwrap(), p).unwrap();
        prop_assert!(a >= 1.0 - 1e-9);
    }

    #[test]
    fn maximal_dominates_dyadic_values(v in values(32)) {
        let b = BallBasis::dyadic(5).unwrap();
        let f = VecFunction::scalar(v.clone());
        let m = maximal_classical(&b, &f, 1.0);
        for (x, fx) in v.iter().enumerate() {
            prop_assert!(m[x] >= fx.abs() - 1e-12);
        }
    }

    #[test]
    fn alpha_oscillation_grows_with_alpha(v in values(24), lo in 0.05..0.5f64, gap in 0.0..0.45f64) {
        let b = BallBasis::grid(24).unwrap();
        let f = VecFunction::scalar(v);
        let s = set_of(24, 0..24);
        let a = alpha_oscillation(b.space(), &f, &s, lo).unwrap();
        let c = alpha_oscillation(b.space(), &f, &s, lo + gap).unwrap();
        prop_assert!(a <= c + 1e-12);
    }

    #[test]
    fn median_set_is_large(v in values(24), lo in 0usize..12, len in 1usize..12) {
        let b = BallBasis::grid(24).unwrap();
        let f = VecFunction::scalar(v);
        let s = set_of(24, lo..lo + len);
        let m = median(b.space(), &f, &s).unwrap();
        prop_assert!(m.set.is_subset(&s));
        prop_assert!(2.0 * b.space().measure(&m.set) >= b.space().measure(&s) - 1e-12);
    }

    #[test]
    fn martingale_transform_is_linear(seed in any::<u64>(), u in values(32), v in values(32), a in -3.0..3.0f64) {
        let b = Arc::new(BallBasis::dyadic(5).unwrap());
        let t = martingale_transform(&b, &random_signs(&b, seed).unwrap()).unwrap();
        let (f, g) = (VecFunction::scalar(u), VecFunction::scalar(v));
        let lhs = t.apply(&f.combine(a, &g, 1.0)).unwrap();
        let rhs = t.apply(&f).unwrap().combine(a, &t.apply(&g).unwrap(), 1.0);
        for x in 0..32 {
            prop_assert!((lhs.raw()[x] - rhs.raw()[x]).abs() < 1e-9);
        }
    }

    #[test]
    fn hilbert_is_antisymmetric(y in 0usize..24, z in 0usize..24) {
        let b = Arc::new(BallBasis::grid(24).unwrap());
        let t = discrete_hilbert(&b).unwrap();
        let k = t.kernel().unwrap();
        prop_assert!((k[y * 24 + z] + k[z * 24 + y]).abs() < 1e-12);
    }

    #[test]
    fn vitali_cover_is_disjoint_and_covers(picks in prop::collection::vec(0usize..1000, 1..20)) {
        for b in bases() {
            let family: Vec<usize> = picks.iter().map(|p| p % b.n_balls()).collect();
            let mut e = AtomSet::with_capacity(b.n_atoms());
            for &id in &family {
                e.union_with(&b.ball_set(id));
            }
            let chosen = vitali_cover(&b, &e, &family).unwrap();
            let mut stars = AtomSet::with_capacity(b.n_atoms());
            for (i, &p) in chosen.iter().enumerate() {
                prop_assert!(family.contains(&p));
                for &q in &chosen[i + 1..] {
                    prop_assert!(b.ball_set(p).is_disjoint(&b.ball_set(q)));
                }
                stars.union_with(&b.star_set(p));
            }
            prop_assert!(e.is_subset(&stars));
        }
    }

    #[test]
    fn disjointify_keeps_the_union(cuts in prop::collection::vec((0usize..32, 1usize..16), 1..12)) {
        // A chain of nested intervals hanging off the whole space.
        let mut sets = vec![set_of(32, 0..32)];
        let mut parent = vec![None];
        for (i, &(lo, len)) in cuts.iter().enumerate() {
            let p = i / 2;
            let pa = atoms_of(&sets[p]);
            let lo = lo % pa.len();
            let s = set_of(32, pa[lo..(lo + len).min(pa.len())].iter().copied());
            sets.push(s);
            parent.push(Some(p));
        }
        let e: Vec<AtomSet> = sets.clone();
        let tree = SetTree { sets, parent };
        let fam = disjointify(&tree, &e, &|s: &AtomSet| s.count_ones(..) as f64).unwrap();
        let mut pieces = AtomSet::with_capacity(32);
        for (a, bar) in fam.shrink.iter().enumerate() {
            prop_assert!(bar.is_subset(&tree.sets[a]));
            let mut piece = bar.clone();
            piece.intersect_with(&e[a]);
            prop_assert!(piece.is_disjoint(&pieces));
            pieces.union_with(&piece);
        }
        prop_assert_eq!(pieces.count_ones(..), 32);
    }
}

#[test]
fn basis_json_round_trip() {
    for b in bases() {
        let back = basis_from_json(&basis_to_json(&b)).unwrap();
        assert_eq!(basis_to_json(&back), basis_to_json(&b));
        assert_eq!(check_axioms(&back).pass, check_axioms(&b).pass);
    }
}
