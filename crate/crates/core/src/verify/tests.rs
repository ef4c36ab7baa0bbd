use std::sync::Arc;

use super::*;
use crate::functional::{build_regular_family, Completeness, Modulus, Params, VecFunction};
use crate::operators::*;
use crate::space::{set_of, BallBasis};

fn dyadic(l: usize) -> Arc<BallBasis> {
    Arc::new(BallBasis::dyadic(l).unwrap())
}

fn grid(n: usize) -> Arc<BallBasis> {
    Arc::new(BallBasis::grid(n).unwrap())
}

fn signs(basis: &BallBasis, count: usize, seed: u64) -> Corpus {
    Corpus::single(basis, Generator::RandomSigns {}, count, seed).unwrap()
}

fn e_k_family(basis: &Arc<BallBasis>) -> Operator {
    maximal_modulation(&conditional_expectations(basis).unwrap()).unwrap()
}

#[test]
fn weak_sup_matches_a_lambda_grid() {
    let g = [0.5, 2.0, 2.0, 1.0, 0.0, 3.0];
    let w = [1.0, 0.5, 0.5, 2.0, 1.0, 0.25];
    for rho in [1.0, 0.5] {
        let sup = weak_sup(&g, &w, rho);
        let mut grid_best: f64 = 0.0;
        for k in 1..40_000 {
            let l = k as f64 * 1e-4;
            let mass: f64 = g.iter().zip(&w).filter(|(v, _)| **v > l).map(|(_, w)| w).sum();
            grid_best = grid_best.max(l.powf(1.0 / rho) * mass);
        }
        assert!(grid_best <= sup + 1e-12 && sup - grid_best < 1e-3, "{rho}: {grid_best} vs {sup}");
    }
}

#[test]
fn maximal_weak_type_below_k() {
    let d = dyadic(10);
    let corpus = Corpus::single(&d, Generator::Uniform {}, 20, 1).unwrap();
    for p in [Params::classical(1.0), Params::new(1.0, 0.5, 1.0).unwrap()] {
        let rep = weak_type_report(WeakTarget::Maximal, &corpus, &d, &p).unwrap();
        assert!(rep.pass, "{}", rep.to_text());
        assert!(rep.max_value("weak_ratio") <= 2.0);
    }
}

#[test]
fn zero_operator_weak_ratios_vanish() {
    let d = dyadic(6);
    let corpus = signs(&d, 5, 2);
    let rep = weak_type_report(WeakTarget::Operator(&zero(&d)), &corpus, &d, &Params::classical(1.0)).unwrap();
    assert!(rep.rows.iter().all(|r| r.value == 0.0));
}

#[test]
fn riesz_weak_ratio_finite() {
    let g = grid(128);
    let op = riesz_potential(&g, 0.5).unwrap();
    let corpus = Corpus::single(&g, Generator::Spikes { count: 3 }, 4, 3).unwrap();
    let rep = weak_type_report(WeakTarget::Operator(&op), &corpus, &g, &op.params).unwrap();
    assert!(rep.pass);
    assert!(rep.max_value("weak_ratio") > 0.0);
}

#[test]
fn good_lambda_zero_operator() {
    let d = dyadic(6);
    let op = zero(&d);
    let consts = estimate_bo_constants(&op, 16, 1).unwrap();
    let rep = good_lambda_report(&op, &consts, &signs(&d, 4, 1), &d, &GoodLambdaOptions::default()).unwrap();
    assert!(rep.pass && rep.max_value("measure_ratio") == 0.0);
}

#[test]
fn good_lambda_martingale_bounded() {
    let d = dyadic(10);
    let op = martingale_transform(&d, &random_signs(&d, 2).unwrap()).unwrap();
    let consts = estimate_bo_constants(&op, 64, 3).unwrap();
    let rep = good_lambda_report(&op, &consts, &signs(&d, 8, 4), &d, &GoodLambdaOptions::default()).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
}

#[test]
fn good_lambda_hilbert_bounded() {
    let g = grid(128);
    let op = discrete_hilbert(&g).unwrap();
    let consts = estimate_bo_constants(&op, 64, 3).unwrap();
    let corpus = Corpus::single(&g, Generator::Uniform {}, 4, 5).unwrap();
    let rep = good_lambda_report(&op, &consts, &corpus, &g, &GoodLambdaOptions::default()).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
}

#[test]
fn identity_tail_vanishes_above_one() {
    let d = dyadic(8);
    let f = signs(&d, 1, 7).cases.remove(0).f;
    let rep = exp_decay_report(&identity(&d), &f, 0, DecayMode::VsMaximal).unwrap();
    assert!(rep.pass);
    let tail = &rep.tails[0];
    assert!(tail.points.iter().filter(|p| p.t >= 1.0).all(|p| p.fraction == 0.0));
}

#[test]
fn martingale_decay_rate_positive() {
    let d = dyadic(10);
    let op = martingale_transform(&d, &random_signs(&d, 9).unwrap()).unwrap();
    let f = signs(&d, 1, 8).cases.remove(0).f;
    let rep = exp_decay_report(&op, &f, 0, DecayMode::VsMaximal).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
}

#[test]
fn e_k_sharp_decay_on_log_samples() {
    let d = dyadic(8);
    let op = e_k_family(&d);
    let f = Corpus::single(&d, Generator::LogSamples { anchor: None }, 1, 2).unwrap().cases.remove(0).f;
    let rep = exp_decay_report(&op, &f, 0, DecayMode::VsSharp).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
}

#[test]
fn sharp_mode_needs_restricted_shape() {
    let d = dyadic(5);
    let f = signs(&d, 1, 1).cases.remove(0).f;
    let sq = square_function(&d).unwrap();
    assert!(matches!(exp_decay_report(&sq, &f, 0, DecayMode::VsSharp), Err(crate::Error::NotRestricted(_))));
}

#[test]
fn john_nirenberg_two_values_is_a_step() {
    let d = dyadic(6);
    let f = VecFunction::indicator(64, &set_of(64, 0..32));
    let rep = john_nirenberg_report(&f, &d).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
    assert!(rep.rows.iter().filter(|r| r.statistic == "fit_rate").all(|r| r.value.is_nan()));
}

#[test]
fn john_nirenberg_log_singularity() {
    let g = grid(256);
    let f = Corpus::single(&g, Generator::LogSamples { anchor: Some(0) }, 1, 0).unwrap().cases.remove(0).f;
    let rep = john_nirenberg_report(&f, &g).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
    let whole = rep.rows.iter().find(|r| r.case == "whole/median" && r.statistic == "fit_rate").unwrap();
    assert!(whole.value > 0.0);
}

#[test]
fn john_nirenberg_noise_passes() {
    let g = grid(64);
    let f = Corpus::single(&g, Generator::Uniform {}, 1, 4).unwrap().cases.remove(0).f;
    assert!(john_nirenberg_report(&f, &g).unwrap().pass);
}

#[test]
fn john_nirenberg_rejects_constants() {
    let d = dyadic(4);
    let f = VecFunction::scalar(vec![3.0; 16]);
    assert!(matches!(john_nirenberg_report(&f, &d), Err(crate::Error::ZeroBmoNorm)));
}

#[test]
fn bmo_ratios_exclude_constants() {
    let d = dyadic(6);
    let op = e_k_family(&d);
    let corpus = Corpus::single(&d, Generator::DeltaCombs { spacing: Some(1) }, 3, 0).unwrap();
    let rep = bmo_bounded_report(BmoTarget::Operator(&op), &corpus, &d, BmoMode::Bmo, f64::INFINITY).unwrap();
    assert!(rep.rows.is_empty());
    assert_eq!(rep.summary["excluded_degenerate_inputs"], 3);
}

#[test]
fn bmo_bounded_examples() {
    let d = dyadic(10);
    let corpus = Corpus::single(&d, Generator::Uniform {}, 10, 6).unwrap();
    let rep = bmo_bounded_report(BmoTarget::Operator(&e_k_family(&d)), &corpus, &d, BmoMode::Bmo, f64::INFINITY)
        .unwrap();
    assert!(rep.pass && rep.max_value("bmo_ratio") > 0.0);
    let d8 = dyadic(8);
    let fam = build_regular_family(&d8, Modulus::default()).unwrap();
    let complete = Completeness::all_balls(&d8);
    let corpus = Corpus::single(&d8, Generator::Uniform {}, 10, 6).unwrap();
    let target = BmoTarget::GeneralMaximal {
        family: &fam,
        complete: &complete,
    };
    let rep = bmo_bounded_report(target, &corpus, &d8, BmoMode::Bmo, f64::INFINITY).unwrap();
    assert!(rep.pass && rep.max_value("bmo_ratio") > 0.0);
}

#[test]
fn strong_domination_examples() {
    let d = dyadic(6);
    let g = Corpus::single(&d, Generator::Uniform {}, 1, 1).unwrap().cases.remove(0).f.map(|v| 1.5 + v);
    let c = VecFunction::scalar(vec![2.0; 64]);
    let rep = strong_domination_check(&c, &g, &d, 0, &default_alpha_grid()).unwrap();
    assert!(rep.rows.iter().filter(|r| r.statistic == "beta").all(|r| r.value == 0.0));
    assert_eq!(rep.tails[0].points[0].fraction, 0.0);
    let rep = strong_domination_check(&g, &g, &d, 0, &default_alpha_grid()).unwrap();
    assert!(rep.pass && rep.summary["sup_beta"].as_f64().unwrap() > 0.0);
    let mut v = g.raw().to_vec();
    v[5] = 0.0;
    let g0 = VecFunction::scalar(v);
    assert!(matches!(
        strong_domination_check(&g, &g0, &d, 0, &default_alpha_grid()),
        Err(crate::Error::InfZero { ball: 0 })
    ));
}

#[test]
fn unit_and_constant_weights() {
    let d = dyadic(5);
    for c in [1.0, 0.3, 7.0] {
        let w = Weight::constant(32, c).unwrap();
        for p in [1.5, 2.0, 3.0] {
            assert_eq!(ap_characteristic(&d, &w, p).unwrap().0, 1.0);
            assert_eq!(apq_characteristic(&d, &w, p, 2.0 * p).unwrap().0, 1.0);
        }
    }
}

#[test]
fn two_level_weight_by_hand() {
    // Root: ⟨w⟩ = 3/2, ⟨1/w⟩ = 3/4; every other ball sees a constant.
    let d = dyadic(4);
    let w = Weight::new((0..16).map(|i| if i < 8 { 2.0 } else { 1.0 }).collect()).unwrap();
    let (v, ball) = ap_characteristic(&d, &w, 2.0).unwrap();
    assert_eq!((v, ball), (1.125, 0));
}

#[test]
fn boyd_matches_eigenvalue() {
    let (v, _) = boyd_norm(&[2.0, 1.0, 1.0, 2.0], 2, 2.0, 2.0, 100);
    assert!((v - 3.0).abs() < 1e-12);
    // ℓ^p → ℓ^q norm of the all-ones 2×2 matrix is 2^{1/q + 1 − 1/p}.
    let (v, _) = boyd_norm(&[1.0; 4], 2, 1.5, 3.0, 100);
    let exact = 2f64.powf(1.0 / 3.0 + 1.0 - 1.0 / 1.5);
    assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
}

#[test]
fn power_weight_riesz_norm() {
    let g = grid(128);
    let op = riesz_potential(&g, 0.5).unwrap();
    let w = Weight::power(128, 0.3).unwrap();
    let rep = ap_characteristics(&w, &g, 4.0 / 3.0, Some(4.0), Some((&op, None))).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
    assert!(rep.summary["a_pq"].as_f64().unwrap() > 1.0);
    assert!(rep.summary["norm_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn connectivity_growth_is_finite() {
    let g = grid(24);
    let op = discrete_hilbert(&g).unwrap();
    let consts = estimate_bo_constants(&op, 32, 1).unwrap();
    let rep = delta_growth_report(&op, &consts, 30, 2).unwrap();
    assert!(rep.pass);
    assert!(rep.max_value("growth_quotient") < 10.0, "{}", rep.to_text());
}

#[test]
fn reports_are_reproducible() {
    let d = dyadic(8);
    let run = || {
        let corpus = Corpus::single(&d, Generator::HaarMixtures { terms: 6 }, 6, 11).unwrap();
        weak_type_report(WeakTarget::Maximal, &corpus, &d, &Params::classical(1.0)).unwrap().to_json()
    };
    assert_eq!(run(), run());
}
