//! Fractional means, oscillations and mean oscillations.

use serde::{Deserialize, Serialize};

use super::function::{Params, VecFunction};
use crate::error::{Error, Result};
use crate::space::{AtomSet, BallBasis, BasisKind, MeasureSpace, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    Plain,
    Sup,
}

/// `t^r`, exact for the common exponents.
pub(crate) fn pow_r(t: f64, r: f64) -> f64 {
    if r == 1.0 {
        t
    } else if r == 2.0 {
        t * t
    } else {
        t.powf(r)
    }
}

fn pow_opt(t: f64, e: f64) -> f64 {
    if e == 1.0 {
        t
    } else if e == 0.5 {
        t.sqrt()
    } else {
        t.powf(e)
    }
}

/// `μ^{-ρ} I^ϱ` from a measure and an integral of `‖f‖^r`.
pub fn fractional_mean(measure: f64, integral: f64, p: &Params) -> f64 {
    let scale = if p.rho == 1.0 { 1.0 / measure } else { measure.powf(-p.rho) };
    scale * pow_opt(integral, p.varrho)
}

/// `‖f(x)‖^r` for every atom.
pub fn powered_norms(f: &VecFunction, r: f64) -> Vec<f64> {
    (0..f.len()).map(|x| pow_r(f.norm_at(x), r)).collect()
}

/// `Σ_{x∈B} w_x g_x` for every ball, summing atoms in increasing order.
pub fn ball_integrals(basis: &BallBasis, g: &[f64]) -> Vec<f64> {
    let w = basis.space().weights();
    match basis.kind() {
        BasisKind::Grid { n } => {
            // Every [lo, hi] extends [lo, hi-1] by one atom on the right, so
            // this reproduces the left-to-right sum exactly.
            let mut out = Vec::with_capacity(basis.n_balls());
            let mut prev: Vec<f64> = Vec::new();
            for len in 1..=n {
                let cur: Vec<f64> = (0..=(n - len))
                    .map(|lo| {
                        let hi = lo + len - 1;
                        let t = w[hi] * g[hi];
                        if len == 1 {
                            t
                        } else {
                            prev[lo] + t
                        }
                    })
                    .collect();
                out.extend_from_slice(&cur);
                prev = cur;
            }
            out
        }
        _ => basis
            .balls()
            .iter()
            .map(|b| b.members.iter().map(|x| w[x] * g[x]).sum())
            .collect(),
    }
}

/// For every ball, the maximum of `vals` over all balls containing it.
pub fn sup_over_supersets(basis: &BallBasis, vals: &[f64]) -> Vec<f64> {
    match basis.kind() {
        BasisKind::Dyadic { .. } => {
            let mut out = vals.to_vec();
            for b in 1..out.len() {
                out[b] = out[b].max(out[(b - 1) / 2]);
            }
            out
        }
        BasisKind::Grid { n } => {
            let mut out = vals.to_vec();
            for len in (1..n).rev() {
                for lo in 0..=(n - len) {
                    let hi = lo + len - 1;
                    let id = crate::space::grid_id(n, lo, hi);
                    let mut m = out[id];
                    if lo > 0 {
                        m = m.max(out[crate::space::grid_id(n, lo - 1, hi)]);
                    }
                    if hi + 1 < n {
                        m = m.max(out[crate::space::grid_id(n, lo, hi + 1)]);
                    }
                    out[id] = m;
                }
            }
            out
        }
        BasisKind::Custom => (0..basis.n_balls())
            .map(|b| {
                basis
                    .supersets(b, false)
                    .into_iter()
                    .map(|a| vals[a])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
    }
}

/// Minimum and maximum of atom values over every ball.
pub fn ball_extrema(basis: &BallBasis, vals: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match basis.kind() {
        BasisKind::Grid { n } => {
            let mut lo_out = Vec::with_capacity(basis.n_balls());
            let mut hi_out = Vec::with_capacity(basis.n_balls());
            let mut prev: Vec<(f64, f64)> = Vec::new();
            for len in 1..=n {
                let cur: Vec<(f64, f64)> = (0..=(n - len))
                    .map(|lo| {
                        let v = vals[lo + len - 1];
                        if len == 1 {
                            (v, v)
                        } else {
                            (prev[lo].0.min(v), prev[lo].1.max(v))
                        }
                    })
                    .collect();
                lo_out.extend(cur.iter().map(|c| c.0));
                hi_out.extend(cur.iter().map(|c| c.1));
                prev = cur;
            }
            (lo_out, hi_out)
        }
        BasisKind::Dyadic { levels } => {
            let count = basis.n_balls();
            let first_leaf = (1usize << levels) - 1;
            let mut lo = vec![0.0; count];
            let mut hi = vec![0.0; count];
            for b in (0..count).rev() {
                if b >= first_leaf {
                    lo[b] = vals[b - first_leaf];
                    hi[b] = vals[b - first_leaf];
                } else {
                    lo[b] = lo[2 * b + 1].min(lo[2 * b + 2]);
                    hi[b] = hi[2 * b + 1].max(hi[2 * b + 2]);
                }
            }
            (lo, hi)
        }
        BasisKind::Custom => basis
            .balls()
            .iter()
            .map(|b| {
                b.members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| {
                    (l.min(vals[x]), h.max(vals[x]))
                })
            })
            .unzip(),
    }
}

/// `OSC_B` of a scalar function for every ball.
pub fn ball_oscillations(basis: &BallBasis, vals: &[f64]) -> Vec<f64> {
    let (lo, hi) = ball_extrema(basis, vals);
    lo.iter().zip(&hi).map(|(l, h)| h - l).collect()
}

/// For every atom, the maximum of `vals` over the balls containing it.
pub fn per_atom_max(basis: &BallBasis, vals: &[f64]) -> Vec<f64> {
    let n = basis.n_atoms();
    match basis.kind() {
        BasisKind::Dyadic { levels } => {
            let sup = sup_over_supersets(basis, vals);
            let first_leaf = (1usize << levels) - 1;
            (0..n).map(|x| sup[first_leaf + x]).collect()
        }
        BasisKind::Grid { n } => {
            let sup = sup_over_supersets(basis, vals);
            (0..n).map(|x| sup[x]).collect()
        }
        BasisKind::Custom => (0..n)
            .map(|x| {
                basis
                    .containing(x)
                    .iter()
                    .map(|&b| vals[b as usize])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
    }
}

fn nonempty(set: &AtomSet) -> Result<()> {
    if set.is_clear() {
        Err(Error::EmptySet)
    } else {
        Ok(())
    }
}

/// `⟨f⟩_S = μ(S)^{-ρ} (∫_S ‖f‖^r)^ϱ` over an arbitrary non-empty set.
pub fn average(space: &MeasureSpace, f: &VecFunction, set: &AtomSet, p: &Params) -> Result<f64> {
    nonempty(set)?;
    let w = space.weights();
    let integral: f64 = set.ones().map(|x| w[x] * pow_r(f.norm_at(x), p.r)).sum();
    Ok(fractional_mean(space.measure(set), integral, p))
}

/// `⟨f⟩_B` for every ball.
pub fn ball_averages(basis: &BallBasis, f: &VecFunction, p: &Params) -> Vec<f64> {
    let integrals = ball_integrals(basis, &powered_norms(f, p.r));
    basis
        .balls()
        .iter()
        .zip(integrals)
        .map(|(b, i)| fractional_mean(b.measure, i, p))
        .collect()
}

/// `⟨f⟩*_B`: the largest mean over balls containing `B`.
pub fn sup_average(basis: &BallBasis, f: &VecFunction, ball: usize, p: &Params) -> Result<f64> {
    basis.try_ball(ball)?;
    let w = basis.space().weights();
    let mut best: f64 = 0.0;
    for a in basis.supersets(ball, false) {
        let b = basis.ball(a);
        let integral: f64 = b.members.iter().map(|x| w[x] * pow_r(f.norm_at(x), p.r)).sum();
        best = best.max(fractional_mean(b.measure, integral, p));
    }
    Ok(best)
}

/// `⟨f⟩*_B` for every ball.
pub fn sup_averages(basis: &BallBasis, f: &VecFunction, p: &Params) -> Vec<f64> {
    sup_over_supersets(basis, &ball_averages(basis, f, p))
}

/// Plain mode accepts any non-empty set; sup mode needs the set to be a ball.
pub fn average_with_mode(
    basis: &BallBasis,
    f: &VecFunction,
    set: &AtomSet,
    p: &Params,
    mode: AverageMode,
) -> Result<f64> {
    match mode {
        AverageMode::Plain => average(basis.space(), f, set, p),
        AverageMode::Sup => {
            nonempty(set)?;
            let id = basis
                .find_ball(set)
                .ok_or_else(|| Error::Invalid("sup averages are taken over basis balls".into()))?;
            sup_average(basis, f, id, p)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OscStats {
    pub osc: f64,
    pub sup: f64,
    pub inf: f64,
}

/// `OSC_S(f)`, `SUP_S(f)` and `INF_S(f)`.
pub fn oscillation_stats(f: &VecFunction, set: &AtomSet) -> Result<OscStats> {
    nonempty(set)?;
    let atoms: Vec<usize> = set.ones().collect();
    let (mut sup, mut inf) = (0.0f64, f64::INFINITY);
    for &x in &atoms {
        let v = f.norm_at(x);
        sup = sup.max(v);
        inf = inf.min(v);
    }
    Ok(OscStats {
        osc: oscillation(f, &atoms),
        sup,
        inf,
    })
}

/// Largest pairwise distance of the values on `atoms`.
pub fn oscillation(f: &VecFunction, atoms: &[usize]) -> f64 {
    if let Some(v) = f.as_scalar() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in atoms {
            lo = lo.min(v[x]);
            hi = hi.max(v[x]);
        }
        return if atoms.is_empty() { 0.0 } else { hi - lo };
    }
    let mut osc: f64 = 0.0;
    for (i, &x) in atoms.iter().enumerate() {
        for &y in &atoms[i + 1..] {
            osc = osc.max(f.dist(x, y));
        }
    }
    osc
}

/// The weighted mean `f_S`.
pub fn mean(space: &MeasureSpace, f: &VecFunction, set: &AtomSet) -> Result<Vec<f64>> {
    nonempty(set)?;
    Ok(mean_over(space, f, set.ones(), space.measure(set)))
}

fn mean_over(
    space: &MeasureSpace,
    f: &VecFunction,
    atoms: impl Iterator<Item = usize>,
    measure: f64,
) -> Vec<f64> {
    let mut acc = vec![0.0; f.dim()];
    for x in atoms {
        let w = space.weight(x);
        for (a, v) in acc.iter_mut().zip(f.value(x)) {
            *a += w * v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= measure);
    acc
}

fn sharp_over(
    space: &MeasureSpace,
    f: &VecFunction,
    region: &Region,
    measure: f64,
    r: f64,
) -> f64 {
    let m = mean_over(space, f, region.iter(), measure);
    let kind = f.norm_kind();
    let s: f64 = region
        .iter()
        .map(|x| space.weight(x) * pow_r(kind.dist(f.value(x), &m), r))
        .sum();
    pow_opt(s / measure, 1.0 / r)
}

/// `⟨f⟩_{#,S} = ((1/μ(S)) ∫_S ‖f - f_S‖^r)^{1/r}`.
pub fn sharp(space: &MeasureSpace, f: &VecFunction, set: &AtomSet, r: f64) -> Result<f64> {
    nonempty(set)?;
    let region = Region::from_bits(set.clone()).expect("non-empty");
    Ok(sharp_over(space, f, &region, space.measure(set), r))
}

/// `⟨f⟩_{#,B}` for every ball.
pub fn ball_sharps(basis: &BallBasis, f: &VecFunction, r: f64) -> Vec<f64> {
    basis
        .balls()
        .iter()
        .map(|b| sharp_over(basis.space(), f, &b.members, b.measure, r))
        .collect()
}

/// `⟨f⟩*_{#,B}` for every ball.
pub fn sup_sharps(basis: &BallBasis, f: &VecFunction, r: f64) -> Vec<f64> {
    sup_over_supersets(basis, &ball_sharps(basis, f, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscMode {
    Mean,
    Sharp,
    SupSharp,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OscValue {
    Vector(Vec<f64>),
    Scalar(f64),
}

/// The mean `f_S`, `⟨f⟩_{#,S}` or `⟨f⟩*_{#,B}`.
pub fn mean_oscillation(
    basis: &BallBasis,
    f: &VecFunction,
    set: &AtomSet,
    r: f64,
    mode: OscMode,
) -> Result<OscValue> {
    if !(r >= 1.0) {
        return Err(Error::Invalid(format!("mean oscillations need r >= 1, got {r}")));
    }
    let space = basis.space();
    match mode {
        OscMode::Mean => mean(space, f, set).map(OscValue::Vector),
        OscMode::Sharp => sharp(space, f, set, r).map(OscValue::Scalar),
        OscMode::SupSharp => {
            nonempty(set)?;
            let id = basis
                .find_ball(set)
                .ok_or_else(|| Error::Invalid("sup_sharp is taken over basis balls".into()))?;
            let best = basis
                .supersets(id, false)
                .into_iter()
                .map(|a| {
                    let b = basis.ball(a);
                    sharp_over(space, f, &b.members, b.measure, r)
                })
                .fold(0.0, f64::max);
            Ok(OscValue::Scalar(best))
        }
    }
}

/// `‖f‖_BMO = max_B (1/μ(B)) ∫_B ‖f - f_B‖`.
pub fn bmo_norm(basis: &BallBasis, f: &VecFunction) -> f64 {
    ball_sharps(basis, f, 1.0).into_iter().fold(0.0, f64::max)
}

/// `‖f‖_∞` over atoms of positive weight.
pub fn sup_norm(space: &MeasureSpace, f: &VecFunction) -> f64 {
    (0..f.len())
        .filter(|&x| space.weight(x) > 0.0)
        .map(|x| f.norm_at(x))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::NormKind;
    use crate::space::set_of;

    fn one() -> Params {
        Params::classical(1.0)
    }

    #[test]
    fn dyadic_averages() {
        let d3 = BallBasis::dyadic(3).unwrap();
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let f = VecFunction::scalar(v);
        let all = d3.space().full_set();
        assert_eq!(average(d3.space(), &f, &all, &one()).unwrap(), 0.125);
        let b = d3.filtration().unwrap().generations[3][1];
        assert_eq!(sup_average(&d3, &f, b, &one()).unwrap(), 0.5);
        assert_eq!(sup_averages(&d3, &f, &one())[b], 0.5);
        let e = AtomSet::with_capacity(8);
        assert!(matches!(average(d3.space(), &f, &e, &one()), Err(Error::EmptySet)));
    }

    #[test]
    fn constant_is_invariant_for_classical_profile() {
        let g = BallBasis::grid(9).unwrap();
        let f = VecFunction::scalar(vec![3.0; 9]);
        for avg in ball_averages(&g, &f, &Params::classical(2.0)) {
            assert!((avg - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_integrals_match_direct_sums() {
        let g = BallBasis::grid(12).unwrap();
        let vals: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let fast = ball_integrals(&g, &vals);
        for b in g.balls() {
            let direct: f64 = b.members.iter().map(|x| vals[x]).sum();
            assert_eq!(fast[b.id], direct);
        }
    }

    #[test]
    fn sup_closure_matches_enumeration() {
        let g = BallBasis::grid(10).unwrap();
        let vals: Vec<f64> = (0..g.n_balls()).map(|i| ((i * 7919) % 101) as f64).collect();
        let fast = sup_over_supersets(&g, &vals);
        for b in 0..g.n_balls() {
            let slow = g.supersets(b, false).into_iter().map(|a| vals[a]).fold(f64::MIN, f64::max);
            assert_eq!(fast[b], slow);
        }
        let atoms = per_atom_max(&g, &vals);
        for x in 0..10 {
            let slow = g.containing(x).iter().map(|&b| vals[b as usize]).fold(f64::MIN, f64::max);
            assert_eq!(atoms[x], slow);
        }
    }

    #[test]
    fn oscillation_examples() {
        let f = VecFunction::scalar(vec![1.0, 1.0, 5.0]);
        let s = oscillation_stats(&f, &set_of(3, [0, 1, 2])).unwrap();
        assert_eq!((s.osc, s.sup, s.inf), (4.0, 5.0, 1.0));
        let g = VecFunction::new(2, NormKind::Euclidean, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(oscillation_stats(&g, &set_of(2, [0, 1])).unwrap().osc, 5.0);
        let c = VecFunction::scalar(vec![2.0; 3]);
        assert_eq!(oscillation_stats(&c, &set_of(3, [0, 1, 2])).unwrap().osc, 0.0);
    }

    #[test]
    fn sharp_and_bmo_examples() {
        let d1 = BallBasis::dyadic(1).unwrap();
        let f = VecFunction::scalar(vec![0.0, 1.0]);
        let all = d1.space().full_set();
        assert_eq!(mean(d1.space(), &f, &all).unwrap(), vec![0.5]);
        assert_eq!(sharp(d1.space(), &f, &all, 1.0).unwrap(), 0.5);
        assert_eq!(bmo_norm(&d1, &f), 0.5);
        let c = VecFunction::scalar(vec![4.0, 4.0]);
        assert_eq!(bmo_norm(&d1, &c), 0.0);
        assert_eq!(
            mean_oscillation(&d1, &f, &d1.ball_set(1), 1.0, OscMode::SupSharp).unwrap(),
            OscValue::Scalar(0.5)
        );
    }
}
