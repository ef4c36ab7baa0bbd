//! Lower-bound estimates of the bounded-oscillation constants and the
//! connectivity functional `Δ(A, B)`.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::descriptor::Operator;
use crate::error::{Error, Result};
use crate::functional::{ball_extrema, fractional_mean, oscillation, sup_averages, VecFunction};
use crate::seeds::rng_for;
use crate::space::{exhausting_sequence, BallBasis, BasisKind};

/// Random sign probes per ball.
pub const SIGN_TRIALS: u64 = 2;

const TAG_BALLS: u64 = 0xBA11;
const TAG_L0: u64 = 1;
const TAG_L1: u64 = 2;
const TAG_L2: u64 = 3;
const TAG_DELTA: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Linear operator with `r = ϱ = 1`: the delta scans are exact for `Δ`.
    ExactLinearR1,
    MonteCarlo,
}

/// Test functions, all with `|f| ∈ {0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    Delta(usize),
    Indicator,
    /// `+1` on the first half of the support (in atom order), `−1` after.
    HaarHalves,
    Signs(u64),
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probe::Delta(y) => write!(f, "delta:{y}"),
            Probe::Indicator => write!(f, "indicator"),
            Probe::HaarHalves => write!(f, "haar_halves"),
            Probe::Signs(t) => write!(f, "signs:{t}"),
        }
    }
}

impl Probe {
    /// The probe on `support` (sorted atoms). Sign patterns depend only on
    /// `key`, never on the operator.
    pub fn build(&self, n: usize, support: &[usize], seed: u64, key: &[u64]) -> VecFunction {
        let mut v = vec![0.0; n];
        match *self {
            Probe::Delta(y) => v[y] = 1.0,
            Probe::Indicator => support.iter().for_each(|&x| v[x] = 1.0),
            Probe::HaarHalves => {
                let half = support.len().div_ceil(2);
                for (i, &x) in support.iter().enumerate() {
                    v[x] = if i < half { 1.0 } else { -1.0 };
                }
            }
            Probe::Signs(t) => {
                let mut path = key.to_vec();
                path.push(t);
                let mut rng = rng_for(seed, &path);
                for &x in support {
                    v[x] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                }
            }
        }
        VecFunction::scalar(v)
    }
}

fn function_probes() -> Vec<Probe> {
    let mut p = vec![Probe::Indicator, Probe::HaarHalves];
    p.extend((0..SIGN_TRIALS).map(Probe::Signs));
    p
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub ball: usize,
    /// The second ball of a connectivity witness.
    pub partner: Option<usize>,
    pub probe: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Restrictions {
    pub r1_doubling: bool,
    pub r2_linear: bool,
    pub r3_classical: bool,
    /// Measured constant of the log-improved localization.
    pub r4_constant: f64,
    /// `max_B OSC_B(T 1_{B″})` for the last ball `B″` of the exhausting sequence.
    pub r5_residual: f64,
}

/// Certified lower bounds for `L0, L1, L2`, each with a reproducing witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BOConstants {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub restricted: Restrictions,
    pub method: Method,
    pub balls_sampled: usize,
    pub l0_witness: Option<Witness>,
    pub l1_witness: Option<Witness>,
    pub l2_witness: Option<Witness>,
    pub r4_witness: Option<Witness>,
    pub r5_witness: Option<Witness>,
}

#[derive(Clone, Debug, Default)]
struct Best {
    value: f64,
    witness: Option<Witness>,
}

impl Best {
    fn offer(&mut self, value: f64, w: impl FnOnce() -> Witness) {
        if value > self.value {
            self.value = value;
            self.witness = Some(w());
        }
    }

    fn merge(&mut self, other: Best) {
        if other.value > self.value {
            *self = other;
        }
    }
}

fn pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

fn is_exact(op: &Operator) -> bool {
    op.linear && op.params.r == 1.0 && op.params.varrho == 1.0
}

/// Balls used for function probes: all of them within budget, otherwise a
/// seeded sample in increasing id order.
pub fn sample_balls(n_balls: usize, budget: usize, seed: u64) -> Vec<usize> {
    if n_balls <= budget {
        return (0..n_balls).collect();
    }
    let mut rng = rng_for(seed, &[TAG_BALLS]);
    let mut v = rand::seq::index::sample(&mut rng, n_balls, budget).into_vec();
    v.sort_unstable();
    v
}

/// `λ (μ{x∈B: v(x) > λ}/μ(B))^ρ` maximized over `λ`. The supremum is
/// approached from below each value `v_i`.
fn weak_stat(mut vals: Vec<(f64, f64)>, mu: f64, rho: f64) -> f64 {
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cum = 0.0;
    let mut best: f64 = 0.0;
    for i in 0..vals.len() {
        cum += vals[i].1;
        let last = i + 1 == vals.len() || vals[i + 1].0 < vals[i].0;
        if last && vals[i].0 > 0.0 {
            best = best.max(vals[i].0 * pow(cum / mu, rho));
        }
    }
    best
}

/// Per-ball `OSC_B` and `SUP_B` of a response.
fn ball_osc_sup(basis: &BallBasis, g: &VecFunction) -> (Vec<f64>, Vec<f64>) {
    let (_, sup) = ball_extrema(basis, &g.norms());
    let osc = match g.as_scalar() {
        Some(v) => {
            let (lo, hi) = ball_extrema(basis, v);
            lo.iter().zip(&hi).map(|(l, h)| h - l).collect()
        }
        None => basis
            .balls()
            .iter()
            .map(|b| oscillation(g, &b.members.iter().collect::<Vec<_>>()))
            .collect(),
    };
    (osc, sup)
}

/// `d(y, B)` for every ball at a fixed atom.
fn distances_to(basis: &BallBasis, y: usize) -> Vec<f64> {
    match basis.kind() {
        BasisKind::Grid { .. } => basis
            .balls()
            .iter()
            .map(|b| {
                let (lo, hi) = b.members.as_span().expect("grid balls are spans");
                (hi.max(y) - lo.min(y) + 1) as f64
            })
            .collect(),
        BasisKind::Dyadic { .. } => {
            let filt = basis.filtration().expect("dyadic bases carry a filtration");
            (0..basis.n_balls())
                .map(|b| {
                    let mut a = b;
                    while !basis.ball(a).contains(y) {
                        a = filt.parent[a].expect("the root contains every atom");
                    }
                    basis.measure(a)
                })
                .collect()
        }
        BasisKind::Custom => (0..basis.n_balls())
            .map(|b| basis.volume_distance(y, b).unwrap_or(f64::INFINITY))
            .collect(),
    }
}

/// Inclusion-minimal strict supersets of every ball.
fn minimal_supersets(basis: &BallBasis) -> Vec<Vec<usize>> {
    match basis.kind() {
        BasisKind::Grid { n } => basis
            .balls()
            .iter()
            .map(|b| {
                let (lo, hi) = b.members.as_span().expect("grid balls are spans");
                let mut v = Vec::new();
                if lo > 0 {
                    v.push(basis.grid_ball(lo - 1, hi).unwrap());
                }
                if hi + 1 < n {
                    v.push(basis.grid_ball(lo, hi + 1).unwrap());
                }
                v
            })
            .collect(),
        BasisKind::Dyadic { .. } => {
            let filt = basis.filtration().expect("dyadic bases carry a filtration");
            (0..basis.n_balls()).map(|b| filt.parent[b].into_iter().collect()).collect()
        }
        BasisKind::Custom => (0..basis.n_balls())
            .map(|b| {
                let sup = basis.supersets(b, true);
                sup.iter()
                    .copied()
                    .filter(|&c| {
                        let cm = &basis.ball(c).members;
                        !sup.iter().any(|&e| {
                            let em = &basis.ball(e).members;
                            e != c && em.len() < cm.len() && em.is_subset(cm)
                        })
                    })
                    .collect()
            })
            .collect(),
    }
}

fn star_measures(basis: &BallBasis) -> Vec<f64> {
    (0..basis.n_balls())
        .map(|b| basis.space().region_measure(basis.star(b)))
        .collect()
}

fn l0_estimate(op: &Operator, balls: &[usize], seed: u64) -> Result<Best> {
    let basis = &**op.basis();
    let n = basis.n_atoms();
    let w = basis.space().weights();
    let p = op.params;
    let per_ball: Vec<Result<Best>> = balls
        .par_iter()
        .map(|&b| {
            let ball = basis.ball(b);
            let support: Vec<usize> = ball.members.iter().collect();
            let mut probes = Vec::new();
            for y in [support[0], support[support.len() / 2], support[support.len() - 1]] {
                if !probes.contains(&Probe::Delta(y)) {
                    probes.push(Probe::Delta(y));
                }
            }
            probes.extend(function_probes());
            let mut best = Best::default();
            for probe in probes {
                let (tf, mass) = match probe {
                    Probe::Delta(y) => (op.delta_response(y)?, w[y]),
                    _ => {
                        let f = probe.build(n, &support, seed, &[TAG_L0, b as u64]);
                        (op.apply(&f)?, ball.measure)
                    }
                };
                let denom = fractional_mean(ball.measure, mass, &p);
                if !(denom > 0.0) {
                    continue;
                }
                let vals = support.iter().map(|&x| (tf.norm_at(x) / denom, w[x])).collect();
                let stat = weak_stat(vals, ball.measure, p.rho);
                best.offer(stat, || Witness {
                    ball: b,
                    partner: None,
                    probe: probe.to_string(),
                    value: stat,
                });
            }
            Ok(best)
        })
        .collect();
    let mut best = Best::default();
    for r in per_ball {
        best.merge(r?);
    }
    Ok(best)
}

/// Delta scan of the localization ratio and its log-improved variant.
fn l1_delta_scan(op: &Operator) -> Result<(Best, Best)> {
    let basis = &**op.basis();
    let n = basis.n_atoms();
    let p = op.params;
    let rc = p.r;
    let per_y: Vec<Result<(Best, Best)>> = (0..n)
        .into_par_iter()
        .map(|y| {
            let wy = basis.space().weight(y);
            let mut plain = Best::default();
            let mut log = Best::default();
            if !(wy > 0.0) {
                return Ok((plain, log));
            }
            let r = op.delta_response(y)?;
            let (osc, _) = ball_osc_sup(basis, &r);
            let dist = distances_to(basis, y);
            for b in 0..basis.n_balls() {
                if basis.star(b).contains(y) || !dist[b].is_finite() || osc[b] == 0.0 {
                    continue;
                }
                let d = dist[b];
                let probe = Probe::Delta(y);
                let ratio = osc[b] / (pow(wy, p.varrho) * pow(d, -p.rho));
                plain.offer(ratio, || Witness {
                    ball: b,
                    partner: None,
                    probe: probe.to_string(),
                    value: ratio,
                });
                let mu = basis.measure(b);
                let classical = pow(wy / d, 1.0 / rc) / (1.0 + d / mu).ln();
                let ratio_log = osc[b] / classical;
                log.offer(ratio_log, || Witness {
                    ball: b,
                    partner: None,
                    probe: probe.to_string(),
                    value: ratio_log,
                });
            }
            Ok((plain, log))
        })
        .collect();
    let (mut plain, mut log) = (Best::default(), Best::default());
    for r in per_y {
        let (a, b) = r?;
        plain.merge(a);
        log.merge(b);
    }
    Ok((plain, log))
}

fn l1_probes(op: &Operator, balls: &[usize], seed: u64) -> Result<Best> {
    let basis = &**op.basis();
    let n = basis.n_atoms();
    let p = op.params;
    let per_ball: Vec<Result<Best>> = balls
        .par_iter()
        .map(|&b| {
            let star = basis.star(b);
            let support: Vec<usize> = (0..n).filter(|&x| !star.contains(x)).collect();
            let mut best = Best::default();
            if support.is_empty() {
                return Ok(best);
            }
            let atoms: Vec<usize> = basis.ball(b).members.iter().collect();
            for probe in function_probes() {
                let f = probe.build(n, &support, seed, &[TAG_L1, b as u64]);
                let denom = sup_averages(basis, &f, &p)[b];
                if !(denom > 0.0) {
                    continue;
                }
                let tf = op.apply(&f)?;
                let ratio = oscillation(&tf, &atoms) / denom;
                best.offer(ratio, || Witness {
                    ball: b,
                    partner: None,
                    probe: probe.to_string(),
                    value: ratio,
                });
            }
            Ok(best)
        })
        .collect();
    let mut best = Best::default();
    for r in per_ball {
        best.merge(r?);
    }
    Ok(best)
}

/// Connectivity candidates `Δ(A, B)` for every ball `A` and each minimal
/// strict superset `B`.
struct Connectivity {
    supersets: Vec<Vec<usize>>,
    values: Vec<Vec<Best>>,
}

fn l2_delta_table(op: &Operator) -> Result<Connectivity> {
    let basis = &**op.basis();
    let n = basis.n_atoms();
    let p = op.params;
    let supersets = minimal_supersets(basis);
    let smeas = star_measures(basis);
    let chunks = 16usize.min(n);
    let size = n.div_ceil(chunks);
    let empty: Vec<Vec<Best>> = supersets.iter().map(|s| vec![Best::default(); s.len()]).collect();
    let tables: Vec<Result<Vec<Vec<Best>>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut table = empty.clone();
            for y in c * size..((c + 1) * size).min(n) {
                let wy = basis.space().weight(y);
                if !(wy > 0.0) {
                    continue;
                }
                let r = op.delta_response(y)?;
                let (_, sup) = ball_osc_sup(basis, &r);
                for (a, cands) in supersets.iter().enumerate() {
                    if sup[a] == 0.0 || basis.star(a).contains(y) {
                        continue;
                    }
                    for (j, &b) in cands.iter().enumerate() {
                        if !basis.star(b).contains(y) {
                            continue;
                        }
                        let v = sup[a] * pow(smeas[b], p.rho) / pow(wy, p.varrho);
                        table[a][j].offer(v, || Witness {
                            ball: a,
                            partner: Some(b),
                            probe: Probe::Delta(y).to_string(),
                            value: v,
                        });
                    }
                }
            }
            Ok(table)
        })
        .collect();
    let mut values = empty;
    for t in tables {
        for (row, other) in values.iter_mut().zip(t?) {
            for (cell, o) in row.iter_mut().zip(other) {
                cell.merge(o);
            }
        }
    }
    Ok(Connectivity { supersets, values })
}

/// Probe lower bound of `Δ(A, B)` with support `B*∖A*`.
fn delta_probes(op: &Operator, a: usize, b: usize, seed: u64) -> Result<Best> {
    let basis = &**op.basis();
    let n = basis.n_atoms();
    let p = op.params;
    let (sa, sb) = (basis.star(a), basis.star(b));
    let support: Vec<usize> = sb.iter().filter(|&x| !sa.contains(x)).collect();
    let mut best = Best::default();
    if support.is_empty() {
        return Ok(best);
    }
    let mass: f64 = support.iter().map(|&x| basis.space().weight(x)).sum();
    let denom = pow(basis.space().region_measure(sb), -p.rho) * pow(mass, p.varrho);
    if !(denom > 0.0) {
        return Ok(best);
    }
    for probe in function_probes() {
        let f = probe.build(n, &support, seed, &[TAG_L2, a as u64, b as u64]);
        let tf = op.apply(&f)?;
        let v = basis.ball(a).members.iter().map(|x| tf.norm_at(x)).fold(0.0, f64::max) / denom;
        best.offer(v, || Witness {
            ball: a,
            partner: Some(b),
            probe: probe.to_string(),
            value: v,
        });
    }
    Ok(best)
}

fn r5_residual(op: &Operator) -> Result<Best> {
    let basis = &**op.basis();
    let last = *exhausting_sequence(basis).last().expect("chains are non-empty");
    let g = VecFunction::indicator(basis.n_atoms(), &basis.ball_set(last));
    let tg = op.apply(&g)?;
    let (osc, _) = ball_osc_sup(basis, &tg);
    let mut best = Best::default();
    for (b, &o) in osc.iter().enumerate() {
        best.offer(o, || Witness {
            ball: b,
            partner: Some(last),
            probe: Probe::Indicator.to_string(),
            value: o,
        });
    }
    Ok(best)
}

/// Lower bounds for the constants of `op`. Function probes run on
/// `budget` sampled balls; the delta scans cover every ball.
pub fn estimate_bo_constants(op: &Operator, budget: usize, seed: u64) -> Result<BOConstants> {
    if budget == 0 {
        return Err(Error::Invalid("budget must be at least 1".into()));
    }
    let basis = &**op.basis();
    let balls = sample_balls(basis.n_balls(), budget, seed);
    let exact = is_exact(op);

    let l0 = l0_estimate(op, &balls, seed)?;
    let (mut l1, r4) = l1_delta_scan(op)?;
    l1.merge(l1_probes(op, &balls, seed)?);

    let n = basis.n_atoms();
    let mut conn = l2_delta_table(op)?;
    if !exact {
        let updates: Vec<Result<(usize, usize, Best)>> = balls
            .par_iter()
            .flat_map_iter(|&a| {
                conn.supersets[a]
                    .iter()
                    .enumerate()
                    .map(move |(j, &b)| delta_probes(op, a, b, seed).map(|v| (a, j, v)))
                    .collect::<Vec<_>>()
            })
            .collect();
        for u in updates {
            let (a, j, v) = u?;
            conn.values[a][j].merge(v);
        }
    }
    let mut l2 = Best::default();
    for (a, cands) in conn.values.iter().enumerate() {
        if cands.is_empty() || basis.star(a).len() == n {
            continue;
        }
        let (j, m) = cands
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, c)| if c.value < acc.1 { (j, c.value) } else { acc });
        let b = conn.supersets[a][j];
        l2.offer(m, || {
            cands[j].witness.clone().unwrap_or(Witness {
                ball: a,
                partner: Some(b),
                probe: "none".into(),
                value: 0.0,
            })
        });
    }

    let r5 = r5_residual(op)?;
    Ok(BOConstants {
        l0: l0.value,
        l1: l1.value,
        l2: l2.value,
        restricted: Restrictions {
            r1_doubling: basis.eta().is_some(),
            r2_linear: op.linear,
            r3_classical: op.params.is_classical(),
            r4_constant: r4.value,
            r5_residual: r5.value,
        },
        method: if exact { Method::ExactLinearR1 } else { Method::MonteCarlo },
        balls_sampled: balls.len(),
        l0_witness: l0.witness,
        l1_witness: l1.witness,
        l2_witness: l2.witness,
        r4_witness: r4.witness,
        r5_witness: r5.witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub value: f64,
    /// Whether `value` is the supremum rather than a lower bound.
    pub exact: bool,
    pub witness: Option<Witness>,
}

/// `Δ_T(A, B) = sup_{x∈A, f≠0} ‖T(f·1_{B*∖A*})(x)‖ / ⟨f⟩_{B*}`.
pub fn delta(op: &Operator, a: usize, b: usize, seed: u64) -> Result<DeltaEstimate> {
    let basis = &**op.basis();
    let (ba, bb) = (basis.try_ball(a)?, basis.try_ball(b)?);
    if !ba.members.is_subset(&bb.members) {
        return Err(Error::NotComparable { a, b });
    }
    let exact = is_exact(op);
    let (sa, sb) = (basis.star(a), basis.star(b));
    let support: Vec<usize> = sb.iter().filter(|&x| !sa.contains(x)).collect();
    let mut best = Best::default();
    if support.is_empty() {
        return Ok(DeltaEstimate {
            value: 0.0,
            exact: true,
            witness: None,
        });
    }
    let rho_scale = pow(basis.space().region_measure(sb), op.params.rho);
    for &y in &support {
        let wy = basis.space().weight(y);
        if !(wy > 0.0) {
            continue;
        }
        let r = op.delta_response(y)?;
        let m = ba.members.iter().map(|x| r.norm_at(x)).fold(0.0, f64::max);
        let v = m * rho_scale / pow(wy, op.params.varrho);
        best.offer(v, || Witness {
            ball: a,
            partner: Some(b),
            probe: Probe::Delta(y).to_string(),
            value: v,
        });
    }
    if !exact {
        best.merge(delta_probes(op, a, b, mix_seed(seed))?);
    }
    Ok(DeltaEstimate {
        value: best.value,
        exact,
        witness: best.witness,
    })
}

fn mix_seed(seed: u64) -> u64 {
    crate::seeds::mix(seed, TAG_DELTA)
}
