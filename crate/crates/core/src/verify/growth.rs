//! Growth of the connectivity functional along nested balls.

use rand::Rng;

use super::report::Report;
use crate::error::Result;
use crate::operators::{delta, BOConstants, Operator};
use crate::seeds::rng_for;

/// For random `A ⊆ B ⊆ C`, the quotient
/// `Δ(A,C) / ((μ(C)/μ(B))^ρ (L0 + L1 + Δ(A,B)))`; balls are 1-balls.
pub fn delta_growth_report(op: &Operator, consts: &BOConstants, triples: usize, seed: u64) -> Result<Report> {
    let basis = op.basis();
    let mut rng = rng_for(seed, &[0x6c17]);
    let mut rep = Report::new(format!("delta_growth:{}", op.name));
    let mut worst: f64 = 0.0;
    for i in 0..triples {
        let a = rng.gen_range(0..basis.n_balls());
        let ups = basis.supersets(a, false);
        let b = ups[rng.gen_range(0..ups.len())];
        let ups = basis.supersets(b, false);
        let c = ups[rng.gen_range(0..ups.len())];
        let dab = delta(op, a, b, seed)?.value;
        let dac = delta(op, a, c, seed)?.value;
        let scale = (basis.measure(c) / basis.measure(b)).powf(op.params.rho) * (consts.l0 + consts.l1 + dab);
        let q = if dac == 0.0 { 0.0 } else { dac / scale };
        worst = worst.max(q);
        rep.row(&format!("triple-{i:03}:{a}:{b}:{c}"), "growth_quotient", q, q.is_finite());
    }
    rep.stat("triples", triples);
    rep.stat_num("max_quotient", worst);
    rep.pass = rep.rows_pass();
    Ok(rep)
}
