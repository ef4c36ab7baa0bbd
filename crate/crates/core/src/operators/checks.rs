//! Spot checks of the structural claims carried by a descriptor.

use rand::Rng;

use super::descriptor::Operator;
use crate::error::Result;
use crate::functional::VecFunction;
use crate::seeds::rng_for;

fn random_function(n: usize, seed: u64, key: &[u64]) -> VecFunction {
    let mut rng = rng_for(seed, key);
    VecFunction::scalar((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Largest relative defect of `T(2f − 3g) = 2Tf − 3Tg` over random pairs.
pub fn linearity_defect(op: &Operator, trials: usize, seed: u64) -> Result<f64> {
    let n = op.n_atoms();
    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let f = random_function(n, seed, &[1, t]);
        let g = random_function(n, seed, &[2, t]);
        let lhs = op.apply(&f.combine(2.0, &g, -3.0))?;
        let rhs = op.apply(&f)?.combine(2.0, &op.apply(&g)?, -3.0);
        let scale = rhs.norms().into_iter().fold(1e-300, f64::max);
        for x in 0..n {
            worst = worst.max(lhs.dist_to(&rhs, x) / scale);
        }
    }
    Ok(worst)
}

/// Largest excess of `‖T(f+g)(x)‖` over `‖Tf(x)‖ + ‖Tg(x)‖`, relative to
/// the right-hand side.
pub fn sublinearity_excess(op: &Operator, trials: usize, seed: u64) -> Result<f64> {
    let n = op.n_atoms();
    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let f = random_function(n, seed, &[3, t]);
        let g = random_function(n, seed, &[4, t]);
        let s = op.apply(&f.combine(1.0, &g, 1.0))?;
        let (tf, tg) = (op.apply(&f)?, op.apply(&g)?);
        for x in 0..n {
            let rhs = tf.norm_at(x) + tg.norm_at(x);
            worst = worst.max((s.norm_at(x) - rhs) / rhs.max(1e-300));
        }
    }
    Ok(worst)
}

/// Largest relative gap between kernel and direct evaluation on random
/// inputs; `None` without a kernel.
pub fn kernel_consistency(op: &Operator, trials: usize, seed: u64) -> Result<Option<f64>> {
    if op.kernel().is_none() {
        return Ok(None);
    }
    let n = op.n_atoms();
    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let f = random_function(n, seed, &[5, t]);
        let direct = op.apply(&f)?;
        let via = op.apply_kernel(&f).expect("kernel present")?;
        let scale = direct.norms().into_iter().fold(1e-300, f64::max);
        for x in 0..n {
            worst = worst.max(direct.dist_to(&via, x) / scale);
        }
    }
    Ok(Some(worst))
}
