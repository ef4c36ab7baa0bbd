//! Oscillation bounds and mean-oscillation sparse domination for
//! restricted families.

use serde::Serialize;

use super::bound::{measured_constant, verify_sparse_bound, BoundKind, SparseBound};
use super::lerner::lerner_decompose;
use crate::error::{Error, Result};
use crate::functional::{alpha_oscillation, sup_sharps, VecFunction};
use crate::operators::{estimate_bo_constants, maximal_modulation, BOConstants, Operator};
use crate::space::BallBasis;

/// Constants of the maximal operator `Tf = sup_α‖T_α f‖` and of each member.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyConstants {
    pub maximal: BOConstants,
    pub members: Vec<BOConstants>,
}

impl FamilyConstants {
    /// `sup_α` of the members' log-improved localization constants.
    pub fn sup_l1(&self) -> f64 {
        self.members.iter().map(|c| c.restricted.r4_constant).fold(0.0, f64::max)
    }
}

pub fn family_constants(family: &[Operator], budget: usize, seed: u64) -> Result<FamilyConstants> {
    let t = maximal_modulation(family)?;
    Ok(FamilyConstants {
        maximal: estimate_bo_constants(&t, budget, seed)?,
        members: family
            .iter()
            .enumerate()
            .map(|(i, op)| estimate_bo_constants(op, budget, crate::seeds::mix(seed, i as u64 + 1)))
            .collect::<Result<Vec<_>>>()?,
    })
}

/// Doubling basis, and every member linear, classical and with a finite
/// log-improved localization constant.
pub fn check_restricted(basis: &BallBasis, family: &[Operator], consts: &FamilyConstants) -> Result<()> {
    if basis.eta().is_none() {
        return Err(Error::NotDoubling);
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if consts.members.len() != family.len() {
        return Err(Error::Invalid("one constant set per member is required".into()));
    }
    for (op, c) in family.iter().zip(&consts.members) {
        let r = &c.restricted;
        if !r.r2_linear {
            return Err(Error::NotRestricted(format!("{} is not linear", op.name)));
        }
        if !r.r3_classical {
            return Err(Error::NotRestricted(format!("{} does not have the classical profile", op.name)));
        }
        if !r.r4_constant.is_finite() {
            return Err(Error::NotRestricted(format!("{} has no finite localization constant", op.name)));
        }
    }
    Ok(())
}

/// `sup_α ‖T_α f‖` at every atom.
fn maximal_values(family: &[Operator], f: &VecFunction) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; f.len()];
    for op in family {
        for (o, v) in out.iter_mut().zip(op.apply(f)?.norms()) {
            *o = (*o).max(v);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct OscReport {
    /// `OSC_{B,β}(Tf)`.
    pub lhs: f64,
    /// `(𝔏₀(T)(1−β)^{−1/r} + sup 𝔏₁(T_α))·⟨f⟩*_{#,B}`.
    pub rhs: f64,
    /// `lhs/rhs`, 0 when both vanish.
    pub ratio: f64,
    pub pass: bool,
}

pub fn restricted_osc_bound(
    family: &[Operator],
    consts: &FamilyConstants,
    f: &VecFunction,
    b: usize,
    beta: f64,
    threshold: f64,
) -> Result<OscReport> {
    let basis = family.first().ok_or(Error::EmptyFamily)?.basis();
    check_restricted(basis, family, consts)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    let r = family[0].params.r;
    let tf = VecFunction::scalar(maximal_values(family, f)?);
    let lhs = alpha_oscillation(basis.space(), &tf, &basis.ball_set(b), beta)?;
    let sharp = sup_sharps(basis, f, r)[b];
    let rhs = (consts.maximal.l0 * (1.0 - beta).powf(-1.0 / r) + consts.sup_l1()) * sharp;
    let ratio = if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    };
    Ok(OscReport {
        lhs,
        rhs,
        ratio,
        pass: ratio <= threshold,
    })
}

/// `|Tf(x) − m_{Tf}(B)| ≤ C Σ ⟨f⟩*_{#,G} 1_{Ḡ}(x)` on `B`, from the
/// oscillation decomposition of `Tf`. A singleton family with scalar output
/// uses `Tf` itself rather than its modulus.
pub fn dominate_mean_osc(
    family: &[Operator],
    consts: &FamilyConstants,
    f: &VecFunction,
    b: usize,
    beta: f64,
) -> Result<SparseBound> {
    let basis = family.first().ok_or(Error::EmptyFamily)?.basis();
    check_restricted(basis, family, consts)?;
    let g = if family.len() == 1 && family[0].output_dim(f.dim()) == 1 {
        family[0].apply(f)?
    } else {
        VecFunction::scalar(maximal_values(family, f)?)
    };
    let mut bound = lerner_decompose(basis, &g, b, beta)?;
    let sharps = sup_sharps(basis, f, family[0].params.r);
    bound.kind = BoundKind::MeanOscillation;
    bound.coefficients = bound.family.iter().map(|&a| sharps[a]).collect();
    let sum = bound.sparse_sum();
    bound.constant = measured_constant(&bound.target, &sum, &basis.ball_set(b)).ok_or_else(|| {
        Error::PostconditionFailure {
            condition: "mean oscillation domination".into(),
            witness: "an atom with positive target has an empty sparse sum".into(),
        }
    })?;
    let report = verify_sparse_bound(basis, &bound, &bound.target, b);
    if report.violations > 0 {
        return Err(Error::PostconditionFailure {
            condition: "mean oscillation domination".into(),
            witness: format!("{} negative margins", report.violations),
        });
    }
    Ok(bound)
}
