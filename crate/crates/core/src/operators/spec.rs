//! Operator specifications as they appear in configuration files.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::descriptor::*;
use crate::error::{Error, Result};
use crate::space::BallBasis;

/// Unit-like variants are written `{}` so unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SignSpec {
    Plus {},
    Minus {},
    Random { seed: u64 },
    /// Explicit `[ball, sign]` pairs.
    Explicit { signs: Vec<(usize, f64)> },
}

impl SignSpec {
    pub fn resolve(&self, basis: &BallBasis) -> Result<BTreeMap<usize, f64>> {
        match self {
            SignSpec::Plus {} => constant_signs(basis, 1.0),
            SignSpec::Minus {} => constant_signs(basis, -1.0),
            SignSpec::Random { seed } => random_signs(basis, *seed),
            SignSpec::Explicit { signs } => Ok(signs.iter().copied().collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum OperatorSpec {
    Zero {},
    Identity {},
    MartingaleTransform { signs: SignSpec },
    SquareFunction {},
    ConditionalExpectation { level: usize },
    /// Maximal modulation of `{E_k}`: the martingale maximal function.
    MartingaleMaximal {},
    /// Maximal modulation of martingale transforms with seeded random signs.
    RandomSignFamily { count: usize, seed: u64 },
    SparseOperator { balls: Vec<usize>, rho: f64 },
    RieszPotential { alpha: f64 },
    DiscreteHilbert {},
    Truncate { inner: Box<OperatorSpec> },
    MaximalModulation { family: Vec<OperatorSpec> },
}

impl OperatorSpec {
    pub fn build(&self, basis: &Arc<BallBasis>) -> Result<Operator> {
        Ok(match self {
            OperatorSpec::Zero {} => zero(basis),
            OperatorSpec::Identity {} => identity(basis),
            OperatorSpec::MartingaleTransform { signs } => {
                martingale_transform(basis, &signs.resolve(basis)?)?
            }
            OperatorSpec::SquareFunction {} => square_function(basis)?,
            OperatorSpec::ConditionalExpectation { level } => conditional_expectation(basis, *level)?,
            OperatorSpec::MartingaleMaximal {} => {
                maximal_modulation(&conditional_expectations(basis)?)?.with_name("martingale_maximal")
            }
            OperatorSpec::RandomSignFamily { count, seed } => {
                if *count == 0 {
                    return Err(Error::EmptyFamily);
                }
                let family = (0..*count as u64)
                    .map(|i| martingale_transform(basis, &random_signs(basis, crate::seeds::mix(*seed, i))?))
                    .collect::<Result<Vec<_>>>()?;
                maximal_modulation(&family)?.with_name("random_sign_family")
            }
            OperatorSpec::SparseOperator { balls, rho } => sparse_operator(basis, balls, *rho)?,
            OperatorSpec::RieszPotential { alpha } => riesz_potential(basis, *alpha)?,
            OperatorSpec::DiscreteHilbert {} => discrete_hilbert(basis)?,
            OperatorSpec::Truncate { inner } => truncate(&inner.build(basis)?),
            OperatorSpec::MaximalModulation { family } => maximal_modulation(
                &family.iter().map(|s| s.build(basis)).collect::<Result<Vec<_>>>()?,
            )?,
        })
    }
}
