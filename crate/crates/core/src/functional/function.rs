use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::AtomSet;

/// Norm used on the values of a vector function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    Euclidean,
    Max,
}

impl NormKind {
    pub fn norm(self, v: &[f64]) -> f64 {
        if v.len() == 1 {
            return v[0].abs();
        }
        match self {
            NormKind::Euclidean => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            NormKind::Max => v.iter().fold(0.0, |m, a| m.max(a.abs())),
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        if a.len() == 1 {
            return (a[0] - b[0]).abs();
        }
        match self {
            NormKind::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            NormKind::Max => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }
}

/// Exponent triple `(r, ρ, ϱ)` of the fractional means
/// `⟨f⟩_B = μ(B)^{-ρ} (∫_B ‖f‖^r)^ϱ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub r: f64,
    pub rho: f64,
    pub varrho: f64,
}

impl Params {
    pub fn new(r: f64, rho: f64, varrho: f64) -> Result<Params> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Invalid(format!("r = {r} must be positive")));
        }
        if !(rho > 0.0 && rho <= varrho && varrho.is_finite()) {
            return Err(Error::Invalid(format!(
                "need 0 < rho <= varrho, got rho = {rho}, varrho = {varrho}"
            )));
        }
        Ok(Params { r, rho, varrho })
    }

    /// `ρ = ϱ = 1/r`.
    pub fn classical(r: f64) -> Params {
        Params {
            r,
            rho: 1.0 / r,
            varrho: 1.0 / r,
        }
    }

    pub fn is_classical(&self) -> bool {
        self.rho == self.varrho && (self.rho * self.r - 1.0).abs() < 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        Params::new(self.r, self.rho, self.varrho).map(|_| ())
    }
}

/// A function on the atoms with values in `R^dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VecFunction {
    dim: usize,
    norm: NormKind,
    values: Vec<f64>,
}

impl VecFunction {
    pub fn new(dim: usize, norm: NormKind, values: Vec<f64>) -> Result<VecFunction> {
        if dim == 0 || values.len() % dim != 0 || values.is_empty() {
            return Err(Error::Invalid(format!(
                "{} values do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("function values must be finite".into()));
        }
        Ok(VecFunction { dim, norm, values })
    }

    pub fn scalar(values: Vec<f64>) -> VecFunction {
        VecFunction::new(1, NormKind::Euclidean, values).expect("finite scalar values")
    }

    pub fn zeros(n: usize, dim: usize, norm: NormKind) -> VecFunction {
        VecFunction {
            dim,
            norm,
            values: vec![0.0; n * dim],
        }
    }

    pub fn indicator(n: usize, set: &AtomSet) -> VecFunction {
        VecFunction::scalar((0..n).map(|x| if set.contains(x) { 1.0 } else { 0.0 }).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, x: usize) -> &[f64] {
        &self.values[x * self.dim..(x + 1) * self.dim]
    }

    pub fn value_mut(&mut self, x: usize) -> &mut [f64] {
        &mut self.values[x * self.dim..(x + 1) * self.dim]
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    /// Scalar values, when `dim = 1`.
    pub fn as_scalar(&self) -> Option<&[f64]> {
        (self.dim == 1).then_some(&self.values[..])
    }

    pub fn norm_at(&self, x: usize) -> f64 {
        self.norm.norm(self.value(x))
    }

    pub fn norms(&self) -> Vec<f64> {
        (0..self.len()).map(|x| self.norm_at(x)).collect()
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.norm.dist(self.value(x), self.value(y))
    }

    /// `‖f(x) − g(x)‖`.
    pub fn dist_to(&self, other: &VecFunction, x: usize) -> f64 {
        self.norm.dist(self.value(x), other.value(x))
    }

    pub fn scaled(&self, c: f64) -> VecFunction {
        self.map(|v| c * v)
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> VecFunction {
        VecFunction {
            dim: self.dim,
            norm: self.norm,
            values: self.values.iter().map(|&v| g(v)).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &VecFunction, b: f64) -> VecFunction {
        assert_eq!(self.values.len(), other.values.len());
        VecFunction {
            dim: self.dim,
            norm: self.norm,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// `f·1_S`.
    pub fn restricted(&self, set: &AtomSet) -> VecFunction {
        let mut out = self.clone();
        for x in 0..self.len() {
            if !set.contains(x) {
                out.value_mut(x).iter_mut().for_each(|v| *v = 0.0);
            }
        }
        out
    }

    /// `f·1_{X∖S}`.
    pub fn restricted_off(&self, set: &AtomSet) -> VecFunction {
        let mut out = self.clone();
        for x in set.ones() {
            out.value_mut(x).iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    pub fn support(&self) -> AtomSet {
        let mut s = AtomSet::with_capacity(self.len());
        for x in 0..self.len() {
            if self.value(x).iter().any(|&v| v != 0.0) {
                s.insert(x);
            }
        }
        s
    }

    pub fn to_doc(&self) -> FunctionDoc {
        FunctionDoc {
            dim: self.dim,
            norm: self.norm,
            values: self.values.chunks(self.dim).map(|c| c.to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("functions serialize")
    }

    pub fn from_json(text: &str) -> Result<VecFunction> {
        let doc: FunctionDoc = serde_json::from_str(text)?;
        doc.into_function()
    }
}

/// JSON form `{dim, norm, values: [[..]]}` aligned to atom order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub dim: usize,
    pub norm: NormKind,
    pub values: Vec<Vec<f64>>,
}

impl FunctionDoc {
    pub fn into_function(self) -> Result<VecFunction> {
        if let Some(row) = self.values.iter().position(|r| r.len() != self.dim) {
            return Err(Error::Invalid(format!("row {row} does not have dimension {}", self.dim)));
        }
        VecFunction::new(self.dim, self.norm, self.values.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        let f = VecFunction::new(2, NormKind::Euclidean, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.dist(0, 1), 5.0);
        let g = VecFunction::new(2, NormKind::Max, vec![0.0, 0.0, 3.0, -4.0]).unwrap();
        assert_eq!(g.norm_at(1), 4.0);
    }

    #[test]
    fn json_round_trip() {
        let f = VecFunction::new(2, NormKind::Max, vec![0.1, 0.2, 1e-300, -7.25]).unwrap();
        let back = VecFunction::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(0.0, 1.0, 1.0).is_err());
        assert!(Params::new(1.0, 1.0, 0.5).is_err());
        assert!(Params::classical(2.0).is_classical());
        assert!(!Params::new(1.0, 0.5, 1.0).unwrap().is_classical());
    }
}
