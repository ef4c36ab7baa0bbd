use super::region::{AtomSet, Region};
use crate::error::{Error, Result};

/// A finite atomic measure space with atoms `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpace {
    weights: Vec<f64>,
    total: f64,
}

impl MeasureSpace {
    /// Weights must be finite and nonnegative. Positivity (axiom B1) is
    /// audited by `check_axioms` so that broken inputs can still be loaded
    /// and diagnosed.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("measure space needs at least one atom".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Invalid(format!("atom {i} has weight {}", weights[i])));
        }
        let total = weights.iter().sum();
        Ok(MeasureSpace { weights, total })
    }

    pub fn uniform(n: usize, w: f64) -> Result<Self> {
        MeasureSpace::new(vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Measure of a set; atoms are summed in increasing order.
    pub fn measure(&self, set: &AtomSet) -> f64 {
        set.ones().map(|x| self.weights[x]).sum::<f64>() + 0.0
    }

    pub fn region_measure(&self, r: &Region) -> f64 {
        r.iter().map(|x| self.weights[x]).sum::<f64>() + 0.0
    }

    pub fn empty_set(&self) -> AtomSet {
        AtomSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> AtomSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}
