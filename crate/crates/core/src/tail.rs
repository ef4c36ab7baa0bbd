//! Exponential fits of distribution tails.

use serde::Serialize;

/// Least-squares fit of `ln(fraction) ≈ a − c·t` over the bins with
/// `t ≥ 1` and a nonzero fraction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub rate: Option<f64>,
    pub intercept: Option<f64>,
    pub bins: usize,
    /// At most two distinct nonzero levels: reported as a step profile, not fitted.
    pub degenerate: bool,
}

impl TailFit {
    pub fn passes(&self) -> bool {
        self.degenerate || self.rate.is_some_and(|c| c > 0.0)
    }
}

pub fn fit_exponential(points: &[(f64, f64)]) -> TailFit {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, v)| *t >= 1.0 && *v > 0.0)
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    let bins = used.len();
    let mut levels: Vec<f64> = used.iter().map(|p| p.1).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() <= 2 {
        return TailFit {
            rate: None,
            intercept: None,
            bins,
            degenerate: true,
        };
    }
    let k = bins as f64;
    let mt = used.iter().map(|p| p.0).sum::<f64>() / k;
    let my = used.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = used.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    TailFit {
        rate: Some(-slope),
        intercept: Some(my - slope * mt),
        bins,
        degenerate: false,
    }
}

/// `(t, μ{v > t}/total)` at `t = 0, 1, …` up to the first empty bin.
pub fn integer_tail(values: &[f64], weights: &[f64], total: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        let mass: f64 = values
            .iter()
            .zip(weights)
            .filter(|(v, _)| **v > t)
            .map(|(_, w)| *w)
            .sum();
        out.push((t, mass / total));
        if mass == 0.0 {
            break;
        }
        t += 1.0;
    }
    out
}
