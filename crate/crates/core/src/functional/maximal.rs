//! The maximal-function family over a ball-basis.

use serde::{Deserialize, Serialize};

use super::averages::{ball_averages, ball_sharps, per_atom_max};
use super::function::{Params, VecFunction};
use crate::error::{Error, Result};
use crate::space::BallBasis;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MaximalMode {
    /// `sup_{B∋x} ⟨f⟩_B` with the given exponent triple.
    FractionalBasis,
    /// `sup_{B∋x} ⟨f⟩_{#,B}` with exponent `r`.
    Sharp,
    /// `sup_{B∋x} μ(B)^{α-1} ∫_B ‖f‖` on a one-dimensional basis.
    Alpha { alpha: f64 },
}

/// Per-atom maximum of the mode's average over all balls containing the atom.
pub fn maximal(basis: &BallBasis, f: &VecFunction, p: &Params, mode: MaximalMode) -> Result<Vec<f64>> {
    let per_ball = match mode {
        MaximalMode::FractionalBasis => ball_averages(basis, f, p),
        MaximalMode::Sharp => ball_sharps(basis, f, p.r),
        MaximalMode::Alpha { alpha } => {
            if !(0.0..1.0).contains(&alpha) {
                return Err(Error::Invalid(format!("alpha = {alpha} must lie in [0, 1)")));
            }
            let q = Params {
                r: 1.0,
                rho: 1.0 - alpha,
                varrho: 1.0,
            };
            ball_averages(basis, f, &q)
        }
    };
    Ok(per_atom_max(basis, &per_ball))
}

/// Convenience for the classical-profile maximal function.
pub fn maximal_classical(basis: &BallBasis, f: &VecFunction, r: f64) -> Vec<f64> {
    per_atom_max(basis, &ball_averages(basis, f, &Params::classical(r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_indicator() {
        let d3 = BallBasis::dyadic(3).unwrap();
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let f = VecFunction::scalar(v);
        let m = maximal(&d3, &f, &Params::classical(1.0), MaximalMode::FractionalBasis).unwrap();
        assert_eq!(m, vec![1.0, 0.5, 0.25, 0.25, 0.125, 0.125, 0.125, 0.125]);
    }

    #[test]
    fn constants() {
        let g = BallBasis::grid(16).unwrap();
        let f = VecFunction::scalar(vec![1.5; 16]);
        let m = maximal(&g, &f, &Params::classical(1.0), MaximalMode::FractionalBasis).unwrap();
        assert!(m.iter().all(|&v| (v - 1.5).abs() < 1e-12));
        let s = maximal(&g, &f, &Params::classical(1.0), MaximalMode::Sharp).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dominates_every_ball_average() {
        let g = BallBasis::grid(12).unwrap();
        let f = VecFunction::scalar((0..12).map(|i| ((i * 37) % 11) as f64 - 4.0).collect());
        let p = Params::new(1.0, 0.5, 1.0).unwrap();
        let m = maximal(&g, &f, &p, MaximalMode::FractionalBasis).unwrap();
        let avgs = ball_averages(&g, &f, &p);
        for b in g.balls() {
            for x in b.members.iter() {
                assert!(m[x] >= avgs[b.id]);
            }
        }
        let a = maximal(&g, &f, &p, MaximalMode::Alpha { alpha: 0.5 }).unwrap();
        assert_eq!(a, m);
    }
}
