//! ω-regular kernel families and the general maximal function.

use serde::{Deserialize, Serialize};

use super::function::VecFunction;
use crate::error::{Error, Result};
use crate::space::BallBasis;

/// Modulus of continuity `ω(t) = c·t^δ`, or a constant (which has infinite norm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Modulus {
    Power { c: f64, delta: f64 },
    Constant { c: f64 },
}

impl Default for Modulus {
    fn default() -> Self {
        Modulus::Power { c: 1.0, delta: 1.0 }
    }
}

impl Modulus {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Modulus::Power { c, delta } => c * t.powf(delta),
            Modulus::Constant { c } => c,
        }
    }

    /// `‖ω‖ = 1 + ∫_0^1 ω(t) log(1/t)/t dt`.
    pub fn norm(&self) -> f64 {
        match *self {
            Modulus::Power { c, delta } => 1.0 + c / (delta * delta),
            Modulus::Constant { .. } => f64::INFINITY,
        }
    }
}

/// Normalized Poisson-type kernels `φ_B ∝ μ(B)/(μ(B)+d(x,B))²` with the
/// measured constants of the regularity conditions.
#[derive(Clone, Debug)]
pub struct RegularFamily {
    pub omega: Modulus,
    n_atoms: usize,
    kernels: Vec<f64>,
    /// Measured `min_B min_{x∈B} μ(B)φ_B(x)`.
    pub c1: f64,
    /// Measured `max φ_B(x)·d(x,B)/ω(μ(B)/d(x,B))`.
    pub c2: f64,
    /// Measured `max φ_B(x)/(u·φ_A(x))` over `B ⊆ A`, `u = μ(A)/μ(B)`.
    pub growth: f64,
    /// The nominal growth constant `(1+K)²`.
    pub growth_nominal: f64,
    pub max_mass_error: f64,
}

impl RegularFamily {
    pub fn kernel(&self, ball: usize) -> &[f64] {
        &self.kernels[ball * self.n_atoms..(ball + 1) * self.n_atoms]
    }

    pub fn n_balls(&self) -> usize {
        self.kernels.len() / self.n_atoms
    }

    /// `γ(u) = (1+K)²·u`.
    pub fn gamma(&self, u: f64) -> f64 {
        self.growth_nominal * u
    }
}

/// Builds the kernel family and verifies all three regularity conditions.
pub fn build_regular_family(basis: &BallBasis, omega: Modulus) -> Result<RegularFamily> {
    if basis.eta().is_none() {
        return Err(Error::NotDoubling);
    }
    if !omega.norm().is_finite() {
        return Err(Error::Invalid("the modulus has infinite norm".into()));
    }
    if let Modulus::Power { c, delta } = omega {
        if !(c > 0.0 && delta > 0.0) {
            return Err(Error::Invalid("modulus needs c > 0 and delta > 0".into()));
        }
    }
    let n = basis.n_atoms();
    let w = basis.space().weights();
    let mut kernels = vec![0.0; basis.n_balls() * n];
    let mut dists = vec![0.0; basis.n_balls() * n];
    let mut max_mass_error: f64 = 0.0;
    for b in basis.balls() {
        let d = basis.volume_distances(b.id);
        if let Some(x) = d.iter().position(|v| v.is_infinite()) {
            return Err(Error::NoContainingBall { atom: x, ball: b.id });
        }
        let row = &mut kernels[b.id * n..(b.id + 1) * n];
        let mut z = 0.0;
        for x in 0..n {
            let s = b.measure + d[x];
            row[x] = b.measure / (s * s);
            z += w[x] * row[x];
        }
        row.iter_mut().for_each(|v| *v /= z);
        let mass: f64 = row.iter().zip(w).map(|(k, w)| k * w).sum();
        max_mass_error = max_mass_error.max((mass - 1.0).abs());
        dists[b.id * n..(b.id + 1) * n].copy_from_slice(&d);
    }
    if max_mass_error > 1e-12 {
        return Err(Error::RegularityViolation {
            condition: "unit mass".into(),
            witness: format!("mass error {max_mass_error}"),
        });
    }
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for b in basis.balls() {
        let row = &kernels[b.id * n..(b.id + 1) * n];
        let d = &dists[b.id * n..(b.id + 1) * n];
        for x in b.members.iter() {
            c1 = c1.min(b.measure * row[x]);
        }
        for x in 0..n {
            let om = omega.eval(b.measure / d[x]);
            c2 = c2.max(row[x] * d[x] / om);
        }
    }
    if !(c1 > 0.0) || !c2.is_finite() {
        return Err(Error::RegularityViolation {
            condition: "kernel bounds".into(),
            witness: format!("c1 = {c1}, c2 = {c2}"),
        });
    }
    let nominal = (1.0 + basis.k()).powi(2);
    let mut growth: f64 = 0.0;
    let mut witness = None;
    for b in basis.balls() {
        let row_b = &kernels[b.id * n..(b.id + 1) * n];
        for a in basis.supersets(b.id, true) {
            let u = basis.measure(a) / b.measure;
            let row_a = &kernels[a * n..(a + 1) * n];
            for x in 0..n {
                let g = row_b[x] / (u * row_a[x]);
                if g > growth {
                    growth = g;
                    if g > nominal {
                        witness.get_or_insert((b.id, a, x));
                    }
                }
            }
        }
    }
    if let Some((b, a, x)) = witness {
        return Err(Error::RegularityViolation {
            condition: "growth".into(),
            witness: format!("B = {b}, A = {a}, x = {x}"),
        });
    }
    Ok(RegularFamily {
        omega,
        n_atoms: n,
        kernels,
        c1,
        c2,
        growth,
        growth_nominal: nominal,
        max_mass_error,
    })
}

/// Per-atom ball lists `𝒢(x)` with their completeness constant.
#[derive(Clone, Debug)]
pub struct Completeness {
    pub lists: Vec<Vec<usize>>,
    pub eta: f64,
}

impl Completeness {
    /// Every ball containing `x`, `η = 1`.
    pub fn all_balls(basis: &BallBasis) -> Completeness {
        Completeness {
            lists: (0..basis.n_atoms())
                .map(|x| basis.containing(x).iter().map(|&b| b as usize).collect())
                .collect(),
            eta: 1.0,
        }
    }

    /// Checks both completeness conditions, returning the first failure.
    pub fn validate(&self, basis: &BallBasis) -> Result<()> {
        if self.lists.len() != basis.n_atoms() {
            return Err(Error::Invalid("one ball list per atom is required".into()));
        }
        for (x, list) in self.lists.iter().enumerate() {
            for &b in list {
                if !basis.try_ball(b)?.contains(x) {
                    return Err(Error::IncompleteFamily { atom: x, ball: b });
                }
            }
            for &a in basis.containing(x) {
                let a = basis.ball(a as usize);
                let covered = list.iter().any(|&g| {
                    let gb = basis.ball(g);
                    gb.measure <= self.eta * a.measure && a.members.is_subset(&gb.members)
                });
                if !covered {
                    return Err(Error::IncompleteFamily { atom: x, ball: a.id });
                }
            }
        }
        Ok(())
    }
}

/// `M^{φ,𝒢} f(x) = max_{B∈𝒢(x)} ∫ ‖f‖ φ_B`.
pub fn general_maximal(
    basis: &BallBasis,
    f: &VecFunction,
    fam: &RegularFamily,
    complete: &Completeness,
) -> Result<Vec<f64>> {
    complete.validate(basis)?;
    let w = basis.space().weights();
    let norms = f.norms();
    let means: Vec<f64> = (0..fam.n_balls())
        .map(|b| {
            fam.kernel(b)
                .iter()
                .zip(w)
                .zip(&norms)
                .map(|((k, w), v)| k * w * v)
                .sum()
        })
        .collect();
    Ok(complete
        .lists
        .iter()
        .map(|list| list.iter().map(|&b| means[b]).fold(0.0, f64::max))
        .collect())
}
