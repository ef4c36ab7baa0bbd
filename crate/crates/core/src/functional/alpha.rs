//! α-oscillations and medians.

use super::averages::oscillation;
use super::function::VecFunction;
use crate::error::{Error, Result};
use crate::space::{AtomSet, MeasureSpace};

/// Largest set handled by the subset enumeration.
pub const MAX_EXHAUSTIVE: usize = 20;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// Optimal subset for `OSC_{S,α}` together with its oscillation.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaCore {
    pub osc: f64,
    /// Every atom of `S` whose value lies in the optimal value window.
    pub set: AtomSet,
}

/// `OSC_{S,α}(f) = inf { OSC_E(f) : E ⊆ S, μ(E) > αμ(S) }`.
///
/// Scalar functions use the sorted-window search; vector functions fall back
/// to subset enumeration.
pub fn alpha_oscillation(
    space: &MeasureSpace,
    f: &VecFunction,
    set: &AtomSet,
    alpha: f64,
) -> Result<f64> {
    if f.as_scalar().is_some() {
        alpha_core(space, f, set, alpha).map(|c| c.osc)
    } else {
        alpha_oscillation_exhaustive(space, f, set, alpha)
    }
}

/// Sorted-window search. For real values an optimal `E` can always be
/// enlarged to all atoms with values in `[min E, max E]`, so it suffices to
/// scan value-sorted windows.
pub fn alpha_core(space: &MeasureSpace, f: &VecFunction, set: &AtomSet, alpha: f64) -> Result<AlphaCore> {
    check_alpha(alpha)?;
    let v = f
        .as_scalar()
        .ok_or_else(|| Error::Invalid("the window search needs a scalar function".into()))?;
    let mut atoms: Vec<usize> = set.ones().collect();
    if atoms.is_empty() {
        return Err(Error::EmptySet);
    }
    atoms.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let target = alpha * space.measure(set);
    let mut prefix = Vec::with_capacity(atoms.len() + 1);
    prefix.push(0.0);
    for &x in &atoms {
        prefix.push(prefix.last().unwrap() + space.weight(x));
    }
    let m = atoms.len();
    let mut best: Option<(f64, usize, usize)> = None;
    let mut j = 0;
    for i in 0..m {
        j = j.max(i);
        while j < m && !(prefix[j + 1] - prefix[i] > target) {
            j += 1;
        }
        if j == m {
            break;
        }
        let range = v[atoms[j]] - v[atoms[i]];
        if best.map_or(true, |(b, _, _)| range < b) {
            best = Some((range, i, j));
        }
    }
    let (osc, i, j) = best.unwrap_or((v[atoms[m - 1]] - v[atoms[0]], 0, m - 1));
    let (lo, hi) = (v[atoms[i]], v[atoms[j]]);
    let mut core = AtomSet::with_capacity(set.len());
    for &x in &atoms {
        if v[x] >= lo && v[x] <= hi {
            core.insert(x);
        }
    }
    Ok(AlphaCore { osc, set: core })
}

/// Mass and oscillation of every subset of `atoms`, indexed by bitmask.
/// Masses add atoms in increasing order so they agree with `measure`.
fn subset_tables(space: &MeasureSpace, f: &VecFunction, atoms: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let m = atoms.len();
    let size = 1usize << m;
    let mut mass = vec![0.0f64; size];
    let mut osc = vec![0.0f64; size];
    for mask in 1..size {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask ^ (1 << top);
        mass[mask] = if rest == 0 {
            space.weight(atoms[top])
        } else {
            mass[rest] + space.weight(atoms[top])
        };
        let mut o = osc[rest];
        let mut bits = rest;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            o = o.max(f.dist(atoms[top], atoms[k]));
            bits &= bits - 1;
        }
        osc[mask] = o;
    }
    (mass, osc)
}

fn small_atoms(set: &AtomSet) -> Result<Vec<usize>> {
    let atoms: Vec<usize> = set.ones().collect();
    if atoms.is_empty() {
        return Err(Error::EmptySet);
    }
    if atoms.len() > MAX_EXHAUSTIVE {
        return Err(Error::OracleTooLarge { size: atoms.len() });
    }
    Ok(atoms)
}

/// Subset enumeration of `OSC_{S,α}`; sets above `MAX_EXHAUSTIVE` atoms are refused.
pub fn alpha_oscillation_exhaustive(
    space: &MeasureSpace,
    f: &VecFunction,
    set: &AtomSet,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let atoms = small_atoms(set)?;
    let target = alpha * space.measure(set);
    let (mass, osc) = subset_tables(space, f, &atoms);
    Ok(mass
        .iter()
        .zip(&osc)
        .filter(|(m, _)| **m > target)
        .map(|(_, o)| *o)
        .fold(f64::INFINITY, f64::min))
}

/// `M_f(S)`: the union of all `E ⊆ S` with `μ(E) > μ(S)/2` and
/// `OSC_E(f) ≤ 2·OSC_{S,1/2}(f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Median {
    pub set: AtomSet,
    /// `f(x)` at the lowest atom of the median set.
    pub representative: Vec<f64>,
    pub osc_half: f64,
}

/// Median set of `f` on `S`; exact for scalar functions of any size and for
/// vector functions on sets of at most `MAX_EXHAUSTIVE` atoms.
pub fn median(space: &MeasureSpace, f: &VecFunction, set: &AtomSet) -> Result<Median> {
    let Some(v) = f.as_scalar() else {
        return median_exhaustive(space, f, set);
    };
    let core = alpha_core(space, f, set, 0.5)?;
    let t = 2.0 * core.osc;
    let half = 0.5 * space.measure(set);
    let mut atoms: Vec<usize> = set.ones().collect();
    atoms.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let m = atoms.len();
    // Windows [v_i, v_i + t] anchored at a value; any qualifying E fits in one.
    let mut member = vec![false; m];
    let mut hi = 0;
    for i in 0..m {
        if i > 0 && v[atoms[i]] == v[atoms[i - 1]] {
            continue;
        }
        hi = hi.max(i);
        while hi + 1 < m && v[atoms[hi + 1]] - v[atoms[i]] <= t {
            hi += 1;
        }
        let mut window: Vec<usize> = atoms[i..=hi].to_vec();
        window.sort_unstable();
        let mass: f64 = window.iter().map(|&x| space.weight(x)).sum();
        if mass > half {
            member[i..=hi].iter_mut().for_each(|b| *b = true);
        }
    }
    let mut out = AtomSet::with_capacity(set.len());
    for (k, &x) in atoms.iter().enumerate() {
        if member[k] {
            out.insert(x);
        }
    }
    let first = out.ones().next().expect("the whole set qualifies at least");
    Ok(Median {
        representative: f.value(first).to_vec(),
        set: out,
        osc_half: core.osc,
    })
}

/// Subset enumeration of the median set.
pub fn median_exhaustive(space: &MeasureSpace, f: &VecFunction, set: &AtomSet) -> Result<Median> {
    let atoms = small_atoms(set)?;
    let half = 0.5 * space.measure(set);
    let (mass, osc) = subset_tables(space, f, &atoms);
    let osc_half = mass
        .iter()
        .zip(&osc)
        .filter(|(m, _)| **m > half)
        .map(|(_, o)| *o)
        .fold(f64::INFINITY, f64::min);
    let mut union = 0usize;
    for mask in 1..mass.len() {
        if mass[mask] > half && osc[mask] <= 2.0 * osc_half {
            union |= mask;
        }
    }
    let mut out = AtomSet::with_capacity(set.len());
    for (k, &x) in atoms.iter().enumerate() {
        if union >> k & 1 == 1 {
            out.insert(x);
        }
    }
    let first = out.ones().next().expect("the whole set qualifies at least");
    Ok(Median {
        representative: f.value(first).to_vec(),
        set: out,
        osc_half,
    })
}

/// `OSC` of `f` over the median set; at most `4·OSC_{S,1/2}`.
pub fn median_spread(f: &VecFunction, m: &Median) -> f64 {
    oscillation(f, &m.set.ones().collect::<Vec<_>>())
}
