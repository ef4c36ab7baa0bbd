//! Operator descriptors: the concrete operators, truncation and maximal
//! modulation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::functional::{ball_integrals, Params, VecFunction};
use crate::seeds::rng_for;
use crate::space::{BallBasis, BasisKind};

/// Dense kernels are materialized only up to this many atoms.
pub const KERNEL_LIMIT: usize = 2048;

#[derive(Clone, Debug)]
pub enum OpKind {
    Zero,
    Identity,
    /// Signs indexed by ball id; leaf entries are unused.
    Martingale { eps: Vec<f64> },
    ConditionalExpectation { level: usize },
    SquareFunction,
    Sparse { balls: Vec<usize>, rho: f64 },
    Riesz { alpha: f64 },
    Hilbert,
    /// Row-major `K(x, y)`.
    Kernel { matrix: Arc<Vec<f64>> },
    Truncate(Box<Operator>),
    MaxModulation(Vec<Operator>),
}

/// A sublinear operator on functions over the atoms of a basis.
#[derive(Clone)]
pub struct Operator {
    pub name: String,
    basis: Arc<BallBasis>,
    kind: OpKind,
    pub params: Params,
    pub linear: bool,
    pub strong_sublinear: bool,
    kernel: OnceLock<Option<Arc<Vec<f64>>>>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("linear", &self.linear)
            .finish()
    }
}

impl Operator {
    fn build(basis: &Arc<BallBasis>, name: &str, kind: OpKind, params: Params, linear: bool) -> Operator {
        Operator {
            name: name.to_string(),
            basis: Arc::clone(basis),
            kind,
            params,
            linear,
            strong_sublinear: true,
            kernel: OnceLock::new(),
        }
    }

    pub fn basis(&self) -> &Arc<BallBasis> {
        &self.basis
    }

    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    pub fn n_atoms(&self) -> usize {
        self.basis.n_atoms()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Operator {
        self.name = name.into();
        self
    }

    /// Output dimension for inputs of dimension `m`.
    pub fn output_dim(&self, m: usize) -> usize {
        match self.kind {
            OpKind::SquareFunction | OpKind::Truncate(_) | OpKind::MaxModulation(_) => 1,
            _ => m,
        }
    }

    fn has_kernel_form(&self) -> bool {
        matches!(
            self.kind,
            OpKind::Zero
                | OpKind::Martingale { .. }
                | OpKind::ConditionalExpectation { .. }
                | OpKind::Sparse { .. }
                | OpKind::Riesz { .. }
                | OpKind::Hilbert
                | OpKind::Kernel { .. }
        )
    }

    /// The dense kernel `K(x, y)` with `Tf(x) = Σ_y K(x,y) f(y) w_y`, for
    /// linear operators on at most `KERNEL_LIMIT` atoms.
    pub fn kernel(&self) -> Option<Arc<Vec<f64>>> {
        self.kernel
            .get_or_init(|| {
                let n = self.n_atoms();
                if !self.has_kernel_form() || n > KERNEL_LIMIT {
                    return None;
                }
                if let OpKind::Kernel { matrix } = &self.kind {
                    return Some(Arc::clone(matrix));
                }
                Some(Arc::new(self.build_kernel()))
            })
            .clone()
    }

    fn build_kernel(&self) -> Vec<f64> {
        let n = self.n_atoms();
        let basis = &*self.basis;
        let mut k = vec![0.0; n * n];
        match &self.kind {
            OpKind::Martingale { eps } => {
                for x in 0..n {
                    let row = &mut k[x * n..(x + 1) * n];
                    let path = dyadic_path(basis, x);
                    for pair in path.windows(2) {
                        let (a, c) = (basis.ball(pair[0]), basis.ball(pair[1]));
                        let e = eps[a.id];
                        for y in a.members.iter() {
                            let cy = if c.contains(y) { 1.0 / c.measure } else { 0.0 };
                            row[y] += e * (cy - 1.0 / a.measure);
                        }
                    }
                }
            }
            OpKind::ConditionalExpectation { level } => {
                let filt = basis.filtration().expect("checked at construction");
                for x in 0..n {
                    let b = basis.ball(filt.ball_at(basis, *level, x));
                    for y in b.members.iter() {
                        k[x * n + y] = 1.0 / b.measure;
                    }
                }
            }
            OpKind::Sparse { balls, rho } => {
                for &b in balls {
                    let ball = basis.ball(b);
                    let c = ball.measure.powf(-rho);
                    for x in ball.members.iter() {
                        for y in ball.members.iter() {
                            k[x * n + y] += c;
                        }
                    }
                }
            }
            OpKind::Riesz { .. } | OpKind::Hilbert => {
                for x in 0..n {
                    for y in 0..n {
                        k[x * n + y] = self.kernel_entry(x, y);
                    }
                }
            }
            _ => {}
        }
        k
    }

    /// Closed-form kernel of the convolution-type operators.
    fn kernel_entry(&self, x: usize, y: usize) -> f64 {
        match self.kind {
            OpKind::Riesz { alpha } => {
                let d = x.abs_diff(y).max(1);
                if d == 1 {
                    1.0
                } else {
                    (d as f64).powf(alpha - 1.0)
                }
            }
            OpKind::Hilbert => {
                if x == y {
                    0.0
                } else {
                    1.0 / (x as f64 - y as f64)
                }
            }
            _ => unreachable!("no closed-form kernel"),
        }
    }

    fn check_input(&self, f: &VecFunction) -> Result<()> {
        if f.len() != self.n_atoms() {
            return Err(Error::Invalid(format!(
                "{} expects {} atoms, got {}",
                self.name,
                self.n_atoms(),
                f.len()
            )));
        }
        Ok(())
    }

    /// `Tf` by the operator's own formula.
    pub fn apply(&self, f: &VecFunction) -> Result<VecFunction> {
        self.check_input(f)?;
        let basis = &*self.basis;
        let n = self.n_atoms();
        let d = f.dim();
        Ok(match &self.kind {
            OpKind::Zero => VecFunction::zeros(n, d, f.norm_kind()),
            OpKind::Identity => f.clone(),
            OpKind::Martingale { eps } => {
                let means = ball_means(basis, f);
                let mut out = VecFunction::zeros(n, d, f.norm_kind());
                for x in 0..n {
                    let path = dyadic_path(basis, x);
                    let acc = out.value_mut(x);
                    for pair in path.windows(2) {
                        let (a, c) = (pair[0], pair[1]);
                        for (i, v) in acc.iter_mut().enumerate() {
                            *v += eps[a] * (means[c * d + i] - means[a * d + i]);
                        }
                    }
                }
                out
            }
            OpKind::ConditionalExpectation { level } => {
                let means = ball_means(basis, f);
                let filt = basis.filtration().expect("checked at construction");
                let mut out = VecFunction::zeros(n, d, f.norm_kind());
                for x in 0..n {
                    let b = filt.ball_at(basis, *level, x);
                    out.value_mut(x).copy_from_slice(&means[b * d..(b + 1) * d]);
                }
                out
            }
            OpKind::SquareFunction => {
                let means = ball_means(basis, f);
                let kind = f.norm_kind();
                let vals = (0..n)
                    .map(|x| {
                        let path = dyadic_path(basis, x);
                        let s: f64 = path
                            .windows(2)
                            .map(|p| {
                                let (a, c) = (p[0], p[1]);
                                let diff = kind.dist(&means[c * d..(c + 1) * d], &means[a * d..(a + 1) * d]);
                                diff * diff
                            })
                            .sum();
                        s.sqrt()
                    })
                    .collect();
                VecFunction::scalar(vals)
            }
            OpKind::Sparse { balls, rho } => {
                let mut out = VecFunction::zeros(n, d, f.norm_kind());
                let w = basis.space().weights();
                for &b in balls {
                    let ball = basis.ball(b);
                    let c = ball.measure.powf(-rho);
                    let mut integral = vec![0.0; d];
                    for y in ball.members.iter() {
                        for (s, v) in integral.iter_mut().zip(f.value(y)) {
                            *s += v * w[y];
                        }
                    }
                    for x in ball.members.iter() {
                        for (o, s) in out.value_mut(x).iter_mut().zip(&integral) {
                            *o += c * s;
                        }
                    }
                }
                out
            }
            OpKind::Riesz { .. } | OpKind::Hilbert => match self.kernel() {
                Some(k) => kernel_apply(basis, &k, f),
                None => {
                    let w = basis.space().weights();
                    let mut out = VecFunction::zeros(n, d, f.norm_kind());
                    for x in 0..n {
                        let acc = out.value_mut(x);
                        for y in 0..n {
                            let c = self.kernel_entry(x, y);
                            for (a, v) in acc.iter_mut().zip(f.value(y)) {
                                *a += c * v * w[y];
                            }
                        }
                    }
                    out
                }
            },
            OpKind::Kernel { matrix } => kernel_apply(basis, matrix, f),
            OpKind::Truncate(inner) => VecFunction::scalar(truncated(basis, inner, f)?),
            OpKind::MaxModulation(family) => {
                let mut best = vec![0.0f64; n];
                for t in family {
                    let g = t.apply(f)?;
                    for (b, v) in best.iter_mut().zip(g.norms()) {
                        *b = b.max(v);
                    }
                }
                VecFunction::scalar(best)
            }
        })
    }

    /// `Tf` through the dense kernel, when one exists.
    pub fn apply_kernel(&self, f: &VecFunction) -> Option<Result<VecFunction>> {
        let k = self.kernel()?;
        Some(self.check_input(f).map(|_| kernel_apply(&self.basis, &k, f)))
    }

    /// `T(1_{y})`. Linear operators read the kernel column; maximal
    /// modulations combine the members' responses.
    pub fn delta_response(&self, y: usize) -> Result<VecFunction> {
        let n = self.n_atoms();
        if y >= n {
            return Err(Error::UnknownAtom(y));
        }
        if let Some(k) = self.kernel() {
            let wy = self.basis.space().weight(y);
            return Ok(VecFunction::scalar((0..n).map(|x| k[x * n + y] * wy).collect()));
        }
        match &self.kind {
            OpKind::MaxModulation(family) => {
                let mut best = vec![0.0f64; n];
                for t in family {
                    let g = t.delta_response(y)?;
                    for (b, v) in best.iter_mut().zip(g.norms()) {
                        *b = b.max(v);
                    }
                }
                Ok(VecFunction::scalar(best))
            }
            _ => {
                let mut v = vec![0.0; n];
                v[y] = 1.0;
                self.apply(&VecFunction::scalar(v))
            }
        }
    }

    /// The kernel as CSV rows `K(x, ·)`.
    pub fn kernel_csv(&self) -> Option<String> {
        let k = self.kernel()?;
        let n = self.n_atoms();
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for x in 0..n {
            w.write_record(k[x * n..(x + 1) * n].iter().map(|v| v.to_string()))
                .expect("in-memory writes succeed");
        }
        Some(String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8"))
    }
}

fn kernel_apply(basis: &BallBasis, k: &[f64], f: &VecFunction) -> VecFunction {
    let n = basis.n_atoms();
    let d = f.dim();
    let w = basis.space().weights();
    let mut out = VecFunction::zeros(n, d, f.norm_kind());
    for x in 0..n {
        let row = &k[x * n..(x + 1) * n];
        let acc = out.value_mut(x);
        for y in 0..n {
            for (a, v) in acc.iter_mut().zip(f.value(y)) {
                *a += row[y] * v * w[y];
            }
        }
    }
    out
}

/// Ball ids from the root down to the leaf of atom `x`.
fn dyadic_path(basis: &BallBasis, x: usize) -> Vec<usize> {
    let filt = basis.filtration().expect("checked at construction");
    let mut b = filt.generations[filt.levels][x];
    let mut path = vec![b];
    while let Some(p) = filt.parent[b] {
        path.push(p);
        b = p;
    }
    path.reverse();
    path
}

/// Componentwise means `f_B`, laid out `[ball][component]`.
fn ball_means(basis: &BallBasis, f: &VecFunction) -> Vec<f64> {
    let d = f.dim();
    let mut out = vec![0.0; basis.n_balls() * d];
    for i in 0..d {
        let g: Vec<f64> = (0..f.len()).map(|x| f.value(x)[i]).collect();
        for (b, s) in ball_integrals(basis, &g).into_iter().enumerate() {
            out[b * d + i] = s / basis.measure(b);
        }
    }
    out
}

/// `T*f(x) = max_{B∋x} ‖T(f·1_{X∖B*})(x)‖`.
fn truncated(basis: &BallBasis, inner: &Operator, f: &VecFunction) -> Result<Vec<f64>> {
    let n = basis.n_atoms();
    let d = f.dim();
    let norm = f.norm_kind();
    let spans: Option<Vec<(usize, usize)>> =
        (0..basis.n_balls()).map(|b| basis.star(b).as_span()).collect();
    let mut out = vec![0.0f64; n];
    if let (Some(k), Some(spans)) = (inner.kernel(), spans) {
        // Left sums Σ_{y<lo} and right sums Σ_{y>hi}, both accumulated away
        // from x so no cancellation enters.
        let w = basis.space().weights();
        let mut left = vec![0.0; (n + 1) * d];
        let mut right = vec![0.0; (n + 1) * d];
        let mut buf = vec![0.0; d];
        for (x, o) in out.iter_mut().enumerate() {
            let row = &k[x * n..(x + 1) * n];
            for y in 0..n {
                for i in 0..d {
                    left[(y + 1) * d + i] = left[y * d + i] + row[y] * f.value(y)[i] * w[y];
                }
            }
            for y in (0..n).rev() {
                for i in 0..d {
                    right[y * d + i] = right[(y + 1) * d + i] + row[y] * f.value(y)[i] * w[y];
                }
            }
            for &b in basis.containing(x) {
                let (lo, hi) = spans[b as usize];
                for i in 0..d {
                    buf[i] = left[lo * d + i] + right[(hi + 1) * d + i];
                }
                *o = o.max(norm.norm(&buf));
            }
        }
        return Ok(out);
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for b in 0..basis.n_balls() {
        groups.entry(basis.star(b).iter().collect()).or_default().push(b);
    }
    for (star, balls) in groups {
        let mut g = f.clone();
        for &y in &star {
            g.value_mut(y).iter_mut().for_each(|v| *v = 0.0);
        }
        if g.raw().iter().all(|&v| v == 0.0) {
            continue;
        }
        let tg = inner.apply(&g)?;
        for b in balls {
            for x in basis.ball(b).members.iter() {
                out[x] = out[x].max(tg.norm_at(x));
            }
        }
    }
    Ok(out)
}

fn require_martingale(basis: &BallBasis) -> Result<()> {
    match basis.kind() {
        BasisKind::Dyadic { .. } if basis.filtration().is_some() => Ok(()),
        _ => Err(Error::NotMartingale),
    }
}

fn require_grid(basis: &BallBasis) -> Result<usize> {
    match basis.kind() {
        BasisKind::Grid { n } => Ok(n),
        _ => Err(Error::Invalid("a one-dimensional grid basis is required".into())),
    }
}

/// Non-leaf ball ids of a filtration.
fn inner_balls(basis: &BallBasis) -> Vec<usize> {
    let filt = basis.filtration().expect("martingale basis");
    (0..basis.n_balls()).filter(|&b| !filt.children[b].is_empty()).collect()
}

/// `ε ≡ s` on every non-leaf ball.
pub fn constant_signs(basis: &BallBasis, s: f64) -> Result<BTreeMap<usize, f64>> {
    require_martingale(basis)?;
    Ok(inner_balls(basis).into_iter().map(|b| (b, s)).collect())
}

/// Independent fair signs on the non-leaf balls.
pub fn random_signs(basis: &BallBasis, seed: u64) -> Result<BTreeMap<usize, f64>> {
    require_martingale(basis)?;
    let mut rng = rng_for(seed, &[0x5169]);
    Ok(inner_balls(basis)
        .into_iter()
        .map(|b| (b, if rng.gen_bool(0.5) { 1.0 } else { -1.0 }))
        .collect())
}

pub fn zero(basis: &Arc<BallBasis>) -> Operator {
    Operator::build(basis, "zero", OpKind::Zero, Params::classical(1.0), true)
}

pub fn identity(basis: &Arc<BallBasis>) -> Operator {
    Operator::build(basis, "identity", OpKind::Identity, Params::classical(1.0), true)
}

/// `M_ε f = Σ_A ε_A Δ_A f` with `Δ_A f = Σ_{C child of A} (f_C − f_A) 1_C`.
pub fn martingale_transform(basis: &Arc<BallBasis>, eps: &BTreeMap<usize, f64>) -> Result<Operator> {
    require_martingale(basis)?;
    let mut signs = vec![0.0; basis.n_balls()];
    for b in inner_balls(basis) {
        let e = *eps.get(&b).ok_or(Error::MissingSign(b))?;
        if e != 1.0 && e != -1.0 {
            return Err(Error::Invalid(format!("sign of ball {b} is {e}, not ±1")));
        }
        signs[b] = e;
    }
    Ok(Operator::build(
        basis,
        "martingale_transform",
        OpKind::Martingale { eps: signs },
        Params::classical(1.0),
        true,
    ))
}

/// `Sf = (Σ_A ‖Δ_A f‖²)^{1/2}`.
pub fn square_function(basis: &Arc<BallBasis>) -> Result<Operator> {
    require_martingale(basis)?;
    Ok(Operator::build(
        basis,
        "square_function",
        OpKind::SquareFunction,
        Params::classical(1.0),
        false,
    ))
}

/// `E_k f(x) = f_{B_k(x)}` for the generation-`k` ball `B_k(x)`.
pub fn conditional_expectation(basis: &Arc<BallBasis>, level: usize) -> Result<Operator> {
    require_martingale(basis)?;
    let levels = basis.filtration().expect("martingale basis").levels;
    if level > levels {
        return Err(Error::Invalid(format!("level {level} exceeds depth {levels}")));
    }
    Ok(Operator::build(
        basis,
        &format!("conditional_expectation_{level}"),
        OpKind::ConditionalExpectation { level },
        Params::classical(1.0),
        true,
    ))
}

/// `{E_k : k = 0..=L}`.
pub fn conditional_expectations(basis: &Arc<BallBasis>) -> Result<Vec<Operator>> {
    require_martingale(basis)?;
    let levels = basis.filtration().expect("martingale basis").levels;
    (0..=levels).map(|k| conditional_expectation(basis, k)).collect()
}

/// `A_S f = Σ_{B∈S} μ(B)^{-ρ} (∫_B f) 1_B`.
pub fn sparse_operator(basis: &Arc<BallBasis>, balls: &[usize], rho: f64) -> Result<Operator> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Invalid(format!("rho = {rho} must lie in (0, 1]")));
    }
    for &b in balls {
        basis.try_ball(b)?;
    }
    Ok(Operator::build(
        basis,
        "sparse_operator",
        OpKind::Sparse {
            balls: balls.to_vec(),
            rho,
        },
        Params::new(1.0, rho, 1.0)?,
        true,
    ))
}

/// `I_α f(x) = Σ_y f(y) w_y / max(|x−y|, 1)^{1−α}`.
pub fn riesz_potential(basis: &Arc<BallBasis>, alpha: f64) -> Result<Operator> {
    require_grid(basis)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    Ok(Operator::build(
        basis,
        "riesz_potential",
        OpKind::Riesz { alpha },
        Params::new(1.0, 1.0 - alpha, 1.0)?,
        true,
    ))
}

/// Kernel `1/(x−y)` off the diagonal, `0` on it.
pub fn discrete_hilbert(basis: &Arc<BallBasis>) -> Result<Operator> {
    require_grid(basis)?;
    Ok(Operator::build(
        basis,
        "discrete_hilbert",
        OpKind::Hilbert,
        Params::classical(1.0),
        true,
    ))
}

/// A linear operator given by an explicit `n × n` kernel.
pub fn kernel_operator(basis: &Arc<BallBasis>, name: &str, matrix: Vec<f64>, params: Params) -> Result<Operator> {
    let n = basis.n_atoms();
    if matrix.len() != n * n {
        return Err(Error::Invalid(format!("kernel has {} entries, need {}", matrix.len(), n * n)));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("kernel entries must be finite".into()));
    }
    params.validate()?;
    Ok(Operator::build(
        basis,
        name,
        OpKind::Kernel {
            matrix: Arc::new(matrix),
        },
        params,
        true,
    ))
}

/// `T*`; inherits the parameters of `T`.
pub fn truncate(t: &Operator) -> Operator {
    Operator::build(
        &t.basis,
        &format!("truncated_{}", t.name),
        OpKind::Truncate(Box::new(t.clone())),
        t.params,
        false,
    )
}

/// `Tf(x) = max_α ‖T_α f(x)‖`; parameters are those of the first member.
pub fn maximal_modulation(family: &[Operator]) -> Result<Operator> {
    let first = family.first().ok_or(Error::EmptyFamily)?;
    if let Some(t) = family.iter().find(|t| t.n_atoms() != first.n_atoms()) {
        return Err(Error::Invalid(format!("{} acts on a different space", t.name)));
    }
    Ok(Operator::build(
        &first.basis,
        "maximal_modulation",
        OpKind::MaxModulation(family.to_vec()),
        first.params,
        false,
    ))
}
