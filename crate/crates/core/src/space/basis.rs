//! Balls, ball-bases and the two concrete families used throughout:
//! dyadic filtrations of `[0,1)` and all discrete intervals of a grid.

use std::sync::OnceLock;

use super::measure::MeasureSpace;
use super::region::{AtomSet, Region};
use crate::error::{Error, Result};

pub const MAX_DYADIC_LEVELS: usize = 20;
pub const MAX_GRID: usize = 512;
/// Above this many atoms the pairwise table is not built.
const PAIR_TABLE_LIMIT: usize = 1024;

#[derive(Clone, Debug)]
pub struct Ball {
    pub id: usize,
    pub members: Region,
    pub measure: f64,
}

impl Ball {
    pub fn contains(&self, x: usize) -> bool {
        self.members.contains(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Dyadic { levels: usize },
    Grid { n: usize },
    Custom,
}

/// Parent/children links of a martingale filtration.
#[derive(Clone, Debug)]
pub struct Filtration {
    pub levels: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub level: Vec<usize>,
    /// Balls of each generation, in increasing atom order.
    pub generations: Vec<Vec<usize>>,
}

impl Filtration {
    /// Ball of generation `k` containing atom `x`.
    pub fn ball_at(&self, basis: &BallBasis, k: usize, x: usize) -> usize {
        let gen = &self.generations[k];
        let idx = gen.partition_point(|&b| basis.ball(b).members.first() <= x);
        gen[idx - 1]
    }
}

/// Minimal measure of a ball containing both atoms, for every pair.
#[derive(Clone, Debug)]
pub(crate) struct PairTable {
    n: usize,
    m: Vec<f64>,
}

impl PairTable {
    fn build(basis: &BallBasis) -> PairTable {
        let n = basis.n_atoms();
        let mut m = vec![f64::INFINITY; n * n];
        let mut reached = AtomSet::with_capacity(n);
        for x in 0..n {
            reached.clear();
            let row = &mut m[x * n..(x + 1) * n];
            let mut left = n;
            for &b in basis.containing(x) {
                let ball = basis.ball(b as usize);
                for y in ball.members.iter() {
                    if !reached.put(y) {
                        row[y] = ball.measure;
                        left -= 1;
                    }
                }
                if left == 0 {
                    break;
                }
            }
        }
        PairTable { n, m }
    }

    fn row(&self, x: usize) -> &[f64] {
        &self.m[x * self.n..(x + 1) * self.n]
    }
}

/// A ball-basis over a finite atomic measure space.
#[derive(Debug)]
pub struct BallBasis {
    space: MeasureSpace,
    balls: Vec<Ball>,
    hull: Vec<usize>,
    k: f64,
    eta: Option<f64>,
    stars: Vec<Region>,
    by_atom: Vec<Vec<u32>>,
    kind: BasisKind,
    filtration: Option<Filtration>,
    whole: Option<usize>,
    pairs: OnceLock<Option<PairTable>>,
}

impl Clone for BallBasis {
    fn clone(&self) -> Self {
        BallBasis {
            space: self.space.clone(),
            balls: self.balls.clone(),
            hull: self.hull.clone(),
            k: self.k,
            eta: self.eta,
            stars: self.stars.clone(),
            by_atom: self.by_atom.clone(),
            kind: self.kind,
            filtration: self.filtration.clone(),
            whole: self.whole,
            pairs: OnceLock::new(),
        }
    }
}

impl BallBasis {
    /// Assembles a basis from explicit member lists and a hull map. Stars are
    /// computed exactly from the ball family. Only structural problems are
    /// rejected here; axiom violations are reported by `check_axioms`.
    pub fn new(
        space: MeasureSpace,
        members: Vec<Region>,
        hull: Vec<usize>,
        k: f64,
        eta: Option<f64>,
    ) -> Result<BallBasis> {
        let mut basis = BallBasis::assemble(space, members, hull, k, eta, BasisKind::Custom)?;
        let stars = (0..basis.n_balls())
            .map(|b| basis.star_generic(b))
            .collect::<Vec<_>>();
        basis.stars = stars;
        Ok(basis)
    }

    fn assemble(
        space: MeasureSpace,
        members: Vec<Region>,
        hull: Vec<usize>,
        k: f64,
        eta: Option<f64>,
        kind: BasisKind,
    ) -> Result<BallBasis> {
        let n = space.len();
        if members.is_empty() {
            return Err(Error::Invalid("basis has no balls".into()));
        }
        if hull.len() != members.len() {
            return Err(Error::Invalid(format!(
                "hull map has {} entries for {} balls",
                hull.len(),
                members.len()
            )));
        }
        if !(k.is_finite() && k >= 1.0) {
            return Err(Error::Invalid(format!("K = {k} must be finite and at least 1")));
        }
        if let Some(e) = eta {
            if !(e.is_finite() && e >= 1.0) {
                return Err(Error::Invalid(format!("eta = {e} must be finite and at least 1")));
            }
        }
        let mut balls = Vec::with_capacity(members.len());
        for (id, m) in members.into_iter().enumerate() {
            if let Some(x) = m.iter().find(|&x| x >= n) {
                return Err(Error::UnknownAtom(x));
            }
            let measure = space.region_measure(&m);
            balls.push(Ball { id, members: m, measure });
        }
        if let Some(&h) = hull.iter().find(|&&h| h >= balls.len()) {
            return Err(Error::UnknownBall(h));
        }
        let mut by_atom: Vec<Vec<u32>> = vec![Vec::new(); n];
        for b in &balls {
            for x in b.members.iter() {
                by_atom[x].push(b.id as u32);
            }
        }
        for list in &mut by_atom {
            list.sort_by(|&a, &b| {
                let (ma, mb) = (balls[a as usize].measure, balls[b as usize].measure);
                ma.partial_cmp(&mb).unwrap().then(a.cmp(&b))
            });
        }
        let whole = balls.iter().find(|b| b.members.len() == n).map(|b| b.id);
        Ok(BallBasis {
            space,
            balls,
            hull,
            k,
            eta,
            stars: Vec::new(),
            by_atom,
            kind,
            filtration: None,
            whole,
            pairs: OnceLock::new(),
        })
    }

    /// Dyadic intervals of generations `0..=levels` on `2^levels` atoms of
    /// weight `2^-levels`. Ball ids follow heap order: the root is 0 and the
    /// children of `b` are `2b+1`, `2b+2`.
    pub fn dyadic(levels: usize) -> Result<BallBasis> {
        if levels > MAX_DYADIC_LEVELS {
            return Err(Error::SizeGuard(format!(
                "dyadic levels {levels} exceed {MAX_DYADIC_LEVELS}"
            )));
        }
        let n = 1usize << levels;
        let space = MeasureSpace::uniform(n, 1.0 / n as f64)?;
        let count = 2 * n - 1;
        let mut members = Vec::with_capacity(count);
        let mut level = Vec::with_capacity(count);
        let mut generations = Vec::with_capacity(levels + 1);
        for l in 0..=levels {
            let width = n >> l;
            let mut gen = Vec::with_capacity(1 << l);
            for k in 0..(1usize << l) {
                gen.push(members.len());
                members.push(Region::span(k * width, (k + 1) * width - 1));
                level.push(l);
            }
            generations.push(gen);
        }
        let parent: Vec<Option<usize>> =
            (0..count).map(|b| if b == 0 { None } else { Some((b - 1) / 2) }).collect();
        let children: Vec<Vec<usize>> = (0..count)
            .map(|b| if level[b] < levels { vec![2 * b + 1, 2 * b + 2] } else { Vec::new() })
            .collect();
        let hull: Vec<usize> = parent.iter().enumerate().map(|(b, p)| p.unwrap_or(b)).collect();
        let stars: Vec<Region> = hull.iter().map(|&h| members[h].clone()).collect();
        let mut basis = BallBasis::assemble(
            space,
            members,
            hull,
            2.0,
            Some(2.0),
            BasisKind::Dyadic { levels },
        )?;
        basis.stars = stars;
        basis.filtration = Some(Filtration {
            levels,
            parent,
            children,
            level,
            generations,
        });
        Ok(basis)
    }

    /// All discrete intervals `[i, j]` of `{0..n-1}` with unit weights.
    /// Ids are ordered by length, then by left end. The hull of an interval is
    /// its star, which is again an interval.
    pub fn grid(n: usize) -> Result<BallBasis> {
        if !(2..=MAX_GRID).contains(&n) {
            return Err(Error::SizeGuard(format!("grid size {n} outside 2..={MAX_GRID}")));
        }
        let space = MeasureSpace::uniform(n, 1.0)?;
        let count = n * (n + 1) / 2;
        let mut members = Vec::with_capacity(count);
        let mut stars = Vec::with_capacity(count);
        let mut hull = Vec::with_capacity(count);
        let mut k: f64 = 1.0;
        for len in 1..=n {
            for i in 0..=(n - len) {
                let j = i + len - 1;
                members.push(Region::span(i, j));
                let lo = i.saturating_sub(2 * len - 1);
                let hi = (j + 2 * len - 1).min(n - 1);
                stars.push(Region::span(lo, hi));
                hull.push(grid_id(n, lo, hi));
                k = k.max((hi - lo + 1) as f64 / len as f64);
            }
        }
        let mut basis =
            BallBasis::assemble(space, members, hull, k, Some(2.0), BasisKind::Grid { n })?;
        basis.stars = stars;
        Ok(basis)
    }

    /// Recognizes documents that describe one of the built-in families so the
    /// structural fast paths stay available after a round-trip.
    pub(crate) fn recognize(self) -> BallBasis {
        let n = self.n_atoms();
        let candidate = if n.is_power_of_two() && self.n_balls() == 2 * n - 1 {
            BallBasis::dyadic(n.trailing_zeros() as usize).ok()
        } else if self.n_balls() == n * (n + 1) / 2 {
            BallBasis::grid(n).ok()
        } else {
            None
        };
        match candidate {
            Some(c) if c.same_structure(&self) => c,
            _ => self,
        }
    }

    fn same_structure(&self, other: &BallBasis) -> bool {
        self.space.weights() == other.space.weights()
            && self.hull == other.hull
            && self.k.to_bits() == other.k.to_bits()
            && self.eta.map(f64::to_bits) == other.eta.map(f64::to_bits)
            && self
                .balls
                .iter()
                .zip(&other.balls)
                .all(|(a, b)| a.members.iter().eq(b.members.iter()))
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn n_atoms(&self) -> usize {
        self.space.len()
    }

    pub fn n_balls(&self) -> usize {
        self.balls.len()
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn ball(&self, id: usize) -> &Ball {
        &self.balls[id]
    }

    pub fn try_ball(&self, id: usize) -> Result<&Ball> {
        self.balls.get(id).ok_or(Error::UnknownBall(id))
    }

    pub fn measure(&self, id: usize) -> f64 {
        self.balls[id].measure
    }

    pub fn hull(&self, id: usize) -> usize {
        self.hull[id]
    }

    pub fn hull_map(&self) -> &[usize] {
        &self.hull
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn filtration(&self) -> Option<&Filtration> {
        self.filtration.as_ref()
    }

    /// The star `B*` of a ball.
    pub fn star(&self, id: usize) -> &Region {
        &self.stars[id]
    }

    /// Balls containing atom `x`, ordered by (measure, id).
    pub fn containing(&self, x: usize) -> &[u32] {
        &self.by_atom[x]
    }

    /// First ball (by id) whose members are all of `X`.
    pub fn whole(&self) -> Option<usize> {
        self.whole
    }

    pub fn ball_set(&self, id: usize) -> AtomSet {
        self.balls[id].members.to_bits(self.n_atoms())
    }

    pub fn star_set(&self, id: usize) -> AtomSet {
        self.stars[id].to_bits(self.n_atoms())
    }

    pub fn is_whole_region(&self, r: &Region) -> bool {
        r.len() == self.n_atoms()
    }

    pub(crate) fn pair_table(&self) -> Option<&PairTable> {
        self.pairs
            .get_or_init(|| {
                if self.n_atoms() <= PAIR_TABLE_LIMIT {
                    Some(PairTable::build(self))
                } else {
                    None
                }
            })
            .as_ref()
    }

    /// Union of the balls `A` with `μ(A) ≤ t` that meet `set`.
    pub fn star_with_threshold(&self, set: &AtomSet, t: f64) -> AtomSet {
        match self.pair_table() {
            Some(table) => star_by_pairs(table, set, t),
            None => self.star_by_scan(set, t),
        }
    }

    /// Star of an arbitrary set: the threshold is `2μ(set)`.
    pub fn star_of_set(&self, set: &AtomSet) -> AtomSet {
        let t = 2.0 * self.space.measure(set);
        self.star_with_threshold(set, t)
    }

    /// Exact star of a ball recomputed from the ball family.
    pub fn star_generic(&self, id: usize) -> Region {
        let set = self.ball_set(id);
        let t = 2.0 * self.balls[id].measure;
        Region::from_bits(self.star_with_threshold(&set, t)).expect("a star contains its ball")
    }

    pub(crate) fn star_by_scan(&self, set: &AtomSet, t: f64) -> AtomSet {
        let mut out = AtomSet::with_capacity(self.n_atoms());
        let mut seen = vec![false; self.n_balls()];
        for x in set.ones() {
            for &b in &self.by_atom[x] {
                let ball = &self.balls[b as usize];
                if ball.measure > t {
                    break;
                }
                if !std::mem::replace(&mut seen[b as usize], true) {
                    ball.members.union_into(&mut out);
                }
            }
        }
        out
    }

    /// Balls containing `id` (including itself unless `strict`), ordered by
    /// (measure, id). Strictness is by member set.
    pub fn supersets(&self, id: usize, strict: bool) -> Vec<usize> {
        let ball = &self.balls[id];
        let x0 = self.sparsest_atom(&ball.members);
        let len = ball.members.len();
        self.by_atom[x0]
            .iter()
            .map(|&b| b as usize)
            .filter(|&b| {
                let other = &self.balls[b];
                if strict && other.members.len() == len {
                    return false;
                }
                other.measure >= ball.measure && ball.members.is_subset(&other.members)
            })
            .collect()
    }

    /// Smallest ball (by measure, then id) containing every atom of `set`.
    pub fn smallest_containing(&self, set: &AtomSet) -> Option<usize> {
        let x0 = set.ones().next()?;
        let m = self.space.measure(set);
        self.by_atom[x0]
            .iter()
            .map(|&b| b as usize)
            .find(|&b| self.balls[b].measure >= m && self.balls[b].members.contains_bits(set))
    }

    fn sparsest_atom(&self, r: &Region) -> usize {
        match self.kind {
            BasisKind::Custom => r
                .iter()
                .min_by_key(|&x| self.by_atom[x].len())
                .expect("regions are non-empty"),
            _ => r.first(),
        }
    }

    /// Volume distance `d(x,B)`: least measure of a ball containing `B ∪ {x}`.
    pub fn volume_distance(&self, x: usize, id: usize) -> Result<f64> {
        if x >= self.n_atoms() {
            return Err(Error::UnknownAtom(x));
        }
        let ball = self.try_ball(id)?;
        if let BasisKind::Grid { .. } = self.kind {
            let (lo, hi) = ball.members.as_span().expect("grid balls are spans");
            return Ok((hi.max(x) - lo.min(x) + 1) as f64);
        }
        self.by_atom[x]
            .iter()
            .map(|&b| &self.balls[b as usize])
            .find(|a| a.measure >= ball.measure && ball.members.is_subset(&a.members))
            .map(|a| a.measure)
            .ok_or(Error::NoContainingBall { atom: x, ball: id })
    }

    /// `d(y,B)` for every atom `y`; atoms with no containing ball get `+∞`.
    pub fn volume_distances(&self, id: usize) -> Vec<f64> {
        let n = self.n_atoms();
        let ball = &self.balls[id];
        if let BasisKind::Grid { .. } = self.kind {
            let (lo, hi) = ball.members.as_span().expect("grid balls are spans");
            return (0..n).map(|x| (hi.max(x) - lo.min(x) + 1) as f64).collect();
        }
        let mut d = vec![f64::INFINITY; n];
        let mut left = n;
        for a in self.supersets(id, false) {
            let a = &self.balls[a];
            for y in a.members.iter() {
                if d[y].is_infinite() {
                    d[y] = a.measure;
                    left -= 1;
                }
            }
            if left == 0 {
                break;
            }
        }
        d
    }

    /// Ball of the grid with the given ends.
    pub fn grid_ball(&self, lo: usize, hi: usize) -> Option<usize> {
        match self.kind {
            BasisKind::Grid { n } if lo <= hi && hi < n => Some(grid_id(n, lo, hi)),
            _ => None,
        }
    }

    /// Looks up a ball with exactly the given members.
    pub fn find_ball(&self, members: &AtomSet) -> Option<usize> {
        let x0 = members.ones().next()?;
        let len = members.count_ones(..);
        self.by_atom[x0].iter().map(|&b| b as usize).find(|&b| {
            let m = &self.balls[b].members;
            m.len() == len && m.contains_bits(members)
        })
    }
}

fn star_by_pairs(table: &PairTable, set: &AtomSet, t: f64) -> AtomSet {
    let n = table.n;
    let mut flag = vec![false; n];
    for x in set.ones() {
        for (f, &m) in flag.iter_mut().zip(table.row(x)) {
            *f |= m <= t;
        }
    }
    let mut out = AtomSet::with_capacity(n);
    for (y, f) in flag.into_iter().enumerate() {
        if f {
            out.insert(y);
        }
    }
    out
}

/// Id of `[lo, hi]` in a grid of size `n`.
pub fn grid_id(n: usize, lo: usize, hi: usize) -> usize {
    let len = hi - lo + 1;
    // Σ_{l<len} (n - l + 1) intervals come first.
    let before = (len - 1) * (n + 1) - (len - 1) * len / 2;
    before + lo
}
