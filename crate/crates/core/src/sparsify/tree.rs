//! Sparse trees of balls built from exceptional sets.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Value};

use super::cover::child_cover;
use super::disjoint::{MartingaleFamily, SetTree};
use super::vitali::vitali_indices;
use crate::error::{Error, Result};
use crate::functional::ball_integrals;
use crate::space::{atoms_of, double_star, AtomSet, BallBasis};

/// Upper limit on balls generated before the removal procedures run.
pub const MAX_TREE_NODES: usize = 200_000;

/// `⌊log_R m⌋`, computed by exact comparison with powers of `R`.
pub fn rank_of(m: f64, r: f64) -> i32 {
    let mut k = 0i32;
    if m >= 1.0 {
        while r.powi(k + 1) <= m {
            k += 1;
        }
    } else {
        while r.powi(k) > m {
            k -= 1;
        }
    }
    k
}

/// Largest α for which the construction is guaranteed: `1/(10K⁷)`.
pub fn alpha_threshold(basis: &BallBasis) -> f64 {
    1.0 / (10.0 * basis.k().powi(7))
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    /// `[[A]]`, the ball reported for the node.
    pub ball: usize,
    /// `A` itself.
    pub base: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// `r(A)`.
    pub rank: i32,
    /// `E(A) = A ∖ ∪{G : r(G) < r(A) − 1}`.
    pub witness: AtomSet,
    /// `F_{[[A]]}`.
    pub exceptional: AtomSet,
}

#[derive(Clone, Debug, Default)]
pub struct TreeStats {
    pub generated: usize,
    pub removed_by_sandwich: usize,
    pub removed_by_selection: usize,
    pub depth: usize,
    /// Largest `Σ_{G∈ch(A)} μ([[G]]) / (α μ([[A]]))`.
    pub child_mass_ratio: f64,
    /// Smallest `μ(E(A)) / μ(A)`.
    pub witness_density: f64,
}

#[derive(Clone, Debug)]
pub struct SparseTree {
    /// Node 0 is the root; nodes are listed breadth first.
    pub nodes: Vec<TreeNode>,
    pub alpha: f64,
    /// `α < 1/(10K⁷)`.
    pub guaranteed: bool,
    /// Smallest `μ(E(A)) / μ([[A]])`: each rank-parity class is sparse with
    /// this constant.
    pub sparse_gamma: f64,
    /// Constant `c` of the child-mass bound `c·α·μ([[A]])`.
    pub mass_constant: f64,
    pub stats: TreeStats,
    pub warnings: Vec<String>,
    pub transcript: Vec<String>,
}

impl SparseTree {
    pub fn root(&self) -> usize {
        self.nodes[0].ball
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn balls(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.ball).collect()
    }

    pub fn depth(&self) -> usize {
        self.stats.depth
    }

    /// The nested family `{[[A]]}` with the tree's parent links.
    pub fn set_tree(&self, basis: &BallBasis) -> SetTree {
        SetTree {
            sets: self.nodes.iter().map(|n| basis.ball_set(n.ball)).collect(),
            parent: self.nodes.iter().map(|n| n.parent).collect(),
        }
    }

    pub fn to_json(&self, shrink: Option<&MartingaleFamily>) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut v = json!({
                    "ball": n.ball,
                    "parent": n.parent,
                    "rank": n.rank,
                    "witness": atoms_of(&n.witness),
                });
                if let Some(s) = shrink {
                    v["shrink"] = json!(atoms_of(&s.shrink[i]));
                }
                v
            })
            .collect();
        json!({ "nodes": nodes })
    }

    /// GraphViz digraph with one edge per parent link.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph sparse_tree {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!("  n{i} [label=\"{} r={}\"];\n", n.ball, n.rank));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                out.push_str(&format!("  n{p} -> n{i};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

struct Draft {
    ball: usize,
    parent: Option<usize>,
    children: Vec<usize>,
    rank: i32,
    alive: bool,
}

fn kill(drafts: &mut [Draft], i: usize) -> usize {
    let mut stack = vec![i];
    let mut count = 0;
    while let Some(j) = stack.pop() {
        if drafts[j].alive {
            drafts[j].alive = false;
            count += 1;
        }
        stack.extend(drafts[j].children.iter().copied());
    }
    count
}

/// Builds the sparse tree rooted at `a0` from the exceptional sets
/// `f_map(B)`, queried only at the double hulls `[[A]]` the construction
/// reaches. Every queried set must satisfy `μ(F_B) < α μ(B)`.
pub fn sparsify_tree(
    basis: &BallBasis,
    f_map: &dyn Fn(usize) -> AtomSet,
    a0: usize,
    alpha: f64,
) -> Result<SparseTree> {
    basis.try_ball(a0)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let k = basis.k();
    let big_r = k * k;
    let threshold = alpha_threshold(basis);
    let guaranteed = alpha < threshold;
    let mut warnings = Vec::new();
    if !guaranteed {
        warnings.push(format!(
            "alpha = {alpha} is not below 1/(10K^7) = {threshold:.6e}; results are verified, not guaranteed"
        ));
    }
    let mut transcript = Vec::new();
    let hull2 = |b: usize| basis.hull(basis.hull(b));

    let mut exceptional: HashMap<usize, AtomSet> = HashMap::new();
    let mut fetch = |b: usize| -> Result<AtomSet> {
        if let Some(s) = exceptional.get(&b) {
            return Ok(s.clone());
        }
        let mut s = f_map(b);
        s.grow(basis.n_atoms());
        let ratio = basis.space().measure(&s) / basis.measure(b);
        if ratio >= alpha {
            return Err(Error::AlphaViolated { ball: b, ratio, alpha });
        }
        exceptional.insert(b, s.clone());
        Ok(s)
    };

    let mut drafts = vec![Draft {
        ball: a0,
        parent: None,
        children: Vec::new(),
        rank: rank_of(basis.measure(a0), big_r),
        alive: true,
    }];
    let mut i = 0;
    while i < drafts.len() {
        let a = drafts[i].ball;
        let f = fetch(hull2(a))?;
        let mut e = basis.ball_set(basis.hull(a));
        e.intersect_with(&f);
        for g in child_cover(basis, &f, &e)? {
            let rank = rank_of(basis.measure(g), big_r);
            if rank >= drafts[i].rank {
                return Err(construction(
                    guaranteed,
                    alpha,
                    format!("child {g} of ball {a} does not drop in rank"),
                    transcript,
                ));
            }
            let id = drafts.len();
            drafts.push(Draft {
                ball: g,
                parent: Some(i),
                children: Vec::new(),
                rank,
                alive: true,
            });
            drafts[i].children.push(id);
        }
        if drafts.len() > MAX_TREE_NODES {
            return Err(Error::SizeGuard(format!("more than {MAX_TREE_NODES} tree nodes")));
        }
        i += 1;
    }
    let generated = drafts.len();
    transcript.push(format!("generated {generated} balls"));

    let mut by_rank: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (j, d) in drafts.iter().enumerate() {
        by_rank.entry(d.rank).or_default().push(j);
    }
    let top = drafts[0].rank;
    let bottom = *by_rank.keys().next().expect("root is ranked");
    let mut causes: Vec<(usize, usize)> = Vec::new();
    let (mut removed1, mut removed2) = (0, 0);

    for rank in (bottom..top).rev() {
        let Some(bucket) = by_rank.get(&rank).cloned() else {
            continue;
        };
        // Sandwich removal: the sandwiching balls have rank above `rank + 1`,
        // so they are already fixed and the removals do not interact.
        let mut doomed = Vec::new();
        for &g in bucket.iter().filter(|&&g| drafts[g].alive) {
            let mut chain = vec![drafts[g].rank];
            let mut p = drafts[g].parent;
            while let Some(q) = p {
                chain.push(drafts[q].rank);
                p = drafts[q].parent;
            }
            let gss = double_star(basis, drafts[g].ball);
            let mut hit: Option<(usize, usize)> = None;
            for j in 0..chain.len() - 1 {
                let (lo, hi) = (chain[j] + 1, chain[j + 1] - 1);
                if lo + 1 > hi - 1 {
                    continue;
                }
                let found = by_rank.range(lo + 1..hi).flat_map(|(_, v)| v.iter()).find(|&&b| {
                    drafts[b].alive && basis.ball(drafts[b].ball).members.intersects_bits(&gss)
                });
                if let Some(&b) = found {
                    hit = Some((j, b));
                    break;
                }
            }
            match hit {
                Some((0, b)) => doomed.push((g, b)),
                Some((j, b)) => {
                    return Err(construction(
                        guaranteed,
                        alpha,
                        format!(
                            "rank sandwich for node {g} holds at ancestor depth {j} (ball {b}) but not at depth 0"
                        ),
                        transcript,
                    ))
                }
                None => {}
            }
        }
        let mut n1 = 0;
        for &(g, b) in &doomed {
            n1 += kill(&mut drafts, g);
            causes.push((g, b));
        }

        // Overlap removal by Vitali selection.
        let alive: Vec<usize> = bucket.iter().copied().filter(|&g| drafts[g].alive).collect();
        let balls: Vec<usize> = alive.iter().map(|&g| drafts[g].ball).collect();
        let keep = vitali_indices(basis, &balls);
        let mut union = AtomSet::with_capacity(basis.n_atoms());
        let mut stars = AtomSet::with_capacity(basis.n_atoms());
        for &b in &balls {
            basis.ball(b).members.union_into(&mut union);
        }
        for &i in &keep {
            basis.star(balls[i]).union_into(&mut stars);
        }
        if !union.is_subset(&stars) {
            return Err(construction(
                guaranteed,
                alpha,
                format!("selection at rank {rank} lost coverage"),
                transcript,
            ));
        }
        let mut kept = vec![false; alive.len()];
        keep.iter().for_each(|&i| kept[i] = true);
        let mut n2 = 0;
        for (pos, &g) in alive.iter().enumerate() {
            if !kept[pos] {
                n2 += kill(&mut drafts, g);
            }
        }
        removed1 += n1;
        removed2 += n2;
        transcript.push(format!(
            "rank {rank}: {} balls, sandwich removed {n1}, selection removed {n2}",
            bucket.len()
        ));
    }
    for &(g, b) in &causes {
        if !drafts[b].alive {
            return Err(construction(
                guaranteed,
                alpha,
                format!("ball that removed node {g} was itself removed"),
                transcript,
            ));
        }
    }

    // Renumber the survivors breadth first.
    let mut order = vec![0usize];
    let mut new_id = vec![usize::MAX; drafts.len()];
    new_id[0] = 0;
    let mut depth_of = vec![0usize];
    let mut q = 0;
    while q < order.len() {
        let d = order[q];
        for &c in &drafts[d].children {
            if drafts[c].alive {
                new_id[c] = order.len();
                order.push(c);
                depth_of.push(depth_of[q] + 1);
            }
        }
        q += 1;
    }

    let mut rank_union: BTreeMap<i32, AtomSet> = BTreeMap::new();
    for &d in &order {
        let entry = rank_union
            .entry(drafts[d].rank)
            .or_insert_with(|| AtomSet::with_capacity(basis.n_atoms()));
        basis.ball(drafts[d].ball).members.union_into(entry);
    }
    let mut nodes = Vec::with_capacity(order.len());
    for &d in &order {
        let dr = &drafts[d];
        let mut witness = basis.ball_set(dr.ball);
        for (_, u) in rank_union.range(..dr.rank - 1) {
            witness.difference_with(u);
        }
        nodes.push(TreeNode {
            ball: hull2(dr.ball),
            base: dr.ball,
            parent: dr.parent.map(|p| new_id[p]),
            children: dr.children.iter().filter(|&&c| drafts[c].alive).map(|&c| new_id[c]).collect(),
            rank: dr.rank,
            witness,
            exceptional: fetch(hull2(dr.ball))?,
        });
    }

    let mass_constant = 2.0 * basis.eta().unwrap_or(1.0) * k.powi(3);
    let mut tree = SparseTree {
        nodes,
        alpha,
        guaranteed,
        sparse_gamma: 0.0,
        mass_constant,
        stats: TreeStats {
            generated,
            removed_by_sandwich: removed1,
            removed_by_selection: removed2,
            depth: depth_of.into_iter().max().unwrap_or(0),
            ..TreeStats::default()
        },
        warnings,
        transcript,
    };
    if let Err(reason) = verify_tree(basis, &mut tree, a0) {
        let transcript = std::mem::take(&mut tree.transcript);
        return Err(construction(guaranteed, alpha, reason, transcript));
    }
    Ok(tree)
}

fn construction(guaranteed: bool, alpha: f64, reason: String, transcript: Vec<String>) -> Error {
    let reason = if guaranteed {
        reason
    } else {
        format!("alpha = {alpha} outside the guaranteed range: {reason}")
    };
    Error::ConstructionFailure { reason, transcript }
}

/// Checks nesting, coverage, the child-mass bound, half density above each
/// child, the witness density and the parity disjointness; fills in the
/// measured constants.
fn verify_tree(basis: &BallBasis, tree: &mut SparseTree, a0: usize) -> std::result::Result<(), String> {
    let n = basis.n_atoms();
    let space = basis.space();
    let nodes = &tree.nodes;

    for (i, node) in nodes.iter().enumerate() {
        for &c in &node.children {
            if !basis.ball(nodes[c].ball).members.is_subset(&basis.ball(node.ball).members) {
                return Err(format!("nesting: node {c} not inside node {i}"));
            }
            if nodes[c].rank >= node.rank {
                return Err(format!("rank drop: node {c} under node {i}"));
            }
        }
    }

    let mut good = AtomSet::with_capacity(n);
    for node in nodes {
        let mut s = basis.ball_set(node.ball);
        s.difference_with(&node.exceptional);
        good.union_with(&s);
    }
    if let Some(x) = basis.ball_set(a0).difference(&good).next() {
        return Err(format!("coverage: atom {x} of the root is not reached"));
    }

    let mut mass_ratio: f64 = 0.0;
    let doubling = basis.eta().is_some();
    for (i, node) in nodes.iter().enumerate() {
        if node.children.is_empty() {
            continue;
        }
        let mass: f64 = node.children.iter().map(|&c| basis.measure(nodes[c].ball)).sum();
        let ratio = mass / (tree.alpha * basis.measure(node.ball));
        mass_ratio = mass_ratio.max(ratio);
        if ratio > tree.mass_constant * (1.0 + 1e-12) {
            return Err(format!("child mass: node {i} has ratio {ratio}"));
        }
        let ind: Vec<f64> = (0..n).map(|x| if node.exceptional.contains(x) { 1.0 } else { 0.0 }).collect();
        let in_f = ball_integrals(basis, &ind);
        for &c in &node.children {
            let g = nodes[c].ball;
            let strict = !doubling || basis.supersets(g, true).is_empty();
            if let Some(s) = basis.supersets(g, strict).into_iter().find(|&s| in_f[s] >= basis.measure(s) / 2.0) {
                return Err(format!("half density: ball {s} over node {c}"));
            }
        }
    }

    let mut density = f64::INFINITY;
    let mut gamma = f64::INFINITY;
    let mut parity = [AtomSet::with_capacity(n), AtomSet::with_capacity(n)];
    for (i, node) in nodes.iter().enumerate() {
        let w = space.measure(&node.witness);
        let base = basis.measure(node.base);
        if w < base / 2.0 * (1.0 - 1e-12) {
            return Err(format!("witness density: node {i} keeps {w} of {base}"));
        }
        density = density.min(w / base);
        gamma = gamma.min(w / basis.measure(node.ball));
        let class = &mut parity[node.rank.rem_euclid(2) as usize];
        if !node.witness.is_disjoint(class) {
            return Err(format!("parity disjointness: node {i}"));
        }
        class.union_with(&node.witness);
    }
    tree.sparse_gamma = gamma;
    tree.stats.child_mass_ratio = mass_ratio;
    tree.stats.witness_density = density;
    Ok(())
}

/// The `⌊fraction·|B|⌋` atoms of `B` carrying the largest `|f|`, ties by atom.
pub fn top_atoms(basis: &BallBasis, f: &[f64], fraction: f64, ball: usize) -> AtomSet {
    let mut atoms: Vec<usize> = basis.ball(ball).members.iter().collect();
    let count = (fraction * atoms.len() as f64).floor() as usize;
    atoms.sort_by(|&x, &y| f[y].abs().total_cmp(&f[x].abs()).then(x.cmp(&y)));
    crate::space::set_of(basis.n_atoms(), atoms.into_iter().take(count))
}
