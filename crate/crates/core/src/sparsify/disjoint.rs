//! Shrinking a nested tree of sets into a martingale family.

use crate::error::{Error, Result};
use crate::space::AtomSet;

/// Sets with parent links; children must lie inside their parents.
#[derive(Clone, Debug)]
pub struct SetTree {
    pub sets: Vec<AtomSet>,
    pub parent: Vec<Option<usize>>,
}

impl SetTree {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Ancestor flags: `anc[a][b]` when `a` is `b` or an ancestor of `b`.
    fn ancestry(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut anc = vec![vec![false; n]; n];
        for b in 0..n {
            let mut cur = Some(b);
            let mut steps = 0;
            while let Some(a) = cur {
                anc[a][b] = true;
                cur = self.parent[a];
                steps += 1;
                if steps > n {
                    break;
                }
            }
        }
        anc
    }

    fn check_nesting(&self) -> Result<()> {
        for (c, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= self.len() || !self.sets[c].is_subset(&self.sets[p]) {
                    return Err(Error::NestingViolated { child: c, parent: p });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MartingaleFamily {
    /// `Ā` for every node, `Ā ⊆ A`.
    pub shrink: Vec<AtomSet>,
    /// Processing order used.
    pub order: Vec<usize>,
}

/// Default processing order: decreasing measure, ties by node id.
pub fn default_order(tree: &SetTree, measure: &dyn Fn(&AtomSet) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tree.len()).collect();
    let m: Vec<f64> = tree.sets.iter().map(measure).collect();
    order.sort_by(|&a, &b| m[b].total_cmp(&m[a]).then(a.cmp(&b)));
    order
}

/// Shrinks every node so that unrelated nodes become disjoint while the
/// union of `Ā ∩ E_A` stays `∪E_A`.
pub fn disjointify(
    tree: &SetTree,
    e_map: &[AtomSet],
    measure: &dyn Fn(&AtomSet) -> f64,
) -> Result<MartingaleFamily> {
    disjointify_with_order(tree, e_map, &default_order(tree, measure))
}

/// As `disjointify` with an explicit processing order, which must be a
/// permutation of the nodes.
pub fn disjointify_with_order(tree: &SetTree, e_map: &[AtomSet], order: &[usize]) -> Result<MartingaleFamily> {
    let n = tree.len();
    if e_map.len() != n || tree.parent.len() != n {
        return Err(Error::Invalid(format!("{n} nodes but {} sets E_A", e_map.len())));
    }
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Invalid("processing order is not a permutation".into()));
    }
    tree.check_nesting()?;
    for (i, e) in e_map.iter().enumerate() {
        if !e.is_subset(&tree.sets[i]) {
            return Err(Error::Invalid(format!("E_A of node {i} is not inside A")));
        }
    }
    if n == 0 {
        return Ok(MartingaleFamily { shrink: Vec::new(), order: Vec::new() });
    }
    let width = tree.sets.iter().chain(e_map).map(|s| s.len()).max().unwrap_or(0);
    let mut all_e = AtomSet::with_capacity(width);
    for e in e_map {
        all_e.union_with(e);
    }
    let mut bar: Vec<AtomSet> = tree
        .sets
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.grow(width);
            s.intersect_with(&all_e);
            s
        })
        .collect();
    let anc = tree.ancestry();
    for &an in order {
        let mut cut = bar[an].clone();
        cut.intersect_with(&e_map[an]);
        if cut.count_ones(..) == 0 {
            continue;
        }
        for (a, set) in bar.iter_mut().enumerate() {
            if !anc[a][an] {
                set.difference_with(&cut);
            }
        }
    }
    let family = MartingaleFamily { shrink: bar, order: order.to_vec() };
    verify_family(tree, e_map, &family, &anc)?;
    Ok(family)
}

fn violated(condition: &str, witness: String) -> Error {
    Error::PostconditionFailure { condition: condition.into(), witness }
}

fn verify_family(tree: &SetTree, e_map: &[AtomSet], fam: &MartingaleFamily, anc: &[Vec<bool>]) -> Result<()> {
    let n = tree.len();
    let bar = &fam.shrink;
    for a in 0..n {
        if !bar[a].is_subset(&tree.sets[a]) {
            return Err(violated("shrink inside node", format!("node {a}")));
        }
        if let Some(p) = tree.parent[a] {
            if !bar[a].is_subset(&bar[p]) {
                return Err(violated("nested shrink", format!("node {a} under {p}")));
            }
        }
        for b in a + 1..n {
            if !anc[a][b] && !anc[b][a] && !bar[a].is_disjoint(&bar[b]) {
                return Err(violated("unrelated shrinks disjoint", format!("nodes {a}, {b}")));
            }
        }
    }
    let width = bar[0].len();
    let mut union = AtomSet::with_capacity(width);
    let mut all_e = AtomSet::with_capacity(width);
    for a in 0..n {
        let mut piece = bar[a].clone();
        piece.intersect_with(&e_map[a]);
        if !piece.is_disjoint(&union) {
            return Err(violated("pieces disjoint", format!("node {a}")));
        }
        union.union_with(&piece);
        all_e.union_with(&e_map[a]);
    }
    if union != all_e {
        return Err(violated("union preserved", format!("{} atoms lost", all_e.difference(&union).count())));
    }
    Ok(())
}
