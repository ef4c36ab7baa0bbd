//! Acceptance suite: one line per criterion, baselines frozen in
//! `tests/data/baselines.json`. Run with `BALLBASIS_BLESS=1` to rewrite the
//! baselines after an intentional change.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

use ballbasis::domination::{
    dominate_bo, dominate_mean_osc, family_constants, lerner_decompose, verify_sparse_bound, DominateOptions,
    SparseBound, VerificationReport,
};
use ballbasis::functional::{
    alpha_oscillation, alpha_oscillation_exhaustive, build_regular_family, median, median_exhaustive, Completeness,
    Modulus, Params, VecFunction,
};
use ballbasis::operators::{
    conditional_expectations, discrete_hilbert, estimate_bo_constants, martingale_transform, maximal_modulation,
    random_signs, riesz_potential, sparse_operator, square_function, truncate, BOConstants, Operator,
};
use ballbasis::seeds::rng_for;
use ballbasis::space::{check_axioms, set_of, AtomSet, BallBasis, MeasureSpace};
use ballbasis::sparsify::{disjointify, disjointify_with_order, sparsify_tree, top_atoms, SetTree, SparseTree};
use ballbasis::verify::{
    bmo_bounded_report, exp_decay_report, good_lambda_report, john_nirenberg_report, weak_type_report, BmoMode,
    BmoTarget, Corpus, CorpusSpec, DecayMode, FamilySpec, Generator, GoodLambdaOptions, Report, WeakTarget,
};

const BUDGET: usize = 64;
const SHIPPED: [&str; 4] = ["dyadic-martingale", "grid-riesz", "dyadic-ek", "grid-john-nirenberg"];

type Outcome = Result<String, String>;

struct Baselines {
    path: PathBuf,
    bless: bool,
    stored: Map<String, Value>,
    fresh: Map<String, Value>,
}

impl Baselines {
    fn load() -> Baselines {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/baselines.json");
        let bless = std::env::var("BALLBASIS_BLESS").is_ok_and(|v| v == "1");
        let stored: Map<String, Value> = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default();
        Baselines { path, bless, fresh: stored.clone(), stored }
    }

    fn stored(&self, key: &str) -> Result<&Value, String> {
        self.stored
            .get(key)
            .ok_or_else(|| format!("no baseline {key:?}; run with BALLBASIS_BLESS=1"))
    }

    /// The value must equal the frozen one bit for bit.
    fn exact(&mut self, key: &str, v: Value) -> Result<(), String> {
        self.fresh.insert(key.into(), v.clone());
        if self.bless {
            return Ok(());
        }
        let want = self.stored(key)?;
        if *want == v {
            Ok(())
        } else {
            Err(format!("{key} differs from baseline"))
        }
    }

    /// The value must not exceed the frozen one; returns the baseline.
    fn ceiling(&mut self, key: &str, v: f64) -> Result<f64, String> {
        self.fresh.insert(key.into(), json!(v));
        if self.bless {
            return Ok(v);
        }
        let want = self.stored(key)?.as_f64().ok_or_else(|| format!("baseline {key} is not a number"))?;
        if v <= want {
            Ok(want)
        } else {
            Err(format!("{key} = {v} exceeds baseline {want}"))
        }
    }

    fn save(&self) {
        if self.bless {
            std::fs::create_dir_all(self.path.parent().unwrap()).unwrap();
            let text = serde_json::to_string_pretty(&self.fresh).unwrap();
            std::fs::write(&self.path, text + "\n").unwrap();
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn arc(b: ballbasis::Result<BallBasis>) -> Arc<BallBasis> {
    Arc::new(b.expect("basis"))
}

fn corpus(basis: &BallBasis, seed: u64, families: &[(Generator, usize)]) -> Corpus {
    let spec = CorpusSpec {
        seed,
        families: families.iter().map(|(g, n)| FamilySpec::new(g.clone(), *n)).collect(),
    };
    Corpus::generate(basis, &spec).expect("corpus")
}

fn estimate(op: &Operator, seed: u64) -> BOConstants {
    estimate_bo_constants(op, BUDGET, seed).expect("estimate")
}

fn c1_axioms(_: &mut Baselines) -> Outcome {
    let mut bases: Vec<(String, BallBasis)> = Vec::new();
    for n in 0..=12 {
        bases.push((format!("D{n}"), e2s(BallBasis::dyadic(n))?));
    }
    for n in [2, 3, 4, 5, 7, 8, 16, 31, 64, 100, 128, 200, 256] {
        bases.push((format!("G{n}"), e2s(BallBasis::grid(n))?));
    }
    let mut slowest = Duration::ZERO;
    for (name, basis) in &bases {
        let t = Instant::now();
        let rep = check_axioms(basis);
        let dt = t.elapsed();
        slowest = slowest.max(dt);
        ensure(rep.pass, || format!("{name}: axioms fail"))?;
        ensure(dt < Duration::from_secs(10), || format!("{name}: {dt:?}"))?;
        if name.starts_with('D') {
            ensure(basis.k() == 2.0 && (basis.eta() == Some(2.0) || basis.n_atoms() == 1), || {
                format!("{name}: K = {}, eta = {:?}", basis.k(), basis.eta())
            })?;
        } else {
            ensure(basis.k() <= 5.0 && rep.k_stored_ratio <= 5.0, || format!("{name}: K = {}", basis.k()))?;
        }
    }
    Ok(format!("{} bases, slowest {:.2}s", bases.len(), slowest.as_secs_f64()))
}

fn c2_weak_type(_: &mut Baselines) -> Outcome {
    let basis = e2s(BallBasis::dyadic(10))?;
    let c = corpus(
        &basis,
        2,
        &[(Generator::Uniform {}, 100), (Generator::RandomSigns {}, 50), (Generator::Spikes { count: 6 }, 50)],
    );
    let mut worst = Vec::new();
    for p in [Params::classical(1.0), e2s(Params::new(1.0, 0.5, 1.0))?] {
        let rep = e2s(weak_type_report(WeakTarget::Maximal, &c, &basis, &p))?;
        let max = rep.max_value("weak_ratio");
        ensure(rep.rows.len() == 200, || format!("{} rows", rep.rows.len()))?;
        ensure(rep.pass && max <= basis.k(), || format!("ratio {max} > K"))?;
        worst.push(max);
    }
    Ok(format!("max ratio classical {:.6}, (1, 1/2, 1) {:.6}; K = 2", worst[0], worst[1]))
}

fn c3_oracles(_: &mut Baselines) -> Outcome {
    let mut rng = rng_for(3, &[]);
    let mut worst: f64 = 0.0;
    for case in 0..500u64 {
        let n = rng.gen_range(1..=16);
        let weights: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| rng.gen_range(1..=3) as f64).collect()
        } else {
            (0..n).map(|_| rng.gen_range(0.1..2.0)).collect()
        };
        let space = e2s(MeasureSpace::new(weights))?;
        let values: Vec<f64> = if case % 3 == 0 {
            (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let f = VecFunction::scalar(values);
        let mut atoms: Vec<usize> = (0..n).collect();
        atoms.shuffle(&mut rng);
        let size = rng.gen_range(1..=n.min(12));
        let set = set_of(n, atoms[..size].iter().copied());
        let alpha = if case % 5 == 0 { 0.5 } else { rng.gen_range(0.02..0.98) };
        let fast = e2s(alpha_oscillation(&space, &f, &set, alpha))?;
        let slow = e2s(alpha_oscillation_exhaustive(&space, &f, &set, alpha))?;
        worst = worst.max((fast - slow).abs());
        ensure((fast - slow).abs() <= 1e-12, || format!("case {case}: OSC {fast} vs {slow}"))?;
        let m = e2s(median(&space, &f, &set))?;
        let me = e2s(median_exhaustive(&space, &f, &set))?;
        ensure(m.set == me.set, || format!("case {case}: median sets differ"))?;
        worst = worst.max((m.osc_half - me.osc_half).abs());
        ensure((m.osc_half - me.osc_half).abs() <= 1e-12, || format!("case {case}: median OSC differs"))?;
    }
    Ok(format!("500 cases, max deviation {worst:e}"))
}

fn random_family(basis: &BallBasis, rng: &mut impl Rng) -> (AtomSet, Vec<usize>) {
    let count = rng.gen_range(1..=12);
    let family: Vec<usize> = (0..count).map(|_| rng.gen_range(0..basis.n_balls())).collect();
    let mut union = AtomSet::with_capacity(basis.n_atoms());
    for &b in &family {
        basis.ball(b).members.union_into(&mut union);
    }
    let p = rng.gen_range(0.1..1.0);
    let e = set_of(basis.n_atoms(), union.ones().filter(|_| rng.gen_bool(p)).collect::<Vec<_>>());
    (e, family)
}

fn c4_covering(_: &mut Baselines) -> Outcome {
    let bases = [
        ("D8", e2s(BallBasis::dyadic(8))?),
        ("D12", e2s(BallBasis::dyadic(12))?),
        ("G64", e2s(BallBasis::grid(64))?),
        ("G256", e2s(BallBasis::grid(256))?),
    ];
    let mut selected = 0;
    for (k, (name, basis)) in bases.iter().enumerate() {
        let mut rng = rng_for(4, &[k as u64]);
        for i in 0..200 {
            let (e, family) = random_family(basis, &mut rng);
            let chosen = e2s(ballbasis::sparsify::vitali_cover(basis, &e, &family))?;
            selected += chosen.len();
            for (a, &x) in chosen.iter().enumerate() {
                ensure(family.contains(&x), || format!("{name}#{i}: ball {x} not in the family"))?;
                for &y in &chosen[a + 1..] {
                    ensure(!basis.ball(x).members.intersects(&basis.ball(y).members), || {
                        format!("{name}#{i}: balls {x} and {y} overlap")
                    })?;
                }
            }
            let mut stars = AtomSet::with_capacity(basis.n_atoms());
            for &x in &chosen {
                basis.star(x).union_into(&mut stars);
            }
            ensure(e.is_subset(&stars), || format!("{name}#{i}: E not inside the stars"))?;
        }
    }
    Ok(format!("800 instances, {selected} balls selected"))
}

/// Nesting, root cover, child mass, half cover, half density of `E(A)` and
/// parity disjointness, recomputed from the node list and the exceptional sets alone.
fn check_tree(basis: &BallBasis, tree: &SparseTree, f_map: &dyn Fn(usize) -> AtomSet, a0: usize) -> Result<(), String> {
    let n = basis.n_atoms();
    let space = basis.space();
    let nodes = &tree.nodes;
    let fs: Vec<AtomSet> = nodes.iter().map(|v| f_map(v.ball)).collect();
    for (i, v) in nodes.iter().enumerate() {
        ensure(v.exceptional == fs[i], || format!("node {i}: stored exceptional set differs"))?;
        ensure(space.measure(&fs[i]) < tree.alpha * basis.measure(v.ball), || format!("node {i}: F too large"))?;
        let mut mass = 0.0;
        for &c in &v.children {
            ensure(nodes[c].parent == Some(i), || format!("node {c}: parent link"))?;
            ensure(basis.ball(nodes[c].ball).members.is_subset(&basis.ball(v.ball).members), || {
                format!("nesting: node {c} not inside node {i}")
            })?;
            mass += basis.measure(nodes[c].ball);
            let g = &basis.ball(nodes[c].ball).members;
            for s in 0..basis.n_balls() {
                let big = &basis.ball(s).members;
                let strict = s != nodes[c].ball;
                if !g.is_subset(big) || (!strict && basis.eta().is_none()) {
                    continue;
                }
                let mut hit = basis.ball_set(s);
                hit.intersect_with(&fs[i]);
                ensure(space.measure(&hit) < basis.measure(s) / 2.0, || {
                    format!("half cover: ball {s} over node {c} is half covered by F")
                })?;
            }
        }
        ensure(mass <= tree.mass_constant * tree.alpha * basis.measure(v.ball) * (1.0 + 1e-12), || {
            format!("child mass: node {i} child mass {mass}")
        })?;
    }
    let mut good = AtomSet::with_capacity(n);
    for (v, f) in nodes.iter().zip(&fs) {
        let mut s = basis.ball_set(v.ball);
        s.difference_with(f);
        good.union_with(&s);
    }
    ensure(basis.ball_set(a0).is_subset(&good), || "root not covered".into())?;
    let mut parity = [AtomSet::with_capacity(n), AtomSet::with_capacity(n)];
    for (i, v) in nodes.iter().enumerate() {
        let mut w = basis.ball_set(v.base);
        for u in nodes.iter().filter(|u| u.rank < v.rank - 1) {
            w.difference_with(&basis.ball_set(u.base));
        }
        ensure(w == v.witness, || format!("node {i}: witness differs"))?;
        ensure(space.measure(&w) >= basis.measure(v.base) / 2.0, || format!("E(A) half density: node {i}"))?;
        let class = &mut parity[v.rank.rem_euclid(2) as usize];
        ensure(w.is_disjoint(class), || format!("parity sparseness: node {i}"))?;
        class.union_with(&w);
    }
    Ok(())
}

fn tree_families(basis: &BallBasis) -> Vec<Vec<f64>> {
    let c = corpus(
        basis,
        5,
        &[
            (Generator::Uniform {}, 7),
            (Generator::LogSamples { anchor: None }, 7),
            (Generator::Spikes { count: 3 }, 6),
        ],
    );
    c.cases.iter().map(|k| k.f.norms()).collect()
}

fn sparse_trees(basis: &BallBasis, alpha: f64) -> Result<Vec<(SparseTree, Vec<f64>)>, String> {
    tree_families(basis)
        .into_iter()
        .map(|f| {
            let fmap = |b: usize| top_atoms(basis, &f, alpha, b);
            e2s(sparsify_tree(basis, &fmap, 0, alpha)).map(|t| (t, f))
        })
        .collect()
}

fn c5_sparse_trees(bl: &mut Baselines) -> Outcome {
    let basis = e2s(BallBasis::dyadic(12))?;
    let alpha = 1.0 / 2000.0;
    let trees = sparse_trees(&basis, alpha)?;
    let mut counts = Vec::new();
    for (k, (tree, f)) in trees.iter().enumerate() {
        ensure(tree.guaranteed, || format!("family {k}: not in the guaranteed range"))?;
        let fmap = |b: usize| top_atoms(&basis, f, alpha, b);
        check_tree(&basis, tree, &fmap, 0).map_err(|e| format!("family {k}: {e}"))?;
        counts.push(tree.len());
    }
    bl.exact("c5/node_counts", json!(counts))?;
    Ok(format!("20 trees, node counts {counts:?}"))
}

/// `Ā ⊆ A`, the two martingale relations, disjoint pieces and the union.
fn check_martingale(tree: &SetTree, e: &[AtomSet], bar: &[AtomSet]) -> Result<(), String> {
    let n = tree.len();
    let ancestor = |a: usize, b: usize| {
        let mut cur = Some(b);
        while let Some(x) = cur {
            if x == a {
                return true;
            }
            cur = tree.parent[x];
        }
        false
    };
    let mut pieces: AtomSet = AtomSet::new();
    let mut all_e: AtomSet = AtomSet::new();
    for a in 0..n {
        ensure(bar[a].is_subset(&tree.sets[a]), || format!("node {a}: shrink outside A"))?;
        if let Some(p) = tree.parent[a] {
            ensure(bar[a].is_subset(&bar[p]), || format!("shrink of node {a} leaves its parent {p}"))?;
        }
        for b in a + 1..n {
            if !ancestor(a, b) && !ancestor(b, a) {
                ensure(bar[a].is_disjoint(&bar[b]), || format!("unrelated nodes {a}, {b} overlap"))?;
            }
        }
        let mut piece = bar[a].clone();
        piece.intersect_with(&e[a]);
        pieces.grow(piece.len());
        ensure(piece.is_disjoint(&pieces), || format!("pieces overlap at node {a}"))?;
        pieces.union_with(&piece);
        all_e.grow(e[a].len());
        all_e.union_with(&e[a]);
    }
    all_e.grow(pieces.len());
    pieces.grow(all_e.len());
    ensure(pieces == all_e, || "union of pieces changed".into())
}

fn random_set_tree(rng: &mut impl Rng, n: usize) -> (SetTree, Vec<AtomSet>) {
    let mut sets = vec![set_of(n, 0..n)];
    let mut parent = vec![None];
    let mut depth = vec![0usize];
    let mut i = 0;
    while i < sets.len() && sets.len() < 120 {
        if depth[i] < 6 {
            for _ in 0..rng.gen_range(0..=3) {
                let keep = rng.gen_range(0.3..0.9);
                let child = set_of(n, sets[i].ones().filter(|_| rng.gen_bool(keep)).collect::<Vec<_>>());
                sets.push(child);
                parent.push(Some(i));
                depth.push(depth[i] + 1);
            }
        }
        i += 1;
    }
    let e = sets
        .iter()
        .map(|s| {
            let p = rng.gen_range(0.0..1.0);
            set_of(n, s.ones().filter(|_| rng.gen_bool(p)).collect::<Vec<_>>())
        })
        .collect();
    (SetTree { sets, parent }, e)
}

fn c6_disjointify(_: &mut Baselines) -> Outcome {
    let mut rng = rng_for(6, &[]);
    let count = |s: &AtomSet| s.count_ones(..) as f64;
    let mut nodes = 0;
    for t in 0..200 {
        let (tree, e) = random_set_tree(&mut rng, 64);
        nodes += tree.len();
        let fam = if t % 2 == 0 {
            e2s(disjointify(&tree, &e, &count))?
        } else {
            let mut order: Vec<usize> = (0..tree.len()).collect();
            order.shuffle(&mut rng);
            e2s(disjointify_with_order(&tree, &e, &order))?
        };
        check_martingale(&tree, &e, &fam.shrink).map_err(|m| format!("random tree {t}: {m}"))?;
    }
    let basis = e2s(BallBasis::dyadic(12))?;
    let alpha = 1.0 / 2000.0;
    let trees = sparse_trees(&basis, alpha)?;
    for (k, (tree, f)) in trees.iter().enumerate() {
        let st = tree.set_tree(&basis);
        let e: Vec<AtomSet> = tree
            .nodes
            .iter()
            .map(|v| {
                let mut s = basis.ball_set(v.ball);
                s.difference_with(&top_atoms(&basis, f, alpha, v.ball));
                s
            })
            .collect();
        let fam = e2s(disjointify(&st, &e, &|s| basis.space().measure(s)))?;
        check_martingale(&st, &e, &fam.shrink).map_err(|m| format!("tree of family {k}: {m}"))?;
    }
    Ok(format!("200 random trees ({nodes} nodes) and 20 construction outputs"))
}

struct BoundCheck {
    constants: Vec<f64>,
    max_enclosing: f64,
    degenerate: usize,
}

fn check_bounds(
    basis: &BallBasis,
    label: &str,
    bounds: impl Iterator<Item = Result<SparseBound, String>>,
) -> Result<BoundCheck, String> {
    let k3 = basis.k().powi(3);
    let mut out = BoundCheck { constants: Vec::new(), max_enclosing: 0.0, degenerate: 0 };
    for (i, b) in bounds.enumerate() {
        let b = b.map_err(|e| format!("{label} case {i}: {e}"))?;
        let rep: VerificationReport = verify_sparse_bound(basis, &b, &b.target, b.domain);
        ensure(rep.violations == 0, || format!("{label} case {i}: {} pointwise violations", rep.violations))?;
        ensure(b.constant.is_finite(), || format!("{label} case {i}: infinite constant"))?;
        ensure(rep.enclosed && rep.enclosing_ratio <= k3, || {
            format!("{label} case {i}: enclosing ratio {}", rep.enclosing_ratio)
        })?;
        ensure(rep.fit.passes(), || format!("{label} case {i}: overlap rate {:?}", rep.fit.rate))?;
        if rep.fit.degenerate {
            out.degenerate += 1;
        }
        out.max_enclosing = out.max_enclosing.max(rep.enclosing_ratio);
        out.constants.push(b.constant);
    }
    Ok(out)
}

fn summarize(label: &str, c: &BoundCheck) -> String {
    let max = c.constants.iter().copied().fold(0.0, f64::max);
    format!(
        "{label}: max C {max:.4}, max μ(B′)/μ(B) {:.3}, {} step profiles",
        c.max_enclosing, c.degenerate
    )
}

fn c7_end_to_end(bl: &mut Baselines) -> Outcome {
    let opts = DominateOptions::default();
    let mut parts = Vec::new();
    let d10 = arc(BallBasis::dyadic(10));
    let g128 = arc(BallBasis::grid(128));
    let mt = e2s(martingale_transform(&d10, &e2s(random_signs(&d10, 71))?))?;
    let rz = e2s(riesz_potential(&g128, 0.5))?;
    for (label, op, basis) in [("martingale", &mt, &d10), ("riesz", &rz, &g128)] {
        let consts = estimate(op, 7);
        let ball = basis.whole().unwrap_or(0);
        let c = corpus(basis, 7, &[(Generator::Uniform {}, 25), (Generator::HaarMixtures { terms: 5 }, 25)]);
        let checked = check_bounds(
            basis,
            label,
            c.cases.iter().map(|k| e2s(dominate_bo(op, &consts, &k.f, ball, &opts))),
        )?;
        bl.exact(&format!("c7/{label}/constants"), json!(checked.constants))?;
        parts.push(summarize(label, &checked));
    }
    Ok(parts.join("; "))
}

fn c8_lerner(bl: &mut Baselines) -> Outcome {
    let d8 = arc(BallBasis::dyadic(8));
    let g128 = arc(BallBasis::grid(128));
    let beta = 0.75;
    let mut parts = Vec::new();
    let ek = e2s(conditional_expectations(&d8))?;
    let hilbert = vec![e2s(discrete_hilbert(&g128))?];
    for (label, family, basis) in [("ek", &ek, &d8), ("hilbert", &hilbert, &g128)] {
        let ball = basis.whole().unwrap_or(0);
        let c = corpus(basis, 8, &[(Generator::Uniform {}, 25), (Generator::Indicators {}, 25)]);
        let lerner = check_bounds(
            basis,
            &format!("lerner/{label}"),
            c.cases.iter().map(|k| e2s(lerner_decompose(basis, &k.f, ball, beta))),
        )?;
        let fc = e2s(family_constants(family, BUDGET, 8))?;
        let osc = check_bounds(
            basis,
            &format!("mean_osc/{label}"),
            c.cases.iter().map(|k| e2s(dominate_mean_osc(family, &fc, &k.f, ball, beta))),
        )?;
        bl.exact(&format!("c8/lerner/{label}/constants"), json!(lerner.constants))?;
        bl.exact(&format!("c8/mean_osc/{label}/constants"), json!(osc.constants))?;
        parts.push(summarize(&format!("lerner/{label}"), &lerner));
        parts.push(summarize(&format!("mean_osc/{label}"), &osc));
    }
    Ok(parts.join("; "))
}

fn c9_good_lambda(bl: &mut Baselines) -> Outcome {
    let d10 = arc(BallBasis::dyadic(10));
    let g128 = arc(BallBasis::grid(128));
    let ops = [
        ("martingale", e2s(martingale_transform(&d10, &e2s(random_signs(&d10, 91))?))?, &d10),
        ("square", e2s(square_function(&d10))?, &d10),
        ("hilbert", e2s(discrete_hilbert(&g128))?, &g128),
    ];
    let opts = GoodLambdaOptions::default();
    let mut parts = Vec::new();
    for (label, op, basis) in &ops {
        let consts = estimate(op, 9);
        let c = corpus(basis, 9, &[(Generator::Uniform {}, 25), (Generator::Spikes { count: 4 }, 25)]);
        let rep = e2s(good_lambda_report(op, &consts, &c, basis, &opts))?;
        let max = rep.max_value("measure_ratio");
        let base = bl.ceiling(&format!("c9/{label}/max_ratio"), max)?;
        parts.push(format!("{label}: {max:.6} (baseline {base:.6})"));
    }
    Ok(parts.join("; "))
}

fn positive_rates(rep: &Report, label: &str) -> Result<(usize, usize), String> {
    let (mut fitted, mut steps) = (0, 0);
    for row in rep.rows.iter().filter(|r| r.statistic == "fit_rate") {
        if row.value.is_nan() {
            steps += 1;
            continue;
        }
        ensure(row.value > 0.0, || format!("{label} {}: rate {}", row.case, row.value))?;
        fitted += 1;
    }
    Ok((fitted, steps))
}

fn decay_rates(op: &Operator, c: &Corpus, mode: DecayMode, label: &str) -> Result<String, String> {
    let ball = op.basis().whole().unwrap_or(0);
    let parts = c
        .cases
        .iter()
        .map(|k| exp_decay_report(op, &k.f, ball, mode).map(|r| ballbasis::verify::relabel(r, &k.id)))
        .collect::<ballbasis::Result<Vec<_>>>();
    let rep = Report::merge(label, e2s(parts)?);
    let (fitted, steps) = positive_rates(&rep, label)?;
    // Pointwise domination by the reference empties the tail past t = 1.
    let vanishing = rep.rows.iter().filter(|r| r.statistic == "fit_bins").all(|r| r.value == 0.0);
    if vanishing {
        return Ok(format!("{label} vanishing"));
    }
    ensure(fitted > 0, || format!("{label}: no case produced a fit"))?;
    Ok(format!("{label} {fitted}/{}", fitted + steps))
}

fn c10_exponential(_: &mut Baselines) -> Outcome {
    let d10 = arc(BallBasis::dyadic(10));
    let g128 = arc(BallBasis::grid(128));
    let g256 = arc(BallBasis::grid(256));
    let ek = e2s(maximal_modulation(&e2s(conditional_expectations(&d10))?))?;
    let fams = [(Generator::Uniform {}, 10), (Generator::HaarMixtures { terms: 4 }, 10)];
    let cd = corpus(&d10, 10, &fams);
    let cg = corpus(&g128, 10, &fams);
    let ops = [
        ("martingale", e2s(martingale_transform(&d10, &e2s(random_signs(&d10, 101))?))?, &cd),
        ("square", e2s(square_function(&d10))?, &cd),
        ("riesz", e2s(riesz_potential(&g128, 0.5))?, &cg),
        ("hilbert", e2s(discrete_hilbert(&g128))?, &cg),
        ("ek_maximal", ek.clone(), &cd),
    ];
    let mut parts = Vec::new();
    for (label, op, c) in &ops {
        parts.push(decay_rates(op, c, DecayMode::VsMaximal, &format!("{label}/vs_maximal"))?);
    }
    let logs = corpus(&d10, 11, &[(Generator::LogSamples { anchor: None }, 10), (Generator::Uniform {}, 10)]);
    parts.push(decay_rates(&ek, &logs, DecayMode::VsSharp, "ek_maximal/vs_sharp")?);
    let jn = corpus(&g256, 12, &[(Generator::LogSamples { anchor: None }, 6)]);
    let mut whole = 0;
    for k in &jn.cases {
        let rep = e2s(john_nirenberg_report(&k.f, &g256))?;
        positive_rates(&rep, &format!("john_nirenberg {}", k.id))?;
        let rate = rep
            .rows
            .iter()
            .find(|r| r.statistic == "fit_rate" && r.case.starts_with("whole/median"))
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        ensure(rate > 0.0, || format!("john_nirenberg {}: whole-space rate {rate}", k.id))?;
        ensure(rep.pass, || format!("john_nirenberg {}: report fails", k.id))?;
        whole += 1;
    }
    parts.push(format!("john_nirenberg {whole}/{}", jn.len()));
    Ok(format!("fitted/total: {}", parts.join(", ")))
}

fn c11_bmo(bl: &mut Baselines) -> Outcome {
    let d10 = arc(BallBasis::dyadic(10));
    let d8 = arc(BallBasis::dyadic(8));
    let fams = [
        (Generator::Uniform {}, 40),
        (Generator::LogSamples { anchor: None }, 20),
        (Generator::HaarMixtures { terms: 6 }, 40),
    ];
    let c10 = corpus(&d10, 13, &fams);
    let c8 = corpus(&d8, 13, &fams);
    let ek = e2s(maximal_modulation(&e2s(conditional_expectations(&d10))?))?;
    let mt = e2s(martingale_transform(&d10, &e2s(random_signs(&d10, 111))?))?;
    let poisson = e2s(build_regular_family(&d8, Modulus::default()))?;
    let complete = Completeness::all_balls(&d8);
    let runs = [
        ("ek_maximal/bmo", e2s(bmo_bounded_report(BmoTarget::Operator(&ek), &c10, &d10, BmoMode::Bmo, f64::INFINITY))?),
        ("martingale/linf", e2s(bmo_bounded_report(BmoTarget::Operator(&mt), &c10, &d10, BmoMode::Linf, f64::INFINITY))?),
        (
            "poisson/bmo",
            e2s(bmo_bounded_report(
                BmoTarget::GeneralMaximal { family: &poisson, complete: &complete },
                &c8,
                &d8,
                BmoMode::Bmo,
                f64::INFINITY,
            ))?,
        ),
    ];
    let mut parts = Vec::new();
    for (label, rep) in &runs {
        let max = rep.max_value("bmo_ratio");
        ensure(max.is_finite(), || format!("{label}: ratio {max}"))?;
        let base = bl.ceiling(&format!("c11/{label}/max_ratio"), max)?;
        parts.push(format!("{label} {max:.6} (baseline {base:.6}, {} inputs)", rep.rows.len()));
    }
    Ok(parts.join("; "))
}

fn c12_consistency(bl: &mut Baselines) -> Outcome {
    let d8 = arc(BallBasis::dyadic(8));
    let mut parts = Vec::new();
    let ek = e2s(conditional_expectations(&d8))?;
    let signs: Vec<Operator> = (0..4)
        .map(|i| e2s(martingale_transform(&d8, &e2s(random_signs(&d8, 120 + i))?)))
        .collect::<Result<_, _>>()?;
    // Members must share their exponents for the modulation to make sense.
    let g64 = arc(BallBasis::grid(64));
    let mut rng = rng_for(12, &[]);
    let mut sparse = |rho: f64| {
        let balls: Vec<usize> = (0..12).map(|_| rng.gen_range(0..g64.n_balls())).collect();
        e2s(sparse_operator(&g64, &balls, rho))
    };
    let fractional = vec![e2s(riesz_potential(&g64, 0.5))?, sparse(0.5)?, sparse(0.5)?];
    let classical = vec![e2s(discrete_hilbert(&g64))?, sparse(1.0)?];
    for (label, family) in [("ek", &ek), ("signs", &signs), ("fractional", &fractional), ("classical", &classical)] {
        ensure(family.iter().all(|t| t.params == family[0].params), || format!("{label}: mixed exponents"))?;
        let member = family.iter().map(|t| estimate(t, 12).l1).fold(0.0, f64::max);
        let sup = estimate(&e2s(maximal_modulation(family))?, 12).l1;
        ensure(sup <= member + 1e-9, || format!("{label}: L1 {sup} > member sup {member}"))?;
        parts.push(format!("{label}: L1 {sup:.6} <= {member:.6}"));
    }
    // Truncations of nonlinear operators cost one inner application per
    // distinct star, hence the smaller bases.
    let d6 = arc(BallBasis::dyadic(6));
    let ops = [
        ("martingale", e2s(martingale_transform(&d8, &e2s(random_signs(&d8, 121))?))?),
        ("square", e2s(square_function(&d6))?),
        ("ek_maximal", e2s(maximal_modulation(&e2s(conditional_expectations(&d6))?))?),
        ("hilbert", e2s(discrete_hilbert(&g64))?),
        ("riesz", e2s(riesz_potential(&g64, 0.5))?),
    ];
    for (label, op) in &ops {
        let c = estimate(op, 12);
        let s = estimate(&truncate(op), 12);
        let ratio = s.l0.max(s.l1).max(s.l2) / (c.l0 + c.l1);
        ensure(ratio.is_finite(), || format!("{label}: ratio {ratio}"))?;
        let base = bl.ceiling(&format!("c12/{label}/truncation_ratio"), ratio)?;
        parts.push(format!("{label}: T* ratio {ratio:.4} (C = {base:.4})"));
    }
    Ok(parts.join("; "))
}

fn tree_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c13_cli(_: &mut Baselines) -> Outcome {
    let repo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let scratch = std::env::temp_dir().join(format!("ballbasis-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&scratch);
    let mut trees = Vec::new();
    let mut total = Duration::ZERO;
    for (run, threads) in [(0, "1"), (1, "4")] {
        let out = scratch.join(format!("run{run}"));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ballbasis"));
        cmd.arg("all").args(["--seed", "2024", "--threads", threads, "--out"]).arg(&out);
        for name in SHIPPED {
            cmd.arg("--config").arg(repo.join(format!("configs/{name}.json")));
        }
        let t = Instant::now();
        let res = cmd.output().map_err(|e| e.to_string())?;
        total += t.elapsed();
        ensure(res.status.code() == Some(0), || {
            format!("run {run}: exit {:?}: {}", res.status.code(), String::from_utf8_lossy(&res.stderr))
        })?;
        trees.push(tree_bytes(&out));
    }
    let files = trees[0].len();
    ensure(files > 0, || "no reports written".into())?;
    ensure(trees[0] == trees[1], || "reports differ between runs".into())?;
    let _ = std::fs::remove_dir_all(&scratch);
    ensure(total < Duration::from_secs(15 * 60), || format!("took {total:?}"))?;
    Ok(format!("{files} identical files, {:.1}s for both runs", total.as_secs_f64()))
}

type Criterion = (&'static str, u64, fn(&mut Baselines) -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        ("axioms", 300, c1_axioms),
        ("maximal weak type", 60, c2_weak_type),
        ("oscillation and median oracles", 60, c3_oracles),
        ("covering", 30, c4_covering),
        ("sparse tree construction", 120, c5_sparse_trees),
        ("martingale disjointification", 30, c6_disjointify),
        ("sparse domination end to end", 300, c7_end_to_end),
        ("oscillation decompositions", 300, c8_lerner),
        ("good lambda", 60, c9_good_lambda),
        ("exponential decay", 120, c10_exponential),
        ("BMO boundedness", 120, c11_bmo),
        ("modulation and truncation constants", 60, c12_consistency),
        ("CLI end to end", 900, c13_cli),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut bl = Baselines::load();
    let mut failed = 0;
    for (i, (title, limit, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut bl)))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let dt = t.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(_) if dt >= *limit as f64 => Err(format!("{dt:.1}s exceeds the {limit}s limit")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS {title} ({dt:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {title} ({dt:.1}s): {why}");
            }
        }
    }
    bl.save();
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
