//! Pipeline execution and report files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use super::config::{ExperimentConfig, Suite};
use crate::domination::{
    dominate_bo, dominate_mean_osc, family_constants, lerner_decompose, verify_sparse_bound, SparseBound,
};
use crate::error::{Error, Result};
use crate::functional::{build_regular_family, Completeness, Params, VecFunction};
use crate::operators::{estimate_bo_constants, BOConstants, Operator};
use crate::seeds::mix;
use crate::space::{check_axioms, BallBasis};
use crate::sparsify::{alpha_threshold, sparsify_tree, top_atoms};
use crate::verify::{
    ap_characteristics, bmo_bounded_report, default_alpha_grid, delta_growth_report, exp_decay_report,
    good_lambda_report, john_nirenberg_report, normalize, relabel, strong_domination_check, weak_type_report,
    BmoTarget, Corpus, GoodLambdaOptions, Report, WeakTarget,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    CheckBasis,
    Estimate,
    Sparsify,
    Dominate,
    Verify,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::CheckBasis, Stage::Estimate, Stage::Sparsify, Stage::Dominate, Stage::Verify];

    pub fn label(self) -> &'static str {
        match self {
            Stage::CheckBasis => "check-basis",
            Stage::Estimate => "estimate",
            Stage::Sparsify => "sparsify",
            Stage::Dominate => "dominate",
            Stage::Verify => "verify",
        }
    }
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Files are collected in memory and written at the end, so a run either
/// produces its whole report tree or reports the path that failed.
pub struct Runner {
    pub config: ExperimentConfig,
    pub seed: u64,
    basis: Arc<BallBasis>,
    ops: BTreeMap<String, Operator>,
    consts: BTreeMap<String, BOConstants>,
    corpus: Option<Corpus>,
    suite: Option<String>,
    pub checks: Vec<Check>,
    files: Vec<(PathBuf, String)>,
}

/// Stream labels mixed into the run seed.
const SEED_CORPUS: u64 = 1;
const SEED_ESTIMATE: u64 = 2;
const SEED_GROWTH: u64 = 3;

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

impl Runner {
    /// Builds the basis, operators and corpus. Failures here are
    /// configuration errors.
    pub fn new(config: ExperimentConfig, seed: u64, base: &Path, suite: Option<String>) -> Result<Runner> {
        let cfg_err = |e: Error| match e {
            Error::Config(_) | Error::Io { .. } => e,
            other => Error::Config(other.to_string()),
        };
        let basis = Arc::new(config.basis.build(base).map_err(cfg_err)?);
        let mut ops = BTreeMap::new();
        for o in &config.operators {
            let op = o
                .spec
                .build(&basis)
                .map_err(|e| Error::Config(format!("operator {}: {e}", o.name)))?
                .with_name(o.name.clone());
            ops.insert(o.name.clone(), op);
        }
        let corpus = match &config.corpus {
            Some(spec) => {
                let mut spec = spec.clone();
                spec.seed = mix(mix(seed, SEED_CORPUS), spec.seed);
                Some(Corpus::generate(&basis, &spec).map_err(cfg_err)?)
            }
            None => None,
        };
        if let Some(s) = &suite {
            if !config.verify.iter().any(|c| &ExperimentConfig::suite_name(c) == s) {
                return Err(Error::Config(format!("no verify suite named {s:?}")));
            }
        }
        Ok(Runner {
            config,
            seed,
            basis,
            ops,
            consts: BTreeMap::new(),
            corpus,
            suite,
            checks: Vec::new(),
            files: Vec::new(),
        })
    }

    fn corpus(&self) -> &Corpus {
        self.corpus.as_ref().expect("validated: the corpus exists")
    }

    fn op(&self, name: &str) -> &Operator {
        &self.ops[name]
    }

    fn default_ball(&self) -> usize {
        self.basis.whole().unwrap_or(0)
    }

    fn constants(&mut self, name: &str) -> Result<BOConstants> {
        if let Some(c) = self.consts.get(name) {
            return Ok(c.clone());
        }
        let idx = self.config.operators.iter().position(|o| o.name == name).expect("known operator") as u64;
        let c = estimate_bo_constants(&self.ops[name], self.config.estimate.budget, mix(mix(self.seed, SEED_ESTIMATE), idx))?;
        self.consts.insert(name.to_string(), c.clone());
        Ok(c)
    }

    fn file(&mut self, rel: impl AsRef<Path>, contents: String) {
        self.files.push((rel.as_ref().to_path_buf(), contents));
    }

    fn json_file(&mut self, rel: impl AsRef<Path>, v: Value) {
        let mut s = serde_json::to_string_pretty(&normalize(v)).expect("documents serialize");
        s.push('\n');
        self.file(rel, s);
    }

    fn check(&mut self, name: String, pass: bool, detail: String) {
        self.checks.push(Check { name, pass, detail });
    }

    fn report(&mut self, dir: &str, rep: &Report) {
        let base = PathBuf::from(dir).join(slug(&rep.name));
        self.file(base.with_extension("json"), rep.to_json());
        self.file(base.with_extension("csv"), rep.rows_csv());
        self.file(base.with_extension("txt"), rep.to_text());
        for (case, csv) in rep.tail_csvs() {
            self.file(base.join("tails").join(format!("{}.csv", slug(&case))), csv);
        }
        let failing = rep.failing();
        let detail = match failing.first() {
            Some(r) => format!("{} failing rows, first {} {}", failing.len(), r.case, r.statistic),
            None if !rep.pass => "report flagged".to_string(),
            None => String::new(),
        };
        self.check(format!("{dir}/{}", rep.name), rep.pass, detail);
    }

    pub fn run(&mut self, stages: &[Stage]) {
        for &s in stages {
            let name = s.label();
            let out = match s {
                Stage::CheckBasis => self.check_basis(),
                Stage::Estimate => self.estimate(),
                Stage::Sparsify => self.sparsify(),
                Stage::Dominate => self.dominate(),
                Stage::Verify => self.verify(),
            };
            if let Err(e) = out {
                self.check(name.to_string(), false, e.to_string());
            }
        }
    }

    fn check_basis(&mut self) -> Result<()> {
        let rep = check_axioms(&self.basis);
        let pass = rep.pass;
        let v = serde_json::to_value(&rep)?;
        self.json_file("check-basis.json", v);
        self.check("check-basis/axioms".into(), pass, String::new());
        Ok(())
    }

    fn estimate(&mut self) -> Result<()> {
        let names: Vec<String> = self.ops.keys().cloned().collect();
        let mut doc = serde_json::Map::new();
        for n in names {
            let c = self.constants(&n)?;
            let finite = c.l0.is_finite() && c.l1.is_finite() && c.l2.is_finite();
            doc.insert(n.clone(), serde_json::to_value(&c)?);
            self.check(format!("estimate/{n}"), finite, String::new());
        }
        self.json_file("estimate.json", Value::Object(doc));
        Ok(())
    }

    fn sparsify(&mut self) -> Result<()> {
        let Some(cfg) = self.config.sparsify.clone() else {
            return Ok(());
        };
        let basis = Arc::clone(&self.basis);
        let root = cfg.root.unwrap_or_else(|| self.default_ball());
        let fraction = cfg.fraction.unwrap_or(cfg.alpha / 2.0);
        let cases: Vec<(String, Vec<f64>)> = self
            .corpus()
            .cases
            .iter()
            .take(cfg.cases)
            .map(|c| (c.id.clone(), c.f.norms()))
            .collect();
        let mut summary = Vec::new();
        for (id, vals) in cases {
            let fmap = |b: usize| top_atoms(&basis, &vals, fraction, b);
            let name = format!("sparsify/{id}");
            match sparsify_tree(&basis, &fmap, root, cfg.alpha) {
                Ok(tree) => {
                    self.json_file(format!("sparsify/{}.json", slug(&id)), tree.to_json(None));
                    self.file(format!("sparsify/{}.dot", slug(&id)), tree.to_dot());
                    summary.push(json!({
                        "case": id,
                        "nodes": tree.len(),
                        "depth": tree.depth(),
                        "guaranteed": tree.guaranteed,
                        "sparse_gamma": tree.sparse_gamma,
                        "warnings": tree.warnings,
                    }));
                    self.check(name, true, tree.warnings.join("; "));
                }
                Err(e) => {
                    summary.push(json!({ "case": id, "error": e.to_string() }));
                    self.check(name, false, e.to_string());
                }
            }
        }
        let threshold = alpha_threshold(&basis);
        let mut warnings = Vec::new();
        if cfg.alpha >= threshold {
            warnings.push(format!(
                "alpha = {} is not below the guaranteed threshold {:.6e}",
                cfg.alpha, threshold
            ));
        }
        self.json_file(
            "sparsify/summary.json",
            json!({
                "alpha": cfg.alpha,
                "alpha_threshold": threshold,
                "fraction": fraction,
                "root": root,
                "warnings": warnings,
                "trees": summary,
            }),
        );
        Ok(())
    }

    fn bound_doc(case: &str, bound: &SparseBound, rep: &crate::domination::VerificationReport) -> Value {
        json!({
            "case": case,
            "constant": bound.constant,
            "nodes": bound.family.len(),
            "lambda": bound.lambda,
            "beta": bound.beta,
            "verification": rep,
            "bound": bound.to_json(),
        })
    }

    fn dominate(&mut self) -> Result<()> {
        let Some(cfg) = self.config.dominate.clone() else {
            return Ok(());
        };
        let ball = cfg.ball.unwrap_or_else(|| self.default_ball());
        let names = cfg.operators.clone().unwrap_or_else(|| self.ops.keys().cloned().collect());
        let cases: Vec<(String, VecFunction)> = self
            .corpus()
            .cases
            .iter()
            .take(cfg.cases)
            .map(|c| (c.id.clone(), c.f.clone()))
            .collect();
        let basis = Arc::clone(&self.basis);
        let domain = basis.ball_set(ball);
        for n in names {
            let consts = self.constants(&n)?;
            let op = self.op(&n).clone();
            let mut docs = Vec::new();
            for (id, f) in &cases {
                let f = f.restricted(&domain);
                let name = format!("dominate/{n}/{id}");
                match dominate_bo(&op, &consts, &f, ball, &cfg.options) {
                    Ok(bound) => {
                        let rep = verify_sparse_bound(&basis, &bound, &bound.target, ball);
                        self.check(name, rep.pass, format!("C = {}", crate::verify::fmt_num(bound.constant)));
                        docs.push(Self::bound_doc(id, &bound, &rep));
                    }
                    Err(e) => {
                        self.check(name, false, e.to_string());
                        docs.push(json!({ "case": id, "error": e.to_string() }));
                    }
                }
            }
            self.json_file(format!("dominate/{}.json", slug(&n)), Value::Array(docs));
        }
        if let Some(l) = &cfg.lerner {
            let mut docs = Vec::new();
            for (id, f) in &cases {
                let name = format!("dominate/lerner/{id}");
                if f.as_scalar().is_none() {
                    self.check(name, false, "oscillation decomposition needs scalar inputs".into());
                    continue;
                }
                match lerner_decompose(&basis, f, ball, l.beta) {
                    Ok(bound) => {
                        let rep = verify_sparse_bound(&basis, &bound, &bound.target, ball);
                        self.check(name, rep.pass, format!("C = {}", crate::verify::fmt_num(bound.constant)));
                        docs.push(Self::bound_doc(id, &bound, &rep));
                    }
                    Err(e) => {
                        self.check(name, false, e.to_string());
                        docs.push(json!({ "case": id, "error": e.to_string() }));
                    }
                }
            }
            self.json_file("dominate/lerner.json", Value::Array(docs));
        }
        if let Some(m) = &cfg.mean_osc {
            let family: Vec<Operator> = m.family.iter().map(|n| self.op(n).clone()).collect();
            let fc = family_constants(&family, self.config.estimate.budget, mix(self.seed, SEED_ESTIMATE))?;
            let mut docs = Vec::new();
            for (id, f) in &cases {
                let name = format!("dominate/mean_osc/{id}");
                match dominate_mean_osc(&family, &fc, f, ball, m.beta) {
                    Ok(bound) => {
                        let rep = verify_sparse_bound(&basis, &bound, &bound.target, ball);
                        self.check(name, rep.pass, format!("C = {}", crate::verify::fmt_num(bound.constant)));
                        docs.push(Self::bound_doc(id, &bound, &rep));
                    }
                    Err(e) => {
                        self.check(name, false, e.to_string());
                        docs.push(json!({ "case": id, "error": e.to_string() }));
                    }
                }
            }
            self.json_file("dominate/mean_osc.json", Value::Array(docs));
        }
        Ok(())
    }

    fn verify(&mut self) -> Result<()> {
        let suites = self.config.verify.clone();
        for s in suites {
            let name = ExperimentConfig::suite_name(&s);
            if self.suite.as_ref().is_some_and(|want| want != &name) {
                continue;
            }
            match self.suite_report(&s.check) {
                Ok(mut rep) => {
                    rep.name = name;
                    self.report("verify", &rep);
                }
                Err(e) => self.check(format!("verify/{name}"), false, e.to_string()),
            }
        }
        Ok(())
    }

    fn suite_report(&mut self, suite: &Suite) -> Result<Report> {
        let basis = Arc::clone(&self.basis);
        Ok(match suite {
            Suite::WeakType { operator, params } => {
                let p = params.unwrap_or_else(|| match operator {
                    Some(o) => self.op(o).params,
                    None => Params::classical(1.0),
                });
                let target = match operator {
                    Some(o) => WeakTarget::Operator(self.op(o)),
                    None => WeakTarget::Maximal,
                };
                weak_type_report(target, self.corpus(), &basis, &p)?
            }
            Suite::GoodLambda { operator, c, threshold } => {
                let consts = self.constants(operator)?;
                let opts = GoodLambdaOptions {
                    c: c.unwrap_or(GoodLambdaOptions::default().c),
                    threshold: *threshold,
                };
                good_lambda_report(self.op(operator), &consts, self.corpus(), &basis, &opts)?
            }
            Suite::ExpDecay { operator, mode, ball } => {
                let ball = ball.unwrap_or_else(|| self.default_ball());
                let op = self.op(operator);
                let parts = self
                    .corpus()
                    .cases
                    .iter()
                    .map(|c| exp_decay_report(op, &c.f, ball, *mode).map(|r| relabel(r, &c.id)))
                    .collect::<Result<Vec<_>>>()?;
                Report::merge("exp_decay", parts)
            }
            Suite::JohnNirenberg {} => {
                let mut parts = Vec::new();
                let mut skipped = Vec::new();
                for c in &self.corpus().cases {
                    match john_nirenberg_report(&c.f, &basis) {
                        Ok(r) => parts.push(relabel(r, &c.id)),
                        Err(Error::ZeroBmoNorm) => skipped.push(c.id.clone()),
                        Err(e) => return Err(e),
                    }
                }
                let mut rep = Report::merge("john_nirenberg", parts);
                rep.stat("excluded_zero_bmo", skipped.len());
                rep
            }
            Suite::BmoBounded {
                operator,
                modulus,
                mode,
                threshold,
            } => match operator {
                Some(o) => bmo_bounded_report(BmoTarget::Operator(self.op(o)), self.corpus(), &basis, *mode, *threshold)?,
                None => {
                    let fam = build_regular_family(&basis, modulus.unwrap_or_default())?;
                    let complete = Completeness::all_balls(&basis);
                    let target = BmoTarget::GeneralMaximal {
                        family: &fam,
                        complete: &complete,
                    };
                    bmo_bounded_report(target, self.corpus(), &basis, *mode, *threshold)?
                }
            },
            Suite::StrongDomination { shift, ball } => {
                let ball = ball.unwrap_or_else(|| self.default_ball());
                let parts = self
                    .corpus()
                    .cases
                    .iter()
                    .map(|c| {
                        let g = VecFunction::scalar(c.f.norms().iter().map(|v| v + shift).collect());
                        strong_domination_check(&c.f, &g, &basis, ball, &default_alpha_grid()).map(|r| relabel(r, &c.id))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Report::merge("strong_domination", parts)
            }
            Suite::Ap {
                weight,
                p,
                q,
                operator,
            } => {
                let w = weight.build(basis.n_atoms())?;
                let norm_of = operator.as_ref().map(|o| (self.op(o), self.corpus.as_ref()));
                ap_characteristics(&w, &basis, *p, *q, norm_of)?
            }
            Suite::DeltaGrowth { operator, triples } => {
                let consts = self.constants(operator)?;
                delta_growth_report(self.op(operator), &consts, *triples, mix(self.seed, SEED_GROWTH))?
            }
        })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> Value {
        json!({
            "name": self.config.name,
            "seed": self.seed,
            "pass": self.passed(),
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
        })
    }

    pub fn summary_text(&self) -> String {
        let mut s = format!(
            "{} (seed {}): {}\n",
            self.config.name,
            self.seed,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            s.push_str(&format!("  [{}] {}", if c.pass { "pass" } else { "FAIL" }, c.name));
            if !c.detail.is_empty() {
                s.push_str(&format!(": {}", c.detail));
            }
            s.push('\n');
        }
        s
    }

    /// Writes every collected file plus the summaries under `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        let summary = self.summary();
        self.json_file("summary.json", summary);
        let text = self.summary_text();
        self.file("summary.txt", text);
        for (rel, contents) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

