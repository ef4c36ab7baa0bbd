//! Experiment configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domination::DominateOptions;
use crate::error::{Error, Result};
use crate::functional::{Modulus, Params};
use crate::operators::OperatorSpec;
use crate::space::{basis_from_json, BallBasis};
use crate::verify::{BmoMode, CorpusSpec, DecayMode, Weight};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BasisSpec {
    Dyadic { levels: usize },
    Grid { n: usize },
    /// A basis document, relative to the config file.
    File { path: String },
}

impl BasisSpec {
    pub fn build(&self, base: &Path) -> Result<BallBasis> {
        match self {
            BasisSpec::Dyadic { levels } => BallBasis::dyadic(*levels),
            BasisSpec::Grid { n } => BallBasis::grid(*n),
            BasisSpec::File { path } => {
                let p = base.join(path);
                let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                basis_from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedOperator {
    pub name: String,
    pub spec: OperatorSpec,
}

fn default_budget() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            budget: default_budget(),
        }
    }
}

fn one() -> usize {
    1
}

/// Sparse trees over `F_B` = the `⌊fraction·|B|⌋` atoms of `B` with the
/// largest `|f|`, one tree per corpus case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsifyConfig {
    pub alpha: f64,
    /// Defaults to `alpha/2`.
    #[serde(default)]
    pub fraction: Option<f64>,
    #[serde(default = "one")]
    pub cases: usize,
    #[serde(default)]
    pub root: Option<usize>,
}

fn default_cases() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LernerConfig {
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanOscConfig {
    /// Operator names forming the family.
    pub family: Vec<String>,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominateConfig {
    /// Operators dominated by fractional means; all when absent.
    #[serde(default)]
    pub operators: Option<Vec<String>>,
    /// Leading corpus cases used.
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default)]
    pub ball: Option<usize>,
    #[serde(default)]
    pub options: DominateOptions,
    #[serde(default)]
    pub lerner: Option<LernerConfig>,
    #[serde(default)]
    pub mean_osc: Option<MeanOscConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { c: f64 },
    /// `(1 + i)^exponent`.
    Power { exponent: f64 },
    Values { values: Vec<f64> },
}

impl WeightSpec {
    pub fn build(&self, n: usize) -> Result<Weight> {
        match self {
            WeightSpec::Constant { c } => Weight::constant(n, *c),
            WeightSpec::Power { exponent } => Weight::power(n, *exponent),
            WeightSpec::Values { values } => Weight::new(values.clone()),
        }
    }
}

fn inf() -> f64 {
    f64::INFINITY
}

fn shift() -> f64 {
    1.0
}

fn triples() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Suite {
    /// The maximal function when no operator is named.
    WeakType {
        #[serde(default)]
        operator: Option<String>,
        #[serde(default)]
        params: Option<Params>,
    },
    GoodLambda {
        operator: String,
        #[serde(default)]
        c: Option<f64>,
        #[serde(default = "inf")]
        threshold: f64,
    },
    ExpDecay {
        operator: String,
        mode: DecayMode,
        #[serde(default)]
        ball: Option<usize>,
    },
    JohnNirenberg {},
    /// The Poisson-kernel maximal function when no operator is named.
    BmoBounded {
        #[serde(default)]
        operator: Option<String>,
        #[serde(default)]
        modulus: Option<Modulus>,
        mode: BmoMode,
        #[serde(default = "inf")]
        threshold: f64,
    },
    /// `f` against `g = ‖f‖ + shift`.
    StrongDomination {
        #[serde(default = "shift")]
        shift: f64,
        #[serde(default)]
        ball: Option<usize>,
    },
    Ap {
        weight: WeightSpec,
        p: f64,
        #[serde(default)]
        q: Option<f64>,
        #[serde(default)]
        operator: Option<String>,
    },
    DeltaGrowth {
        operator: String,
        #[serde(default = "triples")]
        triples: usize,
    },
}

impl Suite {
    pub fn label(&self) -> &'static str {
        match self {
            Suite::WeakType { .. } => "weak_type",
            Suite::GoodLambda { .. } => "good_lambda",
            Suite::ExpDecay { .. } => "exp_decay",
            Suite::JohnNirenberg {} => "john_nirenberg",
            Suite::BmoBounded { .. } => "bmo_bounded",
            Suite::StrongDomination { .. } => "strong_domination",
            Suite::Ap { .. } => "ap",
            Suite::DeltaGrowth { .. } => "delta_growth",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub check: Suite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub basis: BasisSpec,
    #[serde(default)]
    pub operators: Vec<NamedOperator>,
    #[serde(default)]
    pub corpus: Option<CorpusSpec>,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub sparsify: Option<SparsifyConfig>,
    #[serde(default)]
    pub dominate: Option<DominateConfig>,
    #[serde(default)]
    pub verify: Vec<SuiteConfig>,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Cross-references and ranges that the schema alone does not pin down.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return bad(format!("name {:?} must be a non-empty [A-Za-z0-9_-] slug", self.name));
        }
        let mut names: Vec<&str> = self.operators.iter().map(|o| o.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("operator {} is defined twice", w[0]));
        }
        let known = |n: &str| -> Result<()> {
            if names.binary_search(&n).is_ok() {
                Ok(())
            } else {
                Err(Error::Config(format!("unknown operator {n:?}")))
            }
        };
        if self.estimate.budget == 0 {
            return bad("estimate.budget must be at least 1".into());
        }
        if let Some(s) = &self.sparsify {
            if !(s.alpha > 0.0 && s.alpha < 1.0) {
                return bad(format!("sparsify.alpha = {} must lie in (0, 1)", s.alpha));
            }
            if let Some(fr) = s.fraction {
                if !(0.0..1.0).contains(&fr) {
                    return bad(format!("sparsify.fraction = {fr} must lie in [0, 1)"));
                }
            }
        }
        if let Some(d) = &self.dominate {
            for n in d.operators.iter().flatten() {
                known(n)?;
            }
            if let Some(m) = &d.mean_osc {
                if m.family.is_empty() {
                    return bad("dominate.mean_osc.family is empty".into());
                }
                for n in &m.family {
                    known(n)?;
                }
            }
        }
        let needs_corpus = self.sparsify.is_some()
            || self.dominate.is_some()
            || self.verify.iter().any(|s| !matches!(s.check, Suite::Ap { .. } | Suite::DeltaGrowth { .. }));
        if needs_corpus && self.corpus.as_ref().is_none_or(|c| c.families.is_empty()) {
            return bad("a non-empty corpus is required by the selected pipelines".into());
        }
        let mut suite_names: Vec<String> = Vec::new();
        for s in &self.verify {
            let name = s.name.clone().unwrap_or_else(|| s.check.label().to_string());
            if suite_names.contains(&name) {
                return bad(format!("suite name {name:?} is used twice"));
            }
            suite_names.push(name);
            match &s.check {
                Suite::WeakType { operator, params } => {
                    if let Some(o) = operator {
                        known(o)?;
                    }
                    if let Some(p) = params {
                        p.validate().map_err(|e| Error::Config(e.to_string()))?;
                    }
                }
                Suite::GoodLambda { operator, .. }
                | Suite::ExpDecay { operator, .. }
                | Suite::DeltaGrowth { operator, .. } => known(operator)?,
                Suite::BmoBounded { operator, .. } | Suite::Ap { operator, .. } => {
                    if let Some(o) = operator {
                        known(o)?;
                    }
                }
                Suite::JohnNirenberg {} | Suite::StrongDomination { .. } => {}
            }
        }
        Ok(())
    }

    pub fn suite_name(s: &SuiteConfig) -> String {
        s.name.clone().unwrap_or_else(|| s.check.label().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"name": "m", "basis": {"kind": "dyadic", "levels": 4}}"#;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.estimate.budget, 64);
        assert!(cfg.verify.is_empty());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"name": "m", "basis": {"kind": "dyadic", "levels": 4}, "colour": 1}"#;
        assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))));
        let text = r#"{"name": "m", "basis": {"kind": "dyadic", "levels": 4, "n": 2}}"#;
        assert!(ExperimentConfig::parse(text).is_err());
    }

    #[test]
    fn references_checked() {
        let text = r#"{"name": "m", "basis": {"kind": "dyadic", "levels": 4},
            "corpus": {"families": [{"generator": {"kind": "uniform"}, "count": 1}]},
            "verify": [{"check": {"kind": "good_lambda", "operator": "nope"}}]}"#;
        let err = ExperimentConfig::parse(text).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn corpus_required() {
        let text = r#"{"name": "m", "basis": {"kind": "dyadic", "levels": 4},
            "verify": [{"check": {"kind": "john_nirenberg"}}]}"#;
        assert!(ExperimentConfig::parse(text).is_err());
    }
}
