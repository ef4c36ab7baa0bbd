//! Seeded function corpora.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{NormKind, VecFunction};
use crate::seeds::rng_for;
use crate::space::BallBasis;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Generator {
    /// Independent `±1` values.
    RandomSigns {},
    /// Independent values uniform in `[−1, 1]`.
    Uniform {},
    /// Indicator of a uniformly chosen ball.
    Indicators {},
    /// `1` on an arithmetic progression of atoms; random spacing when absent.
    DeltaCombs {
        #[serde(default)]
        spacing: Option<usize>,
    },
    /// `ln(n/(|i − c| + 1/2))`, a sampled logarithmic singularity at `c`.
    LogSamples {
        #[serde(default)]
        anchor: Option<usize>,
    },
    /// Random combination of `terms` balanced two-sign functions on balls.
    HaarMixtures { terms: usize },
    /// `count` atoms with amplitudes in `[1, 8]`.
    Spikes { count: usize },
}

impl Generator {
    pub fn label(&self) -> &'static str {
        match self {
            Generator::RandomSigns {} => "random_signs",
            Generator::Uniform {} => "uniform",
            Generator::Indicators {} => "indicators",
            Generator::DeltaCombs { .. } => "delta_combs",
            Generator::LogSamples { .. } => "log_samples",
            Generator::HaarMixtures { .. } => "haar_mixtures",
            Generator::Spikes { .. } => "spikes",
        }
    }

    fn component(&self, basis: &BallBasis, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let n = basis.n_atoms();
        let mut v = vec![0.0; n];
        match *self {
            Generator::RandomSigns {} => v.iter_mut().for_each(|a| *a = if rng.gen_bool(0.5) { 1.0 } else { -1.0 }),
            Generator::Uniform {} => v.iter_mut().for_each(|a| *a = rng.gen_range(-1.0..=1.0)),
            Generator::Indicators {} => {
                let b = rng.gen_range(0..basis.n_balls());
                basis.ball(b).members.iter().for_each(|x| v[x] = 1.0);
            }
            Generator::DeltaCombs { spacing } => {
                let s = match spacing {
                    Some(0) => return Err(Error::Invalid("comb spacing must be positive".into())),
                    Some(s) => s,
                    None => rng.gen_range(2..=(n / 4).max(2)),
                };
                let offset = rng.gen_range(0..s);
                (offset..n).step_by(s).for_each(|x| v[x] = 1.0);
            }
            Generator::LogSamples { anchor } => {
                let c = match anchor {
                    Some(c) if c >= n => return Err(Error::UnknownAtom(c)),
                    Some(c) => c,
                    None => rng.gen_range(0..n),
                };
                for (i, a) in v.iter_mut().enumerate() {
                    *a = (n as f64 / (i.abs_diff(c) as f64 + 0.5)).ln();
                }
            }
            Generator::HaarMixtures { terms } => {
                let wide: Vec<usize> = (0..basis.n_balls()).filter(|&b| basis.ball(b).members.len() >= 2).collect();
                if wide.is_empty() {
                    return Err(Error::Invalid("no ball has two atoms".into()));
                }
                for _ in 0..terms {
                    let b = wide[rng.gen_range(0..wide.len())];
                    let c: f64 = rng.gen_range(-1.0..=1.0);
                    let atoms: Vec<usize> = basis.ball(b).members.iter().collect();
                    let half = atoms.len().div_ceil(2);
                    for (k, &x) in atoms.iter().enumerate() {
                        v[x] += if k < half { c } else { -c };
                    }
                }
            }
            Generator::Spikes { count } => {
                for _ in 0..count {
                    let x = rng.gen_range(0..n);
                    v[x] = rng.gen_range(1.0..=8.0);
                }
            }
        }
        Ok(v)
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub name: Option<String>,
    pub generator: Generator,
    pub count: usize,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default)]
    pub norm: NormKind,
}

impl FamilySpec {
    pub fn new(generator: Generator, count: usize) -> FamilySpec {
        FamilySpec {
            name: None,
            generator,
            count,
            dim: 1,
            norm: NormKind::Euclidean,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.generator.label().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default)]
    pub seed: u64,
    pub families: Vec<FamilySpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub id: String,
    pub family: usize,
    pub index: usize,
    pub f: VecFunction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub seed: u64,
    pub cases: Vec<Case>,
}

impl Corpus {
    /// Case `i` of family `k` draws from the stream `(seed, k, i)` only.
    pub fn generate(basis: &BallBasis, spec: &CorpusSpec) -> Result<Corpus> {
        let mut cases = Vec::new();
        for (k, fam) in spec.families.iter().enumerate() {
            if fam.dim == 0 {
                return Err(Error::Invalid(format!("family {} has dimension 0", fam.label())));
            }
            for i in 0..fam.count {
                let mut rng = rng_for(spec.seed, &[k as u64, i as u64]);
                let comps = (0..fam.dim)
                    .map(|_| fam.generator.component(basis, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                let n = basis.n_atoms();
                let values = (0..n).flat_map(|x| comps.iter().map(move |c| c[x])).collect();
                cases.push(Case {
                    id: format!("{}-{i:03}", fam.label()),
                    family: k,
                    index: i,
                    f: VecFunction::new(fam.dim, fam.norm, values)?,
                });
            }
        }
        Ok(Corpus {
            seed: spec.seed,
            cases,
        })
    }

    /// A single family of `count` cases.
    pub fn single(basis: &BallBasis, generator: Generator, count: usize, seed: u64) -> Result<Corpus> {
        Corpus::generate(
            basis,
            &CorpusSpec {
                seed,
                families: vec![FamilySpec::new(generator, count)],
            },
        )
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }
}
