//! Experiment definitions, read from TOML.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::CocoaAggregation;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fed_svrg::StepsizeRule;
use crate::synth::GenConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Drives data generation, local sampling and reshuffling.
    #[serde(default)]
    pub seed: u64,
    /// Communication rounds per run.
    pub rounds: usize,
    /// Metrics are recorded every `eval_every` rounds, plus round 0 and the
    /// last round.
    #[serde(default = "one")]
    pub eval_every: usize,
    /// Where `run` writes its files. Not serialized, so it does not enter
    /// the config hash or the written metadata.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    /// Regularization strength; `1/n` when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub use_bias: bool,
    #[serde(default)]
    pub exec: Exec,
    #[serde(default)]
    pub opt: OptSettings,
    pub data: DataSource,
    pub algorithms: Vec<AlgorithmSpec>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptSettings {
    /// Gradient-norm tolerance of the reference solve.
    pub tol: f64,
    pub max_evaluations: usize,
}

impl Default for OptSettings {
    fn default() -> Self {
        OptSettings {
            tol: 1e-10,
            max_evaluations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Synthetic data; the generator seed is replaced by the experiment seed.
    Generate(GenConfig),
    /// LIBSVM files plus a partition file of `<example> <node>` lines.
    Load {
        train: PathBuf,
        partition: PathBuf,
        #[serde(default)]
        test: Option<PathBuf>,
        #[serde(default)]
        num_features: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmSpec {
    /// The reference optimum, emitted as a single record.
    Opt(OptSpec),
    /// Federated SVRG on the given partition.
    Svrgfo(SvrgSpec),
    /// Federated SVRG after randomly reassigning examples to nodes (node
    /// sizes kept).
    SvrgfoReshuffled(SvrgSpec),
    /// Plain distributed SVRG: fixed stepsize, uniform averaging.
    SvrgNaive(NaiveSpec),
    /// Full-batch gradient descent, one gradient per round.
    Gd(GdSpec),
    Cocoa(CocoaSpec),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrgSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub stepsizes: Vec<f64>,
    /// Local steps per round; the mean node size when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_steps: Option<usize>,
    #[serde(default = "inverse_nk")]
    pub stepsize_rule: StepsizeRule,
    #[serde(default)]
    pub scale_regularizer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaiveSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub stepsizes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Fixed steps, or initial steps of the backtracking search.
    pub steps: Vec<f64>,
    #[serde(default = "yes")]
    pub line_search: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocoaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Coordinate steps per node per round.
    pub local_iters: Vec<usize>,
    #[serde(default = "average")]
    pub aggregation: CocoaAggregation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_prime: Option<f64>,
}

fn yes() -> bool {
    true
}

fn average() -> CocoaAggregation {
    CocoaAggregation::Average
}

fn inverse_nk() -> StepsizeRule {
    StepsizeRule::InverseNk
}

impl AlgorithmSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AlgorithmSpec::Opt(_) => "opt",
            AlgorithmSpec::Svrgfo(_) => "svrgfo",
            AlgorithmSpec::SvrgfoReshuffled(_) => "svrgfo_reshuffled",
            AlgorithmSpec::SvrgNaive(_) => "svrg_naive",
            AlgorithmSpec::Gd(_) => "gd",
            AlgorithmSpec::Cocoa(_) => "cocoa",
        }
    }

    /// Identifier used in CSV rows and file names.
    pub fn id(&self) -> &str {
        let name = match self {
            AlgorithmSpec::Opt(s) => &s.name,
            AlgorithmSpec::Svrgfo(s) | AlgorithmSpec::SvrgfoReshuffled(s) => &s.name,
            AlgorithmSpec::SvrgNaive(s) => &s.name,
            AlgorithmSpec::Gd(s) => &s.name,
            AlgorithmSpec::Cocoa(s) => &s.name,
        };
        name.as_deref().unwrap_or(self.kind())
    }

    /// Number of hyperparameter settings swept.
    pub fn grid_len(&self) -> usize {
        match self {
            AlgorithmSpec::Opt(_) => 1,
            AlgorithmSpec::Svrgfo(s) | AlgorithmSpec::SvrgfoReshuffled(s) => s.stepsizes.len(),
            AlgorithmSpec::SvrgNaive(s) => s.stepsizes.len(),
            AlgorithmSpec::Gd(s) => s.steps.len(),
            AlgorithmSpec::Cocoa(s) => s.local_iters.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let id = self.id();
        let positive = |xs: &[f64], what: &str| {
            if xs.iter().all(|&x| x > 0.0 && x.is_finite()) {
                Ok(())
            } else {
                Err(Error::Config(format!("{id}: {what} must be positive and finite")))
            }
        };
        let steps = |m: Option<usize>| {
            if m == Some(0) {
                Err(Error::Config(format!("{id}: local_steps must be >= 1")))
            } else {
                Ok(())
            }
        };
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!("algorithm name {id:?} must match [A-Za-z0-9_-]+")));
        }
        if self.grid_len() == 0 {
            return Err(Error::Config(format!("{id}: empty hyperparameter grid")));
        }
        match self {
            AlgorithmSpec::Opt(_) => Ok(()),
            AlgorithmSpec::Svrgfo(s) | AlgorithmSpec::SvrgfoReshuffled(s) => {
                steps(s.local_steps)?;
                positive(&s.stepsizes, "stepsizes")
            }
            AlgorithmSpec::SvrgNaive(s) => {
                steps(s.local_steps)?;
                positive(&s.stepsizes, "stepsizes")
            }
            AlgorithmSpec::Gd(s) => positive(&s.steps, "steps"),
            AlgorithmSpec::Cocoa(s) => match s.sigma_prime {
                Some(sp) if !(sp > 0.0 && sp.is_finite()) => {
                    Err(Error::Config(format!("{id}: sigma_prime must be > 0")))
                }
                _ => Ok(()),
            },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda must be >= 0, got {l}")));
            }
        }
        if !(self.opt.tol > 0.0) {
            return Err(Error::Config("opt.tol must be > 0".into()));
        }
        if let DataSource::Generate(g) = &self.data {
            g.validate()?;
        }
        let mut seen = BTreeSet::new();
        for a in &self.algorithms {
            a.validate()?;
            if !seen.insert(a.id()) {
                return Err(Error::Config(format!("duplicate algorithm name {:?}", a.id())));
            }
        }
        Ok(())
    }

    /// The desk-scale comparison: K = 100 skewed, unbalanced nodes and the
    /// five-method roster with its stepsize grids.
    pub fn desk_default(seed: u64) -> Self {
        let svrg = |stepsizes: &[f64]| SvrgSpec {
            name: None,
            stepsizes: stepsizes.to_vec(),
            local_steps: None,
            stepsize_rule: StepsizeRule::InverseNk,
            scale_regularizer: false,
        };
        ExperimentConfig {
            name: "desk".into(),
            seed,
            rounds: 30,
            eval_every: 1,
            output_dir: PathBuf::from("results/desk"),
            lambda: None,
            use_bias: false,
            exec: Exec::default(),
            opt: OptSettings::default(),
            data: DataSource::Generate(GenConfig {
                seed,
                ..GenConfig::default()
            }),
            algorithms: vec![
                AlgorithmSpec::Opt(OptSpec::default()),
                AlgorithmSpec::Gd(GdSpec {
                    name: None,
                    steps: DESK_GD_STEPS.to_vec(),
                    line_search: true,
                }),
                AlgorithmSpec::Cocoa(CocoaSpec {
                    name: None,
                    local_iters: DESK_COCOA_ITERS.to_vec(),
                    aggregation: CocoaAggregation::Average,
                    sigma_prime: None,
                }),
                AlgorithmSpec::Svrgfo(svrg(DESK_STEPSIZES)),
                AlgorithmSpec::SvrgfoReshuffled(svrg(DESK_STEPSIZES)),
                AlgorithmSpec::SvrgNaive(NaiveSpec {
                    name: None,
                    stepsizes: DESK_STEPSIZES.to_vec(),
                    local_steps: None,
                }),
            ],
        }
    }
}

/// Stepsize grid shared by the three SVRG variants in the desk config.
pub const DESK_STEPSIZES: &[f64] = &[0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2, 1.5, 2.0];
pub const DESK_GD_STEPS: &[f64] = &[1.0, 16.0, 256.0, 4096.0];
pub const DESK_COCOA_ITERS: &[usize] = &[100, 1000, 5000];
