//! Runs an [`ExperimentConfig`]: reference optimum first, then every
//! algorithm over its grid, keeping the best curve per algorithm.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::info;
use serde::Serialize;

use crate::baselines::{cocoa, gd, solve_optimum, CocoaConfig, GdConfig, GdStep, OptimumConfig};
use crate::checkpoint::{config_hash, save_checkpoint};
use crate::error::{Error, Result};
use crate::fed_svrg::{self, FedSvrgConfig, Variant};
use crate::libsvm::load_libsvm;
use crate::metrics::{to_csv, MetricsRecorder, RoundMetrics, RoundSink};
use crate::objective::LogisticObjective;
use crate::partition::Partition;
use crate::rng::derive_seed;
use crate::sparse::{DenseModel, SparseDataset};
use crate::synth::{generate_with, GenConfig};

use super::config::{AlgorithmSpec, DataSource, ExperimentConfig};

const RESHUFFLE_STREAM: u64 = 0x7265_7368;

/// Training data, optional test data and the node assignment.
#[derive(Debug, Clone)]
pub struct Problem {
    pub train: SparseDataset,
    pub test: Option<SparseDataset>,
    pub partition: Partition,
}

impl Problem {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.data {
            DataSource::Generate(g) => {
                let gen = GenConfig {
                    seed: cfg.seed,
                    ..g.clone()
                };
                let data = generate_with(&gen, cfg.exec)?;
                Ok(Problem {
                    train: data.train,
                    test: Some(data.test),
                    partition: data.partition,
                })
            }
            DataSource::Load {
                train,
                partition,
                test,
                num_features,
            } => {
                let train = load_libsvm(train, *num_features)?;
                let d = train.num_features();
                let test = test.as_ref().map(|t| load_libsvm(t, Some(d))).transpose()?;
                let partition = Partition::load(partition)?;
                partition.check_dataset(&train)?;
                Ok(Problem { train, test, partition })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock time per row; off gives byte-identical reruns.
    pub timing: bool,
}

/// One hyperparameter setting of one algorithm.
#[derive(Debug, Clone)]
pub struct GridRun {
    /// Human-readable setting, e.g. `h=0.5`.
    pub setting: String,
    pub rows: Vec<RoundMetrics>,
    pub diverged: bool,
    pub final_model: Option<DenseModel>,
    /// CoCoA only: duality gap after every round, starting at round 0.
    pub duality_gaps: Option<Vec<f64>>,
}

impl GridRun {
    pub fn final_suboptimality(&self) -> f64 {
        if self.diverged {
            return f64::INFINITY;
        }
        self.rows.last().map_or(f64::INFINITY, |r| r.suboptimality)
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmRun {
    pub id: String,
    pub kind: &'static str,
    pub grid: Vec<GridRun>,
    /// Index into `grid` of the selected curve.
    pub best: usize,
}

impl AlgorithmRun {
    pub fn best(&self) -> &GridRun {
        &self.grid[self.best]
    }
}

/// Lowest final suboptimality wins; diverged runs rank last; ties keep grid
/// order.
pub fn select_best(grid: &[GridRun]) -> usize {
    let mut best = 0;
    for (i, g) in grid.iter().enumerate().skip(1) {
        let (a, b) = (g.final_suboptimality(), grid[best].final_suboptimality());
        if a < b || (b.is_nan() && !a.is_nan()) {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct OptSummary {
    pub f_star: f64,
    pub grad_norm: f64,
    pub evaluations: usize,
    pub test_error: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub lambda: f64,
    pub num_examples: usize,
    pub num_features: usize,
    pub num_nodes: usize,
    pub test_examples: usize,
    pub opt: OptSummary,
    pub opt_model: DenseModel,
    pub runs: Vec<AlgorithmRun>,
}

impl ExperimentResult {
    pub fn f_star(&self) -> f64 {
        self.opt.f_star
    }

    pub fn run(&self, id: &str) -> Option<&AlgorithmRun> {
        self.runs.iter().find(|r| r.id == id)
    }
}

/// Forwards only rounds on the evaluation cadence (and the last round).
struct Cadence<'s, 'r> {
    inner: &'s mut MetricsRecorder<'r>,
    every: usize,
    last: usize,
}

impl RoundSink for Cadence<'_, '_> {
    fn record(&mut self, round: usize, w: &DenseModel, objective: f64) {
        if round.is_multiple_of(self.every) || round == self.last {
            self.inner.record(round, w, objective);
        }
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    obj: LogisticObjective<'a>,
    test: Option<&'a SparseDataset>,
    partition: &'a Partition,
    f_star: f64,
    timing: bool,
}

impl Context<'_> {
    fn recorder(&self, id: &str) -> MetricsRecorder<'_> {
        let rec = MetricsRecorder::new(id, &self.obj)
            .with_f_star(self.f_star)
            .with_timing(self.timing);
        match self.test {
            Some(t) => rec.with_test(t),
            None => rec,
        }
    }

    /// Runs `body` with a recorder that already holds round 0, converting
    /// divergence into a flagged, truncated curve.
    fn track(
        &self,
        id: &str,
        setting: String,
        body: impl FnOnce(&mut dyn RoundSink) -> Result<(DenseModel, Option<Vec<f64>>)>,
    ) -> Result<GridRun> {
        let mut rec = self.recorder(id);
        rec.record_initial(&DenseModel::zeros(self.obj.dim()))?;
        let outcome = {
            let mut sink = Cadence {
                inner: &mut rec,
                every: self.cfg.eval_every,
                last: self.cfg.rounds,
            };
            body(&mut sink)
        };
        match outcome {
            Ok((w, gaps)) => Ok(GridRun {
                setting,
                rows: rec.into_rows(),
                diverged: false,
                final_model: Some(w),
                duality_gaps: gaps,
            }),
            Err(Error::Diverged { round, .. }) => {
                info!("{id} {setting}: diverged at round {round}");
                rec.record_divergence(round);
                Ok(GridRun {
                    setting,
                    rows: rec.into_rows(),
                    diverged: true,
                    final_model: None,
                    duality_gaps: None,
                })
            }
            Err(e) => Err(e),
        }
    }

    fn run_algorithm(&self, spec: &AlgorithmSpec, reshuffled: &Partition) -> Result<Vec<GridRun>> {
        let id = spec.id();
        let cfg = self.cfg;
        let (obj, rounds, seed) = (&self.obj, cfg.rounds, cfg.seed);
        match spec {
            AlgorithmSpec::Opt(_) => unreachable!("handled by the caller"),
            AlgorithmSpec::Svrgfo(s) | AlgorithmSpec::SvrgfoReshuffled(s) => {
                let part = match spec {
                    AlgorithmSpec::Svrgfo(_) => self.partition,
                    _ => reshuffled,
                };
                s.stepsizes
                    .iter()
                    .map(|&h| {
                        let fc = FedSvrgConfig {
                            local_steps: s.local_steps,
                            stepsize_rule: s.stepsize_rule,
                            scale_regularizer: s.scale_regularizer,
                            ..FedSvrgConfig::modified(h, rounds, seed)
                        };
                        self.track(id, format!("h={h}"), |sink| {
                            Ok((fed_svrg::run(obj, part, &fc, sink)?, None))
                        })
                    })
                    .collect()
            }
            AlgorithmSpec::SvrgNaive(s) => s
                .stepsizes
                .iter()
                .map(|&h| {
                    let fc = FedSvrgConfig {
                        local_steps: s.local_steps,
                        ..FedSvrgConfig::naive(h, rounds, seed)
                    };
                    debug_assert_eq!(fc.variant, Variant::Naive);
                    self.track(id, format!("h={h}"), |sink| {
                        Ok((fed_svrg::run(obj, self.partition, &fc, sink)?, None))
                    })
                })
                .collect(),
            AlgorithmSpec::Gd(s) => s
                .steps
                .iter()
                .map(|&step| {
                    let (step, setting) = if s.line_search {
                        (GdStep::backtracking(step), format!("backtracking_from={step}"))
                    } else {
                        (GdStep::Fixed { step }, format!("step={step}"))
                    };
                    let gc = GdConfig { step, rounds };
                    self.track(id, setting, |sink| Ok((gd::run(obj, &gc, sink)?, None)))
                })
                .collect(),
            AlgorithmSpec::Cocoa(s) => s
                .local_iters
                .iter()
                .map(|&local_iters| {
                    let cc = CocoaConfig {
                        local_iters,
                        aggregation: s.aggregation,
                        sigma_prime: s.sigma_prime,
                        rounds,
                        seed,
                    };
                    self.track(id, format!("H={local_iters}"), |sink| {
                        let out = cocoa::run(obj, self.partition, &cc, sink)?;
                        Ok((out.model, Some(out.gaps)))
                    })
                })
                .collect(),
        }
    }
}

/// Solves the reference optimum, then runs every configured algorithm.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let problem = Problem::load(cfg)?;
    run_on(cfg, &problem, opts)
}

/// [`run_experiment`] on already loaded data.
pub fn run_on(cfg: &ExperimentConfig, problem: &Problem, opts: RunOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let train = &problem.train;
    problem.partition.check_dataset(train)?;
    let lambda = cfg.lambda.unwrap_or(1.0 / train.num_examples() as f64);
    let obj = LogisticObjective::new(train, lambda)?
        .with_bias(cfg.use_bias)
        .with_exec(cfg.exec);

    let opt_cfg = OptimumConfig {
        max_evaluations: cfg.opt.max_evaluations,
        seed: cfg.seed,
        ..OptimumConfig::with_tol(cfg.opt.tol)
    };
    let optimum = solve_optimum(&obj, &opt_cfg)?;
    let test_error = problem
        .test
        .as_ref()
        .map(|t| obj.test_error(&optimum.w, t))
        .transpose()?
        .unwrap_or(f64::NAN);
    info!(
        "optimum f* = {:.12} (|grad| {:.1e}, {} gradient evaluations)",
        optimum.value, optimum.grad_norm, optimum.evaluations
    );
    let opt = OptSummary {
        f_star: optimum.value,
        grad_norm: optimum.grad_norm,
        evaluations: optimum.evaluations,
        test_error,
    };

    let ctx = Context {
        cfg,
        obj,
        test: problem.test.as_ref(),
        partition: &problem.partition,
        f_star: optimum.value,
        timing: opts.timing,
    };
    let reshuffled = problem
        .partition
        .reshuffle(derive_seed(cfg.seed, RESHUFFLE_STREAM, 0));

    let mut runs = Vec::with_capacity(cfg.algorithms.len());
    for spec in &cfg.algorithms {
        let id = spec.id().to_string();
        let grid = match spec {
            AlgorithmSpec::Opt(_) => vec![GridRun {
                setting: "reference".into(),
                rows: vec![RoundMetrics {
                    algorithm: id.clone(),
                    round: 0,
                    objective: opt.f_star,
                    suboptimality: 0.0,
                    test_error: opt.test_error,
                    wall_ms: 0,
                    diverged: false,
                }],
                diverged: false,
                final_model: Some(optimum.w.clone()),
                duality_gaps: None,
            }],
            _ => ctx.run_algorithm(spec, &reshuffled)?,
        };
        let best = select_best(&grid);
        info!(
            "{id}: selected {} (final suboptimality {:.3e})",
            grid[best].setting,
            grid[best].final_suboptimality()
        );
        runs.push(AlgorithmRun {
            id,
            kind: spec.kind(),
            grid,
            best,
        });
    }

    Ok(ExperimentResult {
        config: cfg.clone(),
        lambda,
        num_examples: train.num_examples(),
        num_features: train.num_features(),
        num_nodes: problem.partition.num_nodes(),
        test_examples: problem.test.as_ref().map_or(0, |t| t.num_examples()),
        opt,
        opt_model: optimum.w,
        runs,
    })
}

#[derive(Serialize)]
struct GridSummary<'a> {
    algorithm: &'a str,
    setting: &'a str,
    final_round: usize,
    final_suboptimality: f64,
    final_test_error: f64,
    diverged: bool,
    selected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_duality_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_duality_gap: Option<f64>,
}

#[derive(Serialize)]
struct PhaseCounts {
    rounds: usize,
    /// Server-to-node transfers (model and, for SVRG, full gradient).
    broadcasts: usize,
    aggregations: usize,
    /// Full passes over the training data by the nodes collectively.
    full_gradient_evaluations: usize,
}

#[derive(Serialize)]
struct AlgorithmMeta<'a> {
    id: &'a str,
    kind: &'a str,
    settings: Vec<&'a str>,
    selected: &'a str,
    phase_counts: PhaseCounts,
}

#[derive(Serialize)]
struct Metadata<'a> {
    name: &'a str,
    config_hash: String,
    config: &'a ExperimentConfig,
    selection_rule: &'a str,
    data: DataMeta,
    opt: &'a OptSummary,
    algorithms: Vec<AlgorithmMeta<'a>>,
}

#[derive(Serialize)]
struct DataMeta {
    num_examples: usize,
    num_features: usize,
    num_nodes: usize,
    test_examples: usize,
    lambda: f64,
}

impl ExperimentResult {
    fn grid_summaries(&self) -> Vec<GridSummary<'_>> {
        let mut out = Vec::new();
        for run in &self.runs {
            for (i, g) in run.grid.iter().enumerate() {
                let last = g.rows.last();
                out.push(GridSummary {
                    algorithm: &run.id,
                    setting: &g.setting,
                    final_round: last.map_or(0, |r| r.round),
                    final_suboptimality: g.final_suboptimality(),
                    final_test_error: last.map_or(f64::NAN, |r| r.test_error),
                    diverged: g.diverged,
                    selected: i == run.best,
                    initial_duality_gap: g.duality_gaps.as_ref().and_then(|v| v.first().copied()),
                    final_duality_gap: g.duality_gaps.as_ref().and_then(|v| v.last().copied()),
                });
            }
        }
        out
    }

    fn phase_counts(&self, run: &AlgorithmRun) -> PhaseCounts {
        let rounds = if run.kind == "opt" {
            0
        } else {
            run.best().rows.last().map_or(0, |r| r.round)
        };
        let broadcasts = match run.kind {
            "svrgfo" | "svrgfo_reshuffled" | "svrg_naive" => 2 * rounds,
            _ => rounds,
        };
        let full_gradient_evaluations = match run.kind {
            // one full gradient plus roughly one local pass per round
            "svrgfo" | "svrgfo_reshuffled" | "svrg_naive" => 2 * rounds,
            "opt" => self.opt.evaluations,
            _ => rounds,
        };
        PhaseCounts {
            rounds,
            broadcasts,
            aggregations: rounds,
            full_gradient_evaluations,
        }
    }

    /// Writes `<id>.csv` (best curve) per algorithm, `summary.csv`,
    /// `summary.json`, `metadata.json` and `<id>.ckpt` final models.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        let hash = config_hash(&self.config)?;
        for run in &self.runs {
            let best = run.best();
            write(&format!("{}.csv", run.id), to_csv(&best.rows))?;
            if let Some(w) = &best.final_model {
                let round = best.rows.last().map_or(0, |r| r.round);
                save_checkpoint(dir.join(format!("{}.ckpt", run.id)), w, round, &hash)?;
            }
        }

        let summaries = self.grid_summaries();
        let mut csv = String::from("algorithm,setting,final_round,final_suboptimality,final_test_error,diverged,selected\n");
        for s in &summaries {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                s.algorithm, s.setting, s.final_round, s.final_suboptimality, s.final_test_error, s.diverged, s.selected
            );
        }
        write("summary.csv", csv)?;
        write("summary.json", serde_json::to_string_pretty(&summaries)? + "\n")?;

        let meta = Metadata {
            name: &self.config.name,
            config_hash: hash,
            config: &self.config,
            selection_rule: "lowest final suboptimality over the grid; diverged runs rank last",
            data: DataMeta {
                num_examples: self.num_examples,
                num_features: self.num_features,
                num_nodes: self.num_nodes,
                test_examples: self.test_examples,
                lambda: self.lambda,
            },
            opt: &self.opt,
            algorithms: self
                .runs
                .iter()
                .map(|r| AlgorithmMeta {
                    id: &r.id,
                    kind: r.kind,
                    settings: r.grid.iter().map(|g| g.setting.as_str()).collect(),
                    selected: &r.best().setting,
                    phase_counts: self.phase_counts(r),
                })
                .collect(),
        };
        write("metadata.json", serde_json::to_string_pretty(&meta)? + "\n")
    }
}
