use std::fs;
use std::path::Path;

use fedopt::harness::config::{AlgorithmSpec, OptSpec};
use fedopt::harness::{emit_plot, run_experiment, DataSource, ExperimentConfig, RunOptions};
use fedopt::metrics::{parse_csv, CSV_HEADER};
use fedopt::synth::GenConfig;
use fedopt::Error;

const SMALL: &str = r#"
name = "small"
seed = 3
rounds = 6
eval_every = 2

[data]
source = "generate"
num_nodes = 8
num_features = 60
min_node_size = 10
max_node_size = 60
mean_node_size = 20.0

[[algorithms]]
kind = "opt"

[[algorithms]]
kind = "svrgfo"
stepsizes = [0.5, 1.0, 1e6]

[[algorithms]]
kind = "svrgfo_reshuffled"
stepsizes = [0.5, 1.0]

[[algorithms]]
kind = "svrg_naive"
stepsizes = [0.5]
local_steps = 10

[[algorithms]]
kind = "gd"
steps = [4.0]

[[algorithms]]
kind = "cocoa"
name = "cocoa_avg"
local_iters = [20, 50]
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL).unwrap()
}

fn no_timing() -> RunOptions {
    RunOptions { timing: false }
}

#[test]
fn parses_all_algorithm_kinds() {
    let cfg = small();
    let kinds: Vec<_> = cfg.algorithms.iter().map(|a| a.kind()).collect();
    assert_eq!(kinds, ["opt", "svrgfo", "svrgfo_reshuffled", "svrg_naive", "gd", "cocoa"]);
    assert_eq!(cfg.algorithms[5].id(), "cocoa_avg");
    assert_eq!(cfg.output_dir, Path::new("results"));
    assert!(cfg.lambda.is_none());
    match &cfg.data {
        DataSource::Generate(g) => assert_eq!(g.features_per_example, GenConfig::default().features_per_example),
        other => panic!("{other:?}"),
    }
}

#[test]
fn rejects_invalid_configs() {
    let bad = [
        SMALL.replace("rounds = 6", "rounds = 0"),
        SMALL.replace("stepsizes = [0.5]", "stepsizes = []"),
        SMALL.replace("name = \"cocoa_avg\"", "name = \"gd\""),
        SMALL.replace("eval_every = 2", "eval_every = 2\nunknown_key = 1"),
        SMALL.replace("kind = \"gd\"", "kind = \"dane\""),
    ];
    for text in bad {
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }
    let mut cfg = small();
    cfg.algorithms.clear();
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn runs_grid_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let result = run_experiment(&cfg, no_timing()).unwrap();
    result.write(dir.path()).unwrap();

    for id in ["opt", "svrgfo", "svrgfo_reshuffled", "svrg_naive", "gd", "cocoa_avg"] {
        let text = fs::read_to_string(dir.path().join(format!("{id}.csv"))).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let rows = parse_csv(&text).unwrap();
        assert!(rows.iter().all(|r| r.algorithm == id && r.wall_ms == 0));
        assert!(rows.iter().all(|r| r.diverged || r.suboptimality >= -1e-10), "{id}");
        if id == "opt" {
            assert_eq!(rows.len(), 1);
            assert_eq!(rows[0].suboptimality, 0.0);
        } else {
            // cadence 2 over 6 rounds: 0, 2, 4, 6
            let rounds: Vec<_> = rows.iter().map(|r| r.round).collect();
            assert_eq!(rounds, [0, 2, 4, 6], "{id}");
        }
    }

    // the huge stepsize diverges, is kept in the grid, and is never selected
    let svrg = result.run("svrgfo").unwrap();
    let huge = &svrg.grid[2];
    assert!(huge.diverged);
    assert!(huge.rows.last().unwrap().diverged);
    assert_ne!(svrg.best, 2);
    let finals: Vec<f64> = svrg.grid.iter().map(|g| g.final_suboptimality()).collect();
    assert!(finals.iter().all(|&f| f >= finals[svrg.best]));

    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 1 + 3 + 2 + 1 + 1 + 2);
    assert!(summary.contains("svrgfo,h=1000000,"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["algorithms"][1]["phase_counts"]["rounds"], 6);
    assert!(meta["opt"]["f_star"].as_f64().unwrap() > 0.0);
    let summary_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let cocoa = summary_json.as_array().unwrap().iter().find(|s| s["algorithm"] == "cocoa_avg").unwrap();
    assert!(cocoa["final_duality_gap"].as_f64().unwrap() <= cocoa["initial_duality_gap"].as_f64().unwrap());

    let (header, w) = fedopt::checkpoint::load_checkpoint(dir.path().join("svrgfo.ckpt")).unwrap();
    assert_eq!(header.round, 6);
    assert_eq!(w.len(), result.num_features);

    let files: Vec<_> = ["svrgfo", "gd", "opt"].iter().map(|id| dir.path().join(format!("{id}.csv"))).collect();
    let svg_path = dir.path().join("fig.svg");
    emit_plot(&files, &svg_path).unwrap();
    let svg = fs::read_to_string(svg_path).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn opt_only_config() {
    let mut cfg = small();
    cfg.algorithms = vec![AlgorithmSpec::Opt(OptSpec::default())];
    let result = run_experiment(&cfg, no_timing()).unwrap();
    assert_eq!(result.runs.len(), 1);
    assert_eq!(result.runs[0].best().rows.len(), 1);
    assert_eq!(result.runs[0].best().rows[0].objective, result.f_star());
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, no_timing()).unwrap().write(a.path()).unwrap();
    run_experiment(&cfg, no_timing()).unwrap().write(b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 9);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn loads_saved_data() {
    let dir = tempfile::tempdir().unwrap();
    let gen = GenConfig {
        num_nodes: 5,
        num_features: 40,
        min_node_size: 10,
        max_node_size: 30,
        mean_node_size: 15.0,
        seed: 9,
        ..GenConfig::default()
    };
    let data = fedopt::synth::generate(&gen).unwrap();
    data.save(dir.path()).unwrap();

    let mut generated = small();
    generated.seed = 9;
    generated.data = DataSource::Generate(gen);
    let mut loaded = generated.clone();
    loaded.data = DataSource::Load {
        train: dir.path().join("train.libsvm"),
        partition: dir.path().join("partition.txt"),
        test: Some(dir.path().join("test.libsvm")),
        num_features: None,
    };
    let a = run_experiment(&generated, no_timing()).unwrap();
    let b = run_experiment(&loaded, no_timing()).unwrap();
    assert_eq!(a.f_star(), b.f_star());
    for (ra, rb) in a.runs.iter().zip(&b.runs) {
        assert_eq!(ra.best().rows, rb.best().rows);
    }

    loaded.data = DataSource::Load {
        train: dir.path().join("missing.libsvm"),
        partition: dir.path().join("partition.txt"),
        test: None,
        num_features: None,
    };
    assert!(matches!(run_experiment(&loaded, no_timing()), Err(Error::Io { .. })));
}

#[test]
fn shipped_desk_config_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg, ExperimentConfig::desk_default(0));
}
