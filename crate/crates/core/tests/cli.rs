use std::path::Path;
use std::process::Command;

use pdsl::cli::{cmd_evaluate, cmd_infer, cmd_simulate, cmd_train, Common};
use pdsl::metrics::MetricsReport;
use pdsl::pipeline::{self, ExperimentManifest};
use pdsl::Error;

const SMALL: &str = r#"
seed = 3
cascades = 10

[graph]
kind = "barabasi_albert"
nodes = 30
attachment = 2

[model]
latent_dim = 4
hidden = 8
prop_dim = 8
readout_hidden = 8
epochs = 4
"#;

fn small(dir: &Path) -> ExperimentManifest {
    let config = dir.join("config.toml");
    std::fs::write(&config, SMALL).unwrap();
    Common {
        config: Some(config),
        out: Some(dir.join("out")),
        ..Common::default()
    }
    .manifest()
    .unwrap()
}

fn pdsl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdsl"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn small_manifest_parses() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path());
    assert_eq!(m.seed, 3);
    assert_eq!(m.model.latent_dim, 4);
    assert_eq!(m.model.epochs, 4);
    assert_eq!(m.paths.dataset.parent().unwrap(), dir.path().join("out"));
}

#[test]
fn simulate_splits_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path());
    let (g, bundle) = cmd_simulate(&m).unwrap();
    assert_eq!(g.node_count(), 30);
    assert_eq!(bundle.train.len(), 8);
    assert_eq!(bundle.test.len(), 2);
    let first = std::fs::read(&m.paths.dataset).unwrap();
    cmd_simulate(&m).unwrap();
    assert_eq!(std::fs::read(&m.paths.dataset).unwrap(), first);
    let echoed = ExperimentManifest::load(m.paths.dataset.parent().unwrap().join("manifest.toml")).unwrap();
    assert_eq!(echoed.hash(), m.hash());
}

#[test]
fn full_command_chain_through_binary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out = dir.path().join("out");
    let common = |sub: &str| {
        let mut c = pdsl();
        c.arg(sub).arg("--config").arg(&config).arg("--out").arg(&out);
        c
    };
    run_ok(&mut common("simulate"));
    run_ok(&mut common("train"));
    run_ok(&mut common("infer"));
    let results = std::fs::read(out.join("results.jsonl")).unwrap();
    run_ok(&mut common("infer"));
    assert_eq!(std::fs::read(out.join("results.jsonl")).unwrap(), results, "fixed seed, identical results");

    let stdout = run_ok(common("evaluate").args(["--method", "pdsl", "--method", "all_negative"]));
    assert!(stdout.lines().any(|l| l.starts_with("pdsl: macro-P")));
    assert!(stdout.lines().any(|l| l.starts_with("all_negative: macro-P")));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.lines().count() > 2);

    let trace = std::fs::read_to_string(out.join("train_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 4);
}

#[test]
fn train_trace_has_one_row_per_default_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small(dir.path());
    m.model.epochs = ExperimentManifest::default().model.epochs;
    assert_eq!(m.model.epochs, 100);
    cmd_simulate(&m).unwrap();
    let report = cmd_train(&m, |_, _| {}).unwrap();
    let trace = std::fs::read_to_string(&m.paths.trace).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("epoch,total,kl,re,fp,reg"));
    assert_eq!(lines.count(), 100);
    let losses = &report.epoch_losses;
    assert!(losses[99] < losses[0], "first {} last {}", losses[0], losses[99]);
}

#[test]
fn infer_records_full_refinement_trace() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path());
    cmd_simulate(&m).unwrap();
    cmd_train(&m, |_, _| {}).unwrap();
    let records = cmd_infer(&m).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        assert_eq!(r.refinement.trace.len(), 15);
        assert_eq!(r.refinement.probabilities.len(), 30);
        assert!(r.matched_block < 1);
    }
}

#[test]
fn evaluating_truth_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path());
    let (g, bundle) = cmd_simulate(&m).unwrap();
    let truth: Vec<_> = bundle
        .test
        .iter()
        .map(|c| {
            let probs = c.source_vector();
            let pred = probs.iter().map(|&p| p > 0.5).collect();
            (pred, probs)
        })
        .collect();
    let r: MetricsReport = pipeline::evaluate_predictions(&g, &bundle, &truth).unwrap();
    assert_eq!(r.macro_precision, 1.0);
    assert_eq!(r.macro_recall, 1.0);
    assert_eq!(r.macro_f1, 1.0);
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.aed, 0.0);
}

#[test]
fn all_negative_macro_f1_at_five_percent() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small(dir.path());
    m.graph = pipeline::GraphSource::BarabasiAlbert {
        nodes: 200,
        attachment: 2,
    };
    let (_, bundle) = cmd_simulate(&m).unwrap();
    let out = cmd_evaluate(&m, &["all_negative".to_string()]).unwrap();
    // 10 positives of 200: negative-class F1 is 2*190/(2*190+10), positive-class F1 is 0.
    let expected = 190.0 / 390.0;
    assert!(bundle.test.iter().all(|c| c.source_count() == 10));
    assert!((out[0].1.macro_f1 - expected).abs() < 1e-12, "{}", out[0].1.macro_f1);
    assert!((out[0].1.macro_f1 - 0.49).abs() < 0.01);
}

#[test]
fn mismatched_files_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path());
    cmd_simulate(&m).unwrap();
    cmd_train(&m, |_, _| {}).unwrap();
    cmd_infer(&m).unwrap();

    let other = ExperimentManifest { seed: m.seed + 1, ..m.clone() };
    assert!(matches!(cmd_evaluate(&other, &["pdsl".into()]), Err(Error::ManifestMismatch(_))));
    assert!(matches!(cmd_infer(&other), Err(Error::ManifestMismatch(_))));

    // A results file from a different dataset, paired with this one.
    let text = std::fs::read_to_string(&m.paths.results).unwrap();
    let (_, records) = pipeline::results_from_str(&text).unwrap();
    std::fs::write(&m.paths.results, pipeline::results_to_string("deadbeef", &records).unwrap()).unwrap();
    assert!(matches!(cmd_evaluate(&m, &["pdsl".into()]), Err(Error::ManifestMismatch(_))));
}

#[test]
fn bad_flags_exit_nonzero() {
    let out = pdsl().args(["simulate", "--mechanism", "XYZ"]).output().unwrap();
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let out = pdsl()
        .arg("train")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success(), "training without a dataset must fail");
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
