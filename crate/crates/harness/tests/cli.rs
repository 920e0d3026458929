use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use evalkit::EvalReport;
use harness::pipeline::MatrixOutcome;
use tempfile::TempDir;

fn emovc(args: &[&str]) -> i32 {
    harness::run(std::iter::once("emovc").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Tiny three-emotion corpus shared by the tests in this file.
fn corpus() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let root = dir.path().join("corpus");
        assert_eq!(emovc(&["synth-corpus", "--out", p(&root), "--train", "3", "--val", "1", "--eval", "2"]), 0);
        dir
    })
    .path()
    .join("corpus")
    .leak()
}

const FAST: [&str; 8] = [
    "--rho",
    "0.25",
    "--precision",
    "32",
    "--set",
    "crop_width=32",
    "--set",
    "batch_size=1",
];

fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend(FAST);
    v
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(emovc(&[]), 2);
    assert_eq!(emovc(&["frobnicate"]), 2);
    assert_eq!(emovc(&["train"]), 2);
    assert_eq!(emovc(&["train", "--corpus", "c", "--out", "o", "--set", "bogus=1"]), 2);
    assert_eq!(emovc(&["train", "--corpus", "c", "--out", "o", "--combo", "mcc+f1"]), 2);
    assert_eq!(emovc(&["extract", "--corpus", "c", "--out", "o", "--split", "test"]), 2);
    assert_eq!(emovc(&["report", "--out", "o"]), 2);
}

#[test]
fn help_and_version_exit_with_zero() {
    assert_eq!(emovc(&["--help"]), 0);
    assert_eq!(emovc(&["--version"]), 0);
    assert_eq!(emovc(&["train", "--help"]), 0);
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere");
    assert_eq!(emovc(&["train", "--corpus", p(&missing), "--out", p(&dir.path().join("m"))]), 1);
}

#[test]
fn binary_reports_usage_on_no_arguments() {
    let out = Command::new(env!("CARGO_BIN_EXE_emovc")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    for sub in ["synth-corpus", "extract", "train", "convert", "evaluate", "report"] {
        assert!(text.contains(sub), "usage lacks {sub}");
    }
}

#[test]
fn config_file_unknown_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "steps=2\nwarmup=5\n").unwrap();
    let out = dir.path().join("m");
    assert_eq!(emovc(&["train", "--corpus", p(corpus()), "--out", p(&out), "--config", p(&cfg)]), 2);
    assert!(!out.join("model.emvc").exists());
}

#[test]
fn extract_writes_features_and_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("feats");
    assert_eq!(emovc(&["extract", "--corpus", p(corpus()), "--out", p(&out), "--split", "eval", "--csv"]), 0);
    let fs = emovc::dsp::FeatureSet::load(&out.join("sad/eval/sad_eval_0001.emvf")).unwrap();
    assert_eq!(fs.provenance.unwrap().split, emovc::corpus::Split::Eval);
    assert!(out.join("sad/eval/sad_eval_0001.csv").exists());
    assert!(!out.join("sad/train").exists());
    let summary = std::fs::read_to_string(out.join("extract.json")).unwrap();
    assert!(summary.contains("config_hash"));
}

#[test]
fn train_convert_evaluate_report() {
    let dir = TempDir::new().unwrap();
    let model_dir = dir.path().join("model");
    let args = with_fast(&[
        "train",
        "--corpus",
        p(corpus()),
        "--out",
        p(&model_dir),
        "--combo",
        "mcc+lf0cwt+lecwt",
        "--steps",
        "3",
        "--seed",
        "7",
    ]);
    assert_eq!(emovc(&args), 0);
    let model = model_dir.join("model.emvc");
    let loss = std::fs::read_to_string(model_dir.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 4);
    assert!(std::fs::read_to_string(model_dir.join("loss.svg")).unwrap().starts_with("<svg"));
    let settings = std::fs::read_to_string(model_dir.join("settings.txt")).unwrap();
    assert!(settings.starts_with("# config hash "));

    let wav = corpus().join("neutral/eval/neutral_eval_0000.wav");
    let out_wav = dir.path().join("converted.wav");
    let dump = dir.path().join("dump");
    let code = emovc(&["convert", "--model", p(&model), "--input", p(&wav), "--output", p(&out_wav), "--dump-dir", p(&dump)]);
    assert_eq!(code, 0);
    let src = emovc::dsp::read_wav(&wav).unwrap();
    let conv = emovc::dsp::read_wav(&out_wav).unwrap();
    assert_eq!(src.samples.len(), conv.samples.len());
    for f in ["source.csv", "converted.csv", "f0.svg"] {
        assert!(dump.join(f).exists(), "{f}");
    }
    assert_eq!(emovc(&["convert", "--model", p(&model), "--input", p(&wav), "--output", p(&out_wav), "--direction", "up"]), 2);

    let eval_dir = dir.path().join("eval");
    let code = emovc(&["evaluate", "--model", p(&model), "--corpus", p(corpus()), "--out", p(&eval_dir), "--split", "eval", "--set", "probe_steps=10"]);
    assert_eq!(code, 0);
    let report = EvalReport::load(&eval_dir.join("report.json")).unwrap();
    assert_eq!(report.model, "CycleGAN-4");
    assert_eq!((report.source.as_str(), report.target.as_str()), ("neutral", "angry"));
    assert_eq!(report.utterances.len(), 2);
    let bundle = harness::pipeline::AnyBundle::load(&model).unwrap();
    assert_eq!(report.model_hash, Some(bundle.config_hash()));
    let table = std::fs::read_to_string(eval_dir.join("table.txt")).unwrap();
    assert!(table.contains("MCD (dB)") && table.contains("LogF0-MSE"));
    assert!(table.lines().any(|l| l.starts_with("Source")));
    assert!(table.lines().any(|l| l.starts_with("CycleGAN-4")));

    let combined = dir.path().join("combined");
    let base = eval_dir.join("baseline.json");
    let rep = eval_dir.join("report.json");
    assert_eq!(emovc(&["report", "--out", p(&combined), "--input", p(&base), "--input", p(&rep)]), 0);
    assert_eq!(
        std::fs::read_to_string(combined.join("table.txt")).unwrap(),
        table
    );
}

#[test]
fn resume_from_a_checkpoint_matches_the_uninterrupted_run() {
    let dir = TempDir::new().unwrap();
    let full = dir.path().join("full");
    let base = ["train", "--corpus", p(corpus()), "--combo", "mcc", "--seed", "3", "--steps", "4", "--set", "checkpoint_interval=2"];
    let mut a = with_fast(&base);
    a.extend(["--out", p(&full)]);
    assert_eq!(emovc(&a), 0);
    let mid = full.join("checkpoints/step_0000002.emvc");
    let resumed = dir.path().join("resumed");
    let mut b = with_fast(&base);
    b.extend(["--out", p(&resumed), "--resume", p(&mid)]);
    assert_eq!(emovc(&b), 0);
    assert_eq!(
        std::fs::read(full.join("model.emvc")).unwrap(),
        std::fs::read(resumed.join("model.emvc")).unwrap()
    );
    let tail: Vec<String> = std::fs::read_to_string(full.join("loss.csv")).unwrap().lines().skip(3).map(String::from).collect();
    let resumed_log: Vec<String> = std::fs::read_to_string(resumed.join("loss.csv")).unwrap().lines().skip(1).map(String::from).collect();
    assert_eq!(tail, resumed_log);
}

fn matrix(out: &Path, extra: &[&str]) -> i32 {
    let mut args = with_fast(&["report", "--matrix", "--corpus", p(corpus()), "--out", p(out), "--steps", "2", "--set", "probe_steps=10"]);
    args.extend(extra);
    emovc(&args)
}

#[test]
fn matrix_emits_eight_hashed_rows_reproducibly() {
    let dir = TempDir::new().unwrap();
    let (a, b): (PathBuf, PathBuf) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(matrix(&a, &[]), 0);
    let outcome: MatrixOutcome = serde_json::from_str(&std::fs::read_to_string(a.join("matrix.json")).unwrap()).unwrap();
    assert!(outcome.failures.is_empty());
    let models: Vec<&EvalReport> = outcome.table.reports().filter(|r| r.model != "Source").collect();
    assert_eq!(models.len(), 8);
    assert!(models.iter().all(|r| r.model_hash.is_some() && r.run_hash.is_some()));
    let labels: Vec<&str> = outcome.table.rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["Source", "CycleGAN-1", "CycleGAN-2", "CycleGAN-3", "CycleGAN-4"]);
    assert_eq!(outcome.table.targets, ["sad", "angry"]);
    let csv = std::fs::read_to_string(a.join("table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10);

    assert_eq!(matrix(&b, &[]), 0);
    for f in ["table.csv", "table.txt", "matrix.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn matrix_records_failures_and_continues() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m");
    assert_eq!(matrix(&out, &["--set", "targets=sad,happy"]), 1);
    let outcome: MatrixOutcome = serde_json::from_str(&std::fs::read_to_string(out.join("matrix.json")).unwrap()).unwrap();
    assert_eq!(outcome.failures.len(), 4);
    assert!(outcome.failures.iter().all(|f| f.target == "happy"));
    assert_eq!(outcome.table.reports().filter(|r| r.model != "Source").count(), 4);
    assert!(std::fs::read_to_string(out.join("table.txt")).unwrap().contains("FAILED"));
}
