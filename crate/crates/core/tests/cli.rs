use std::path::Path;
use std::process::{Command, Output};

const TINY: &[&str] = &[
    "corpus.n_authors=8",
    "corpus.qa_per_author=3",
    "corpus.forget_fraction=0.25",
    "corpus.holdout_fraction=0.25",
    "corpus.alternates=2",
    "model.d_model=8",
    "model.n_layers=1",
    "model.d_ff=16",
    "finetune.epochs=2",
    "retain.epochs=2",
    "unlearn.m=2",
    "unlearn.n_epochs=2",
    "eval.max_new_tokens=6",
    "grid.lrs=1e-4",
    "grid.betas=0.1,0.05",
    "grid.wrs=1",
    "grid.seeds=0",
];

fn run(sub: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_unlearn-lab"));
    cmd.arg(sub).arg("-q").arg("--set").arg(format!("out_dir={}", dir.display()));
    for kv in TINY.iter().chain(extra) {
        cmd.arg("--set").arg(kv);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn every_subcommand_runs_in_order() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["gen-corpus", "finetune", "retain", "unlearn", "eval", "trajectory", "grid"] {
        let out = run(sub, dir.path(), &[]);
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!stdout(&out).trim().is_empty(), "{sub} printed no artifacts");
    }
    let run_dir = dir.path().join("unlearn/altpo_m2_b0.1_wr5_lr1e-4_n2");
    assert!(run_dir.join("metrics.json").exists());
    let csv = std::fs::read_to_string(run_dir.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let grid = std::fs::read_to_string(dir.path().join("grid/altpo_m2/grid.jsonl")).unwrap();
    assert_eq!(grid.lines().count(), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("gen-corpus", dir.path(), &["no.such.key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no.such.key"));
    let out = run("gen-corpus", dir.path(), &["unlearn.m=5"]);
    assert_eq!(out.status.code(), Some(2), "M larger than the generated alternates");
}

#[test]
fn missing_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("finetune", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus.jsonl"));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, "# tiny run\nseed = 3\ncorpus.n_authors = 9\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_unlearn-lab"))
        .args(["gen-corpus", "-q", "--config"])
        .arg(&cfg)
        .arg("--set")
        .arg(format!("out_dir={}", dir.path().display()))
        .args(["--set", "corpus.qa_per_author=2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let corpus = std::fs::read_to_string(dir.path().join("corpus.jsonl")).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    // File value and command-line override both land in the recorded config.
    assert!(manifest.contains(r"corpus.n_authors = 9\ncorpus.qa_per_author = 2\n"));
    assert!(manifest.contains(r#""seed": 3"#));
    // Header line plus one line per record.
    assert_eq!(corpus.lines().count(), 1 + 9 * 2);
}
