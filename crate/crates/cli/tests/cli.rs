use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn acnn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acnn"))
        .current_dir(dir)
        .env_remove("ACNN_DATA_DIR")
        .args(args)
        .output()
        .expect("spawn acnn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Last stderr line must be the machine-readable error line.
fn error_line(o: &Output) -> String {
    stderr(o).lines().last().unwrap_or_default().to_string()
}

fn synth_small(dir: &Path) {
    let o = acnn(
        dir,
        &[
            "synth", "--preset", "rough-copy-hard", "--train-sentences", "120", "--dev-sentences", "60",
            "--test-sentences", "60", "--out", "d",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["train", "--help"]] {
        let o = acnn(dir.path(), args);
        assert_eq!(code(&o), 0);
        assert!(!stdout(&o).is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["train", "--bogus"][..], &["frobnicate"], &["ab-bench", "--seeds", "1,2"]] {
        let o = acnn(dir.path(), args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(error_line(&o).starts_with("error: code=1 kind=usage: "), "{}", stderr(&o));
    }
}

#[test]
fn data_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "fine words\n[ broken + span\n").unwrap();
    fs::write(dir.path().join("ok.txt"), "fine words\n").unwrap();
    let o = acnn(dir.path(), &["eval", "--gold", "bad.txt", "--pred", "ok.txt"]);
    assert_eq!(code(&o), 2);
    let line = error_line(&o);
    assert!(line.starts_with("error: code=2 kind=data: "), "{line}");
    assert!(line.contains("bad.txt:2"), "{line}");
    let o = acnn(dir.path(), &["eval", "--gold", "missing.txt", "--pred", "ok.txt"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn gradcheck_passes_and_catches_corruption() {
    let dir = tempfile::tempdir().unwrap();
    for arch in ["cnn", "acnn"] {
        let o = acnn(dir.path(), &["gradcheck", "--arch", arch]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("output.W"));
    }
    let o = acnn(dir.path(), &["gradcheck", "--corrupt", "layer1.g0.B"]);
    assert_eq!(code(&o), 3);
    assert!(error_line(&o).starts_with("error: code=3 kind=numeric: "));
    assert!(stdout(&o).contains("layer1.g0.B\t"));
}

#[test]
fn pipeline_synth_train_tag_eval() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    synth_small(p);
    for f in ["train.txt", "dev.txt", "test.txt", "manifest.json"] {
        assert!(p.join("d").join(f).exists(), "{f}");
    }
    let o = acnn(
        p,
        &["train", "--arch", "cnn", "--train", "d/train.txt", "--dev", "d/dev.txt", "--epochs", "2", "--out", "run"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("dev P="));
    let log = fs::read_to_string(p.join("run/metrics.log")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert!(log.starts_with("epoch=1 "));

    let o = acnn(p, &["--threads", "3", "tag", "--checkpoint", "run/model.ckpt", "--input", "d/test.txt", "--output", "pred.tsv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let single = acnn(p, &["tag", "--checkpoint", "run/model.ckpt", "--input", "d/test.txt"]);
    assert_eq!(stdout(&single), fs::read_to_string(p.join("pred.tsv")).unwrap());

    let o = acnn(p, &["eval", "--gold", "d/test.txt", "--pred", "pred.tsv", "--tsv", "report.tsv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("P="), "{out}");
    assert!(out.contains("repetition"));
    assert!(fs::read_to_string(p.join("report.tsv")).unwrap().contains('\t'));

    let o = acnn(p, &["heatmap", "--checkpoint", "run/model.ckpt", "--sentence", "to boston to denver", "--pgm", "h.pgm"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read(p.join("h.pgm")).unwrap().starts_with(b"P5"));
}

#[test]
fn manifest_records_config_and_hashes_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    synth_small(p);
    let o = acnn(
        p,
        &["train", "--train", "d/train.txt", "--dev", "d/dev.txt", "--epochs", "1", "--seed", "4", "--out", "run"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(p.join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "train");
    assert_eq!(m["seed"], 4);
    assert_eq!(m["rng_algorithm"], "chacha8");
    assert_eq!(m["config"]["model"]["embedding_dim"], 32);
    assert_eq!(m["config"]["train"]["max_epochs"], 1);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    assert_eq!(outputs[0]["sha256"].as_str().unwrap().len(), 64);
    assert!(m["timings"].as_array().unwrap().iter().any(|t| t[0] == "total"));

    let o = acnn(p, &["replay", "run/manifest.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("identical"));
    assert!(!stdout(&o).contains("DIFFERS"));
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    synth_small(p);
    fs::write(p.join("c.toml"), "[model]\nembedding_dim = 8\n\n[train]\nmax_epochs = 1\nbatch_size = 10\n").unwrap();
    let o = acnn(
        p,
        &[
            "train", "--config", "c.toml", "--batch-size", "7", "--train", "d/train.txt", "--dev", "d/dev.txt",
            "--out", "run", "--channels", "4",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(p.join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["model"]["embedding_dim"], 8);
    assert_eq!(m["config"]["model"]["layers"][0]["channels"], 4);
    assert_eq!(m["config"]["train"]["batch_size"], 7);
    assert_eq!(m["config"]["train"]["max_epochs"], 1);

    fs::write(p.join("bad.toml"), "[train]\nmax_epoch = 3\n").unwrap();
    let o = acnn(p, &["train", "--config", "bad.toml", "--train", "d/train.txt", "--dev", "d/dev.txt"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn params_reports_both_totals_and_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = acnn(dir.path(), &["params", "--alternate"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("network (excl. embedding)"));
    assert!(out.contains("total (incl. embedding)"));
    assert!(out.contains("4900000"));
    assert!(out.contains("alternate grouping"));
    let o = acnn(dir.path(), &["params", "no-such-preset"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn tabular_corpora_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = acnn(
        p,
        &[
            "synth", "--preset", "rough-copy-hard", "--train-sentences", "80", "--dev-sentences", "40",
            "--test-sentences", "10", "--out", "t", "--format", "tabular",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(p.join("t/train.tsv").exists());
    let o = acnn(p, &["train", "--train", "t/train.tsv", "--dev", "t/dev.tsv", "--epochs", "1", "--out", "run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn search_ranks_trials_with_threads() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    synth_small(p);
    let args = [
        "search", "--budget", "3", "--epochs", "1", "--embedding-dim", "4", "--channels", "2",
        "--train", "d/train.txt", "--dev", "d/dev.txt",
    ];
    let one = acnn(p, &[&args[..], &["--out", "s1.tsv"]].concat());
    assert_eq!(code(&one), 0, "{}", stderr(&one));
    let three = acnn(p, &[&["--threads", "3"][..], &args[..], &["--out", "s3.tsv"]].concat());
    assert_eq!(code(&three), 0, "{}", stderr(&three));
    let table = fs::read_to_string(p.join("s1.tsv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("rank\ttrial\tdev_f1"));
    assert_eq!(table, fs::read_to_string(p.join("s3.tsv")).unwrap());
}

#[test]
fn ab_bench_small() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("ab.toml"),
        "[generator]\nsentences = 60\ndev_sentences = 30\ntest_sentences = 5\n\n[train]\nmax_epochs = 1\n",
    )
    .unwrap();
    let o = acnn(
        p,
        &["ab-bench", "--config", "ab.toml", "--embedding-dim", "4", "--channels", "2", "--out", "ab"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("mean gap (acnn - cnn)"));
    let json: Value = serde_json::from_str(&fs::read_to_string(p.join("ab/ab.json")).unwrap()).unwrap();
    assert_eq!(json["cnn"].as_array().unwrap().len(), 3);
    assert_eq!(json["acnn"].as_array().unwrap().len(), 3);
    assert!(p.join("ab/manifest.json").exists());
}
