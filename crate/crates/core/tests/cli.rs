use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--n_docs=300",
    "--dim=16",
    "--n_themes=3",
    "--width_scale=0.05",
    "--latent_dim=4",
    "--epochs=3",
    "--anneal_epochs=2",
    "--batch_size=32",
    "--sup=0.1",
];

fn bbbg(command: &str, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbbg"))
        .arg(command)
        .arg("--out_dir")
        .arg(out)
        .args(SMALL)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for c in ["synth", "mask", "train", "eval", "analyze", "neighborhood"] {
        ok(&bbbg(c, out, &["--baseline=true"]));
    }
    for f in [
        "corpus.jsonl",
        "truth.jsonl",
        "author_scores.csv",
        "embeddings.txt",
        "seeds.json",
        "mask.json",
        "checkpoint.json",
        "history.csv",
        "themes.csv",
        "eval.csv",
        "predictions.csv",
        "orthogonality.csv",
        "pca.csv",
        "authors.csv",
        "summary.json",
        "neighborhood.csv",
        "config.synth.txt",
        "config.neighborhood.txt",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let eval = fs::read_to_string(out.join("eval.csv")).unwrap();
    assert!(eval.starts_with("model,level,group,accuracy,count\n"));
    assert!(eval.contains("\nbbbg,document,all,"));
    assert!(eval.contains("\ndnn,document,all,"));
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["r2"].as_f64().is_some());
    let neighbours = fs::read_to_string(out.join("neighborhood.csv")).unwrap();
    // ten words for each of three themes plus other
    assert_eq!(neighbours.lines().count(), 1 + 4 * 10);
}

#[test]
fn identical_seeds_give_identical_histories() {
    let dir = tempfile::tempdir().unwrap();
    let mut histories = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        for c in ["synth", "mask", "train"] {
            ok(&bbbg(c, &out, &["--seed=9"]));
        }
        histories.push(fs::read(out.join("history.csv")).unwrap());
    }
    assert_eq!(histories[0], histories[1]);
    let other = dir.path().join("c");
    for c in ["synth", "mask", "train"] {
        ok(&bbbg(c, &other, &["--seed=10"]));
    }
    assert_ne!(fs::read(other.join("history.csv")).unwrap(), histories[0]);
}

#[test]
fn missing_embeddings_is_a_path_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(&bbbg("synth", dir.path(), &[]));
    ok(&bbbg("mask", dir.path(), &[]));
    let gone = dir.path().join("nowhere.txt");
    let o = bbbg("train", dir.path(), &["--embeddings", gone.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.txt"));
    assert!(!dir.path().join("checkpoint.json").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.txt");
    fs::write(&file, "# masking run\ncommand = mask\nsup = 0.05\nprotocol = unbiased\n").unwrap();
    ok(&bbbg("synth", dir.path(), &[]));
    let o = Command::new(env!("CARGO_BIN_EXE_bbbg"))
        .args(["--config", file.to_str().unwrap(), "--out_dir", dir.path().to_str().unwrap()])
        .args(SMALL)
        .output()
        .unwrap();
    ok(&o);
    let snapshot = fs::read_to_string(dir.path().join("config.mask.txt")).unwrap();
    // the SMALL flags set sup = 0.1 and win over the file
    assert!(snapshot.contains("\nsup = 0.1\n"));
    assert!(snapshot.contains("\nprotocol = unbiased\n"));
    let mask: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mask.json")).unwrap()).unwrap();
    assert_eq!(mask["supervised"].as_array().unwrap().len(), 30);
}

#[test]
fn unknown_keys_and_bad_values_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbbg("synth", dir.path(), &["--foo=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`foo`"));
    let o = bbbg("synth", dir.path(), &["--noise=loud"]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_bbbg")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.jsonl"), "{\"id\": 3}\n").unwrap();
    let o = bbbg("mask", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn snapshot_reruns_to_the_same_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&bbbg("synth", dir.path(), &["--seed=4"]));
    let first = fs::read(dir.path().join("corpus.jsonl")).unwrap();
    let snapshot = dir.path().join("config.synth.txt");
    let copy = dir.path().join("replay.txt");
    fs::copy(&snapshot, &copy).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bbbg"))
        .args(["--config", copy.to_str().unwrap()])
        .output()
        .unwrap();
    ok(&o);
    assert_eq!(fs::read(dir.path().join("corpus.jsonl")).unwrap(), first);
    assert_eq!(fs::read(&snapshot).unwrap(), fs::read(&copy).unwrap());
}
