use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use radioclass::models::TrainedModel;
use radioclass::spectral::read_mels;

fn radioclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radioclass"))
        .args(args)
        .env_remove("RADIOCLASS_ASR_ENDPOINT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = radioclass(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    radioclass(args).status.code().unwrap()
}

fn corpus(dir: &Path, n: usize) -> String {
    let c = dir.join("corpus");
    ok(&["datagen", "--n", &n.to_string(), "--seed", "3", "--out", c.to_str().unwrap()]);
    c.to_str().unwrap().to_string()
}

#[test]
fn datagen_writes_a_balanced_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 12);
    let labels = std::fs::read_to_string(Path::new(&c).join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 13);
    assert_eq!(labels.matches(",takeoff").count(), 6);
    assert!(Path::new(&c).join("clip_0011.wav").exists());
    assert!(Path::new(&c).join("clip_0011.txt").exists());
}

#[test]
fn featurize_writes_both_feature_sets() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 8);
    let out = tmp.path().join("feats");
    let stdout = ok(&["featurize", "--corpus", &c, "--out", out.to_str().unwrap()]);
    assert!(stdout.contains("8 spectrograms"), "{stdout}");
    let mels = read_mels(out.join("mels/clip_0000.mels")).unwrap();
    assert_eq!(mels.shape(), (128, 130));
    let pooled = std::fs::read_to_string(out.join("spectral_pooled.csv")).unwrap();
    assert_eq!(pooled.lines().count(), 9);
    assert_eq!(pooled.lines().next().unwrap().split(',').count(), 2 + 256);
    assert!(out.join("tfidf.json").exists());
    assert_eq!(std::fs::read_to_string(out.join("tfidf_vectors.csv")).unwrap().lines().count(), 9);
}

#[test]
fn strict_featurize_fails_on_missing_transcript() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 8);
    std::fs::remove_file(Path::new(&c).join("clip_0002.txt")).unwrap();
    let out = tmp.path().join("feats");
    let o = out.to_str().unwrap();
    let lenient = radioclass(&["featurize", "--corpus", &c, "--out", o, "--pipeline", "textual"]);
    assert!(lenient.status.success());
    assert!(String::from_utf8_lossy(&lenient.stderr).contains("clip_0002"));
    assert_eq!(code(&["featurize", "--corpus", &c, "--out", o, "--pipeline", "textual", "--strict"]), 3);
}

#[test]
fn train_saves_a_loadable_model() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 20);
    let dir = tmp.path().join("model");
    let stdout = ok(&["train", "--corpus", &c, "--model", "logreg", "--pipeline", "textual", "--out", dir.to_str().unwrap()]);
    assert!(stdout.contains("logreg"));
    let model = TrainedModel::load(&dir.join("model.json")).unwrap();
    assert_eq!(model.kind().as_str(), "logreg");
    assert!(dir.join("tfidf.json").exists());
}

#[test]
fn evaluate_is_deterministic_and_report_reads_it_back() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 20);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&["evaluate", "--corpus", &c, "--model", "logreg,dtree", "--out", out.to_str().unwrap(), "--seed", "5"]);
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(a.lines().count(), 1 + 2 * 2);
    assert!(a.starts_with("model,pipeline,augmented,"));

    let plots = tmp.path().join("plots");
    let table = ok(&["report", "--input", tmp.path().join("a.csv").to_str().unwrap(), "--plot-data", plots.to_str().unwrap()]);
    assert!(table.contains("dtree"));
    assert!(plots.join("f1_mcc.csv").exists());
    assert!(plots.join("auroc_aupr.csv").exists());
}

#[test]
fn ablate_pairs_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 16);
    let out = tmp.path().join("ab.csv");
    let stdout = ok(&["ablate", "--corpus", &c, "--model", "logreg", "--pipeline", "spectral", "--out", out.to_str().unwrap()]);
    assert!(stdout.contains("with augmentation"));
    let rows = std::fs::read_to_string(&out).unwrap();
    let aug: Vec<&str> = rows.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(aug, ["false", "true"]);
    let paired = std::fs::read_to_string(out.with_extension("ablation.csv")).unwrap();
    assert_eq!(paired.lines().count(), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 16);
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, format!(r#"{{"corpus_dir": "{c}", "models": ["knn"], "pipelines": ["textual"]}}"#)).unwrap();
    let stdout = ok(&["--config", cfg.to_str().unwrap(), "evaluate"]);
    assert!(stdout.contains("knn") && !stdout.contains("spectral"));
    let stdout = ok(&["--config", cfg.to_str().unwrap(), "evaluate", "--model", "svm"]);
    assert!(stdout.contains("svm") && !stdout.contains("knn"));

    std::fs::write(&cfg, r#"{"sed": 1}"#).unwrap();
    assert_eq!(code(&["--config", cfg.to_str().unwrap(), "evaluate"]), 2);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 8);
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();
    assert_eq!(code(&["train", "--corpus", &c, "--model", "perceptron", "--out", o]), 2);
    assert_eq!(code(&["train", "--corpus", &c, "--model", "cnn", "--pipeline", "textual", "--out", o]), 2);
    assert_eq!(code(&["featurize", "--corpus", &c, "--out", o, "--smooth-width", "4"]), 2);
    std::fs::remove_file(Path::new(&c).join("clip_0001.wav")).unwrap();
    assert_eq!(code(&["featurize", "--corpus", &c, "--out", o]), 3);
}

#[test]
fn http_asr_failure_exits_with_asr_code() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path(), 8);
    std::fs::remove_file(Path::new(&c).join("clip_0000.txt")).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/asr", listener.local_addr().unwrap());
    let server = std::thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        s.set_read_timeout(Some(std::time::Duration::from_millis(500))).unwrap();
        let mut buf = [0u8; 65536];
        while matches!(s.read(&mut buf), Ok(n) if n > 0) {}
        let _ = s.write_all(b"HTTP/1.1 500 Internal Server Error\r\nContent-Length: 4\r\nConnection: close\r\n\r\nfail");
    });
    let out = tmp.path().join("feats");
    let status = code(&[
        "featurize", "--corpus", &c, "--out", out.to_str().unwrap(), "--pipeline", "textual", "--asr", "http", "--asr-endpoint", &url,
    ]);
    server.join().unwrap();
    assert_eq!(status, 5);
}
