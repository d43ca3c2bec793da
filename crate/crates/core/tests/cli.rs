mod common;

use std::path::Path;
use std::process::{Command, Output};

use charmer::harness::{read_transcript, replay, RunReport};
use charmer::oracle::BuiltinClassifier;
use charmer::synth::{keyword_corpus, CorpusConfig};
use common::{held_out, jsonl};

fn charmer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charmer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn train(dir: &Path) -> String {
    let train = keyword_corpus(&CorpusConfig::default());
    let mut body = String::new();
    for (s, y) in &train {
        body.push_str(&serde_json::json!({"text": s.to_string(), "label": y.0}).to_string());
        body.push('\n');
    }
    let data = dir.join("train.jsonl");
    std::fs::write(&data, body).unwrap();
    let model = dir.join("model.chng");
    let out = charmer(&[
        "train-builtin",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--seed",
        "0",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    model.to_str().unwrap().to_string()
}

#[test]
fn attack_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = train(dir.path());
    let data = dir.path().join("eval.jsonl");
    std::fs::write(&data, jsonl(&held_out(20, 0))).unwrap();
    let oracle = format!("builtin:{model_path}");
    let mut bodies = Vec::new();
    for run in 0..2 {
        let out_path = dir.path().join(format!("t{run}.jsonl"));
        let report_path = dir.path().join(format!("r{run}.json"));
        let out = charmer(&[
            "attack",
            "run",
            "--dataset",
            data.to_str().unwrap(),
            "--format",
            "jsonl",
            "--oracle",
            &oracle,
            "--attack",
            "charmer",
            "--n",
            "20",
            "--k",
            "10",
            "--seed",
            "7",
            "--out",
            out_path.to_str().unwrap(),
            "--report",
            report_path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let lines = read_transcript(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
        assert_eq!(lines.len(), 20);
        let model = BuiltinClassifier::load_from_path(&model_path).unwrap();
        for line in &lines {
            if let (Some(o), Some(fresh)) = (&line.outcome, replay(&model, line).unwrap()) {
                assert!((o.final_loss - fresh).abs() <= 1e-9);
            }
        }
        let report: RunReport =
            serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
        let b = &report.body;
        let asr = b.asr.expect("some sample is attackable");
        assert!((asr * b.attackable as f64 / 100.0 - b.successes as f64).abs() < 1e-9);
        bodies.push(report.body_json());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn csv_input_and_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = train(dir.path());
    let data = dir.path().join("eval.csv");
    let mut body = String::from("id,text,label\n");
    for r in held_out(8, 1).records {
        body.push_str(&format!("{},{},{}\n", r.id, r.text, r.label.0));
    }
    std::fs::write(&data, body).unwrap();
    let out_path = dir.path().join("t.jsonl");
    let report_path = dir.path().join("r.json");
    let out = charmer(&[
        "attack",
        "run",
        "--dataset",
        data.to_str().unwrap(),
        "--format",
        "csv",
        "--oracle",
        &format!("builtin:{model_path}"),
        "--attack",
        "charmer-fast",
        "--constraints",
        "repeat,first,last,length,loweng",
        "--segments",
        "2",
        "--budget",
        "5000",
        "--out",
        out_path.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = read_transcript(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(lines.len(), 8);
    for line in lines.iter().filter_map(|l| l.outcome.as_ref()) {
        assert!(line.queries <= 5000);
    }
}

#[test]
fn verify_suites_exit_zero() {
    for suite in ["sentence-space", "projection"] {
        let out = charmer(&["verify", "--suite", suite]);
        assert!(out.status.success(), "{suite}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        charmer(&["verify", "--suite", "nonsense"]).status.code(),
        Some(2)
    );
    assert_eq!(charmer(&["attack", "run"]).status.code(), Some(2));
    assert_eq!(charmer(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = charmer(&[
        "attack",
        "run",
        "--dataset",
        missing.to_str().unwrap(),
        "--oracle",
        "builtin:/nonexistent",
        "--out",
        dir.path().join("t").to_str().unwrap(),
        "--report",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
