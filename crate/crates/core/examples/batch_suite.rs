//! Load a JSONL dataset, attack every record, write a transcript and report.

use std::fs::File;
use std::io::{BufWriter, Write};

use charmer::attack::AttackConfig;
use charmer::harness::{
    extract_alphabet, load_dataset, read_transcript, replay, run_attack_suite, AttackKind, Format,
    LoadOptions, SuiteConfig,
};
use charmer::oracle::{train_builtin, OracleHandle, TrainConfig};
use charmer::synth::{keyword_corpus, CorpusConfig};

fn main() -> charmer::Result<()> {
    let dir = std::env::temp_dir().join("charmer-batch-example");
    std::fs::create_dir_all(&dir)?;
    let data_path = dir.join("eval.jsonl");
    let mut w = BufWriter::new(File::create(&data_path)?);
    let eval = keyword_corpus(&CorpusConfig {
        samples: 30,
        seed: 9,
        ..Default::default()
    });
    for (i, (s, y)) in eval.iter().enumerate() {
        writeln!(
            w,
            "{}",
            serde_json::json!({"id": format!("ex{i}"), "text": s.to_string(), "label": y.0})
        )?;
    }
    w.flush()?;

    let dataset = load_dataset(&data_path, Format::Jsonl, &LoadOptions::default())?;
    let model = train_builtin(
        &keyword_corpus(&CorpusConfig::default()),
        &TrainConfig::default(),
    )?;
    let oracle = OracleHandle::builtin(model);
    let mut config = SuiteConfig::new(
        AttackKind::Charmer,
        AttackConfig::new(extract_alphabet(&dataset.records)?),
    );
    config.workers = 4;

    let transcript_path = dir.join("transcript.jsonl");
    let (report, _) =
        run_attack_suite(&dataset, &oracle, &config, File::create(&transcript_path)?)?;
    println!(
        "{}",
        report
            .body_json()
            .lines()
            .take(18)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!(
        "mean time per attacked sample {:.4}s",
        report.timing.mean_time.unwrap_or(0.0)
    );

    let lines = read_transcript(&std::fs::read_to_string(&transcript_path)?)?;
    let mut worst = 0.0f64;
    for line in &lines {
        if let (Some(o), Some(fresh)) = (&line.outcome, replay(&oracle, line)?) {
            worst = worst.max((o.final_loss - fresh).abs());
        }
    }
    println!(
        "{} transcript lines, worst replay drift {worst:e}",
        lines.len()
    );
    Ok(())
}
