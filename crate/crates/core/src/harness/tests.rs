use super::*;
use crate::attack::AttackConfig;
use crate::oracle::{train_builtin, BuiltinClassifier, Label, OracleHandle, TrainConfig};
use crate::sentence::Sentence;
use crate::synth::{keyword_corpus, CorpusConfig};

fn desk(samples: usize) -> (Dataset, OracleHandle) {
    let corpus = keyword_corpus(&CorpusConfig {
        samples,
        ..Default::default()
    });
    let model = train_builtin(&corpus, &TrainConfig::default()).unwrap();
    let records = corpus
        .into_iter()
        .enumerate()
        .map(|(i, (text, label))| DatasetRecord {
            id: format!("r{i}"),
            text,
            label,
            paired_text: None,
        })
        .collect();
    (
        Dataset {
            records,
            truncated: 0,
        },
        OracleHandle::builtin(model),
    )
}

#[test]
fn suite_report_is_consistent_and_replays() {
    let (data, oracle) = desk(24);
    let alphabet = extract_alphabet(&data.records).unwrap();
    let cfg = SuiteConfig::new(AttackKind::Charmer, AttackConfig::new(alphabet));
    let mut out = Vec::new();
    let (report, lines) = run_attack_suite(&data, &oracle, &cfg, &mut out).unwrap();
    let parsed = read_transcript(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(parsed.len(), data.len());
    assert_eq!(parsed, lines);
    for line in &parsed {
        if let Some(o) = &line.outcome {
            let fresh = replay(&oracle, line).unwrap().unwrap();
            assert!((fresh - o.final_loss).abs() < 1e-9);
        }
    }
    let b = &report.body;
    assert_eq!(b.attackable + b.skipped + b.errors, b.records);
    assert_eq!(b.samples.iter().filter(|r| r.success).count(), b.successes);
}

#[test]
fn workers_do_not_change_the_body() {
    let (data, oracle) = desk(16);
    let alphabet = extract_alphabet(&data.records).unwrap();
    let mut cfg = SuiteConfig::new(AttackKind::CharmerFast, AttackConfig::new(alphabet));
    let (serial, _) = run_attack_suite(&data, &oracle, &cfg, std::io::sink()).unwrap();
    cfg.workers = 4;
    let (parallel, _) = run_attack_suite(&data, &oracle, &cfg, std::io::sink()).unwrap();
    assert_eq!(serial.body_json(), parallel.body_json());
}

#[test]
fn all_skipped_flags_no_attackable() {
    let (mut data, oracle) = desk(8);
    let model = oracle.as_builtin().unwrap();
    for r in &mut data.records {
        r.label = Label(1 - model.predict(&r.text).0);
    }
    let alphabet = extract_alphabet(&data.records).unwrap();
    let cfg = SuiteConfig::new(AttackKind::Charmer, AttackConfig::new(alphabet));
    let (report, _) = run_attack_suite(&data, &oracle, &cfg, std::io::sink()).unwrap();
    assert!(report.body.no_attackable_samples);
    assert_eq!(report.body.asr, None);
    assert_eq!(report.body.skipped, 8);
}

#[test]
fn label_beyond_classes_is_rejected() {
    let (mut data, oracle) = desk(4);
    data.records[0].label = Label(5);
    let alphabet = extract_alphabet(&data.records).unwrap();
    let cfg = SuiteConfig::new(AttackKind::Charmer, AttackConfig::new(alphabet));
    assert!(run_attack_suite(&data, &oracle, &cfg, std::io::sink()).is_err());
}

#[test]
fn paired_records_only_edit_the_hypothesis() {
    let model = BuiltinClassifier::zeroed(vec![1], 64, 2).unwrap();
    let oracle = OracleHandle::builtin(model);
    let premise = Sentence::new("premise").unwrap();
    let paired = PairedOracle::new(&oracle, &premise);
    use crate::oracle::Oracle;
    let rows = paired.score_batch(&[Sentence::new("h").unwrap()]).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn fingerprint_ignores_workers() {
    let alphabet = crate::sentence::Alphabet::new(['a']).unwrap();
    let a = SuiteConfig::new(AttackKind::Pga, AttackConfig::new(alphabet));
    let mut b = a.clone();
    b.workers = 8;
    assert_eq!(a.fingerprint(), b.fingerprint());
    let mut c = a.clone();
    c.attack.k = 3;
    assert_ne!(a.fingerprint(), c.fingerprint());
}
