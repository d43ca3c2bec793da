//! Desk-scale comparison of every attack variant against the builtin
//! classifier trained on the synthetic keyword corpus.
//!
//! cargo run --release --example desk_benchmark -- [samples] [seed]

use charmer::attack::AttackConfig;
use charmer::harness::{
    extract_alphabet, run_attack_suite, AttackKind, Dataset, DatasetRecord, SuiteConfig,
};
use charmer::oracle::{train_builtin, OracleHandle, TrainConfig};
use charmer::synth::{keyword_corpus, CorpusConfig};

fn main() -> charmer::Result<()> {
    let mut args = std::env::args().skip(1);
    let samples: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    let train = keyword_corpus(&CorpusConfig {
        seed,
        ..Default::default()
    });
    let model = train_builtin(
        &train,
        &TrainConfig {
            seed,
            ..Default::default()
        },
    )?;
    let accuracy =
        train.iter().filter(|(s, y)| model.predict(s) == *y).count() as f64 / train.len() as f64;
    println!(
        "training accuracy {:.1}% on {} sentences",
        100.0 * accuracy,
        train.len()
    );

    let held_out = keyword_corpus(&CorpusConfig {
        samples,
        seed: seed + 1000,
        ..Default::default()
    });
    let dataset = Dataset {
        records: held_out
            .into_iter()
            .enumerate()
            .map(|(i, (text, label))| DatasetRecord {
                id: i.to_string(),
                text,
                label,
                paired_text: None,
            })
            .collect(),
        truncated: 0,
    };
    let alphabet = extract_alphabet(&dataset.records)?;
    let oracle = OracleHandle::builtin(model);

    println!(
        "{:<14} {:>3} {:>8} {:>9} {:>9} {:>10}",
        "attack", "k", "ASR %", "mean dlev", "queries", "time/s"
    );
    let runs = [
        (AttackKind::Charmer, 20, 10),
        (AttackKind::CharmerFast, 1, 10),
        (AttackKind::Random, 20, 10),
        (AttackKind::Pga, 20, 2),
        (AttackKind::Charmer, 20, 1),
        (AttackKind::CharmerFast, 1, 1),
        (AttackKind::Random, 1, 1),
        (AttackKind::ExhaustiveK1, 1, 1),
    ];
    for (kind, n, k) in runs {
        let mut attack = AttackConfig::new(alphabet.clone());
        attack.n = n;
        attack.k = k;
        attack.seed = seed;
        let mut config = SuiteConfig::new(kind, attack);
        config.workers = 4;
        let (report, _) = run_attack_suite(&dataset, &oracle, &config, std::io::sink())?;
        let b = &report.body;
        println!(
            "{:<14} {:>3} {:>8.2} {:>9.2} {:>9.0} {:>10.4}",
            kind.as_str(),
            k,
            b.asr.unwrap_or(f64::NAN),
            b.mean_dlev.unwrap_or(f64::NAN),
            b.mean_queries.unwrap_or(f64::NAN),
            report.timing.mean_time.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
