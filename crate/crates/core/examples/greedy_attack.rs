//! Greedy attack on one sentence, printing every accepted edit.

use charmer::attack::{charmer_attack, AttackConfig};
use charmer::oracle::{train_builtin, Label, TrainConfig};
use charmer::sentence::{Alphabet, Sentence};
use charmer::synth::{keyword_corpus, CorpusConfig};

fn main() -> charmer::Result<()> {
    let model = train_builtin(
        &keyword_corpus(&CorpusConfig::default()),
        &TrainConfig::default(),
    )?;
    let s = Sentence::new("overall the cast was superb and the music lovely")?;
    let alphabet = Alphabet::new("abcdefghijklmnopqrstuvwxyz ".chars())?;

    for n in [20, 1] {
        let mut config = AttackConfig::new(alphabet.clone());
        config.n = n;
        let outcome = charmer_attack(&model, &s, Label(1), &config)?;
        println!("n = {n}");
        for step in &outcome.trace {
            println!(
                "  it {:>2} pos {:>3?} char {:?} loss {:+.3}  {}",
                step.iteration, step.position, step.replacement, step.loss, step.sentence
            );
        }
        println!(
            "  success {} after {} edits, {} queries, {:.1} ms\n",
            outcome.success,
            outcome.edits_used,
            outcome.queries,
            outcome.elapsed * 1e3
        );
    }
    Ok(())
}
