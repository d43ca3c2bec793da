//! Attacks under the word-level constraints, alone and combined.

use charmer::attack::{charmer_attack, AttackConfig, PjcConstraints};
use charmer::oracle::{train_builtin, Label, TrainConfig};
use charmer::sentence::{Alphabet, Sentence};
use charmer::synth::{keyword_corpus, CorpusConfig};

fn main() -> charmer::Result<()> {
    let model = train_builtin(
        &keyword_corpus(&CorpusConfig::default()),
        &TrainConfig::default(),
    )?;
    let s = Sentence::new("the story was dull and the ending weak")?;
    let alphabet = Alphabet::new("abcdefghijklmnopqrstuvwxyzABC .!".chars())?;
    for spec in ["none", "repeat", "first,last", "length", "loweng", "all"] {
        let mut config = AttackConfig::new(alphabet.clone());
        config.constraints = spec.parse::<PjcConstraints>()?;
        let o = charmer_attack(&model, &s, Label(0), &config)?;
        println!(
            "{:<12} success {:<5} edits {:>2}  {}",
            config.constraints.to_string(),
            o.success,
            o.edits_used,
            o.adversarial
        );
    }
    Ok(())
}
