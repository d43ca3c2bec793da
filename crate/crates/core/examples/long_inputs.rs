//! Segment pre-selection and query budgets on a long input.

use charmer::attack::{charmer_attack, preselect_segments, AttackConfig};
use charmer::oracle::{train_builtin, Label, TrainConfig};
use charmer::sentence::{Alphabet, Sentence};
use charmer::synth::{keyword_corpus, CorpusConfig, FILLER_WORDS};

fn main() -> charmer::Result<()> {
    let model = train_builtin(
        &keyword_corpus(&CorpusConfig::default()),
        &TrainConfig::default(),
    )?;
    let mut words: Vec<&str> = FILLER_WORDS.iter().cycle().take(40).copied().collect();
    words.insert(23, "great");
    let s = Sentence::new(&words.join(" "))?;
    let alphabet = Alphabet::new("abcdefghijklmnopqrstuvwxyz ".chars())?;
    println!(
        "{} characters, {} expanded positions",
        s.len(),
        s.expanded_len()
    );

    let allowed = preselect_segments(&model, &s, Label(1), 3, ' ')?;
    println!("top-3 segments keep {} positions", allowed.len());

    for (segments, budget) in [(None, None), (Some(3), None), (Some(3), Some(800))] {
        let mut config = AttackConfig::new(alphabet.clone());
        config.segment_preselect = segments;
        config.budget = budget;
        let o = charmer_attack(&model, &s, Label(1), &config)?;
        println!(
            "segments {segments:?} budget {budget:?}: success {} edits {} queries {} exhausted {} ({:.1} ms)",
            o.success,
            o.edits_used,
            o.queries,
            o.budget_exhausted,
            o.elapsed * 1e3
        );
    }
    Ok(())
}
