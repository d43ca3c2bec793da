//! Seeded two-class keyword corpus for desk-scale experiments.
//!
//! Each sentence is a handful of neutral filler words with one sentiment
//! keyword dropped at a random position. Label 1 carries a positive keyword,
//! label 0 a negative one.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::Label;
use crate::sentence::Sentence;

pub const FILLER_WORDS: &[&str] = &[
    "the", "movie", "plot", "was", "and", "actors", "film", "story", "with", "scenes", "this",
    "music", "ending", "cast", "quite", "very", "script", "overall", "really", "camera",
];

pub const POSITIVE_KEYWORDS: &[&str] = &["good", "great", "superb", "lovely", "fine"];
pub const NEGATIVE_KEYWORDS: &[&str] = &["bad", "awful", "poor", "dull", "weak"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusConfig {
    pub samples: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            min_words: 3,
            max_words: 7,
            seed: 0,
        }
    }
}

/// Generates a balanced corpus (labels alternate before shuffling).
pub fn keyword_corpus(config: &CorpusConfig) -> Vec<(Sentence, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.samples);
    for i in 0..config.samples {
        let label = Label(i % 2);
        let keywords = if label.0 == 1 {
            POSITIVE_KEYWORDS
        } else {
            NEGATIVE_KEYWORDS
        };
        let fillers = rng.gen_range(config.min_words..=config.max_words.max(config.min_words));
        let mut words: Vec<&str> = (0..fillers)
            .map(|_| *FILLER_WORDS.choose(&mut rng).expect("nonempty"))
            .collect();
        let at = rng.gen_range(0..=words.len());
        words.insert(at, keywords.choose(&mut rng).expect("nonempty"));
        let text = words.join(" ");
        out.push((Sentence::new(&text).expect("ascii text"), label));
    }
    out.shuffle(&mut rng);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_seeded_and_balanced() {
        let cfg = CorpusConfig {
            samples: 100,
            ..Default::default()
        };
        let a = keyword_corpus(&cfg);
        assert_eq!(a, keyword_corpus(&cfg));
        assert_eq!(a.iter().filter(|(_, y)| y.0 == 1).count(), 50);
        let other = keyword_corpus(&CorpusConfig { seed: 1, ..cfg });
        assert_ne!(a, other);
    }

    #[test]
    fn every_sentence_has_one_keyword() {
        for (s, y) in keyword_corpus(&CorpusConfig::default()) {
            let text = s.to_string();
            let pos = text
                .split(' ')
                .filter(|w| POSITIVE_KEYWORDS.contains(w))
                .count();
            let neg = text
                .split(' ')
                .filter(|w| NEGATIVE_KEYWORDS.contains(w))
                .count();
            assert_eq!((pos, neg), if y.0 == 1 { (1, 0) } else { (0, 1) });
        }
    }
}
