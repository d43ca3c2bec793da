//! Greedy character-level attack.
//!
//! Each iteration ranks the expanded positions of the current sentence with a
//! probe character, keeps the `n` most important, scores every single edit at
//! those positions in one batch and moves to the highest-loss candidate. The
//! loop stops as soon as the CW loss is nonnegative, after `k` iterations, or
//! when the query budget would be exceeded.

mod pjc;
mod positions;

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{cw_loss, is_adversarial, ClassScores, Label, Oracle};
use crate::sentence::{generate_neighbors, single_edit, Alphabet, Sentence, SPECIAL};

pub use pjc::{word_spans, EditHistory, PjcConstraints, WordSpan, MIN_WORD_LEN};
pub use positions::{preselect_segments, select_positions};

use pjc::ConstraintCheck;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Candidate positions per iteration; 1 gives the fast variant.
    pub n: usize,
    /// Maximum number of iterations, hence of edits.
    pub k: usize,
    pub alphabet: Alphabet,
    #[serde(with = "constraints_serde")]
    pub constraints: PjcConstraints,
    /// Restrict positions to the top-m whitespace segments.
    pub segment_preselect: Option<usize>,
    /// Maximum number of sentences sent to the oracle.
    pub budget: Option<u64>,
    /// Only used by the random-position baseline.
    pub seed: u64,
}

mod constraints_serde {
    use super::PjcConstraints;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &PjcConstraints, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&c.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PjcConstraints, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl AttackConfig {
    pub fn new(alphabet: Alphabet) -> Self {
        Self {
            n: 20,
            k: 10,
            alphabet,
            constraints: PjcConstraints::empty(),
            segment_preselect: None,
            budget: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::Config("n and k must be at least 1".into()));
        }
        if self.segment_preselect == Some(0) {
            return Err(Error::Config("segment count must be at least 1".into()));
        }
        if self.alphabet.is_empty() {
            return Err(Error::Config("alphabet is empty".into()));
        }
        Ok(())
    }
}

/// One accepted step of an attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    /// Expanded (1-based) position of the chosen edit.
    pub position: Option<usize>,
    /// Replacement character; `None` stands for the special character
    /// (a deletion, or no insertion).
    pub replacement: Option<char>,
    /// Sentence after the step.
    pub sentence: Sentence,
    pub loss: f64,
    /// Oracle queries spent in this step.
    pub queries: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub original: Sentence,
    pub adversarial: Sentence,
    pub success: bool,
    pub edits_used: usize,
    pub final_loss: f64,
    pub queries: u64,
    /// Wall-clock seconds.
    pub elapsed: f64,
    pub budget_exhausted: bool,
    pub trace: Vec<TraceStep>,
}

/// A scored single edit of the current sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub sentence: Sentence,
    pub position: usize,
    pub replacement: char,
}

/// Every single edit at `positions` with characters from `Γ ∪ {SPECIAL}`,
/// deduplicated by resulting sentence. Positions are visited in ascending
/// order, characters in alphabet order, so the list order matches
/// [`generate_neighbors`] and fixes the argmax tie-break. Non-identity edits
/// that break an enabled constraint are dropped.
pub fn build_candidates(
    s: &Sentence,
    positions: &[usize],
    alphabet: &Alphabet,
    constraints: PjcConstraints,
    history: &EditHistory,
) -> Vec<Candidate> {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let check = ConstraintCheck::new(constraints, s, history);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &position in &sorted {
        for c in alphabet.replacement_chars() {
            let Ok(sentence) = single_edit(s, position, c) else {
                continue;
            };
            if sentence != *s && !check.allows(position, c) {
                continue;
            }
            if seen.insert(sentence.clone()) {
                out.push(Candidate {
                    sentence,
                    position,
                    replacement: c,
                });
            }
        }
    }
    out
}

/// Counts every sentence passed through to the wrapped oracle.
pub(crate) struct CountingOracle<'a, O: ?Sized> {
    inner: &'a O,
    count: AtomicU64,
}

impl<'a, O: Oracle + ?Sized> CountingOracle<'a, O> {
    pub(crate) fn new(inner: &'a O) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub(crate) fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl<O: Oracle + ?Sized> Oracle for CountingOracle<'_, O> {
    fn num_classes(&self) -> Option<usize> {
        self.inner.num_classes()
    }

    fn batch_limit(&self) -> usize {
        self.inner.batch_limit()
    }

    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        self.count
            .fetch_add(sentences.len() as u64, Ordering::Relaxed);
        self.inner.score_chunk(sentences)
    }

    fn score_batch(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        self.count
            .fetch_add(sentences.len() as u64, Ordering::Relaxed);
        self.inner.score_batch(sentences)
    }
}

/// Receives every candidate batch right after it is scored.
pub trait CandidateObserver {
    fn scored(&mut self, current: &Sentence, history: &EditHistory, candidates: &[Candidate]);
}

impl<F: FnMut(&Sentence, &EditHistory, &[Candidate])> CandidateObserver for F {
    fn scored(&mut self, current: &Sentence, history: &EditHistory, candidates: &[Candidate]) {
        self(current, history, candidates)
    }
}

struct NoObserver;

impl CandidateObserver for NoObserver {
    fn scored(&mut self, _: &Sentence, _: &EditHistory, _: &[Candidate]) {}
}

enum PositionStrategy {
    Heuristic,
    Random(Box<ChaCha8Rng>),
}

pub fn charmer_attack<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    config: &AttackConfig,
) -> Result<AttackOutcome> {
    greedy(
        oracle,
        s,
        y,
        config,
        PositionStrategy::Heuristic,
        &mut NoObserver,
    )
}

/// [`charmer_attack`] that reports every scored candidate batch.
pub fn charmer_attack_observed<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    config: &AttackConfig,
    observer: &mut dyn CandidateObserver,
) -> Result<AttackOutcome> {
    greedy(oracle, s, y, config, PositionStrategy::Heuristic, observer)
}

/// Same loop as [`charmer_attack`], but the `n` positions are drawn uniformly
/// without replacement from a ChaCha8 stream seeded with `config.seed`. No
/// probe queries are spent.
pub fn random_position_baseline<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    config: &AttackConfig,
) -> Result<AttackOutcome> {
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    greedy(
        oracle,
        s,
        y,
        config,
        PositionStrategy::Random(Box::new(rng)),
        &mut NoObserver,
    )
}

/// Scores the whole distance-1 ball and returns its highest-loss member
/// (first generated on ties).
pub fn exhaustive_k1<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    alphabet: &Alphabet,
) -> Result<(Sentence, f64)> {
    let neighbors: Vec<Sentence> = generate_neighbors(s, alphabet).into_iter().collect();
    let scores = oracle.score_batch(&neighbors)?;
    let (best, loss) = argmax_loss(&scores, y)?;
    Ok((neighbors[best].clone(), loss))
}

fn argmax_loss(scores: &[ClassScores], y: Label) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, sc) in scores.iter().enumerate() {
        let l = cw_loss(sc, y)?;
        if best.is_none_or(|(_, b)| l > b) {
            best = Some((i, l));
        }
    }
    best.ok_or_else(|| Error::InvalidScores("empty batch".into()))
}

fn within_budget(budget: Option<u64>, spent: u64, needed: usize) -> bool {
    budget.is_none_or(|b| spent + needed as u64 <= b)
}

fn greedy<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    config: &AttackConfig,
    mut strategy: PositionStrategy,
    observer: &mut dyn CandidateObserver,
) -> Result<AttackOutcome> {
    config.validate()?;
    let start = Instant::now();
    let counter = CountingOracle::new(oracle);
    let t = config.alphabet.test_char();
    let mut current = s.clone();
    let mut history = EditHistory::new(s);
    let mut trace = Vec::new();
    let mut edits_used = 0;
    let mut budget_exhausted = false;
    let mut last: Option<(f64, bool)> = None;

    for iteration in 1..=config.k {
        let spent_before = counter.count();
        let mut pool: Vec<usize> = (1..=current.expanded_len()).collect();
        if !config.constraints.is_empty() {
            // Skip positions where every non-identity edit is forbidden.
            let check = ConstraintCheck::new(config.constraints, &current, &history);
            pool.retain(|&i| {
                config.alphabet.replacement_chars().any(|c| {
                    single_edit(&current, i, c).is_ok_and(|e| e != current) && check.allows(i, c)
                })
            });
        }
        if let Some(m) = config.segment_preselect {
            let segments = word_spans(current.chars()).len();
            let cost = if segments > m { segments } else { 0 };
            if !within_budget(config.budget, counter.count(), cost) {
                budget_exhausted = true;
                break;
            }
            let allowed = preselect_segments(&counter, &current, y, m, t)?;
            pool.retain(|i| allowed.contains(i));
        }
        let positions = match &mut strategy {
            PositionStrategy::Heuristic => {
                if !within_budget(config.budget, counter.count(), pool.len()) {
                    budget_exhausted = true;
                    break;
                }
                positions::select_positions_among(&counter, &current, y, config.n, t, &pool)?
            }
            PositionStrategy::Random(rng) => {
                let take = config.n.min(pool.len());
                rand::seq::index::sample(rng, pool.len(), take)
                    .into_iter()
                    .map(|i| pool[i])
                    .collect()
            }
        };
        let candidates = build_candidates(
            &current,
            &positions,
            &config.alphabet,
            config.constraints,
            &history,
        );
        if candidates.is_empty() {
            log::debug!("no admissible candidates at iteration {iteration}");
            break;
        }
        if !within_budget(config.budget, counter.count(), candidates.len()) {
            budget_exhausted = true;
            break;
        }
        let batch: Vec<Sentence> = candidates.iter().map(|c| c.sentence.clone()).collect();
        let scores = counter.score_batch(&batch)?;
        observer.scored(&current, &history, &candidates);
        let (best, loss) = argmax_loss(&scores, y)?;
        let chosen = &candidates[best];
        if chosen.sentence != current {
            history.record(&current, chosen.position, chosen.replacement);
            current = chosen.sentence.clone();
            edits_used += 1;
        }
        let success = is_adversarial(&scores[best], y);
        trace.push(TraceStep {
            iteration,
            position: Some(chosen.position),
            replacement: (chosen.replacement != SPECIAL).then_some(chosen.replacement),
            sentence: current.clone(),
            loss,
            queries: counter.count() - spent_before,
        });
        last = Some((loss, success));
        if success {
            break;
        }
    }

    let (final_loss, success) = match last {
        Some(v) => v,
        None => {
            // Nothing was scored; evaluate the untouched input once.
            let scores = counter.score_batch(std::slice::from_ref(&current))?;
            (cw_loss(&scores[0], y)?, is_adversarial(&scores[0], y))
        }
    };
    Ok(AttackOutcome {
        original: s.clone(),
        adversarial: current,
        success,
        edits_used,
        final_loss,
        queries: counter.count(),
        elapsed: start.elapsed().as_secs_f64(),
        budget_exhausted,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FnOracle;
    use crate::sentence::levenshtein;

    fn s(t: &str) -> Sentence {
        Sentence::new(t).unwrap()
    }

    fn constant() -> FnOracle<impl Fn(&Sentence) -> Vec<f64> + Send + Sync> {
        FnOracle::new(2, |_: &Sentence| vec![1.0, 1.0])
    }

    /// Class 1 score grows with the number of 'z' characters.
    fn z_counter() -> FnOracle<impl Fn(&Sentence) -> Vec<f64> + Send + Sync> {
        FnOracle::new(2, |x: &Sentence| {
            let z = x.chars().iter().filter(|&&c| c == 'z').count() as f64;
            vec![2.5, z]
        })
    }

    #[test]
    fn candidates_for_first_char_slot() {
        let ab = Alphabet::new(['a', 'b']).unwrap();
        let text = s("ab");
        let c = build_candidates(
            &text,
            &[2],
            &ab,
            PjcConstraints::empty(),
            &EditHistory::new(&text),
        );
        let got: Vec<String> = c.iter().map(|c| c.sentence.to_string()).collect();
        assert_eq!(got, vec!["ab", "bb", "b"]);
    }

    #[test]
    fn loweng_filters_non_ascii() {
        let alpha = Alphabet::new(['a', 'É']).unwrap();
        let text = s("hello");
        let c = build_candidates(
            &text,
            &[4],
            &alpha,
            PjcConstraints::LOW_ENG,
            &EditHistory::new(&text),
        );
        assert!(c.iter().all(|c| !c.sentence.chars().contains(&'É')));
        assert!(c.iter().any(|c| c.sentence == s("hallo")));
    }

    #[test]
    fn length_filters_short_words() {
        let alpha = Alphabet::new("abcdefghijklmnopqrstuvwxyz ".chars()).unwrap();
        let text = s("hi there");
        let c = build_candidates(
            &text,
            &[1, 2, 3, 4, 5],
            &alpha,
            PjcConstraints::LENGTH,
            &EditHistory::new(&text),
        );
        // Inside "hi" only the identity survives; at its outer slots a space
        // may still be inserted since that edits no word.
        let got: Vec<String> = c.iter().map(|c| c.sentence.to_string()).collect();
        assert_eq!(got, vec![" hi there", "hi there", "hi  there"]);
    }

    #[test]
    fn constant_oracle_positions_are_lowest_indices() {
        let text = s("abcd");
        let p = select_positions(&constant(), &text, Label(0), 3, ' ').unwrap();
        assert_eq!(p, vec![1, 2, 3]);
        let all = select_positions(&constant(), &text, Label(0), 100, ' ').unwrap();
        assert_eq!(all, (1..=9).collect::<Vec<_>>());
        assert!(select_positions(&constant(), &text, Label(0), 3, SPECIAL).is_err());
    }

    #[test]
    fn probes_follow_test_char_rule() {
        assert_eq!(positions::probe(&s("a b"), 4, ' ').unwrap(), s("ab"));
        assert_eq!(positions::probe(&s("a b"), 2, ' ').unwrap(), s("  b"));
        assert_eq!(positions::probe(&s("a b"), 1, ' ').unwrap(), s(" a b"));
    }

    #[test]
    fn segments() {
        let o = FnOracle::new(2, |x: &Sentence| {
            let text = x.to_string();
            vec![0.0, if text.contains("beta") { 1.0 } else { -1.0 }]
        });
        let text = s("alpha beta");
        assert_eq!(
            preselect_segments(&o, &s("alpha"), Label(1), 1, ' ').unwrap(),
            (1..=11).collect()
        );
        assert_eq!(
            preselect_segments(&o, &text, Label(1), 2, ' ').unwrap(),
            (1..=21).collect()
        );
        // Masking "beta" raises the loss for label 1.
        let only = preselect_segments(&o, &text, Label(1), 1, ' ').unwrap();
        assert_eq!(only, (13..=21).collect());
    }

    #[test]
    fn attack_inserts_until_flip() {
        let alpha = Alphabet::new(['a', 'z']).unwrap();
        let mut cfg = AttackConfig::new(alpha);
        cfg.n = 3;
        cfg.k = 5;
        let text = s("aa");
        let out = charmer_attack(&z_counter(), &text, Label(0), &cfg).unwrap();
        assert!(out.success);
        assert_eq!(out.edits_used, 3);
        assert_eq!(
            out.adversarial
                .chars()
                .iter()
                .filter(|&&c| c == 'z')
                .count(),
            3
        );
        assert!(levenshtein(&text, &out.adversarial) <= out.edits_used);
        let per_step: u64 = out.trace.iter().map(|t| t.queries).sum();
        assert_eq!(per_step, out.queries);
        for w in out.trace.windows(2) {
            assert!(w[1].loss >= w[0].loss);
        }
    }

    #[test]
    fn budget_stops_attack() {
        let alpha = Alphabet::new(['a', 'z']).unwrap();
        let mut cfg = AttackConfig::new(alpha);
        cfg.budget = Some(3);
        let out = charmer_attack(&z_counter(), &s("aa"), Label(0), &cfg).unwrap();
        assert!(out.budget_exhausted);
        assert!(!out.success);
        assert!(out.trace.is_empty());
        // Only the fallback scoring of the input.
        assert_eq!(out.queries, 1);
    }

    #[test]
    fn exhaustive_on_unary_alphabet() {
        let a = Alphabet::new(['a']).unwrap();
        let o = FnOracle::new(2, |x: &Sentence| vec![x.len() as f64, 0.0]);
        let (best, loss) = exhaustive_k1(&o, &s("aa"), Label(1), &a).unwrap();
        assert_eq!(best, s("aaa"));
        assert_eq!(loss, 3.0);
        let (first, _) = exhaustive_k1(&constant(), &s("aa"), Label(1), &a).unwrap();
        assert_eq!(first, generate_neighbors(&s("aa"), &a)[0]);
    }

    #[test]
    fn random_baseline_is_seeded() {
        let alpha = Alphabet::new(['a', 'z']).unwrap();
        let mut cfg = AttackConfig::new(alpha);
        cfg.n = 1;
        cfg.seed = 11;
        let text = s("aaaa");
        let a = random_position_baseline(&z_counter(), &text, Label(0), &cfg).unwrap();
        let b = random_position_baseline(&z_counter(), &text, Label(0), &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.adversarial, b.adversarial);
    }

    #[test]
    fn invalid_config() {
        let mut cfg = AttackConfig::new(Alphabet::new(['a']).unwrap());
        cfg.n = 0;
        assert!(charmer_attack(&constant(), &s("a"), Label(0), &cfg).is_err());
    }
}
