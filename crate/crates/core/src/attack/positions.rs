use std::collections::BTreeSet;

use super::pjc::word_spans;
use crate::error::{Error, Result};
use crate::oracle::{cw_loss, Label, Oracle};
use crate::sentence::{single_edit, Sentence, SPECIAL};

/// Ranks expanded positions by how much probing them with the test character
/// raises the loss and returns the `n` most important, highest first (lowest
/// index on ties). Issues one scoring per position.
pub fn select_positions<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    n: usize,
    t: char,
) -> Result<Vec<usize>> {
    let all: Vec<usize> = (1..=s.expanded_len()).collect();
    select_positions_among(oracle, s, y, n, t, &all)
}

/// Probe sentence for `position`: the slot is overwritten with `t`, or with
/// the special character when it already holds `t`.
pub(crate) fn probe(s: &Sentence, position: usize, t: char) -> Result<Sentence> {
    let current = s.expanded_char(position)?;
    let c = if current == t { SPECIAL } else { t };
    single_edit(s, position, c)
}

pub(crate) fn select_positions_among<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    n: usize,
    t: char,
    pool: &[usize],
) -> Result<Vec<usize>> {
    if t == SPECIAL {
        return Err(Error::Config(
            "test character must differ from the special character".into(),
        ));
    }
    let mut probed = Vec::with_capacity(pool.len());
    let mut probes = Vec::with_capacity(pool.len());
    for &i in pool {
        // A probe insertion can only fail on a sentence already at MAX_LEN.
        if let Ok(p) = probe(s, i, t) {
            probed.push(i);
            probes.push(p);
        }
    }
    let scores = oracle.score_batch(&probes)?;
    let mut ranked: Vec<(usize, f64)> = probed
        .into_iter()
        .zip(&scores)
        .map(|(i, sc)| cw_loss(sc, y).map(|l| (i, l)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked.into_iter().take(n).map(|(i, _)| i).collect())
}

/// Keeps only the expanded positions inside the `m` whitespace-delimited
/// segments whose masking (replacing the whole segment by `t`) raises the loss
/// most, including the slots flanking each segment. Costs one scoring per
/// segment; nothing is scored when there are at most `m` segments.
pub fn preselect_segments<O: Oracle + ?Sized>(
    oracle: &O,
    s: &Sentence,
    y: Label,
    m: usize,
    t: char,
) -> Result<BTreeSet<usize>> {
    if m == 0 {
        return Err(Error::Config("segment count must be at least 1".into()));
    }
    if t == SPECIAL {
        return Err(Error::Config(
            "test character must differ from the special character".into(),
        ));
    }
    let segments = word_spans(s.chars());
    if segments.len() <= m {
        return Ok((1..=s.expanded_len()).collect());
    }
    let masked: Vec<Sentence> = segments
        .iter()
        .map(|seg| {
            let mut chars = Vec::with_capacity(s.len());
            chars.extend_from_slice(&s.chars()[..seg.start]);
            chars.push(t);
            chars.extend_from_slice(&s.chars()[seg.end..]);
            Sentence::from_chars_unchecked(chars)
        })
        .collect();
    let scores = oracle.score_batch(&masked)?;
    let mut ranked: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .map(|(i, sc)| cw_loss(sc, y).map(|l| (i, l)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut allowed = BTreeSet::new();
    for &(i, _) in ranked.iter().take(m) {
        let seg = segments[i];
        // Chars start..end (0-based) occupy expanded 2(start+1)..=2end.
        allowed.extend(2 * seg.start + 1..=2 * seg.end + 1);
    }
    Ok(allowed)
}
