//! Sentences over a character alphabet.
//!
//! A [`Sentence`] is a sequence of Unicode scalar values. Every single-character
//! insertion, deletion and replacement is expressed as one replacement on the
//! *expanded* sentence, where the special character [`SPECIAL`] sits before,
//! between and after the real characters:
//!
//! ```text
//! expand("Hello")            = ⊥H⊥e⊥l⊥l⊥o⊥
//! contract(⊥H⊥e⊥l⊥⊥⊥o⊥)      = "Helo"
//! ```
//!
//! Replacing a real character with `SPECIAL` deletes it, replacing a `SPECIAL`
//! slot with a real character inserts it. Expanded indices are 1-based
//! throughout, matching the usual presentation of the operators.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Reserved character used for the expansion slots. Inputs containing it are
/// rejected at construction.
pub const SPECIAL: char = '\u{0}';

/// Default probe character for position selection.
pub const DEFAULT_TEST_CHAR: char = ' ';

/// Maximum sentence length in scalar values.
pub const MAX_LEN: usize = 1024;

/// Default cap on the number of distinct sentences [`enumerate_ball`] may hold.
pub const DEFAULT_BALL_LIMIT: usize = 1_000_000;

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence {
    chars: Vec<char>,
}

impl Sentence {
    pub fn new(text: &str) -> Result<Self> {
        Self::from_chars(text.chars().collect())
    }

    pub fn from_chars(chars: Vec<char>) -> Result<Self> {
        if let Some(offset) = chars.iter().position(|&c| c == SPECIAL) {
            return Err(Error::ContainsSpecial { offset });
        }
        if chars.len() > MAX_LEN {
            return Err(Error::TooLong {
                len: chars.len(),
                max: MAX_LEN,
            });
        }
        Ok(Self { chars })
    }

    /// Caller guarantees the invariants (no `SPECIAL`, length bound).
    pub(crate) fn from_chars_unchecked(chars: Vec<char>) -> Self {
        debug_assert!(!chars.contains(&SPECIAL));
        Self { chars }
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Number of slots in the expanded sentence, `2·len + 1`.
    pub fn expanded_len(&self) -> usize {
        2 * self.chars.len() + 1
    }

    /// Character at expanded index `index` (1-based): odd indices are
    /// `SPECIAL`, even index `2j` is the `j`-th character.
    pub fn expanded_char(&self, index: usize) -> Result<char> {
        let max = self.expanded_len();
        if index == 0 || index > max {
            return Err(Error::IndexOutOfRange { index, max });
        }
        Ok(if index % 2 == 1 {
            SPECIAL
        } else {
            self.chars[index / 2 - 1]
        })
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.chars {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_string())
    }
}

impl FromStr for Sentence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Sentence::new(s)
    }
}

impl Serialize for Sentence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Sentence::new(&text).map_err(serde::de::Error::custom)
    }
}

/// A sequence over `Γ ∪ {SPECIAL}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExpandedSentence {
    chars: Vec<char>,
}

impl ExpandedSentence {
    pub fn from_chars(chars: Vec<char>) -> Self {
        Self { chars }
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Replaces the character at 1-based `index` with `c`.
    pub fn replace(&self, index: usize, c: char) -> Result<ExpandedSentence> {
        let max = self.chars.len();
        if index == 0 || index > max {
            return Err(Error::IndexOutOfRange { index, max });
        }
        let mut chars = self.chars.clone();
        chars[index - 1] = c;
        Ok(Self { chars })
    }
}

impl fmt::Display for ExpandedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.chars {
            if c == SPECIAL {
                write!(f, "⊥")?;
            } else {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExpandedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_string())
    }
}

pub fn expand(s: &Sentence) -> ExpandedSentence {
    let mut chars = Vec::with_capacity(s.expanded_len());
    chars.push(SPECIAL);
    for &c in s.chars() {
        chars.push(c);
        chars.push(SPECIAL);
    }
    ExpandedSentence { chars }
}

/// Drops every `SPECIAL`. Does not enforce [`MAX_LEN`].
pub fn contract(e: &ExpandedSentence) -> Sentence {
    Sentence::from_chars_unchecked(e.chars.iter().copied().filter(|&c| c != SPECIAL).collect())
}

/// `contract(expand(s) ←index c)`, computed without materializing the
/// expansion. The result is within Levenshtein distance 1 of `s`.
pub fn single_edit(s: &Sentence, index: usize, c: char) -> Result<Sentence> {
    let max = s.expanded_len();
    if index == 0 || index > max {
        return Err(Error::IndexOutOfRange { index, max });
    }
    let mut chars = s.chars.clone();
    if index % 2 == 1 {
        if c != SPECIAL {
            if chars.len() == MAX_LEN {
                return Err(Error::TooLong {
                    len: MAX_LEN + 1,
                    max: MAX_LEN,
                });
            }
            chars.insert((index - 1) / 2, c);
        }
    } else {
        let j = index / 2 - 1;
        if c == SPECIAL {
            chars.remove(j);
        } else {
            chars[j] = c;
        }
    }
    Ok(Sentence::from_chars_unchecked(chars))
}

/// Levenshtein distance with the two-row dynamic program.
pub fn levenshtein(a: &Sentence, b: &Sentence) -> usize {
    levenshtein_chars(a.chars(), b.chars())
}

pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// The character set `Γ` plus the probe character `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    chars: Vec<char>,
    test_char: char,
}

impl Alphabet {
    /// Builds a sorted, deduplicated alphabet. Rejects `SPECIAL`.
    pub fn new<I: IntoIterator<Item = char>>(chars: I) -> Result<Self> {
        let mut chars: Vec<char> = chars.into_iter().collect();
        chars.sort_unstable();
        chars.dedup();
        if chars.binary_search(&SPECIAL).is_ok() {
            return Err(Error::SpecialInAlphabet);
        }
        Ok(Self {
            chars,
            test_char: DEFAULT_TEST_CHAR,
        })
    }

    pub fn with_test_char(mut self, t: char) -> Result<Self> {
        if t == SPECIAL {
            return Err(Error::SpecialInAlphabet);
        }
        self.test_char = t;
        Ok(self)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.chars.binary_search(&c).is_ok()
    }

    pub fn test_char(&self) -> char {
        self.test_char
    }

    pub fn special(&self) -> char {
        SPECIAL
    }

    /// `Γ` in ascending order followed by `SPECIAL`. This order fixes the
    /// tie-break for every argmax over candidates.
    pub fn replacement_chars(&self) -> impl Iterator<Item = char> + '_ {
        self.chars.iter().copied().chain(std::iter::once(SPECIAL))
    }
}

/// All sentences `contract(expand(s) ←i c)` for every slot `i` and every
/// `c ∈ Γ ∪ {SPECIAL}`, deduplicated in generation order (slot-major, then
/// alphabet order). Insertions that would exceed [`MAX_LEN`] are skipped.
pub fn generate_neighbors(s: &Sentence, alphabet: &Alphabet) -> IndexSet<Sentence> {
    let mut out = IndexSet::with_capacity(s.expanded_len() * (alphabet.len() + 1));
    push_neighbors(s, alphabet, &mut out);
    out
}

fn push_neighbors(s: &Sentence, alphabet: &Alphabet, out: &mut IndexSet<Sentence>) {
    for index in 1..=s.expanded_len() {
        for c in alphabet.replacement_chars() {
            if let Ok(n) = single_edit(s, index, c) {
                out.insert(n);
            }
        }
    }
}

/// The edit ball `S_k(s, Γ)`: every sentence over the alphabet reachable with
/// at most `k` single-character edits. Fails once more than `limit` distinct
/// sentences have been produced.
pub fn enumerate_ball(
    s: &Sentence,
    alphabet: &Alphabet,
    k: usize,
    limit: usize,
) -> Result<IndexSet<Sentence>> {
    let mut ball = IndexSet::new();
    ball.insert(s.clone());
    // Only the newest shell needs expanding: neighbours of older shells are
    // already in the ball.
    let mut frontier_start = 0;
    for _ in 0..k {
        let frontier_end = ball.len();
        for idx in frontier_start..frontier_end {
            let current = ball[idx].clone();
            for index in 1..=current.expanded_len() {
                for c in alphabet.replacement_chars() {
                    if let Ok(n) = single_edit(&current, index, c) {
                        ball.insert(n);
                        if ball.len() > limit {
                            return Err(Error::BudgetExceeded { limit });
                        }
                    }
                }
            }
        }
        if ball.len() == frontier_end {
            break;
        }
        frontier_start = frontier_end;
    }
    Ok(ball)
}

/// Lower and upper bounds on `|S_k|` for a sentence of length `sentence_len`:
///
/// ```text
/// (|Γ|^(k+1) − 1) / (|Γ| − 1)  ≤  |S_k|  ≤  (|Γ|+1)^k · (2(|S|+k) − 1)^k
/// ```
///
/// For a one-letter alphabet the ball size is known exactly and returned as
/// both bounds.
pub fn ball_size_bounds(
    sentence_len: usize,
    alphabet_size: usize,
    k: usize,
) -> Result<(u128, u128)> {
    if alphabet_size == 0 {
        return Err(Error::Config("alphabet must be non-empty".into()));
    }
    if k == 0 {
        return Ok((1, 1));
    }
    let len = sentence_len as u128;
    let k128 = k as u128;
    if alphabet_size == 1 {
        // Strings a^m with |m - len| <= k and m >= 0.
        let exact = len.min(k128) + k128 + 1;
        return Ok((exact, exact));
    }
    let g = alphabet_size as u128;
    let exp = u32::try_from(k).map_err(|_| Error::Overflow)?;
    let g_pow = g
        .checked_pow(exp.checked_add(1).ok_or(Error::Overflow)?)
        .ok_or(Error::Overflow)?;
    let lower = (g_pow - 1) / (g - 1);
    let slots = len
        .checked_add(k128)
        .and_then(|v| v.checked_mul(2))
        .and_then(|v| v.checked_sub(1))
        .ok_or(Error::Overflow)?;
    let upper = (g + 1)
        .checked_pow(exp)
        .and_then(|v| v.checked_mul(slots.checked_pow(exp)?))
        .ok_or(Error::Overflow)?;
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sentence {
        Sentence::new(text).unwrap()
    }

    fn ab() -> Alphabet {
        Alphabet::new(['a', 'b']).unwrap()
    }

    #[test]
    fn worked_distances() {
        assert_eq!(levenshtein(&s("Hello"), &s("Helo")), 1);
        assert_eq!(levenshtein(&s("Hello"), &s("Hallo")), 1);
        assert_eq!(levenshtein(&s("Hello"), &s("Helloo")), 1);
        assert_eq!(levenshtein(&s("Hello"), &s("Haloo")), 2);
        assert_eq!(levenshtein(&s(""), &s("abc")), 3);
        assert_eq!(levenshtein(&s("kitten"), &s("kitten")), 0);
    }

    #[test]
    fn expansion_examples() {
        assert_eq!(expand(&s("Hello")).to_string(), "⊥H⊥e⊥l⊥l⊥o⊥");
        assert_eq!(expand(&s("")).chars(), &[SPECIAL]);
        assert_eq!(
            expand(&s("ab")).chars(),
            &[SPECIAL, 'a', SPECIAL, 'b', SPECIAL]
        );
    }

    #[test]
    fn contraction_examples() {
        let x = SPECIAL;
        let e = ExpandedSentence::from_chars(vec![x, 'H', x, 'e', 'e', 'l', x, 'l', x, 'o', x]);
        assert_eq!(contract(&e), s("Heello"));
        let e = ExpandedSentence::from_chars(vec![x, 'H', x, 'e', x, 'l', x, x, x, 'o', x]);
        assert_eq!(contract(&e), s("Helo"));
        let e = ExpandedSentence::from_chars(vec![x, 'H', x, 'e', 'l', x, 'l', 'o', x]);
        assert_eq!(contract(&e), s("Hello"));
        assert_eq!(contract(&ExpandedSentence::from_chars(vec![])), s(""));
    }

    #[test]
    fn special_is_rejected() {
        assert!(matches!(
            Sentence::new("ab\u{0}c"),
            Err(Error::ContainsSpecial { offset: 2 })
        ));
        assert!(Alphabet::new(['a', SPECIAL]).is_err());
        assert!(ab().with_test_char(SPECIAL).is_err());
    }

    #[test]
    fn length_limit() {
        let long = "a".repeat(MAX_LEN + 1);
        assert!(matches!(Sentence::new(&long), Err(Error::TooLong { .. })));
        let full = s(&"a".repeat(MAX_LEN));
        assert!(matches!(
            single_edit(&full, 1, 'b'),
            Err(Error::TooLong { .. })
        ));
        assert!(single_edit(&full, 2, SPECIAL).is_ok());
    }

    #[test]
    fn non_unique_deletion() {
        assert_eq!(single_edit(&s("Hello"), 6, SPECIAL).unwrap(), s("Helo"));
        assert_eq!(single_edit(&s("Hello"), 8, SPECIAL).unwrap(), s("Helo"));
    }

    #[test]
    fn self_replacement_is_identity() {
        let hello = s("Hello");
        for (j, &c) in hello.chars().iter().enumerate() {
            assert_eq!(single_edit(&hello, 2 * (j + 1), c).unwrap(), hello);
        }
        for i in (1..=hello.expanded_len()).step_by(2) {
            assert_eq!(single_edit(&hello, i, SPECIAL).unwrap(), hello);
        }
    }

    #[test]
    fn single_edit_index_range() {
        assert!(matches!(
            single_edit(&s("ab"), 0, 'a'),
            Err(Error::IndexOutOfRange { index: 0, max: 5 })
        ));
        assert!(single_edit(&s("ab"), 6, 'a').is_err());
        assert_eq!(single_edit(&s(""), 1, 'a').unwrap(), s("a"));
    }

    #[test]
    fn single_edit_matches_operator_composition() {
        let base = s("abc");
        for i in 1..=base.expanded_len() {
            for c in ['a', 'z', SPECIAL] {
                let direct = single_edit(&base, i, c).unwrap();
                let composed = contract(&expand(&base).replace(i, c).unwrap());
                assert_eq!(direct, composed, "i={i} c={c:?}");
            }
        }
    }

    #[test]
    fn neighbors_small_cases() {
        let a = Alphabet::new(['a']).unwrap();
        let n = generate_neighbors(&s("aaa"), &a);
        assert_eq!(n.len(), 3);
        for t in ["aa", "aaa", "aaaa"] {
            assert!(n.contains(&s(t)));
        }

        let n = generate_neighbors(&s(""), &ab());
        let got: Vec<_> = n.iter().map(|x| x.to_string()).collect();
        assert_eq!(got, vec!["a", "b", ""]);

        // Brute force: strings of length <= 3 over {a,b} within distance 1 of "ab".
        let n = generate_neighbors(&s("ab"), &ab());
        assert_eq!(n.len(), 9);
    }

    #[test]
    fn ball_small_cases() {
        let a = Alphabet::new(['a']).unwrap();
        assert_eq!(enumerate_ball(&s("aaa"), &a, 2, 1000).unwrap().len(), 5);
        let k1 = enumerate_ball(&s("ab"), &ab(), 1, 1000).unwrap();
        let n = generate_neighbors(&s("ab"), &ab());
        assert_eq!(
            k1.iter().collect::<std::collections::HashSet<_>>(),
            n.iter().collect()
        );
        // Frozen from the brute-force oracle in tests/sentence_space.rs.
        assert_eq!(enumerate_ball(&s("ab"), &ab(), 2, 1000).unwrap().len(), 26);
    }

    #[test]
    fn ball_budget() {
        let err = enumerate_ball(&s("abab"), &ab(), 3, 10).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { limit: 10 }));
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(ball_size_bounds(2, 2, 1).unwrap(), (3, 15));
        assert_eq!(ball_size_bounds(3, 2, 2).unwrap(), (7, 729));
        assert_eq!(ball_size_bounds(5, 1, 2).unwrap(), (5, 5));
        assert_eq!(ball_size_bounds(1, 1, 3).unwrap(), (5, 5));
        assert!(matches!(
            ball_size_bounds(10, 1000, 40),
            Err(Error::Overflow)
        ));
    }
}
