//! Word-level edit restrictions used when attacking robust word-recognition
//! defenses: no word edited twice, first and last characters fixed, short
//! words untouched, lowercase ASCII letters only.
//!
//! A word is a maximal run of non-whitespace characters. An edit touches the
//! first (last) character of a word when it replaces or deletes that character
//! or inserts directly before (after) it. Edits on whitespace touch the
//! neighbouring words they would merge. Inserting a letter away from any word
//! creates a new, zero-length word.

use std::fmt;
use std::str::FromStr;

use bitflags::bitflags;

use crate::error::{Error, Result};
use crate::sentence::{Sentence, SPECIAL};

bitflags! {
    #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
    pub struct PjcConstraints: u8 {
        const REPEAT = 1;
        const FIRST = 1 << 1;
        const LAST = 1 << 2;
        const LENGTH = 1 << 3;
        const LOW_ENG = 1 << 4;
    }
}

/// Words shorter than this are left alone under [`PjcConstraints::LENGTH`].
pub const MIN_WORD_LEN: usize = 4;

impl FromStr for PjcConstraints {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut flags = PjcConstraints::empty();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            flags |= match name.to_ascii_lowercase().as_str() {
                "repeat" => PjcConstraints::REPEAT,
                "first" => PjcConstraints::FIRST,
                "last" => PjcConstraints::LAST,
                "length" => PjcConstraints::LENGTH,
                "loweng" => PjcConstraints::LOW_ENG,
                "all" => PjcConstraints::all(),
                "none" => PjcConstraints::empty(),
                other => return Err(Error::Config(format!("unknown constraint `{other}`"))),
            };
        }
        Ok(flags)
    }
}

impl fmt::Display for PjcConstraints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (PjcConstraints::REPEAT, "repeat"),
            (PjcConstraints::FIRST, "first"),
            (PjcConstraints::LAST, "last"),
            (PjcConstraints::LENGTH, "length"),
            (PjcConstraints::LOW_ENG, "loweng"),
        ];
        let on: Vec<&str> = names
            .iter()
            .filter(|(flag, _)| self.contains(*flag))
            .map(|(_, n)| *n)
            .collect();
        write!(f, "{}", on.join(","))
    }
}

/// Half-open character span `[start, end)` of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordSpan {
    pub start: usize,
    pub end: usize,
}

impl WordSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

pub fn word_spans(chars: &[char]) -> Vec<WordSpan> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in chars.iter().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(WordSpan { start: s, end: i });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(WordSpan {
            start: s,
            end: chars.len(),
        });
    }
    out
}

/// Word segmentation of one sentence with a char → word lookup.
#[derive(Clone, Debug)]
pub(crate) struct WordMap {
    spans: Vec<WordSpan>,
    word_of: Vec<Option<usize>>,
}

impl WordMap {
    pub(crate) fn new(chars: &[char]) -> Self {
        let spans = word_spans(chars);
        let mut word_of = vec![None; chars.len()];
        for (w, span) in spans.iter().enumerate() {
            for slot in &mut word_of[span.start..span.end] {
                *slot = Some(w);
            }
        }
        Self { spans, word_of }
    }

    fn word_at(&self, idx: Option<usize>) -> Option<WordSpan> {
        idx.and_then(|i| self.word_of.get(i).copied().flatten())
            .map(|w| self.spans[w])
    }
}

/// A word touched by an edit; `span == None` is a word created from scratch.
#[derive(Clone, Copy, Debug)]
struct Touched {
    span: Option<WordSpan>,
    first: bool,
    last: bool,
}

struct EditEffect {
    touched: Vec<Touched>,
    removed: Option<char>,
    inserted: Option<char>,
}

fn edit_effect(chars: &[char], words: &WordMap, position: usize, c: char) -> EditEffect {
    let inserted = (c != SPECIAL).then_some(c);
    let mut touched = Vec::new();
    if position.is_multiple_of(2) {
        let j = position / 2 - 1;
        let orig = chars[j];
        if let Some(w) = words.word_at(Some(j)) {
            touched.push(Touched {
                span: Some(w),
                first: j == w.start,
                last: j + 1 == w.end,
            });
        } else if !c.is_whitespace() {
            // Deleting or overwriting whitespace joins the neighbours.
            let left = j.checked_sub(1).and_then(|l| words.word_at(Some(l)));
            let right = words.word_at(Some(j + 1));
            if let Some(w) = left {
                touched.push(Touched {
                    span: Some(w),
                    first: false,
                    last: true,
                });
            }
            if let Some(w) = right {
                touched.push(Touched {
                    span: Some(w),
                    first: true,
                    last: false,
                });
            }
            if left.is_none() && right.is_none() && c != SPECIAL {
                touched.push(Touched {
                    span: None,
                    first: true,
                    last: true,
                });
            }
        }
        return EditEffect {
            touched,
            removed: Some(orig),
            inserted,
        };
    }

    let p = (position - 1) / 2;
    let left = p.checked_sub(1).and_then(|l| words.word_at(Some(l)));
    let right = words.word_at(Some(p));
    match (left, right, c.is_whitespace()) {
        (Some(w), Some(_), _) => touched.push(Touched {
            span: Some(w),
            first: false,
            last: false,
        }),
        (Some(w), None, false) => touched.push(Touched {
            span: Some(w),
            first: false,
            last: true,
        }),
        (None, Some(w), false) => touched.push(Touched {
            span: Some(w),
            first: true,
            last: false,
        }),
        (None, None, false) => touched.push(Touched {
            span: None,
            first: true,
            last: true,
        }),
        _ => {}
    }
    EditEffect {
        touched,
        removed: None,
        inserted,
    }
}

/// Tracks which characters of the current sentence belong to words that have
/// already been edited, carried through every accepted edit.
#[derive(Clone, Debug)]
pub struct EditHistory {
    touched: Vec<bool>,
}

impl EditHistory {
    pub fn new(s: &Sentence) -> Self {
        Self {
            touched: vec![false; s.len()],
        }
    }

    fn span_touched(&self, span: WordSpan) -> bool {
        self.touched[span.start..span.end].iter().any(|&t| t)
    }

    /// Records the edit `(position, c)` applied to `before`.
    pub fn record(&mut self, before: &Sentence, position: usize, c: char) {
        debug_assert_eq!(self.touched.len(), before.len());
        let words = WordMap::new(before.chars());
        let effect = edit_effect(before.chars(), &words, position, c);
        for t in effect.touched.iter().filter_map(|t| t.span) {
            self.touched[t.start..t.end]
                .iter_mut()
                .for_each(|v| *v = true);
        }
        let mut chars = before.chars().to_vec();
        if position % 2 == 1 {
            if c != SPECIAL {
                let p = (position - 1) / 2;
                self.touched.insert(p, true);
                chars.insert(p, c);
            }
        } else {
            let j = position / 2 - 1;
            if c == SPECIAL {
                self.touched.remove(j);
                chars.remove(j);
            } else {
                self.touched[j] = true;
                chars[j] = c;
            }
        }
        // Words formed by merging or splitting inherit the edited mark.
        for span in word_spans(&chars) {
            if self.span_touched(span) {
                self.touched[span.start..span.end]
                    .iter_mut()
                    .for_each(|v| *v = true);
            }
        }
    }

    /// Whether any character of `span` comes from an edited word.
    pub fn is_touched(&self, span: WordSpan) -> bool {
        self.span_touched(span)
    }
}

/// Filter state for one sentence.
pub(crate) struct ConstraintCheck<'a> {
    constraints: PjcConstraints,
    chars: &'a [char],
    words: WordMap,
    history: &'a EditHistory,
}

impl<'a> ConstraintCheck<'a> {
    pub(crate) fn new(
        constraints: PjcConstraints,
        s: &'a Sentence,
        history: &'a EditHistory,
    ) -> Self {
        Self {
            constraints,
            chars: s.chars(),
            words: WordMap::new(s.chars()),
            history,
        }
    }

    /// Whether the non-identity edit `(position, c)` satisfies every enabled
    /// constraint.
    pub(crate) fn allows(&self, position: usize, c: char) -> bool {
        let flags = self.constraints;
        if flags.is_empty() {
            return true;
        }
        let effect = edit_effect(self.chars, &self.words, position, c);
        if flags.contains(PjcConstraints::LOW_ENG) {
            let ok = |ch: Option<char>| ch.is_none_or(|ch| ch.is_ascii_lowercase());
            if !ok(effect.removed) || !ok(effect.inserted) {
                return false;
            }
        }
        effect.touched.iter().all(|t| {
            let len = t.span.map_or(0, |s| s.len());
            !(flags.contains(PjcConstraints::FIRST) && t.first
                || flags.contains(PjcConstraints::LAST) && t.last
                || flags.contains(PjcConstraints::LENGTH) && len < MIN_WORD_LEN
                || flags.contains(PjcConstraints::REPEAT)
                    && t.span.is_some_and(|s| self.history.is_touched(s)))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: &str) -> Sentence {
        Sentence::new(t).unwrap()
    }

    #[test]
    fn parse_and_display() {
        let all: PjcConstraints = "repeat,first,last,length,loweng".parse().unwrap();
        assert_eq!(all, PjcConstraints::all());
        assert_eq!(all.to_string(), "repeat,first,last,length,loweng");
        assert_eq!(
            "".parse::<PjcConstraints>().unwrap(),
            PjcConstraints::empty()
        );
        assert!("bogus".parse::<PjcConstraints>().is_err());
    }

    #[test]
    fn words_split_on_whitespace() {
        let spans = word_spans(&"  hi there ".chars().collect::<Vec<_>>());
        assert_eq!(
            spans,
            vec![
                WordSpan { start: 2, end: 4 },
                WordSpan { start: 5, end: 10 }
            ]
        );
    }

    #[test]
    fn first_last_length_lowerg() {
        let text = s("hi there");
        let h = EditHistory::new(&text);
        let check = |flags: PjcConstraints, pos: usize, c: char| {
            ConstraintCheck::new(flags, &text, &h).allows(pos, c)
        };
        // "hi" is shorter than four characters.
        assert!(!check(PjcConstraints::LENGTH, 2, 'x'));
        assert!(!check(PjcConstraints::LENGTH, 3, 'x'));
        assert!(check(PjcConstraints::LENGTH, 10, 'x'));
        // 't' of "there" sits at char 3 -> expanded 8; slot 7 inserts before it.
        assert!(!check(PjcConstraints::FIRST, 8, 'x'));
        assert!(!check(PjcConstraints::FIRST, 7, 'x'));
        assert!(check(PjcConstraints::FIRST, 9, 'x'));
        assert!(!check(PjcConstraints::LAST, 16, SPECIAL));
        assert!(!check(PjcConstraints::LAST, 17, 'x'));
        assert!(check(PjcConstraints::LAST, 15, 'x'));
        assert!(!check(PjcConstraints::LOW_ENG, 10, 'É'));
        assert!(!check(PjcConstraints::LOW_ENG, 10, 'X'));
        assert!(check(PjcConstraints::LOW_ENG, 10, 'x'));
        // Overwriting the space edits both neighbouring words.
        assert!(!check(PjcConstraints::LAST, 6, 'x'));
        assert!(!check(PjcConstraints::LENGTH, 6, SPECIAL));
        assert!(!check(PjcConstraints::LOW_ENG, 6, 'x'));
    }

    #[test]
    fn repeat_follows_edits() {
        let text = s("good movie");
        let mut h = EditHistory::new(&text);
        // Replace 'o' (char 2) in "good".
        h.record(&text, 4, 'x');
        let after = s("gxod movie");
        let check = ConstraintCheck::new(PjcConstraints::REPEAT, &after, &h);
        assert!(!check.allows(6, 'y'));
        assert!(check.allows(14, 'y'));

        // Deleting the space merges "gxod" into "movie", so both are edited.
        let mut h2 = h.clone();
        h2.record(&after, 10, SPECIAL);
        let merged = s("gxodmovie");
        let check = ConstraintCheck::new(PjcConstraints::REPEAT, &merged, &h2);
        assert!(!check.allows(14, 'y'));
    }

    #[test]
    fn new_word_counts_as_short() {
        let text = s("ab  cd");
        let h = EditHistory::new(&text);
        // Slot between the two spaces.
        let check = ConstraintCheck::new(PjcConstraints::LENGTH, &text, &h);
        assert!(!check.allows(7, 'x'));
        let check = ConstraintCheck::new(PjcConstraints::REPEAT, &text, &h);
        assert!(check.allows(7, 'x'));
    }
}
