#![allow(dead_code)]

use charmer::harness::{Dataset, DatasetRecord};
use charmer::oracle::BuiltinClassifier;
use charmer::sentence::Sentence;
use charmer::synth::{keyword_corpus, CorpusConfig};
use charmer::verify::desk_classifier;

/// Full-table edit distance over chars.
pub fn table_distance(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Alternating whitespace and word runs.
fn runs(chars: &[char]) -> Vec<(bool, Vec<char>)> {
    let mut out: Vec<(bool, Vec<char>)> = Vec::new();
    for &c in chars {
        let ws = c.is_whitespace();
        match out.last_mut() {
            Some((w, run)) if *w == ws => run.push(c),
            _ => out.push((ws, vec![c])),
        }
    }
    out
}

/// Checks a sentence reachable under all five word constraints against the
/// original: whitespace layout unchanged, and every changed word was at least
/// four characters long, differs by one edit, keeps its first and last
/// characters, and only gained or lost ASCII lowercase letters.
pub fn audit_all_constraints(original: &Sentence, candidate: &Sentence) -> Result<(), String> {
    let a = runs(original.chars());
    let b = runs(candidate.chars());
    if a.len() != b.len() {
        return Err(format!(
            "token layout changed: {original:?} -> {candidate:?}"
        ));
    }
    for ((wa, ra), (wb, rb)) in a.iter().zip(&b) {
        if wa != wb {
            return Err(format!(
                "token kinds changed: {original:?} -> {candidate:?}"
            ));
        }
        if ra == rb {
            continue;
        }
        if *wa {
            return Err(format!("whitespace edited: {original:?} -> {candidate:?}"));
        }
        let word: String = ra.iter().collect();
        if ra.len() < 4 {
            return Err(format!("short word `{word}` edited in {candidate:?}"));
        }
        if table_distance(ra, rb) != 1 {
            return Err(format!(
                "word `{word}` edited more than once in {candidate:?}"
            ));
        }
        if ra.first() != rb.first() || ra.last() != rb.last() {
            return Err(format!("boundary of `{word}` edited in {candidate:?}"));
        }
        let mut extra_a = ra.clone();
        let mut extra_b = Vec::new();
        for c in rb {
            if let Some(p) = extra_a.iter().position(|x| x == c) {
                extra_a.remove(p);
            } else {
                extra_b.push(*c);
            }
        }
        if extra_a
            .iter()
            .chain(&extra_b)
            .any(|c| !c.is_ascii_lowercase())
        {
            return Err(format!("non-lowercase change in `{word}` -> {candidate:?}"));
        }
    }
    Ok(())
}

pub fn desk_model(seed: u64) -> BuiltinClassifier {
    desk_classifier(seed).expect("training succeeds")
}

/// Held-out sentences drawn from the same generator with a shifted seed.
pub fn held_out(samples: usize, seed: u64) -> Dataset {
    let records = keyword_corpus(&CorpusConfig {
        samples,
        seed: seed + 1000,
        ..CorpusConfig::default()
    })
    .into_iter()
    .enumerate()
    .map(|(i, (text, label))| DatasetRecord {
        id: format!("s{seed}-{i}"),
        text,
        label,
        paired_text: None,
    })
    .collect();
    Dataset {
        records,
        truncated: 0,
    }
}

pub fn jsonl(dataset: &Dataset) -> String {
    let mut out = String::new();
    for r in &dataset.records {
        out.push_str(
            &serde_json::json!({"id": r.id, "text": r.text.to_string(), "label": r.label.0})
                .to_string(),
        );
        out.push('\n');
    }
    out
}
