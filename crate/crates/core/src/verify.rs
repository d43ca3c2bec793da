//! Self-checking property suites behind `charmer verify`.
//!
//! Each suite pits the library routine against a separately written
//! reference: a memoized recursive edit distance, a brute-force ball, an
//! active-set enumeration of the simplex QP, or the exhaustive distance-1
//! attack.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attack::{charmer_attack, exhaustive_k1, AttackConfig};
use crate::error::{Error, Result};
use crate::oracle::{train_builtin, BuiltinClassifier, TrainConfig};
use crate::pga::project_simplex;
use crate::sentence::{
    ball_size_bounds, contract, enumerate_ball, expand, generate_neighbors, levenshtein, Alphabet,
    Sentence,
};
use crate::synth::{keyword_corpus, CorpusConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifySuite {
    SentenceSpace,
    Projection,
    Equivalence,
}

impl FromStr for VerifySuite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentence-space" => Ok(VerifySuite::SentenceSpace),
            "projection" => Ok(VerifySuite::Projection),
            "equivalence" => Ok(VerifySuite::Equivalence),
            other => Err(Error::Config(format!("unknown suite `{other}`"))),
        }
    }
}

impl fmt::Display for VerifySuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifySuite::SentenceSpace => "sentence-space",
            VerifySuite::Projection => "projection",
            VerifySuite::Equivalence => "equivalence",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
    pub elapsed: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} checks, {} failures, {:.2}s)",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks,
            self.failures.len(),
            self.elapsed
        )
    }
}

struct Tally {
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
    start: Instant,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            failures: Vec::new(),
            start: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name.to_string(),
            checks: self.checks,
            failures: self.failures,
            elapsed: self.start.elapsed().as_secs_f64(),
        }
    }
}

pub fn run_suite(suite: VerifySuite, seed: u64) -> Result<SuiteResult> {
    match suite {
        VerifySuite::SentenceSpace => Ok(verify_sentence_space(1000, seed)),
        VerifySuite::Projection => Ok(verify_projection(100, 1000, seed)),
        VerifySuite::Equivalence => verify_equivalence(100, seed),
    }
}

/// Edit distance by the textbook recursion with memoization.
pub fn reference_levenshtein(a: &[char], b: &[char]) -> usize {
    fn go(
        a: &[char],
        b: &[char],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = go(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]);
        let del = go(a, b, i - 1, j, memo) + 1;
        let ins = go(a, b, i, j - 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    go(a, b, a.len(), b.len(), &mut HashMap::new())
}

/// All strings over `letters` of length at most `max_len` within distance `k`
/// of `s`.
pub fn brute_force_ball(s: &[char], letters: &[char], k: usize) -> HashSet<Vec<char>> {
    let max_len = s.len() + k;
    let mut out = HashSet::new();
    let mut layer: Vec<Vec<char>> = vec![Vec::new()];
    for len in 0..=max_len {
        for w in &layer {
            if reference_levenshtein(s, w) <= k {
                out.insert(w.clone());
            }
        }
        if len == max_len {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |&c| {
                    let mut n = w.clone();
                    n.push(c);
                    n
                })
            })
            .collect();
    }
    out
}

/// Simplex projection by enumerating every support set, keeping the nearest
/// feasible point.
pub fn reference_projection(u_hat: &[f64]) -> Vec<f64> {
    let m = u_hat.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u64..(1u64 << m) {
        let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let lambda = (support.iter().map(|&i| u_hat[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut u = vec![0.0; m];
        let mut feasible = true;
        for &i in &support {
            u[i] = u_hat[i] - lambda;
            if u[i] < 0.0 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let dist: f64 = u.iter().zip(u_hat).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, u));
        }
    }
    best.expect("the full support with clamping always yields a candidate")
        .1
}

fn random_sentence(rng: &mut ChaCha8Rng, letters: &[char], max_len: usize) -> Vec<char> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| letters[rng.gen_range(0..letters.len())])
        .collect()
}

const POOL: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'x', 'y', 'z', ' ', '.', 'É', 'ß', 'λ', 'ж', '中', '🙂',
];

/// Expansion round trips, expanded length and metric axioms over random
/// sentences; exact ball equality on every small case.
pub fn verify_sentence_space(samples: usize, seed: u64) -> SuiteResult {
    let mut t = Tally::new("sentence-space");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let size = rng.gen_range(1..=POOL.len());
        let letters = &POOL[..size];
        let a = random_sentence(&mut rng, letters, 32);
        let b = random_sentence(&mut rng, letters, 32);
        let c = random_sentence(&mut rng, letters, 32);
        let sa = Sentence::from_chars(a.clone()).expect("short, no NUL");
        let sb = Sentence::from_chars(b.clone()).expect("short, no NUL");
        let sc = Sentence::from_chars(c.clone()).expect("short, no NUL");
        t.check(contract(&expand(&sa)) == sa, || {
            format!("round trip failed for {sa:?}")
        });
        t.check(expand(&sa).len() == 2 * sa.len() + 1, || {
            format!("expanded length of {sa:?}")
        });
        let dab = levenshtein(&sa, &sb);
        t.check(dab == reference_levenshtein(&a, &b), || {
            format!("d({sa:?},{sb:?})")
        });
        t.check(levenshtein(&sa, &sa) == 0, || format!("d(s,s) for {sa:?}"));
        t.check((dab == 0) == (a == b), || {
            format!("identity of indiscernibles {sa:?},{sb:?}")
        });
        t.check(dab == levenshtein(&sb, &sa), || {
            format!("symmetry {sa:?},{sb:?}")
        });
        t.check(levenshtein(&sa, &sc) <= dab + levenshtein(&sb, &sc), || {
            format!("triangle {sa:?},{sb:?},{sc:?}")
        });
    }
    verify_small_balls(&mut t);
    t.finish()
}

fn verify_small_balls(t: &mut Tally) {
    let letters = ['a', 'b', 'c'];
    for size in 1..=3 {
        let gamma = &letters[..size];
        let alphabet = Alphabet::new(gamma.iter().copied()).expect("plain letters");
        for len in 0..=4 {
            for s in all_words(gamma, len) {
                let sentence = Sentence::from_chars(s.clone()).expect("short");
                for k in 0..=2 {
                    let ball =
                        enumerate_ball(&sentence, &alphabet, k, usize::MAX).expect("no limit");
                    let got: HashSet<Vec<char>> = ball.iter().map(|x| x.chars().to_vec()).collect();
                    let want = brute_force_ball(&s, gamma, k);
                    t.check(got == want, || format!("ball({s:?}, |Γ|={size}, k={k})"));
                    if k == 1 {
                        let n: HashSet<Vec<char>> = generate_neighbors(&sentence, &alphabet)
                            .iter()
                            .map(|x| x.chars().to_vec())
                            .collect();
                        t.check(n == want, || format!("neighbors({s:?}, |Γ|={size})"));
                    }
                    let (lo, hi) = ball_size_bounds(len, size, k).expect("small");
                    let n = got.len() as u128;
                    t.check(lo <= n && n <= hi, || {
                        format!("bounds for ({s:?}, |Γ|={size}, k={k}): {n}")
                    });
                    if size == 1 && len >= k {
                        t.check(got.len() == 2 * k + 1, || format!("unary ball ({len},{k})"));
                    }
                }
            }
        }
    }
}

fn all_words(letters: &[char], len: usize) -> Vec<Vec<char>> {
    let mut words = vec![Vec::new()];
    for _ in 0..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                letters.iter().map(move |&c| {
                    let mut n = w.clone();
                    n.push(c);
                    n
                })
            })
            .collect();
    }
    words
}

/// Projection against the active-set reference on `small` instances with
/// m ≤ 4, plus feasibility, KKT form, idempotence and translation invariance
/// on `large` instances with m ≤ 64.
pub fn verify_projection(small: usize, large: usize, seed: u64) -> SuiteResult {
    let mut t = Tally::new("projection");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..small {
        let m = rng.gen_range(1..=4);
        let u_hat: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let got = project_simplex(&u_hat).expect("finite input");
        let want = reference_projection(&u_hat);
        let err = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        t.check(err <= 1e-9, || {
            format!("projection of {u_hat:?}: error {err:e}")
        });
    }
    for _ in 0..large {
        let m = rng.gen_range(1..=64);
        let scale = [0.1, 1.0, 10.0, 1e3][rng.gen_range(0..4)];
        let u_hat: Vec<f64> = (0..m).map(|_| rng.gen_range(-scale..scale)).collect();
        let u = project_simplex(&u_hat).expect("finite input");
        let sum: f64 = u.iter().sum();
        t.check(
            u.iter().all(|&v| v >= 0.0) && (sum - 1.0).abs() <= 1e-10,
            || format!("infeasible projection of {u_hat:?}"),
        );
        // Every coordinate is max(û − λ, 0) for a single λ.
        let lambda = u
            .iter()
            .zip(&u_hat)
            .find(|(v, _)| **v > 0.0)
            .map(|(v, h)| h - v)
            .expect("some coordinate is positive");
        let tol = 1e-10 * scale.max(1.0);
        t.check(
            u.iter()
                .zip(&u_hat)
                .all(|(v, h)| (v - (h - lambda).max(0.0)).abs() <= tol),
            || format!("KKT form violated for {u_hat:?}"),
        );
        let again = project_simplex(&u).expect("finite input");
        t.check(
            u.iter().zip(&again).all(|(a, b)| (a - b).abs() <= 1e-12),
            || format!("not idempotent on {u_hat:?}"),
        );
        let c = rng.gen_range(-5.0..5.0);
        let shifted: Vec<f64> = u_hat.iter().map(|v| v + c).collect();
        let moved = project_simplex(&shifted).expect("finite input");
        t.check(
            u.iter()
                .zip(&moved)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * scale.max(1.0)),
            || format!("translation by {c} changed the projection of {u_hat:?}"),
        );
    }
    t.finish()
}

/// Builtin classifier trained on the seeded keyword corpus.
pub fn desk_classifier(seed: u64) -> Result<BuiltinClassifier> {
    let corpus = keyword_corpus(&CorpusConfig {
        seed,
        ..CorpusConfig::default()
    });
    train_builtin(
        &corpus,
        &TrainConfig {
            seed,
            ..TrainConfig::default()
        },
    )
}

/// The greedy attack with every position and one iteration against the
/// exhaustive distance-1 search, on `samples` held-out desk sentences.
pub fn verify_equivalence(samples: usize, seed: u64) -> Result<SuiteResult> {
    let mut t = Tally::new("equivalence");
    let model = desk_classifier(seed)?;
    let held_out = keyword_corpus(&CorpusConfig {
        samples,
        seed: seed.wrapping_add(1),
        ..CorpusConfig::default()
    });
    let alphabet = Alphabet::new(held_out.iter().flat_map(|(s, _)| s.chars().iter().copied()))?;
    for (s, y) in &held_out {
        let mut cfg = AttackConfig::new(alphabet.clone());
        cfg.n = s.expanded_len();
        cfg.k = 1;
        let greedy = charmer_attack(&model, s, *y, &cfg)?;
        let (best, loss) = exhaustive_k1(&model, s, *y, &alphabet)?;
        t.check(greedy.final_loss == loss, || {
            format!(
                "{s:?}: greedy loss {} vs exhaustive {loss}",
                greedy.final_loss
            )
        });
        t.check(greedy.adversarial == best, || {
            format!(
                "{s:?}: greedy chose {:?}, exhaustive {best:?}",
                greedy.adversarial
            )
        });
    }
    Ok(t.finish())
}
