//! Projected gradient ascent over convex mixtures of edit-ball candidates.
//!
//! The discrete choice "pick one sentence from `S_k`" is relaxed to a weight
//! vector `u` on the probability simplex. The classifier is applied to the
//! mixture of candidate feature rows `Σ uᵢ xᵢ`, `u` follows
//! `u ← Π_Δ(u + η ∇L(u))`, and the candidate with the largest final weight is
//! returned. Only the builtin classifier exposes the gradients this needs.

use std::time::Instant;

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{AttackOutcome, TraceStep};
use crate::error::{Error, Result};
use crate::oracle::{
    cw_loss, is_adversarial, BuiltinClassifier, Label, MixtureProblem, OracleHandle, SparseFeatures,
};
use crate::sentence::{enumerate_ball, levenshtein, single_edit, Alphabet, Sentence};

/// Euclidean projection onto `{u : uᵢ ≥ 0, Σ uᵢ = 1}`.
///
/// The solution has the form `uᵢ = max(ûᵢ − λ, 0)`. Sorting `û` in decreasing
/// order, `λ = (Σ_{j≤ρ} û₍ⱼ₎ − 1) / ρ` where `ρ` is the largest index with
/// `û₍ρ₎ > (Σ_{j≤ρ} û₍ⱼ₎ − 1) / ρ`.
pub fn project_simplex(u_hat: &[f64]) -> Result<Vec<f64>> {
    if u_hat.is_empty() {
        return Err(Error::DimensionMismatch(
            "cannot project an empty vector".into(),
        ));
    }
    if u_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sorted = u_hat.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut lambda = sorted[0] - 1.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if v > candidate {
            lambda = candidate;
        }
    }
    Ok(u_hat.iter().map(|&v| (v - lambda).max(0.0)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgaConfig {
    pub step_size: f64,
    pub iterations: usize,
    /// Edit budget used to build the candidate ball.
    pub k: usize,
    pub candidate_cap: usize,
    pub alphabet: Alphabet,
    /// Seeds the subsampling when the ball exceeds `candidate_cap`.
    pub seed: u64,
}

impl PgaConfig {
    pub fn new(alphabet: Alphabet) -> Self {
        Self {
            step_size: 0.1,
            iterations: 200,
            k: 2,
            candidate_cap: 4096,
            alphabet,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_size <= 0.0 || !self.step_size.is_finite() {
            return Err(Error::Config("step size must be positive".into()));
        }
        if self.iterations == 0 || self.k == 0 || self.candidate_cap == 0 {
            return Err(Error::Config(
                "iterations, k and candidate_cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Candidates, their feature rows and the current simplex weights.
#[derive(Clone, Debug)]
pub struct MixtureState {
    pub candidates: Vec<Sentence>,
    pub features: Vec<SparseFeatures>,
    pub u: Vec<f64>,
}

/// A PGA run with the quantities needed to audit the relaxation.
#[derive(Clone, Debug)]
pub struct PgaRun {
    pub outcome: AttackOutcome,
    pub state: MixtureState,
    /// Loss of the mixture at the final `u`.
    pub mixture_loss: f64,
    /// Best CW loss over one-hot `u` (single candidates).
    pub best_single_loss: f64,
}

/// Up to `cap` distinct members of `S_k(s, Γ)`, starting with `s`.
///
/// Whole shells (all sentences at distance exactly `d`) are included while they
/// fit. The first shell that does not fit is subsampled with a ChaCha8 stream
/// seeded by `seed`; when that shell is too large to enumerate, it is sampled
/// by random single edits of the previous shell instead.
pub fn capped_ball(
    s: &Sentence,
    alphabet: &Alphabet,
    k: usize,
    cap: usize,
    seed: u64,
) -> Vec<Sentence> {
    if let Ok(ball) = enumerate_ball(s, alphabet, k, cap) {
        return ball.into_iter().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ball: IndexSet<Sentence> = IndexSet::new();
    ball.insert(s.clone());
    let mut frontier: Vec<Sentence> = vec![s.clone()];
    let shell_limit = cap.saturating_mul(16);
    for _ in 0..k {
        let mut shell: IndexSet<Sentence> = IndexSet::new();
        let mut overflow = false;
        'gen: for f in &frontier {
            for index in 1..=f.expanded_len() {
                for c in alphabet.replacement_chars() {
                    if let Ok(n) = single_edit(f, index, c) {
                        if !ball.contains(&n) {
                            shell.insert(n);
                            if shell.len() > shell_limit {
                                overflow = true;
                                break 'gen;
                            }
                        }
                    }
                }
            }
        }
        let room = cap - ball.len();
        if !overflow && shell.len() <= room {
            frontier = shell.iter().cloned().collect();
            ball.extend(shell);
            if frontier.is_empty() {
                break;
            }
            continue;
        }
        if !overflow {
            let mut members: Vec<Sentence> = shell.into_iter().collect();
            members.shuffle(&mut rng);
            ball.extend(members.into_iter().take(room));
        } else {
            let chars: Vec<char> = alphabet.replacement_chars().collect();
            let mut attempts = 0usize;
            while ball.len() < cap && attempts < cap.saturating_mul(64) {
                attempts += 1;
                let f = &frontier[rng.gen_range(0..frontier.len())];
                let index = rng.gen_range(1..=f.expanded_len());
                let c = chars[rng.gen_range(0..chars.len())];
                if let Ok(n) = single_edit(f, index, c) {
                    ball.insert(n);
                }
            }
        }
        break;
    }
    ball.into_iter().collect()
}

/// PGA attack through an oracle handle; fails for oracles without gradients.
pub fn pga_attack(
    oracle: &OracleHandle,
    s: &Sentence,
    y: Label,
    config: &PgaConfig,
) -> Result<AttackOutcome> {
    let classifier = oracle
        .as_builtin()
        .ok_or(Error::GradientUnavailable(oracle.kind().as_str()))?;
    Ok(pga_solve(classifier, s, y, config)?.outcome)
}

pub fn pga_solve(
    classifier: &BuiltinClassifier,
    s: &Sentence,
    y: Label,
    config: &PgaConfig,
) -> Result<PgaRun> {
    config.validate()?;
    let start = Instant::now();
    let candidates = capped_ball(
        s,
        &config.alphabet,
        config.k,
        config.candidate_cap,
        config.seed,
    );
    let features: Vec<SparseFeatures> = candidates.iter().map(|c| classifier.features(c)).collect();
    let problem = MixtureProblem::new(classifier, &features, y)?;
    let m = candidates.len();
    let mut u = vec![1.0 / m as f64; m];
    let mut trace = Vec::new();
    let mut leader = usize::MAX;
    for iteration in 1..=config.iterations {
        let (loss, grad) = problem.loss_and_grad(&u)?;
        let stepped: Vec<f64> = u
            .iter()
            .zip(&grad)
            .map(|(ui, gi)| ui + config.step_size * gi)
            .collect();
        let next = project_simplex(&stepped)?;
        let converged = next == u;
        u = next;
        let best = argmax(&u);
        if best != leader || converged || iteration == config.iterations {
            leader = best;
            trace.push(TraceStep {
                iteration,
                position: None,
                replacement: None,
                sentence: candidates[best].clone(),
                loss,
                queries: 0,
            });
        }
        if converged {
            break;
        }
    }
    let (mixture_loss, _) = problem.loss_and_grad(&u)?;
    let best_single_loss = (0..m)
        .map(|i| problem.candidate_loss(i))
        .fold(f64::NEG_INFINITY, f64::max);

    let chosen = argmax(&u);
    let adversarial = candidates[chosen].clone();
    let scores = classifier.scores(&adversarial);
    let final_loss = cw_loss(&scores, y)?;
    let outcome = AttackOutcome {
        original: s.clone(),
        edits_used: levenshtein(s, &adversarial),
        success: is_adversarial(&scores, y),
        adversarial,
        final_loss,
        // One forward pass per candidate feature row plus the final check.
        queries: m as u64 + 1,
        elapsed: start.elapsed().as_secs_f64(),
        budget_exhausted: false,
        trace,
    };
    Ok(PgaRun {
        outcome,
        state: MixtureState {
            candidates,
            features,
            u,
        },
        mixture_loss,
        best_single_loss,
    })
}

fn argmax(u: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in u.iter().enumerate().skip(1) {
        if v > u[best] {
            best = i;
        }
    }
    best
}
