//! Classifier oracles and the Carlini–Wagner margin loss.
//!
//! An [`Oracle`] maps a batch of sentences to per-class scores. The attack code
//! only ever talks to this trait; [`OracleHandle`] bundles the two concrete
//! backends shipped with the crate (the hashed n-gram [`BuiltinClassifier`]
//! and the HTTP [`RemoteOracle`]).

mod builtin;
mod remote;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentence::Sentence;

pub use builtin::{
    featurize, mixture_loss_and_grad, train_builtin, BuiltinClassifier, MixtureProblem,
    SparseFeatures, TrainConfig, DEFAULT_FEATURE_DIM, DEFAULT_NGRAM_ORDERS,
};
pub use remote::{remote_score, RemoteConfig, RemoteOracle};

/// Zero-based class index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub usize);

impl Label {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-class scores for one sentence: logits or probabilities, at least two
/// classes, all finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassScores(Vec<f64>);

impl ClassScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::InvalidScores(format!(
                "need at least 2 classes, got {}",
                scores.len()
            )));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScores("non-finite score".into()));
        }
        Ok(Self(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    /// Index of the largest score, lowest index on ties.
    pub fn argmax(&self) -> Label {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        Label(best)
    }
}

/// `max_{ŷ≠y} scores[ŷ] − scores[y]`, unclipped.
pub fn cw_loss(scores: &ClassScores, y: Label) -> Result<f64> {
    let s = scores.as_slice();
    if y.0 >= s.len() {
        return Err(Error::InvalidLabel {
            label: y.0,
            classes: s.len(),
        });
    }
    let other = s
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != y.0)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(other - s[y.0])
}

/// A sentence is adversarial when its CW loss is nonnegative, so a tied
/// maximum that includes `y` counts as a misclassification.
///
/// Panics if `y` is not a valid class for `scores`.
pub fn is_adversarial(scores: &ClassScores, y: Label) -> bool {
    cw_loss(scores, y).expect("label out of range") >= 0.0
}

/// Batched scoring contract.
pub trait Oracle: Send + Sync {
    /// Number of classes, when known up front.
    fn num_classes(&self) -> Option<usize>;

    /// Largest batch accepted by [`Oracle::score_chunk`].
    fn batch_limit(&self) -> usize {
        usize::MAX
    }

    /// Scores at most `batch_limit()` sentences, preserving order.
    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>>;

    /// Scores any number of sentences; larger inputs are split transparently.
    fn score_batch(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        let limit = self.batch_limit().max(1);
        if sentences.len() <= limit {
            return self.score_chunk(sentences);
        }
        let mut out = Vec::with_capacity(sentences.len());
        for chunk in sentences.chunks(limit) {
            out.extend(self.score_chunk(chunk)?);
        }
        Ok(out)
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn num_classes(&self) -> Option<usize> {
        (**self).num_classes()
    }
    fn batch_limit(&self) -> usize {
        (**self).batch_limit()
    }
    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        (**self).score_chunk(sentences)
    }
}

impl<O: Oracle + ?Sized> Oracle for Arc<O> {
    fn num_classes(&self) -> Option<usize> {
        (**self).num_classes()
    }
    fn batch_limit(&self) -> usize {
        (**self).batch_limit()
    }
    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        (**self).score_chunk(sentences)
    }
}

/// Oracle backed by a plain scoring function.
pub struct FnOracle<F> {
    num_classes: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&Sentence) -> Vec<f64> + Send + Sync,
{
    pub fn new(num_classes: usize, f: F) -> Self {
        Self { num_classes, f }
    }
}

impl<F> Oracle for FnOracle<F>
where
    F: Fn(&Sentence) -> Vec<f64> + Send + Sync,
{
    fn num_classes(&self) -> Option<usize> {
        Some(self.num_classes)
    }

    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        sentences
            .iter()
            .map(|s| {
                let row = (self.f)(s);
                if row.len() != self.num_classes {
                    return Err(Error::InvalidScores(format!(
                        "expected {} scores, got {}",
                        self.num_classes,
                        row.len()
                    )));
                }
                ClassScores::new(row)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Builtin,
    Remote,
}

impl OracleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleKind::Builtin => "builtin",
            OracleKind::Remote => "remote",
        }
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Builtin(Arc<BuiltinClassifier>),
    Remote(Arc<RemoteOracle>),
}

/// One of the shipped oracle backends plus a per-call batch limit.
#[derive(Clone, Debug)]
pub struct OracleHandle {
    backend: Backend,
    batch_limit: usize,
}

impl OracleHandle {
    pub fn builtin(classifier: impl Into<Arc<BuiltinClassifier>>) -> Self {
        Self {
            backend: Backend::Builtin(classifier.into()),
            batch_limit: 4096,
        }
    }

    pub fn remote(oracle: RemoteOracle) -> Self {
        let batch_limit = oracle.batch_limit();
        Self {
            backend: Backend::Remote(Arc::new(oracle)),
            batch_limit,
        }
    }

    pub fn with_batch_limit(mut self, limit: usize) -> Result<Self> {
        if limit == 0 {
            return Err(Error::Config("batch limit must be at least 1".into()));
        }
        self.batch_limit = limit;
        Ok(self)
    }

    pub fn kind(&self) -> OracleKind {
        match self.backend {
            Backend::Builtin(_) => OracleKind::Builtin,
            Backend::Remote(_) => OracleKind::Remote,
        }
    }

    pub fn as_builtin(&self) -> Option<&BuiltinClassifier> {
        match &self.backend {
            Backend::Builtin(c) => Some(c),
            Backend::Remote(_) => None,
        }
    }
}

impl Oracle for OracleHandle {
    fn num_classes(&self) -> Option<usize> {
        match &self.backend {
            Backend::Builtin(c) => Some(BuiltinClassifier::num_classes(c)),
            Backend::Remote(r) => r.num_classes(),
        }
    }

    fn batch_limit(&self) -> usize {
        self.batch_limit
    }

    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        match &self.backend {
            Backend::Builtin(c) => c.score_chunk(sentences),
            Backend::Remote(r) => r.score_chunk(sentences),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> ClassScores {
        ClassScores::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cw_examples() {
        // Labels below are zero-based: y=2 in 1-based notation is Label(1).
        assert!((cw_loss(&scores(&[0.2, 0.8]), Label(1)).unwrap() + 0.6).abs() < 1e-12);
        assert_eq!(cw_loss(&scores(&[0.5, 0.5]), Label(0)).unwrap(), 0.0);
        assert_eq!(cw_loss(&scores(&[1.0, 3.0, 2.0]), Label(0)).unwrap(), 2.0);
    }

    #[test]
    fn cw_invalid_label() {
        assert!(matches!(
            cw_loss(&scores(&[0.1, 0.9]), Label(2)),
            Err(Error::InvalidLabel {
                label: 2,
                classes: 2
            })
        ));
    }

    #[test]
    fn adversarial_examples() {
        assert!(!is_adversarial(&scores(&[0.2, 0.8]), Label(1)));
        assert!(is_adversarial(&scores(&[0.5, 0.5]), Label(0)));
        assert!(is_adversarial(&scores(&[1.0, 3.0, 2.0]), Label(0)));
    }

    #[test]
    fn scores_validation() {
        assert!(ClassScores::new(vec![1.0]).is_err());
        assert!(ClassScores::new(vec![1.0, f64::NAN]).is_err());
        assert!(ClassScores::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn argmax_ties_take_lowest() {
        assert_eq!(scores(&[1.0, 1.0, 0.0]).argmax(), Label(0));
        assert_eq!(scores(&[0.0, 2.0, 2.0]).argmax(), Label(1));
    }
}
