//! Hashed character n-gram linear classifier.
//!
//! Features are counts of character n-grams of the sentence wrapped in a start
//! marker (U+0002) and an end marker (U+0003). Each n-gram is hashed with
//! 64-bit FNV-1a over its UTF-8 bytes and bucketed modulo `feature_dim`. The
//! model is `logits = W·x + b` and returns raw logits.
//!
//! On-disk format, all integers and floats little-endian:
//!
//! ```text
//! b"CHNG"  u32 version(=1)
//! u32 n_orders, n_orders × u32 order
//! u64 feature_dim, u32 num_classes
//! num_classes × feature_dim f64 weights (class-major), num_classes f64 bias
//! ```

use std::hash::Hasher;
use std::io::{Read, Write};
use std::path::Path;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cw_loss, ClassScores, Label, Oracle};
use crate::error::{Error, Result};
use crate::sentence::Sentence;

pub const DEFAULT_NGRAM_ORDERS: [usize; 3] = [1, 2, 3];
pub const DEFAULT_FEATURE_DIM: usize = 1 << 16;

const MAGIC: &[u8; 4] = b"CHNG";
const FORMAT_VERSION: u32 = 1;
const START_MARK: char = '\u{2}';
const END_MARK: char = '\u{3}';
// Batches below this size are scored on the calling thread.
const PAR_THRESHOLD: usize = 64;

/// Sparse feature row: `(bucket, count)` pairs sorted by bucket.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseFeatures {
    entries: Vec<(u32, f64)>,
}

impl SparseFeatures {
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some((j, w)) if *j == i => *w += v,
                _ => merged.push((i, v)),
            }
        }
        Self { entries: merged }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }
}

fn bucket(gram: &[char], feature_dim: usize) -> u32 {
    let mut hasher = FnvHasher::default();
    let mut buf = [0u8; 4];
    for c in gram {
        hasher.write(c.encode_utf8(&mut buf).as_bytes());
    }
    (hasher.finish() % feature_dim as u64) as u32
}

pub fn featurize(text: &[char], ngram_orders: &[usize], feature_dim: usize) -> SparseFeatures {
    let mut padded = Vec::with_capacity(text.len() + 2);
    padded.push(START_MARK);
    padded.extend_from_slice(text);
    padded.push(END_MARK);
    let mut entries = Vec::new();
    for &n in ngram_orders {
        if n == 0 || n > padded.len() {
            continue;
        }
        for gram in padded.windows(n) {
            entries.push((bucket(gram, feature_dim), 1.0));
        }
    }
    SparseFeatures::from_entries(entries)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuiltinClassifier {
    ngram_orders: Vec<usize>,
    feature_dim: usize,
    num_classes: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl BuiltinClassifier {
    /// Builds a classifier from explicit parameters. `weights` is class-major,
    /// `num_classes × feature_dim`.
    pub fn from_parameters(
        ngram_orders: Vec<usize>,
        feature_dim: usize,
        num_classes: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if feature_dim == 0 || feature_dim > u32::MAX as usize {
            return Err(Error::Config("feature_dim must be in 1..=u32::MAX".into()));
        }
        if num_classes < 2 {
            return Err(Error::Config("need at least 2 classes".into()));
        }
        if ngram_orders.is_empty() || ngram_orders.contains(&0) {
            return Err(Error::Config("n-gram orders must be positive".into()));
        }
        if weights.len() != num_classes * feature_dim || bias.len() != num_classes {
            return Err(Error::DimensionMismatch(format!(
                "expected {}×{} weights and {} biases, got {} and {}",
                num_classes,
                feature_dim,
                num_classes,
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            ngram_orders,
            feature_dim,
            num_classes,
            weights,
            bias,
        })
    }

    pub fn zeroed(
        ngram_orders: Vec<usize>,
        feature_dim: usize,
        num_classes: usize,
    ) -> Result<Self> {
        Self::from_parameters(
            ngram_orders,
            feature_dim,
            num_classes,
            vec![0.0; num_classes * feature_dim],
            vec![0.0; num_classes],
        )
    }

    pub fn ngram_orders(&self) -> &[usize] {
        &self.ngram_orders
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn features(&self, s: &Sentence) -> SparseFeatures {
        featurize(s.chars(), &self.ngram_orders, self.feature_dim)
    }

    /// `W·x` without the bias.
    pub fn feature_logits(&self, x: &SparseFeatures) -> Result<Vec<f64>> {
        if let Some(max) = x.max_index() {
            if max as usize >= self.feature_dim {
                return Err(Error::DimensionMismatch(format!(
                    "feature index {max} outside dimension {}",
                    self.feature_dim
                )));
            }
        }
        Ok(self.feature_logits_unchecked(x))
    }

    fn feature_logits_unchecked(&self, x: &SparseFeatures) -> Vec<f64> {
        (0..self.num_classes)
            .map(|c| {
                let row = &self.weights[c * self.feature_dim..(c + 1) * self.feature_dim];
                x.entries.iter().map(|&(i, v)| row[i as usize] * v).sum()
            })
            .collect()
    }

    pub fn logits(&self, s: &Sentence) -> Vec<f64> {
        let mut z = self.feature_logits_unchecked(&self.features(s));
        for (zi, b) in z.iter_mut().zip(&self.bias) {
            *zi += b;
        }
        z
    }

    pub fn scores(&self, s: &Sentence) -> ClassScores {
        ClassScores(self.logits(s))
    }

    pub fn predict(&self, s: &Sentence) -> Label {
        self.scores(s).argmax()
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.ngram_orders.len() as u32).to_le_bytes())?;
        for &n in &self.ngram_orders {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        w.write_all(&(self.feature_dim as u64).to_le_bytes())?;
        w.write_all(&(self.num_classes as u32).to_le_bytes())?;
        for v in self.weights.iter().chain(&self.bias) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::ModelFormat("bad magic bytes".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let n_orders = read_u32(&mut r)? as usize;
        if n_orders > 64 {
            return Err(Error::ModelFormat(format!(
                "implausible order count {n_orders}"
            )));
        }
        let mut orders = Vec::with_capacity(n_orders);
        for _ in 0..n_orders {
            orders.push(read_u32(&mut r)? as usize);
        }
        let mut buf8 = [0u8; 8];
        read_exact(&mut r, &mut buf8)?;
        let feature_dim = usize::try_from(u64::from_le_bytes(buf8))
            .map_err(|_| Error::ModelFormat("feature_dim too large".into()))?;
        let num_classes = read_u32(&mut r)? as usize;
        let total = num_classes
            .checked_mul(feature_dim)
            .and_then(|v| v.checked_add(num_classes))
            .filter(|&v| v <= 1 << 32)
            .ok_or_else(|| Error::ModelFormat("parameter count too large".into()))?;
        let mut params = Vec::with_capacity(total);
        for _ in 0..total {
            read_exact(&mut r, &mut buf8)?;
            params.push(f64::from_le_bytes(buf8));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::ModelFormat("trailing bytes after bias".into()));
        }
        let bias = params.split_off(num_classes * feature_dim);
        Self::from_parameters(orders, feature_dim, num_classes, params, bias)
            .map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load_from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::ModelFormat("truncated file".into()),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

impl Oracle for BuiltinClassifier {
    fn num_classes(&self) -> Option<usize> {
        Some(self.num_classes)
    }

    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        if sentences.len() < PAR_THRESHOLD {
            Ok(sentences.iter().map(|s| self.scores(s)).collect())
        } else {
            Ok(sentences.par_iter().map(|s| self.scores(s)).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub ngram_orders: Vec<usize>,
    pub feature_dim: usize,
    /// Inferred as `max(label) + 1` (at least 2) when unset.
    pub num_classes: Option<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Weight decay coefficient; applied densely, so keep it zero for speed.
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ngram_orders: DEFAULT_NGRAM_ORDERS.to_vec(),
            feature_dim: DEFAULT_FEATURE_DIM,
            num_classes: None,
            epochs: 20,
            learning_rate: 0.05,
            batch_size: 16,
            l2: 0.0,
            seed: 0,
        }
    }
}

/// Mini-batch SGD on softmax cross-entropy. The sample order per epoch comes
/// from a ChaCha8 stream seeded with `config.seed`, so runs are bitwise
/// reproducible.
pub fn train_builtin(
    dataset: &[(Sentence, Label)],
    config: &TrainConfig,
) -> Result<BuiltinClassifier> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch_size == 0 || config.learning_rate <= 0.0 || !config.learning_rate.is_finite() {
        return Err(Error::Config(
            "batch_size and learning_rate must be positive".into(),
        ));
    }
    let max_label = dataset.iter().map(|(_, y)| y.0).max().unwrap_or(0);
    let num_classes = match config.num_classes {
        Some(o) => {
            if let Some((_, y)) = dataset.iter().find(|(_, y)| y.0 >= o) {
                return Err(Error::InconsistentClasses {
                    label: y.0,
                    classes: o,
                });
            }
            o
        }
        None => (max_label + 1).max(2),
    };
    let mut model =
        BuiltinClassifier::zeroed(config.ngram_orders.clone(), config.feature_dim, num_classes)?;
    let features: Vec<SparseFeatures> = dataset.iter().map(|(s, _)| model.features(s)).collect();
    let dim = model.feature_dim;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut probs = vec![0.0; num_classes];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let scale = config.learning_rate / batch.len() as f64;
            // Gradients for the whole batch are computed before any update.
            let mut updates: Vec<(usize, Vec<f64>)> = Vec::with_capacity(batch.len());
            for &idx in batch {
                let mut z = model.feature_logits_unchecked(&features[idx]);
                for (zi, b) in z.iter_mut().zip(&model.bias) {
                    *zi += b;
                }
                softmax_into(&z, &mut probs);
                let y = dataset[idx].1 .0;
                let mut g = probs.clone();
                g[y] -= 1.0;
                updates.push((idx, g));
            }
            if config.l2 > 0.0 {
                let decay = 1.0 - config.learning_rate * config.l2;
                model.weights.iter_mut().for_each(|w| *w *= decay);
            }
            for (idx, g) in &updates {
                for (c, gc) in g.iter().enumerate() {
                    let row = &mut model.weights[c * dim..(c + 1) * dim];
                    for &(i, v) in features[*idx].entries() {
                        row[i as usize] -= scale * gc * v;
                    }
                    model.bias[c] -= scale * gc;
                }
            }
        }
    }
    Ok(model)
}

fn softmax_into(z: &[f64], out: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - m).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// CW loss of the classifier applied to convex mixtures of candidate feature
/// rows. Per-candidate logits are computed once, so evaluating the loss for a
/// new weight vector costs `O(m·o)`.
#[derive(Clone, Debug)]
pub struct MixtureProblem {
    feature_logits: Vec<Vec<f64>>,
    bias: Vec<f64>,
    label: Label,
}

impl MixtureProblem {
    pub fn new(
        classifier: &BuiltinClassifier,
        candidate_features: &[SparseFeatures],
        y: Label,
    ) -> Result<Self> {
        if candidate_features.is_empty() {
            return Err(Error::DimensionMismatch("no candidate feature rows".into()));
        }
        if y.0 >= classifier.num_classes {
            return Err(Error::InvalidLabel {
                label: y.0,
                classes: classifier.num_classes,
            });
        }
        let feature_logits = candidate_features
            .iter()
            .map(|x| classifier.feature_logits(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            feature_logits,
            bias: classifier.bias.clone(),
            label: y,
        })
    }

    pub fn len(&self) -> usize {
        self.feature_logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_logits.is_empty()
    }

    /// Logits of the mixture `W·(Σ uᵢ xᵢ) + b`.
    pub fn mixture_logits(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.feature_logits.len() {
            return Err(Error::DimensionMismatch(format!(
                "u has {} entries for {} candidates",
                u.len(),
                self.feature_logits.len()
            )));
        }
        let mut z = self.bias.clone();
        for (ui, row) in u.iter().zip(&self.feature_logits) {
            for (zc, r) in z.iter_mut().zip(row) {
                *zc += ui * r;
            }
        }
        Ok(z)
    }

    /// Loss and its gradient in `u`. The loss is a max of linear functions of
    /// `u`; the gradient is that of the active piece (lowest class index among
    /// tied maxima).
    pub fn loss_and_grad(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let z = self.mixture_logits(u)?;
        let y = self.label.0;
        let mut best: Option<usize> = None;
        for c in (0..z.len()).filter(|&c| c != y) {
            if best.is_none_or(|b| z[c] > z[b]) {
                best = Some(c);
            }
        }
        let other = best.expect("at least two classes");
        let loss = z[other] - z[y];
        let grad = self
            .feature_logits
            .iter()
            .map(|row| row[other] - row[y])
            .collect();
        Ok((loss, grad))
    }

    /// CW loss of candidate `i` alone (one-hot `u`).
    pub fn candidate_loss(&self, i: usize) -> f64 {
        let z: Vec<f64> = self.feature_logits[i]
            .iter()
            .zip(&self.bias)
            .map(|(a, b)| a + b)
            .collect();
        cw_loss(&ClassScores(z), self.label).expect("label validated at construction")
    }
}

/// Loss and exact gradient of `u ↦ cw_loss(W·(Σ uᵢ xᵢ) + b, y)`.
pub fn mixture_loss_and_grad(
    classifier: &BuiltinClassifier,
    candidate_features: &[SparseFeatures],
    u: &[f64],
    y: Label,
) -> Result<(f64, Vec<f64>)> {
    MixtureProblem::new(classifier, candidate_features, y)?.loss_and_grad(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: &str) -> Sentence {
        Sentence::new(t).unwrap()
    }

    fn small_config(seed: u64) -> TrainConfig {
        TrainConfig {
            feature_dim: 1 << 12,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn featurize_counts_ngrams() {
        // "ab" padded to ^ab$: 4 unigrams, 3 bigrams, 2 trigrams.
        let f = featurize(&['a', 'b'], &[1, 2, 3], 1 << 20);
        let total: f64 = f.entries().iter().map(|e| e.1).sum();
        assert_eq!(total, 9.0);
        let f = featurize(&['a', 'a'], &[1], 1 << 20);
        assert!(f.entries().iter().any(|&(_, v)| v == 2.0));
    }

    #[test]
    fn memorizes_single_sample() {
        let data = vec![(s("hello world"), Label(1)); 1];
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 1,
            ..small_config(3)
        };
        let model = train_builtin(&data, &cfg).unwrap();
        assert_eq!(model.num_classes(), 2);
        assert_eq!(model.predict(&s("hello world")), Label(1));
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            train_builtin(&[], &TrainConfig::default()),
            Err(Error::EmptyDataset)
        ));
        let cfg = TrainConfig {
            num_classes: Some(2),
            ..small_config(0)
        };
        assert!(matches!(
            train_builtin(&[(s("a"), Label(2))], &cfg),
            Err(Error::InconsistentClasses {
                label: 2,
                classes: 2
            })
        ));
    }

    #[test]
    fn deterministic_training() {
        let data: Vec<_> = (0..20)
            .map(|i| {
                if i % 2 == 0 {
                    (s(&format!("good item {i}")), Label(0))
                } else {
                    (s(&format!("bad item {i}")), Label(1))
                }
            })
            .collect();
        let a = train_builtin(&data, &small_config(7)).unwrap();
        let b = train_builtin(&data, &small_config(7)).unwrap();
        assert_eq!(a.weights(), b.weights());
        assert_eq!(a.bias(), b.bias());
    }

    #[test]
    fn file_round_trip_and_errors() {
        let data = vec![(s("good"), Label(0)), (s("bad"), Label(1))];
        let model = train_builtin(&data, &small_config(1)).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"CHNG");
        assert_eq!(
            buf.len(),
            4 + 4 + 4 + 3 * 4 + 8 + 4 + 8 * (2 * (1 << 12) + 2)
        );
        assert_eq!(BuiltinClassifier::load(&buf[..]).unwrap(), model);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            BuiltinClassifier::load(&bad[..]),
            Err(Error::ModelFormat(_))
        ));
        assert!(matches!(
            BuiltinClassifier::load(&buf[..buf.len() - 3]),
            Err(Error::ModelFormat(_))
        ));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(
            BuiltinClassifier::load(&long[..]),
            Err(Error::ModelFormat(_))
        ));
    }

    #[test]
    fn one_hot_mixture_matches_scoring() {
        let data = vec![(s("good day"), Label(0)), (s("bad day"), Label(1))];
        let model = train_builtin(&data, &small_config(2)).unwrap();
        let cands = [s("good day"), s("bad day"), s("gxod day")];
        let feats: Vec<_> = cands.iter().map(|c| model.features(c)).collect();
        for i in 0..cands.len() {
            let mut u = vec![0.0; cands.len()];
            u[i] = 1.0;
            let (loss, _) = mixture_loss_and_grad(&model, &feats, &u, Label(0)).unwrap();
            let direct = cw_loss(&model.scores(&cands[i]), Label(0)).unwrap();
            assert!((loss - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_dimension_errors() {
        let model = BuiltinClassifier::zeroed(vec![1], 8, 2).unwrap();
        let f = SparseFeatures::from_entries(vec![(9, 1.0)]);
        assert!(matches!(
            mixture_loss_and_grad(&model, &[f], &[1.0], Label(0)),
            Err(Error::DimensionMismatch(_))
        ));
        let f = SparseFeatures::from_entries(vec![(1, 1.0)]);
        assert!(matches!(
            mixture_loss_and_grad(&model, &[f], &[0.5, 0.5], Label(0)),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
