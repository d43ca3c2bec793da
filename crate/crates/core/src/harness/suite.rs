use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{alphabet_fingerprint, fingerprint, Dataset, DatasetRecord};
use super::report::RunReport;
use crate::attack::{
    charmer_attack, exhaustive_k1, random_position_baseline, AttackConfig, AttackOutcome, TraceStep,
};
use crate::error::{Error, Result};
use crate::oracle::{cw_loss, is_adversarial, ClassScores, Label, Oracle, OracleHandle};
use crate::pga::{pga_solve, PgaConfig};
use crate::sentence::{levenshtein, Sentence};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

/// Placed between premise and hypothesis when a paired record is scored.
pub const PAIR_SEPARATOR: char = '\n';

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Charmer,
    CharmerFast,
    Random,
    ExhaustiveK1,
    Pga,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Charmer => "charmer",
            AttackKind::CharmerFast => "charmer-fast",
            AttackKind::Random => "random",
            AttackKind::ExhaustiveK1 => "exhaustive-k1",
            AttackKind::Pga => "pga",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charmer" => Ok(AttackKind::Charmer),
            "charmer-fast" | "charmer_fast" => Ok(AttackKind::CharmerFast),
            "random" | "random_baseline" => Ok(AttackKind::Random),
            "exhaustive-k1" | "exhaustive_k1" => Ok(AttackKind::ExhaustiveK1),
            "pga" => Ok(AttackKind::Pga),
            other => Err(Error::Config(format!("unknown attack `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub kind: AttackKind,
    pub attack: AttackConfig,
    pub pga_step_size: f64,
    pub pga_iterations: usize,
    pub pga_candidate_cap: usize,
    /// Parallel samples; never changes results.
    #[serde(skip)]
    pub workers: usize,
}

impl SuiteConfig {
    pub fn new(kind: AttackKind, attack: AttackConfig) -> Self {
        Self {
            kind,
            attack,
            pga_step_size: 0.1,
            pga_iterations: 200,
            pga_candidate_cap: 4096,
            workers: 1,
        }
    }

    /// Attack configuration after applying the variant's overrides.
    pub fn effective_attack(&self) -> AttackConfig {
        let mut cfg = self.attack.clone();
        if self.kind == AttackKind::CharmerFast {
            cfg.n = 1;
        }
        cfg
    }

    pub fn pga_config(&self) -> PgaConfig {
        PgaConfig {
            step_size: self.pga_step_size,
            iterations: self.pga_iterations,
            k: self.attack.k,
            candidate_cap: self.pga_candidate_cap,
            alphabet: self.attack.alphabet.clone(),
            seed: self.attack.seed,
        }
    }

    /// Hex SHA-256 of the canonical JSON form (worker count excluded).
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        fingerprint(&json)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    Attacked,
    /// The clean text was already misclassified.
    Skipped,
    Error,
}

/// One JSON Lines record of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub schema_version: u32,
    pub id: String,
    pub label: Label,
    pub attack: AttackKind,
    pub status: SampleStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_text: Option<Sentence>,
    pub clean_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(flatten)]
    pub outcome: Option<AttackOutcome>,
    pub config_fingerprint: String,
    pub alphabet_fingerprint: String,
}

/// Scores `premise ⏎ hypothesis` so that only the hypothesis is edited.
pub struct PairedOracle<'a, O: ?Sized> {
    inner: &'a O,
    premise: &'a Sentence,
}

impl<'a, O: Oracle + ?Sized> PairedOracle<'a, O> {
    pub fn new(inner: &'a O, premise: &'a Sentence) -> Self {
        Self { inner, premise }
    }

    fn join(&self, hypothesis: &Sentence) -> Sentence {
        let mut chars = Vec::with_capacity(self.premise.len() + 1 + hypothesis.len());
        chars.extend_from_slice(self.premise.chars());
        chars.push(PAIR_SEPARATOR);
        chars.extend_from_slice(hypothesis.chars());
        Sentence::from_chars_unchecked(chars)
    }
}

impl<O: Oracle + ?Sized> Oracle for PairedOracle<'_, O> {
    fn num_classes(&self) -> Option<usize> {
        self.inner.num_classes()
    }

    fn batch_limit(&self) -> usize {
        self.inner.batch_limit()
    }

    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        let joined: Vec<Sentence> = sentences.iter().map(|s| self.join(s)).collect();
        self.inner.score_chunk(&joined)
    }
}

/// Attacks every record and streams one transcript line per record to
/// `transcript` as soon as it is finished.
pub fn run_attack_suite<W: Write + Send>(
    dataset: &Dataset,
    oracle: &OracleHandle,
    config: &SuiteConfig,
    transcript: W,
) -> Result<(RunReport, Vec<TranscriptLine>)> {
    config.effective_attack().validate()?;
    if config.kind == AttackKind::Pga {
        config.pga_config().validate()?;
    }
    if let Some(o) = oracle.num_classes() {
        if let Some(r) = dataset.records.iter().find(|r| r.label.0 >= o) {
            return Err(Error::InconsistentClasses {
                label: r.label.0,
                classes: o,
            });
        }
    }
    let config_fp = config.fingerprint();
    let alphabet_fp = alphabet_fingerprint(&config.attack.alphabet);
    let appender = Mutex::new(transcript);
    let start = Instant::now();
    let process = |record: &DatasetRecord| -> Result<TranscriptLine> {
        let line = attack_record(record, oracle, config, &config_fp, &alphabet_fp);
        let mut json = serde_json::to_string(&line)?;
        json.push('\n');
        let mut w = appender.lock().expect("transcript writer poisoned");
        w.write_all(json.as_bytes())?;
        w.flush()?;
        Ok(line)
    };
    let lines: Vec<TranscriptLine> = if config.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| {
            dataset
                .records
                .par_iter()
                .map(process)
                .collect::<Result<_>>()
        })?
    } else {
        dataset.records.iter().map(process).collect::<Result<_>>()?
    };
    let report = RunReport::from_lines(
        config.kind.as_str(),
        &config_fp,
        &alphabet_fp,
        &lines,
        start.elapsed().as_secs_f64(),
    );
    Ok((report, lines))
}

fn attack_record(
    record: &DatasetRecord,
    oracle: &OracleHandle,
    config: &SuiteConfig,
    config_fp: &str,
    alphabet_fp: &str,
) -> TranscriptLine {
    let mut line = TranscriptLine {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        id: record.id.clone(),
        label: record.label,
        attack: config.kind,
        status: SampleStatus::Error,
        paired_text: record.paired_text.clone(),
        clean_loss: None,
        error: None,
        outcome: None,
        config_fingerprint: config_fp.to_string(),
        alphabet_fingerprint: alphabet_fp.to_string(),
    };
    let result = match &record.paired_text {
        Some(premise) => run_one(
            &PairedOracle::new(oracle, premise),
            oracle,
            record,
            config,
            &mut line,
        ),
        None => run_one(oracle, oracle, record, config, &mut line),
    };
    match result {
        Ok(Some(outcome)) => {
            line.status = SampleStatus::Attacked;
            line.outcome = Some(outcome);
        }
        Ok(None) => line.status = SampleStatus::Skipped,
        Err(e) => {
            log::warn!("record {}: {e}", record.id);
            line.status = SampleStatus::Error;
            line.error = Some(e.to_string());
        }
    }
    line
}

fn run_one<O: Oracle + ?Sized>(
    scorer: &O,
    handle: &OracleHandle,
    record: &DatasetRecord,
    config: &SuiteConfig,
    line: &mut TranscriptLine,
) -> Result<Option<AttackOutcome>> {
    let s = &record.text;
    let y = record.label;
    let clean = scorer
        .score_batch(std::slice::from_ref(s))?
        .pop()
        .ok_or_else(|| Error::InvalidScores("empty response".into()))?;
    line.clean_loss = Some(cw_loss(&clean, y)?);
    if is_adversarial(&clean, y) {
        return Ok(None);
    }
    let outcome = match config.kind {
        AttackKind::Charmer | AttackKind::CharmerFast => {
            charmer_attack(scorer, s, y, &config.effective_attack())?
        }
        AttackKind::Random => random_position_baseline(scorer, s, y, &config.attack)?,
        AttackKind::ExhaustiveK1 => {
            let start = Instant::now();
            let (adv, loss) = exhaustive_k1(scorer, s, y, &config.attack.alphabet)?;
            let queries =
                crate::sentence::generate_neighbors(s, &config.attack.alphabet).len() as u64;
            AttackOutcome {
                original: s.clone(),
                edits_used: levenshtein(s, &adv),
                success: loss >= 0.0,
                final_loss: loss,
                queries,
                elapsed: start.elapsed().as_secs_f64(),
                budget_exhausted: false,
                trace: vec![TraceStep {
                    iteration: 1,
                    position: None,
                    replacement: None,
                    sentence: adv.clone(),
                    loss,
                    queries,
                }],
                adversarial: adv,
            }
        }
        AttackKind::Pga => {
            if record.paired_text.is_some() {
                return Err(Error::Config("pga does not support paired records".into()));
            }
            let classifier = handle
                .as_builtin()
                .ok_or(Error::GradientUnavailable(handle.kind().as_str()))?;
            pga_solve(classifier, s, y, &config.pga_config())?.outcome
        }
    };
    Ok(Some(outcome))
}

/// Re-scores a transcript line's adversarial text; returns the fresh CW loss,
/// or `None` for lines without an outcome.
pub fn replay<O: Oracle + ?Sized>(oracle: &O, line: &TranscriptLine) -> Result<Option<f64>> {
    let Some(outcome) = &line.outcome else {
        return Ok(None);
    };
    let batch = std::slice::from_ref(&outcome.adversarial);
    let scores = match &line.paired_text {
        Some(premise) => PairedOracle::new(oracle, premise).score_batch(batch)?,
        None => oracle.score_batch(batch)?,
    };
    let first = scores
        .first()
        .ok_or_else(|| Error::InvalidScores("empty response".into()))?;
    Ok(Some(cw_loss(first, line.label)?))
}

/// Parses a JSON Lines transcript.
pub fn read_transcript(text: &str) -> Result<Vec<TranscriptLine>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Opens `builtin:<model-file>` or `http:<url>` (a bare `http://` or
/// `https://` URL is accepted too).
pub fn open_oracle(spec: &str, remote: crate::oracle::RemoteConfig) -> Result<OracleHandle> {
    if let Some(path) = spec.strip_prefix("builtin:") {
        let model = crate::oracle::BuiltinClassifier::load_from_path(path)?;
        return Ok(OracleHandle::builtin(model));
    }
    let url = if spec.starts_with("http://") || spec.starts_with("https://") {
        spec.to_string()
    } else if let Some(rest) = spec.strip_prefix("http:") {
        if rest.starts_with("http://") || rest.starts_with("https://") {
            rest.to_string()
        } else {
            format!("http://{}", rest.trim_start_matches('/'))
        }
    } else {
        return Err(Error::Config(format!(
            "oracle must be builtin:<model-file> or http:<url>, got `{spec}`"
        )));
    };
    Ok(OracleHandle::remote(crate::oracle::RemoteOracle::new(
        &url, remote,
    )?))
}
