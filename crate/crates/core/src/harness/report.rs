use serde::{Deserialize, Serialize};

use super::suite::{SampleStatus, TranscriptLine};
use crate::sentence::{levenshtein, Sentence};

/// `1 − d_lev(a, b) / max(|a|, |b|, 1)`. Reported as `edit_sim`; this is not
/// an embedding similarity.
pub fn similarity(a: &Sentence, b: &Sentence) -> f64 {
    let denom = a.len().max(b.len()).max(1);
    1.0 - levenshtein(a, b) as f64 / denom as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub id: String,
    pub status: SampleStatus,
    pub success: bool,
    pub dlev: Option<usize>,
    pub edit_sim: Option<f64>,
    pub queries: u64,
    pub final_loss: Option<f64>,
}

/// Everything in a run that is a deterministic function of the inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub attack: String,
    pub config_fingerprint: String,
    pub alphabet_fingerprint: String,
    pub records: usize,
    pub attackable: usize,
    pub successes: usize,
    pub skipped: usize,
    pub errors: usize,
    /// Percent of attackable samples turned adversarial; `None` when there
    /// are no attackable samples.
    pub asr: Option<f64>,
    pub no_attackable_samples: bool,
    /// Edit-distance and `edit_sim` statistics over successful attacks.
    pub mean_dlev: Option<f64>,
    pub std_dlev: Option<f64>,
    pub mean_edit_sim: Option<f64>,
    pub attack_queries: u64,
    /// One clean scoring per record that reached the oracle.
    pub clean_queries: u64,
    pub mean_queries: Option<f64>,
    pub samples: Vec<SampleRow>,
}

/// Wall-clock statistics over attacked samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub mean_time: Option<f64>,
    pub std_time: Option<f64>,
    pub total_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub body: ReportBody,
    pub timing: TimingReport,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

impl RunReport {
    /// Aggregates transcript lines, which must already be in dataset order.
    pub fn from_lines(
        attack: &str,
        config_fingerprint: &str,
        alphabet_fingerprint: &str,
        lines: &[TranscriptLine],
        total_time: f64,
    ) -> Self {
        let mut rows = Vec::with_capacity(lines.len());
        let (mut attackable, mut successes, mut skipped, mut errors) = (0, 0, 0, 0);
        let (mut attack_queries, mut clean_queries) = (0u64, 0u64);
        let mut dlevs = Vec::new();
        let mut sims = Vec::new();
        let mut times = Vec::new();
        let mut per_sample_queries = Vec::new();
        for line in lines {
            if line.clean_loss.is_some() {
                clean_queries += 1;
            }
            let mut row = SampleRow {
                id: line.id.clone(),
                status: line.status,
                success: false,
                dlev: None,
                edit_sim: None,
                queries: 0,
                final_loss: None,
            };
            match line.status {
                SampleStatus::Skipped => skipped += 1,
                SampleStatus::Error => errors += 1,
                SampleStatus::Attacked => {
                    let o = line
                        .outcome
                        .as_ref()
                        .expect("attacked lines carry an outcome");
                    attackable += 1;
                    attack_queries += o.queries;
                    per_sample_queries.push(o.queries as f64);
                    times.push(o.elapsed);
                    row.success = o.success;
                    row.queries = o.queries;
                    row.final_loss = Some(o.final_loss);
                    if o.success {
                        successes += 1;
                        let d = levenshtein(&o.original, &o.adversarial);
                        let sim = similarity(&o.original, &o.adversarial);
                        dlevs.push(d as f64);
                        sims.push(sim);
                        row.dlev = Some(d);
                        row.edit_sim = Some(sim);
                    }
                }
            }
            rows.push(row);
        }
        let (mean_dlev, std_dlev) = mean_std(&dlevs);
        let (mean_edit_sim, _) = mean_std(&sims);
        let (mean_queries, _) = mean_std(&per_sample_queries);
        let (mean_time, std_time) = mean_std(&times);
        let asr = (attackable > 0).then(|| 100.0 * successes as f64 / attackable as f64);
        RunReport {
            body: ReportBody {
                attack: attack.to_string(),
                config_fingerprint: config_fingerprint.to_string(),
                alphabet_fingerprint: alphabet_fingerprint.to_string(),
                records: lines.len(),
                attackable,
                successes,
                skipped,
                errors,
                asr,
                no_attackable_samples: attackable == 0,
                mean_dlev,
                std_dlev,
                mean_edit_sim,
                attack_queries,
                clean_queries,
                mean_queries,
                samples: rows,
            },
            timing: TimingReport {
                mean_time,
                std_time,
                total_time,
            },
        }
    }

    /// Pretty JSON of the deterministic body only.
    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report body serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: &str) -> Sentence {
        Sentence::new(t).unwrap()
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(similarity(&s("abc"), &s("abc")), 1.0);
        assert_eq!(similarity(&s("a"), &s("")), 0.0);
        assert_eq!(similarity(&s(""), &s("")), 1.0);
        assert!((similarity(&s("Hello"), &s("Helo")) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mean_std_population() {
        assert_eq!(mean_std(&[]), (None, None));
        let (m, sd) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, Some(2.0));
        assert_eq!(sd, Some(1.0));
    }

    #[test]
    fn empty_run_flags_no_attackable() {
        let r = RunReport::from_lines("charmer", "c", "a", &[], 0.0);
        assert!(r.body.no_attackable_samples);
        assert_eq!(r.body.asr, None);
    }
}
