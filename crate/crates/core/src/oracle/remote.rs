//! HTTP scoring client.
//!
//! Wire protocol: `POST {base}/score` with body `{"sentences": [..]}` and a
//! `200` response `{"scores": [[..], ..]}` holding one row per sentence, in
//! request order.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::{ClassScores, Oracle};
use crate::error::{Error, Result};
use crate::sentence::Sentence;

#[derive(Clone, Debug)]
pub struct RemoteConfig {
    pub num_classes: Option<usize>,
    /// Extra attempts after a transport failure. HTTP and schema errors are
    /// never retried.
    pub retries: u32,
    pub timeout: Duration,
    /// Requests allowed in flight at once against this endpoint.
    pub concurrency: usize,
    pub batch_limit: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            num_classes: None,
            retries: 0,
            timeout: Duration::from_secs(60),
            concurrency: 1,
            batch_limit: 256,
        }
    }
}

#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().unwrap_or_else(|p| p.into_inner());
            while *free == 0 {
                free = self.cv.wait(free).unwrap_or_else(|p| p.into_inner());
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.cv.notify_one();
        out
    }
}

#[derive(Debug)]
pub struct RemoteOracle {
    url: String,
    agent: ureq::Agent,
    config: RemoteConfig,
    gate: Gate,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    sentences: Vec<&'a str>,
}

impl RemoteOracle {
    /// `endpoint` is the server base URL; `/score` is appended unless already
    /// present.
    pub fn new(endpoint: &str, config: RemoteConfig) -> Result<Self> {
        if config.batch_limit == 0 {
            return Err(Error::Config("batch limit must be at least 1".into()));
        }
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/score") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/score")
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate::new(config.concurrency);
        Ok(Self {
            url,
            agent,
            config,
            gate,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn post_once(&self, body: &str) -> Result<(u16, String)> {
        let transport = |e: ureq::Error| Error::Transport {
            endpoint: self.url.clone(),
            message: e.to_string(),
        };
        let resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(transport)?;
        let status = resp.status().as_u16();
        let text = resp.into_body().read_to_string().map_err(transport)?;
        Ok((status, text))
    }

    fn post(&self, body: &str) -> Result<(u16, String)> {
        let mut attempt = 0;
        loop {
            match self.gate.run(|| self.post_once(body)) {
                Err(Error::Transport { .. }) if attempt < self.config.retries => {
                    attempt += 1;
                    log::warn!("transport failure on {}, retry {attempt}", self.url);
                }
                other => return other,
            }
        }
    }

    fn parse(&self, payload: &str, expected_rows: usize) -> Result<Vec<ClassScores>> {
        let schema = |detail: String| Error::Schema {
            detail,
            payload: payload.to_string(),
        };
        let value: Value =
            serde_json::from_str(payload).map_err(|e| schema(format!("invalid JSON: {e}")))?;
        let rows = value
            .get("scores")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("missing `scores` array".into()))?;
        if rows.len() != expected_rows {
            return Err(schema(format!(
                "expected {expected_rows} rows, got {}",
                rows.len()
            )));
        }
        let mut width = self.config.num_classes;
        let mut out = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| schema(format!("row {r} is not an array")))?;
            let values = row
                .iter()
                .map(Value::as_f64)
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| schema(format!("row {r} has a non-numeric entry")))?;
            match width {
                Some(w) if w != values.len() => {
                    return Err(schema(format!(
                        "row {r} has {} classes, expected {w}",
                        values.len()
                    )))
                }
                _ => width = Some(values.len()),
            }
            out.push(ClassScores::new(values).map_err(|e| schema(format!("row {r}: {e}")))?);
        }
        Ok(out)
    }
}

impl Oracle for RemoteOracle {
    fn num_classes(&self) -> Option<usize> {
        self.config.num_classes
    }

    fn batch_limit(&self) -> usize {
        self.config.batch_limit
    }

    fn score_chunk(&self, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
        if sentences.is_empty() {
            return Ok(Vec::new());
        }
        let texts: Vec<String> = sentences.iter().map(|s| s.to_string()).collect();
        let body = serde_json::to_string(&ScoreRequest {
            sentences: texts.iter().map(String::as_str).collect(),
        })?;
        let (status, payload) = self.post(&body)?;
        if !(200..300).contains(&status) {
            return Err(Error::Status {
                status,
                body: payload,
            });
        }
        self.parse(&payload, sentences.len())
    }
}

/// One-shot scoring against `endpoint` with default settings.
pub fn remote_score(endpoint: &str, sentences: &[Sentence]) -> Result<Vec<ClassScores>> {
    RemoteOracle::new(endpoint, RemoteConfig::default())?.score_batch(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(classes: Option<usize>) -> RemoteOracle {
        RemoteOracle::new(
            "http://127.0.0.1:9/",
            RemoteConfig {
                num_classes: classes,
                ..RemoteConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn url_normalization() {
        assert_eq!(oracle(None).url(), "http://127.0.0.1:9/score");
        let o = RemoteOracle::new("http://h/score/", RemoteConfig::default()).unwrap();
        assert_eq!(o.url(), "http://h/score");
    }

    #[test]
    fn schema_checks() {
        let o = oracle(None);
        assert_eq!(
            o.parse(r#"{"scores": [[0.1, 0.9]]}"#, 1).unwrap()[0].as_slice(),
            &[0.1, 0.9]
        );
        for bad in [
            "not json",
            r#"{"rows": []}"#,
            r#"{"scores": [[0.1, 0.9], [0.2, 0.8]]}"#,
            r#"{"scores": [[0.1, "x"]]}"#,
            r#"{"scores": [[0.1]]}"#,
        ] {
            assert!(
                matches!(o.parse(bad, 1), Err(Error::Schema { .. })),
                "{bad}"
            );
        }
        let err = o
            .parse(r#"{"scores": [[1, 2], [1, 2, 3]]}"#, 2)
            .unwrap_err();
        match err {
            Error::Schema { payload, .. } => assert!(payload.contains("[1, 2, 3]")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(oracle(Some(3)).parse(r#"{"scores": [[1, 2]]}"#, 1).is_err());
    }

    #[test]
    fn connection_refused_is_transport_error() {
        let o = oracle(None);
        let err = o.score_chunk(&[Sentence::new("x").unwrap()]).unwrap_err();
        assert!(matches!(err, Error::Transport { .. }), "{err:?}");
    }
}
