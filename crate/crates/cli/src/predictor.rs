//! Prompt-to-completion boundary: the ground-truth oracle, file replay, or
//! an HTTP endpoint speaking `{"prompt"}` -> `{"completion"}`.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use artkit::artcode::{emit_joints, DocJoint, PredictionDialect};
use artkit::articulation::Joint;
use artkit::geom::Obb;
use thiserror::Error;

use crate::config::PredictorConfig;
use crate::error::CliError;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("[PredictorUnavailable] {endpoint} failed after {attempts} attempts: {}", trace.join("; "))]
    Unavailable {
        endpoint: String,
        attempts: u32,
        trace: Vec<String>,
    },
    #[error("[MalformedResponse] {0}")]
    MalformedResponse(String),
    #[error("[OracleUnavailable] {0}")]
    NoGroundTruth(String),
    #[error("[PredictorIo] {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictorSpec {
    Oracle,
    File(PathBuf),
    Http(String),
}

impl FromStr for PredictorSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s == "oracle" {
            Ok(PredictorSpec::Oracle)
        } else if let Some(p) = s.strip_prefix("file:") {
            Ok(PredictorSpec::File(PathBuf::from(p)))
        } else if let Some(u) = s.strip_prefix("http:") {
            // accept both `http:URL` and a bare `http://...`
            let url = if u.starts_with("//") { format!("http:{u}") } else { u.to_string() };
            Ok(PredictorSpec::Http(url))
        } else if s.starts_with("https://") {
            Ok(PredictorSpec::Http(s.to_string()))
        } else {
            Err(CliError::Input(format!(
                "[ConfigError] predictor `{s}` is not oracle, file:PATH or http:URL"
            )))
        }
    }
}

/// Ground-truth joints already re-indexed to the predicted boxes.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub obbs: Vec<Obb>,
    pub joints: Vec<Joint>,
}

impl Oracle {
    pub fn completion(&self) -> Result<String, PredictorError> {
        let doc = self
            .joints
            .iter()
            .map(|j| DocJoint::encode(j, &self.obbs[j.child], PredictionDialect::EdgeAxis))
            .collect::<artkit::Result<Vec<_>>>()
            .map_err(|e| PredictorError::NoGroundTruth(format!("ground truth does not quantize: {e}")))?;
        emit_joints(&doc, PredictionDialect::EdgeAxis)
            .map_err(|e| PredictorError::NoGroundTruth(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct PredictorClient {
    pub spec: PredictorSpec,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff_base: Duration,
}

impl PredictorClient {
    pub fn new(spec: PredictorSpec, cfg: &PredictorConfig) -> Self {
        PredictorClient {
            spec,
            timeout: Duration::from_secs_f64(cfg.timeout_s),
            retries: cfg.retries,
            backoff_base: Duration::from_secs_f64(cfg.backoff_base_s),
        }
    }

    pub fn predict(&self, prompt: &str, oracle: Option<&Oracle>) -> Result<String, PredictorError> {
        if prompt.trim().is_empty() {
            return Err(PredictorError::MalformedResponse("empty prompt".into()));
        }
        match &self.spec {
            PredictorSpec::Oracle => oracle
                .ok_or_else(|| PredictorError::NoGroundTruth("the oracle needs --gt".into()))?
                .completion(),
            PredictorSpec::File(p) => {
                std::fs::read_to_string(p).map_err(|e| PredictorError::Io(format!("{}: {e}", p.display())))
            }
            PredictorSpec::Http(url) => self.post(url, prompt),
        }
    }

    /// Delay before retry `k` (0-based): `base * 2^k`.
    pub fn backoff(&self, k: u32) -> Duration {
        self.backoff_base * 2u32.saturating_pow(k)
    }

    fn post(&self, url: &str, prompt: &str) -> Result<String, PredictorError> {
        let agent = ureq::AgentBuilder::new().timeout(self.timeout).build();
        let mut trace = Vec::new();
        let attempts = self.retries + 1;
        for k in 0..attempts {
            if k > 0 {
                std::thread::sleep(self.backoff(k - 1));
            }
            match agent.post(url).send_json(serde_json::json!({ "prompt": prompt })) {
                Ok(resp) => {
                    let body: serde_json::Value = resp
                        .into_json()
                        .map_err(|e| PredictorError::MalformedResponse(format!("body is not JSON: {e}")))?;
                    return match body.get("completion").and_then(|c| c.as_str()) {
                        Some(c) => Ok(c.to_string()),
                        None => Err(PredictorError::MalformedResponse(
                            "response has no string `completion` field".into(),
                        )),
                    };
                }
                Err(ureq::Error::Status(code, _)) if code >= 500 || code == 429 => {
                    trace.push(format!("attempt {}: HTTP {code}", k + 1));
                }
                Err(ureq::Error::Status(code, _)) => {
                    return Err(PredictorError::MalformedResponse(format!("HTTP {code}")));
                }
                Err(e) => trace.push(format!("attempt {}: {e}", k + 1)),
            }
        }
        Err(PredictorError::Unavailable {
            endpoint: url.to_string(),
            attempts,
            trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves `responses` in order (status, body), one per connection.
    fn serve(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}/predict"), hits)
    }

    fn client(url: String, retries: u32) -> PredictorClient {
        PredictorClient {
            spec: PredictorSpec::Http(url),
            timeout: Duration::from_secs(5),
            retries,
            backoff_base: Duration::from_millis(5),
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("oracle".parse::<PredictorSpec>().unwrap(), PredictorSpec::Oracle);
        assert_eq!("file:a/b.txt".parse::<PredictorSpec>().unwrap(), PredictorSpec::File("a/b.txt".into()));
        assert_eq!(
            "http:http://h:1/p".parse::<PredictorSpec>().unwrap(),
            PredictorSpec::Http("http://h:1/p".into())
        );
        assert_eq!("http://h:1/p".parse::<PredictorSpec>().unwrap(), PredictorSpec::Http("http://h:1/p".into()));
        assert!("llm".parse::<PredictorSpec>().is_err());
    }

    #[test]
    fn http_completion() {
        let (url, _) = serve(vec![(200, r#"{"completion": "joints = [\n]"}"#.into())]);
        let out = client(url, 0).predict("bbox_0 = ...", None).unwrap();
        assert_eq!(out, "joints = [\n]");
        let doc = artkit::artcode::parse_artcode_with_obbs(&out, PredictionDialect::EdgeAxis, &[]).unwrap();
        assert!(doc.joints.is_empty());
    }

    #[test]
    fn retries_then_gives_up() {
        let (url, hits) = serve(vec![(500, "{}".into()), (500, "{}".into()), (500, "{}".into())]);
        let err = client(url, 2).predict("p", None).unwrap_err();
        match err {
            PredictorError::Unavailable { attempts, trace, .. } => {
                assert_eq!(attempts, 3);
                assert_eq!(trace.len(), 3);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn recovers_after_a_failure() {
        let (url, _) = serve(vec![(503, "{}".into()), (200, r#"{"completion": "x"}"#.into())]);
        assert_eq!(client(url, 1).predict("p", None).unwrap(), "x");
    }

    #[test]
    fn schema_violation_is_malformed() {
        let (url, _) = serve(vec![(200, r#"{"text": "x"}"#.into())]);
        assert!(matches!(client(url, 0).predict("p", None), Err(PredictorError::MalformedResponse(_))));
    }

    #[test]
    fn backoff_doubles() {
        let c = PredictorClient::new(PredictorSpec::Oracle, &PredictorConfig::default());
        assert_eq!(c.backoff(0), Duration::from_millis(500));
        assert_eq!(c.backoff(1), Duration::from_millis(1000));
        assert_eq!(c.backoff(2), Duration::from_millis(2000));
    }

    #[test]
    fn file_and_oracle() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.txt");
        std::fs::write(&p, "joints = [\n]\n").unwrap();
        let c = PredictorClient::new(PredictorSpec::File(p), &PredictorConfig::default());
        assert_eq!(c.predict("p", None).unwrap(), "joints = [\n]\n");
        let o = PredictorClient::new(PredictorSpec::Oracle, &PredictorConfig::default());
        assert!(matches!(o.predict("p", None), Err(PredictorError::NoGroundTruth(_))));
        let obbs = vec![
            Obb::axis_aligned(artkit::geom::Vec3::zeros(), artkit::geom::Vec3::new(0.5, 0.4, 0.3)).unwrap(),
            Obb::axis_aligned(artkit::geom::Vec3::new(0.6, 0.0, 0.0), artkit::geom::Vec3::new(0.05, 0.3, 0.2)).unwrap(),
        ];
        let j = Joint::revolute(0, 1, artkit::geom::Vec3::z(), artkit::geom::Vec3::new(0.65, 0.3, 0.0)).unwrap();
        let text = o.predict("p", Some(&Oracle { obbs, joints: vec![j] })).unwrap();
        assert!(text.contains("Joint(type=\"revolute\", parent=0, child=1, axis=Axis(box=1, idx=2, sign=+1)"), "{text}");
    }
}
