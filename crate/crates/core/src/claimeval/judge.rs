//! Boundary to the external models that extract claims, locate their spans
//! and judge their correctness.
//!
//! The shipped [`FixtureJudge`] replays recorded responses keyed by the
//! SHA-256 of the canonical request JSON. A request without a recorded
//! response is a hard [`Error::JudgeMiss`].

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Extract,
    Locate,
    Judge,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::Extract => "extract",
            RequestKind::Locate => "locate",
            RequestKind::Judge => "judge",
        }
    }
}

/// Wire form of a judge request. Field order is fixed, and absent optional
/// fields are omitted, so serialization is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeRequest {
    pub kind: RequestKind,
    pub paragraph: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
}

impl JudgeRequest {
    pub fn extract(paragraph: &str) -> Self {
        Self {
            kind: RequestKind::Extract,
            paragraph: paragraph.into(),
            claim: None,
            evidence: None,
        }
    }

    pub fn locate(paragraph: &str, claim: &str) -> Self {
        Self {
            kind: RequestKind::Locate,
            paragraph: paragraph.into(),
            claim: Some(claim.into()),
            evidence: None,
        }
    }

    pub fn judge(paragraph: &str, claim: &str, evidence: Option<&str>) -> Self {
        Self {
            kind: RequestKind::Judge,
            paragraph: paragraph.into(),
            claim: Some(claim.into()),
            evidence: evidence.map(Into::into),
        }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }

    /// Lowercase hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum JudgeResponse {
    Claims { claims: Vec<String> },
    Span { span: String },
    Verdict { verdict: bool },
}

impl JudgeResponse {
    fn fits(&self, kind: RequestKind) -> bool {
        matches!(
            (self, kind),
            (JudgeResponse::Claims { .. }, RequestKind::Extract)
                | (JudgeResponse::Span { .. }, RequestKind::Locate)
                | (JudgeResponse::Verdict { .. }, RequestKind::Judge)
        )
    }
}

pub trait JudgeClient {
    fn extract_claims(&self, paragraph: &str) -> Result<Vec<String>>;
    fn locate_span(&self, paragraph: &str, claim: &str) -> Result<String>;
    fn judge_claim(&self, paragraph: &str, claim: &str, evidence: Option<&str>) -> Result<bool>;

    /// Whether identical requests always produce identical responses.
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// One line of a judge fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureRecord {
    pub request_kind: RequestKind,
    pub request_hash: String,
    pub payload: JudgeRequest,
    pub response: JudgeResponse,
}

impl FixtureRecord {
    pub fn new(payload: JudgeRequest, response: JudgeResponse) -> Self {
        Self {
            request_kind: payload.kind,
            request_hash: payload.hash(),
            payload,
            response,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FixtureJudge {
    responses: HashMap<String, (RequestKind, JudgeResponse)>,
}

impl FixtureJudge {
    pub fn new(records: impl IntoIterator<Item = FixtureRecord>) -> Result<Self> {
        let mut judge = Self::default();
        for r in records {
            judge.insert(r)?;
        }
        Ok(judge)
    }

    fn insert(&mut self, r: FixtureRecord) -> Result<()> {
        if r.payload.kind != r.request_kind {
            return Err(Error::invalid(format!(
                "request_kind {} disagrees with payload kind {}",
                r.request_kind.as_str(),
                r.payload.kind.as_str()
            )));
        }
        let hash = r.payload.hash();
        if hash != r.request_hash {
            return Err(Error::invalid(format!(
                "request_hash {} does not match payload hash {hash}",
                r.request_hash
            )));
        }
        if !r.response.fits(r.request_kind) {
            return Err(Error::invalid(format!(
                "response does not fit a {} request",
                r.request_kind.as_str()
            )));
        }
        if let Some((_, prev)) = self.responses.get(&hash) {
            if *prev != r.response {
                return Err(Error::invalid(format!("conflicting responses for request {hash}")));
            }
            return Ok(());
        }
        self.responses.insert(hash, (r.request_kind, r.response));
        Ok(())
    }

    /// Parses newline-delimited JSON records; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut judge = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: FixtureRecord =
                serde_json::from_str(line).map_err(|e| Error::at_line(i + 1, e.to_string()))?;
            judge.insert(record).map_err(|e| e.with_line(i + 1))?;
        }
        Ok(judge)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    fn lookup(&self, req: &JudgeRequest) -> Result<&JudgeResponse> {
        let hash = req.hash();
        match self.responses.get(&hash) {
            Some((_, r)) => Ok(r),
            None => Err(Error::JudgeMiss {
                kind: req.kind.as_str().into(),
                hash,
                generation: String::new(),
                claim: None,
            }),
        }
    }
}

impl JudgeClient for FixtureJudge {
    fn extract_claims(&self, paragraph: &str) -> Result<Vec<String>> {
        match self.lookup(&JudgeRequest::extract(paragraph))? {
            JudgeResponse::Claims { claims } => Ok(claims.clone()),
            _ => Err(Error::Judge("extract response is not a claim list".into())),
        }
    }

    fn locate_span(&self, paragraph: &str, claim: &str) -> Result<String> {
        match self.lookup(&JudgeRequest::locate(paragraph, claim))? {
            JudgeResponse::Span { span } => Ok(span.clone()),
            _ => Err(Error::Judge("locate response is not a span".into())),
        }
    }

    fn judge_claim(&self, paragraph: &str, claim: &str, evidence: Option<&str>) -> Result<bool> {
        match self.lookup(&JudgeRequest::judge(paragraph, claim, evidence))? {
            JudgeResponse::Verdict { verdict } => Ok(*verdict),
            _ => Err(Error::Judge("judge response is not a verdict".into())),
        }
    }
}

/// Serializes records as a fixture file, one JSON object per line.
pub fn fixture_to_jsonl(records: &[FixtureRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}
