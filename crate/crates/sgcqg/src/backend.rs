//! Shared JSON-over-HTTP model backend: one POST endpoint per capability,
//! uniform request/response shapes for all four model roles.
//!
//! Request:  `{"capability": "qg"|"cqa"|"span_extract"|"type_classify",
//!             "input": str, "max_outputs": int}`
//! Response: `{"outputs": [{"text": str, "score": float}]}` for generation
//! roles, `{"label": 0|1}` for the type classifier.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::answer::{AnswerSpan, SpanExtractorBackend};
use crate::context::AnnotatedContext;
use crate::error::{Error, Result};
use crate::generation::{AnswererBackend, CqaRequest, QgRequest, QuestionGeneratorBackend};
use crate::typing::{ClassifierRequest, TypeClassifierBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Qg,
    Cqa,
    SpanExtract,
    TypeClassify,
}

impl Capability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Capability::Qg => "qg",
            Capability::Cqa => "cqa",
            Capability::SpanExtract => "span_extract",
            Capability::TypeClassify => "type_classify",
        }
    }
}

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    capability: &'static str,
    input: &'a str,
    max_outputs: usize,
}

#[derive(Debug, Deserialize)]
struct WireOutput {
    text: String,
    #[serde(default)]
    score: f64,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    #[serde(default)]
    outputs: Vec<WireOutput>,
    #[serde(default)]
    label: Option<u8>,
}

/// Blocking HTTP client for one capability endpoint, with a bounded retry
/// budget. Safe for concurrent use across conversations.
pub struct HttpBackend {
    capability: Capability,
    url: String,
    client: reqwest::blocking::Client,
    retries: usize,
}

impl HttpBackend {
    pub fn new(capability: Capability, url: String, timeout_ms: u64, retries: usize) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| Error::BackendUnavailable {
                capability: capability.as_str().into(),
                message: e.to_string(),
            })?;
        Ok(HttpBackend {
            capability,
            url,
            client,
            retries,
        })
    }

    fn call(&self, input: &str, max_outputs: usize) -> Result<WireResponse> {
        let request = WireRequest {
            capability: self.capability.as_str(),
            input,
            max_outputs,
        };
        let mut last_err = String::new();
        for _ in 0..=self.retries {
            match self.client.post(&self.url).json(&request).send() {
                Ok(resp) => match resp.error_for_status() {
                    Ok(resp) => match resp.json::<WireResponse>() {
                        Ok(parsed) => return Ok(parsed),
                        Err(e) => last_err = format!("bad response body: {e}"),
                    },
                    Err(e) => last_err = e.to_string(),
                },
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(Error::BackendUnavailable {
            capability: self.capability.as_str().into(),
            message: last_err,
        })
    }

    fn first_text(&self, input: &str) -> Result<String> {
        let resp = self.call(input, 1)?;
        resp.outputs
            .into_iter()
            .next()
            .map(|o| o.text)
            .ok_or(Error::EmptyGeneration)
    }
}

impl QuestionGeneratorBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn generate(&self, request: &QgRequest) -> Result<String> {
        self.first_text(&request.prompt)
    }
}

impl AnswererBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn answer(&self, _ctx: &AnnotatedContext, request: &CqaRequest) -> Result<String> {
        self.first_text(&request.input)
    }
}

impl SpanExtractorBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    /// The server sees the rationale sentence only and returns span texts;
    /// each is re-anchored to offsets by its first exact occurrence within
    /// the rationale. Unanchorable outputs are dropped.
    fn extract(
        &self,
        ctx: &AnnotatedContext,
        rationale_sentence: usize,
        max_spans: usize,
    ) -> Result<Vec<AnswerSpan>> {
        let sentence_text = ctx.sentence_text(rationale_sentence);
        let sentence_start = ctx.sentence(rationale_sentence).map(|s| s.char_start).unwrap_or(0);
        let resp = self.call(sentence_text, max_spans)?;
        let sentence_chars: Vec<char> = sentence_text.chars().collect();
        let mut spans = Vec::new();
        for output in resp.outputs {
            let needle: Vec<char> = output.text.chars().collect();
            if needle.is_empty() {
                continue;
            }
            let found = (0..=sentence_chars.len().saturating_sub(needle.len()))
                .find(|&i| sentence_chars[i..i + needle.len()] == needle[..]);
            if let Some(local) = found {
                let rank = spans.len();
                spans.push(AnswerSpan {
                    text: output.text,
                    char_start: sentence_start + local,
                    char_end: sentence_start + local + needle.len(),
                    rationale_sentence,
                    rank,
                    score: output.score,
                });
            }
            if spans.len() == max_spans {
                break;
            }
        }
        Ok(spans)
    }
}

impl TypeClassifierBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn classify(&self, request: &ClassifierRequest) -> Result<u8> {
        let resp = self.call(&request.input, 1)?;
        resp.label.ok_or_else(|| Error::BackendUnavailable {
            capability: self.capability.as_str().into(),
            message: "response missing 'label'".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unreachable_backend_is_unavailable() {
        let b = HttpBackend::new(
            Capability::Qg,
            "http://127.0.0.1:1/generate".into(),
            200,
            0,
        )
        .unwrap();
        let req = QgRequest {
            prompt: "p".into(),
            signal: crate::typing::ControlSignal::Normal,
            answer_span: "a".into(),
            entity_label: None,
            rationale_text: "r".into(),
        };
        assert!(matches!(
            b.generate(&req),
            Err(Error::BackendUnavailable { .. })
        ));
    }
}
