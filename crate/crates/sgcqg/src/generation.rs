//! Model-facing interfaces for question generation (QG) and conversational
//! answering (CQA), with locked prompt serializations and deterministic
//! offline stubs. All prompt builders truncate the history to the 3 most
//! recent turns; each history turn serializes as "question answer", turns
//! joined by single spaces.

use crate::context::{is_stopword, tokenize, AnnotatedContext};
use crate::error::{Error, Result};
use crate::typing::ControlSignal;
use crate::traversal::Conversation;

/// Maximum number of previous turns serialized into any model prompt.
pub const HISTORY_WINDOW: usize = 3;

/// The shortened history suffix, serialized. Empty string for an empty
/// history.
pub fn serialize_history(history: &Conversation) -> String {
    let turns = &history.turns;
    let start = turns.len().saturating_sub(HISTORY_WINDOW);
    turns[start..]
        .iter()
        .map(|t| format!("{} {}", t.question, t.answer))
        .collect::<Vec<_>>()
        .join(" ")
}

/// QG prompt: `Signal: <sig> Answer: <a>, <r> Context: <C> [SEP] <H_sub>`.
pub fn build_qg_prompt(
    signal: ControlSignal,
    answer_span: &str,
    rationale: &str,
    ctx: &AnnotatedContext,
    history: &Conversation,
) -> String {
    let mut out = format!(
        "Signal: {} Answer: {}, {} Context: {} [SEP]",
        signal.wire(),
        answer_span,
        rationale,
        ctx.text
    );
    let h_sub = serialize_history(history);
    if !h_sub.is_empty() {
        out.push(' ');
        out.push_str(&h_sub);
    }
    out
}

/// CQA input: `Question: <Q> [SEP] Context: <C> [SEP] <H_sub>`.
pub fn build_cqa_input(question: &str, ctx: &AnnotatedContext, history: &Conversation) -> String {
    let mut out = format!("Question: {} [SEP] Context: {} [SEP]", question, ctx.text);
    let h_sub = serialize_history(history);
    if !h_sub.is_empty() {
        out.push(' ');
        out.push_str(&h_sub);
    }
    out
}

/// Inputs for one QG call; `prompt` is the serialized wire string, the
/// structured fields serve the offline stub.
#[derive(Debug, Clone)]
pub struct QgRequest {
    pub prompt: String,
    pub signal: ControlSignal,
    pub answer_span: String,
    /// Entity label when the span coincides with a named-entity annotation.
    pub entity_label: Option<String>,
    pub rationale_text: String,
}

/// Inputs for one CQA call.
#[derive(Debug, Clone)]
pub struct CqaRequest {
    pub input: String,
    pub question: String,
    pub rationale_sentence: usize,
}

pub trait QuestionGeneratorBackend: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, request: &QgRequest) -> Result<String>;
}

pub trait AnswererBackend: Send + Sync {
    fn name(&self) -> &str;
    fn answer(&self, ctx: &AnnotatedContext, request: &CqaRequest) -> Result<String>;
}

/// Generate a question; an empty generation is an error so the traversal
/// can record a rejection rather than silently skipping.
pub fn generate_question(request: &QgRequest, backend: &dyn QuestionGeneratorBackend) -> Result<String> {
    let q = backend.generate(request)?.trim_end().to_string();
    if q.trim().is_empty() {
        return Err(Error::EmptyGeneration);
    }
    Ok(q)
}

/// Answer a question against the context and history.
pub fn answer_question(
    ctx: &AnnotatedContext,
    request: &CqaRequest,
    backend: &dyn AnswererBackend,
) -> Result<String> {
    backend.answer(ctx, request)
}

// --- offline stubs ----------------------------------------------------------

/// Deterministic template question generator. Span-based questions start
/// with a wh-word chosen from the span's entity label and carry up to four
/// content tokens of the rationale (excluding the span), so downstream
/// lexical filters behave realistically. Boolean questions use an auxiliary
/// template over the span text.
#[derive(Debug, Default)]
pub struct StubQuestionGenerator;

fn wh_word(label: Option<&str>) -> &'static str {
    match label {
        Some("PERSON") => "Who",
        Some("TIME") | Some("DATE") => "When",
        Some("GPE") | Some("LOC") | Some("FAC") => "Where",
        Some("CARDINAL") | Some("QUANTITY") | Some("MONEY") => "How many",
        _ => "What",
    }
}

/// Content tokens of `rationale` that are neither stopwords nor part of the
/// span, capped at four.
fn question_body(rationale: &str, span: &str) -> Vec<String> {
    let span_tokens: Vec<String> = tokenize(span);
    tokenize(rationale)
        .into_iter()
        .filter(|t| !is_stopword(t) && !span_tokens.contains(t))
        .take(4)
        .collect()
}

impl QuestionGeneratorBackend for StubQuestionGenerator {
    fn name(&self) -> &str {
        "stub"
    }

    fn generate(&self, request: &QgRequest) -> Result<String> {
        match request.signal {
            ControlSignal::Boolean => Ok(format!("Was there {}?", request.answer_span)),
            ControlSignal::Normal => {
                let body = question_body(&request.rationale_text, &request.answer_span);
                let wh = wh_word(request.entity_label.as_deref());
                if body.is_empty() {
                    Ok(format!("{} {}?", wh, tokenize(&request.answer_span).join(" ")))
                } else {
                    Ok(format!("{} {}?", wh, body.join(" ")))
                }
            }
        }
    }
}

const AUXILIARIES: [&str; 16] = [
    "did", "do", "does", "was", "were", "is", "are", "am", "had", "has", "have", "can", "could",
    "would", "will", "should",
];

/// Deterministic offline answerer. Auxiliary-initial questions answer
/// "Yes" when all their content tokens occur in the rationale sentence and
/// "No" otherwise. Wh-questions answer with the rationale's candidate span
/// overlapping the question least: the span the question is asking about
/// rather than the material it already states.
#[derive(Debug, Default)]
pub struct StubAnswerer;

impl AnswererBackend for StubAnswerer {
    fn name(&self) -> &str {
        "stub"
    }

    fn answer(&self, ctx: &AnnotatedContext, request: &CqaRequest) -> Result<String> {
        let q_tokens = tokenize(&request.question);
        let rationale_tokens = tokenize(ctx.sentence_text(request.rationale_sentence));
        let aux_initial = q_tokens.first().map_or(false, |t| AUXILIARIES.contains(&t.as_str()));
        let content: Vec<&String> = q_tokens.iter().filter(|t| !is_stopword(t)).collect();

        if aux_initial {
            let all_present = content.iter().all(|t| rationale_tokens.contains(t));
            return Ok(if all_present { "Yes" } else { "No" }.to_string());
        }

        // Pick the candidate span with the least token overlap with the
        // question; ties keep the better-ranked candidate.
        let candidates =
            crate::answer::StubSpanExtractor::candidates(ctx, request.rationale_sentence);
        let mut best: Option<(usize, &str)> = None;
        for &(cs, ce) in &candidates {
            let text = ctx.span_text(cs, ce);
            let overlap = tokenize(text)
                .iter()
                .filter(|t| q_tokens.contains(t))
                .count();
            if best.map_or(true, |(b, _)| overlap < b) {
                best = Some((overlap, text));
            }
        }
        Ok(best.map(|(_, t)| t.to_string()).unwrap_or_default())
    }
}
