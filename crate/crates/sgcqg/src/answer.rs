//! Candidate answer-span extraction from a rationale sentence.
//!
//! The extractor itself is pluggable (the reference setup uses a span
//! model trained on SQuAD); this module defines the backend contract, a
//! deterministic offline stub, and the deduplication against previous
//! turns' answers.

use serde::Serialize;

use crate::context::{is_stopword, normalize_join, tokens_with_spans, AnnotatedContext};
use crate::error::Result;
use crate::traversal::Conversation;

/// A ranked candidate answer span inside its rationale sentence. Offsets
/// are character offsets into the full context text, and `text` always
/// equals the context substring at those offsets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerSpan {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
    pub rationale_sentence: usize,
    pub rank: usize,
    pub score: f64,
}

/// Backend contract for span extraction. Implementations must be safe to
/// call concurrently across conversations.
pub trait SpanExtractorBackend: Send + Sync {
    fn name(&self) -> &str;
    /// Ranked candidate spans for one rationale sentence, best first.
    fn extract(
        &self,
        ctx: &AnnotatedContext,
        rationale_sentence: usize,
        max_spans: usize,
    ) -> Result<Vec<AnswerSpan>>;
}

/// Ranked, text-deduplicated candidate spans for a rationale sentence.
pub fn extract_spans(
    ctx: &AnnotatedContext,
    rationale_sentence: usize,
    backend: &dyn SpanExtractorBackend,
    max_spans: usize,
) -> Result<Vec<AnswerSpan>> {
    let spans = backend.extract(ctx, rationale_sentence, max_spans)?;
    Ok(dedup_by_text(spans))
}

fn dedup_by_text(spans: Vec<AnswerSpan>) -> Vec<AnswerSpan> {
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for s in spans {
        let key = normalize_join(&s.text);
        if !seen.contains(&key) {
            seen.push(key);
            out.push(s);
        }
    }
    out
}

/// Drop spans whose normalized text equals any previous turn's answer.
/// Order-preserving and idempotent; equality, not containment.
pub fn deselect_previous(spans: Vec<AnswerSpan>, history: &Conversation) -> Vec<AnswerSpan> {
    let previous: Vec<String> = history
        .turns
        .iter()
        .map(|t| normalize_join(&t.answer))
        .collect();
    spans
        .into_iter()
        .filter(|s| !previous.contains(&normalize_join(&s.text)))
        .collect()
}

/// Deterministic offline extractor: named-entity spans in the sentence
/// first, then cluster-mention spans, then the longest run of non-stopword
/// tokens. A pure function of its inputs.
#[derive(Debug, Default)]
pub struct StubSpanExtractor;

impl StubSpanExtractor {
    /// All candidate spans of a sentence, before ranking limits.
    pub fn candidates(ctx: &AnnotatedContext, sentence: usize) -> Vec<(usize, usize)> {
        let mut spans: Vec<(usize, usize)> = Vec::new();
        for e in &ctx.entities {
            if e.sentence_index == sentence {
                spans.push((e.char_start, e.char_end));
            }
        }
        let mut mentions: Vec<(usize, usize)> = ctx
            .clusters
            .iter()
            .flatten()
            .filter(|m| m.sentence_index == sentence)
            .map(|m| (m.char_start, m.char_end))
            .collect();
        mentions.sort_unstable();
        spans.extend(mentions);
        if let Some(run) = longest_content_run(ctx, sentence) {
            spans.push(run);
        }
        spans
    }
}

/// Longest consecutive run of non-stopword tokens in the sentence, as a
/// global character span over the original text. Ties go to the earliest
/// run.
fn longest_content_run(ctx: &AnnotatedContext, sentence: usize) -> Option<(usize, usize)> {
    let s = ctx.sentence(sentence)?;
    let tokens = tokens_with_spans(ctx.sentence_text(sentence));
    let mut best: Option<(usize, (usize, usize))> = None;
    let mut run_start: Option<usize> = None;
    let mut run_len = 0;
    let mut flush = |start: Option<usize>, len: usize, end_idx: usize, tokens: &[crate::context::Token]| {
        if let Some(si) = start {
            if best.map_or(true, |(blen, _)| len > blen) {
                best = Some((len, (tokens[si].char_start, tokens[end_idx].char_end)));
            }
        }
    };
    for (i, t) in tokens.iter().enumerate() {
        if is_stopword(&t.text) {
            if i > 0 {
                flush(run_start, run_len, i - 1, &tokens);
            }
            run_start = None;
            run_len = 0;
        } else {
            if run_start.is_none() {
                run_start = Some(i);
            }
            run_len += 1;
        }
    }
    if !tokens.is_empty() {
        flush(run_start, run_len, tokens.len() - 1, &tokens);
    }
    best.map(|(_, (cs, ce))| (s.char_start + cs, s.char_start + ce))
}

impl SpanExtractorBackend for StubSpanExtractor {
    fn name(&self) -> &str {
        "stub"
    }

    fn extract(
        &self,
        ctx: &AnnotatedContext,
        rationale_sentence: usize,
        max_spans: usize,
    ) -> Result<Vec<AnswerSpan>> {
        let mut out = Vec::new();
        for (cs, ce) in Self::candidates(ctx, rationale_sentence) {
            let rank = out.len();
            out.push(AnswerSpan {
                text: ctx.span_text(cs, ce).to_string(),
                char_start: cs,
                char_end: ce,
                rationale_sentence,
                rank,
                score: 1.0 / (rank + 1) as f64,
            });
            if out.len() == max_spans {
                break;
            }
        }
        Ok(out)
    }
}
