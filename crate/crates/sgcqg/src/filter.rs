//! Rewriting and filtering of generated turn candidates: roundtrip answer
//! consistency, boolean-answer rewriting, and the four post-processing
//! heuristics (wrong answer, irrelevant, uninformative, redundant).

use serde::{Deserialize, Serialize};

use crate::answer::AnswerSpan;
use crate::context::{is_stopword, tokenize, AnnotatedContext};
use crate::error::Result;
use crate::generation::{answer_question, build_cqa_input, AnswererBackend, CqaRequest};
use crate::typing::ControlSignal;
use crate::traversal::Conversation;

/// Why a candidate was rejected. Names match the `reject_reason` strings in
/// the JSONL trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    EmptyGeneration,
    Irrelevant,
    Uninformative,
    Redundant,
    RoundtripMismatch,
    NoSpans,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::EmptyGeneration => "EmptyGeneration",
            RejectReason::Irrelevant => "Irrelevant",
            RejectReason::Uninformative => "Uninformative",
            RejectReason::Redundant => "Redundant",
            RejectReason::RoundtripMismatch => "RoundtripMismatch",
            RejectReason::NoSpans => "NoSpans",
        }
    }
}

/// Verdict for one candidate. `rewritten_answer` carries the final answer
/// and is present only when accepted (the CQA output for boolean
/// candidates, the span text otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub reason: Option<RejectReason>,
    pub rewritten_answer: Option<String>,
}

impl FilterVerdict {
    fn accept(answer: String) -> Self {
        FilterVerdict {
            accepted: true,
            reason: None,
            rewritten_answer: Some(answer),
        }
    }

    fn reject(reason: RejectReason) -> Self {
        FilterVerdict {
            accepted: false,
            reason: Some(reason),
            rewritten_answer: None,
        }
    }
}

/// A proposed turn awaiting filtering.
#[derive(Debug, Clone)]
pub struct TurnCandidate {
    pub question: String,
    pub answer_span: AnswerSpan,
    pub rationale_sentence: usize,
    pub rationale_text: String,
    pub signal: ControlSignal,
}

/// Filtering thresholds; the defaults are the standard 0.8 for both the
/// roundtrip and redundancy gates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RfConfig {
    pub roundtrip_threshold: f64,
    pub redundancy_threshold: f64,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            roundtrip_threshold: 0.8,
            redundancy_threshold: 0.8,
        }
    }
}

// --- fuzzy matching ---------------------------------------------------------

/// Fuzzy-normalized form: lowercase with runs of whitespace collapsed.
/// Punctuation is kept; it carries signal for near-duplicate questions.
fn fuzzy_normalize(s: &str) -> Vec<char> {
    let mut out = Vec::new();
    let mut pending_space = false;
    for c in s.trim().chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.extend(c.to_lowercase());
        }
    }
    out
}

fn longest_match(a: &[char], b: &[char]) -> (usize, usize, usize) {
    // (len, a_start, b_start), preferring longer, then earlier in a, then b.
    let mut best = (0, 0, 0);
    if a.is_empty() || b.is_empty() {
        return best;
    }
    // suffix[j] = length of common suffix ending at a[i-1], b[j-1].
    let mut prev = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        let mut cur = vec![0usize; b.len() + 1];
        for j in 1..=b.len() {
            if a[i - 1] == b[j - 1] {
                cur[j] = prev[j - 1] + 1;
                let (len, ai, bj) = (cur[j], i - cur[j], j - cur[j]);
                if len > best.0 {
                    best = (len, ai, bj);
                }
            }
        }
        prev = cur;
    }
    best
}

fn matching_total(a: &[char], b: &[char]) -> usize {
    let (len, ai, bj) = longest_match(a, b);
    if len == 0 {
        return 0;
    }
    len + matching_total(&a[..ai], &b[..bj]) + matching_total(&a[ai + len..], &b[bj + len..])
}

/// Sequence-matcher ratio 2M/(|a|+|b|) over fuzzy-normalized strings, where
/// M is the total length of matching blocks under a longest-matching-block
/// decomposition. Symmetric; 1.0 iff the normalized strings are equal (two
/// empty strings score 1.0 by convention).
pub fn fuzzy_ratio(a: &str, b: &str) -> f64 {
    let (mut x, mut y) = (fuzzy_normalize(a), fuzzy_normalize(b));
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    // Canonical argument order keeps the decomposition tie-breaks, and so
    // the ratio, symmetric.
    if y < x {
        std::mem::swap(&mut x, &mut y);
    }
    let m = matching_total(&x, &y);
    2.0 * m as f64 / (x.len() + y.len()) as f64
}

// --- checks -----------------------------------------------------------------

/// Roundtrip consistency: the CQA answer must fuzzily match the extracted
/// span.
pub fn roundtrip_check(span_text: &str, cqa_answer: &str, threshold: f64) -> bool {
    fuzzy_ratio(cqa_answer, span_text) >= threshold
}

/// Boolean candidates take the CQA model's answer instead of the extracted
/// span.
pub fn rewrite_boolean_answer(cqa_answer: &str) -> String {
    cqa_answer.to_string()
}

/// Every non-stopword token of the question must occur in the context.
/// A question reduced to nothing by stopword removal passes vacuously.
pub fn irrelevant_check(question: &str, ctx: &AnnotatedContext) -> bool {
    let context_tokens = tokenize(&ctx.text);
    tokenize(question)
        .iter()
        .filter(|t| !is_stopword(t))
        .all(|t| context_tokens.contains(t))
}

/// The rationale must not be mostly covered by any single previous QA pair:
/// fail when more than 50% of its tokens occur in some previous turn's
/// question + answer.
pub fn uninformative_check(rationale_text: &str, history: &Conversation) -> bool {
    let r_tokens = tokenize(rationale_text);
    if r_tokens.is_empty() {
        return true;
    }
    for turn in &history.turns {
        let pair_tokens = tokenize(&format!("{} {}", turn.question, turn.answer));
        let present = r_tokens.iter().filter(|t| pair_tokens.contains(t)).count();
        if present as f64 / r_tokens.len() as f64 > 0.5 {
            return false;
        }
    }
    true
}

/// Questions longer than 3 tokens must not fuzzily match any previous
/// question at or above the threshold.
pub fn redundancy_check(question: &str, history: &Conversation, threshold: f64) -> bool {
    if tokenize(question).len() <= 3 {
        return true;
    }
    history
        .turns
        .iter()
        .all(|t| fuzzy_ratio(question, &t.question) < threshold)
}

/// Run the full check sequence on one candidate. Cheap lexical checks run
/// before the CQA call; boolean candidates skip the span roundtrip and take
/// the CQA answer instead.
pub fn filter(
    candidate: &TurnCandidate,
    ctx: &AnnotatedContext,
    history: &Conversation,
    answerer: &dyn AnswererBackend,
    config: &RfConfig,
) -> Result<FilterVerdict> {
    if candidate.question.trim().is_empty() {
        return Ok(FilterVerdict::reject(RejectReason::EmptyGeneration));
    }
    if !irrelevant_check(&candidate.question, ctx) {
        return Ok(FilterVerdict::reject(RejectReason::Irrelevant));
    }
    if !uninformative_check(&candidate.rationale_text, history) {
        return Ok(FilterVerdict::reject(RejectReason::Uninformative));
    }
    if !redundancy_check(&candidate.question, history, config.redundancy_threshold) {
        return Ok(FilterVerdict::reject(RejectReason::Redundant));
    }
    let cqa_request = CqaRequest {
        input: build_cqa_input(&candidate.question, ctx, history),
        question: candidate.question.clone(),
        rationale_sentence: candidate.rationale_sentence,
    };
    let cqa_answer = answer_question(ctx, &cqa_request, answerer)?;
    match candidate.signal {
        ControlSignal::Boolean => Ok(FilterVerdict::accept(rewrite_boolean_answer(&cqa_answer))),
        ControlSignal::Normal => {
            if roundtrip_check(&candidate.answer_span.text, &cqa_answer, config.roundtrip_threshold)
            {
                Ok(FilterVerdict::accept(candidate.answer_span.text.clone()))
            } else {
                Ok(FilterVerdict::reject(RejectReason::RoundtripMismatch))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traversal::{QuestionType, Turn};

    fn ctx(text: &str) -> AnnotatedContext {
        let n = text.chars().count();
        let json = serde_json::json!({
            "id": "t", "text": text, "sentences": [{"start": 0, "end": n}],
        });
        AnnotatedContext::parse_str(&json.to_string()).unwrap()
    }

    fn history_with(turns: &[(&str, &str)]) -> Conversation {
        let mut h = Conversation::new("t");
        for (q, a) in turns {
            h.turns.push(Turn {
                question: q.to_string(),
                answer: a.to_string(),
                rationale: Some(1),
                question_type: QuestionType::Normal,
            });
        }
        h
    }

    #[test]
    fn fuzzy_identity_and_disjoint() {
        assert_eq!(fuzzy_ratio("john smith", "john smith"), 1.0);
        assert_eq!(fuzzy_ratio("abc", "xyz"), 0.0);
        assert_eq!(fuzzy_ratio("", ""), 1.0);
        assert_eq!(fuzzy_ratio("JOHN  smith ", "john smith"), 1.0);
    }

    #[test]
    fn fuzzy_redundant_exemplar_clears_threshold() {
        let r = fuzzy_ratio("Did he eat something?", "Was he eating something?");
        assert!(r >= 0.8, "ratio was {r}");
    }

    #[test]
    fn roundtrip_pass_and_fail() {
        assert!(roundtrip_check("three houses", "three houses", 0.8));
        assert!(!roundtrip_check("three houses", "the park", 0.8));
        assert!(!roundtrip_check("breakfast", "eggs", 0.8));
    }

    #[test]
    fn irrelevant_check_cases() {
        let c = ctx("He slept through the night and woke at dawn.");
        assert!(!irrelevant_check("Was he still alive?", &c));
        assert!(irrelevant_check("Was he not just the same once more?", &c)); // stopwords only
        assert!(irrelevant_check("When did he woke at dawn?", &c));
    }

    #[test]
    fn uninformative_check_cases() {
        let h = history_with(&[("What happened one day?", "Justin woke up very excited")]);
        assert!(!uninformative_check("Justin woke up very excited", &h));
        assert!(uninformative_check("anything", &history_with(&[])));
        // 2 of 8 tokens shared is under the 50% bar.
        let h2 = history_with(&[("alpha beta", "gamma delta")]);
        assert!(uninformative_check(
            "alpha beta one two three four five six",
            &h2
        ));
    }

    #[test]
    fn redundancy_check_cases() {
        let h = history_with(&[("Did he eat something?", "yes")]);
        assert!(!redundancy_check("Was he eating something?", &h, 0.8));
        // Three-token questions pass the gate unconditionally.
        let h2 = history_with(&[("Was he eating?", "yes")]);
        assert!(redundancy_check("Was he eating?", &h2, 0.8));
        assert!(redundancy_check("Anything at all here now?", &history_with(&[]), 0.8));
    }

    struct ScriptedAnswerer(&'static str);
    impl AnswererBackend for ScriptedAnswerer {
        fn name(&self) -> &str {
            "scripted"
        }
        fn answer(&self, _: &AnnotatedContext, _: &CqaRequest) -> Result<String> {
            Ok(self.0.to_string())
        }
    }

    fn candidate(question: &str, span: &str, rationale: &str, signal: ControlSignal) -> TurnCandidate {
        TurnCandidate {
            question: question.into(),
            answer_span: AnswerSpan {
                text: span.into(),
                char_start: 0,
                char_end: span.chars().count(),
                rationale_sentence: 1,
                rank: 0,
                score: 1.0,
            },
            rationale_sentence: 1,
            rationale_text: rationale.into(),
            signal,
        }
    }

    #[test]
    fn filter_short_circuits_before_cqa() {
        struct Panicking;
        impl AnswererBackend for Panicking {
            fn name(&self) -> &str {
                "panicking"
            }
            fn answer(&self, _: &AnnotatedContext, _: &CqaRequest) -> Result<String> {
                panic!("CQA must not be called for lexical rejects");
            }
        }
        let c = ctx("He slept through the night.");
        let cand = candidate("Was he still alive?", "night", "He slept through the night.", ControlSignal::Normal);
        let verdict = filter(&cand, &c, &history_with(&[]), &Panicking, &RfConfig::default()).unwrap();
        assert_eq!(verdict.reason, Some(RejectReason::Irrelevant));
    }

    #[test]
    fn filter_accepts_normal_candidate_with_matching_cqa() {
        let c = ctx("He ate eggs at dawn.");
        let cand = candidate("When did he ate eggs?", "dawn", "He ate eggs at dawn.", ControlSignal::Normal);
        let verdict = filter(&cand, &c, &history_with(&[]), &ScriptedAnswerer("dawn"), &RfConfig::default()).unwrap();
        assert!(verdict.accepted);
        assert_eq!(verdict.rewritten_answer.as_deref(), Some("dawn"));
    }

    #[test]
    fn filter_boolean_takes_cqa_answer() {
        let c = ctx("They loved the flowers there.");
        let cand = candidate("Did they loved the flowers?", "flowers", "They loved the flowers there.", ControlSignal::Boolean);
        let verdict = filter(&cand, &c, &history_with(&[]), &ScriptedAnswerer("Yes"), &RfConfig::default()).unwrap();
        assert!(verdict.accepted);
        assert_eq!(verdict.rewritten_answer.as_deref(), Some("Yes"));
    }

    #[test]
    fn filter_wrong_answer_is_roundtrip_mismatch() {
        let c = ctx("He ate eggs for breakfast today.");
        let cand = candidate("What did he ate for breakfast?", "breakfast", "He ate eggs for breakfast today.", ControlSignal::Normal);
        let verdict = filter(&cand, &c, &history_with(&[]), &ScriptedAnswerer("eggs"), &RfConfig::default()).unwrap();
        assert_eq!(verdict.reason, Some(RejectReason::RoundtripMismatch));
    }
}
