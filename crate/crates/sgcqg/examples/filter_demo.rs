//! Push hand-built candidates through the rewrite-and-filter pass and show
//! which heuristic catches each one: empty generation, irrelevant,
//! uninformative, redundant, and a roundtrip mismatch.
//!
//! Usage: cargo run --example filter_demo

use sgcqg::answer::AnswerSpan;
use sgcqg::filter::{filter, fuzzy_ratio, RfConfig, TurnCandidate};
use sgcqg::traversal::{Conversation, QuestionType, Turn};
use sgcqg::typing::ControlSignal;
use sgcqg::{AnnotatedContext, StubAnswerer};

fn candidate(question: &str, span: &str, rationale_sentence: usize, ctx: &AnnotatedContext) -> TurnCandidate {
    TurnCandidate {
        question: question.to_string(),
        answer_span: AnswerSpan {
            text: span.to_string(),
            char_start: 0,
            char_end: span.chars().count(),
            rationale_sentence,
            rank: 0,
            score: 1.0,
        },
        rationale_sentence,
        rationale_text: ctx.sentence_text(rationale_sentence).to_string(),
        signal: ControlSignal::Normal,
    }
}

fn main() -> sgcqg::Result<()> {
    let json = serde_json::json!({
        "id": "demo",
        "text": "One day Justin woke up very excited. He ate eggs for breakfast at dawn.",
        "sentences": [{"start": 0, "end": 36}, {"start": 37, "end": 71}],
        "clusters": [[{"start": 8, "end": 14}, {"start": 37, "end": 39}]],
        "entities": [{"start": 8, "end": 14, "label": "PERSON"}],
    });
    let ctx = AnnotatedContext::parse_str(&json.to_string())?;
    let config = RfConfig::default();

    let mut history = Conversation::new("demo");
    history.turns.push(Turn {
        question: "What happened one day?".into(),
        answer: "Justin woke up very excited".into(),
        rationale: Some(1),
        question_type: QuestionType::Normal,
    });
    history.turns.push(Turn {
        question: "Did he eat something?".into(),
        answer: "Yes".into(),
        rationale: Some(2),
        question_type: QuestionType::Boolean,
    });

    // A separate history for the redundancy case: its near-duplicate stays
    // inside the context vocabulary so earlier checks pass.
    let mut breakfast_history = Conversation::new("demo");
    breakfast_history.turns.push(Turn {
        question: "Did he ate eggs for breakfast today?".into(),
        answer: "Yes".into(),
        rationale: Some(2),
        question_type: QuestionType::Boolean,
    });

    let cases = [
        ("empty generation", &history, candidate("", "eggs", 2, &ctx)),
        ("irrelevant (tokens outside context)", &history, candidate("Was he still alive?", "eggs", 2, &ctx)),
        ("uninformative (rationale already covered)", &history, candidate("Who woke up very excited?", "Justin", 1, &ctx)),
        ("redundant (near-duplicate question)", &breakfast_history, candidate("Did he ate eggs for breakfast?", "eggs", 1, &ctx)),
        ("acceptable", &history, candidate("What did he do for breakfast at dawn?", "ate eggs", 2, &ctx)),
    ];

    println!(
        "fuzzy('Did he eat something?', 'Was he eating something?') = {:.4}\n",
        fuzzy_ratio("Did he eat something?", "Was he eating something?")
    );
    for (label, hist, cand) in cases {
        let verdict = filter(&cand, &ctx, hist, &StubAnswerer, &config)?;
        let outcome = if verdict.accepted {
            format!("accepted, answer = {:?}", verdict.rewritten_answer.unwrap())
        } else {
            format!("rejected: {:?}", verdict.reason.unwrap())
        };
        println!("{label:45} -> {outcome}");
    }
    Ok(())
}
