//! Score a small hand-written conversation: diversity, context coverage,
//! jumping score, entailment, and EM/F1 against reference answers.
//!
//! Usage: cargo run --example evaluate_metrics

use std::collections::HashMap;

use sgcqg::metrics::{
    attribute_rationales_lcs, conversation_utterances, distinct_n, exact_match, f1, GoldAnswers,
};
use sgcqg::traversal::{Conversation, QuestionType, Turn};
use sgcqg::{evaluate, AnnotatedContext, EvalConfig};

fn main() -> sgcqg::Result<()> {
    let json = serde_json::json!({
        "id": "walk",
        "text": "Mia walked to the old bridge. The bridge crossed a quiet stream. \
                 She counted three herons below. Then she headed home for dinner.",
        "sentences": [
            {"start": 0, "end": 29}, {"start": 30, "end": 64},
            {"start": 65, "end": 96}, {"start": 97, "end": 129}
        ],
    });
    let ctx = AnnotatedContext::parse_str(&json.to_string())?;

    let mut conv = Conversation::new("walk");
    let turns = [
        ("Where did Mia walk?", "the old bridge", QuestionType::Normal),
        ("What did the bridge cross?", "a quiet stream", QuestionType::Normal),
        ("How many herons did she count?", "three", QuestionType::Normal),
        ("Did she head home for dinner?", "Yes", QuestionType::Boolean),
    ];
    for (q, a, ty) in turns {
        conv.turns.push(Turn {
            question: q.into(),
            answer: a.into(),
            rationale: None,
            question_type: ty,
        });
    }

    // Rationales were left blank; attribute them by longest common substring.
    let conv = attribute_rationales_lcs(&conv, &ctx);
    for (i, t) in conv.turns.iter().enumerate() {
        println!("turn {} attributed to sentence {:?}", i + 1, t.rationale);
    }

    let utterances = conversation_utterances(&conv, false);
    println!("\nDistinct-1 = {:.4}", distinct_n(&utterances, 1));
    println!("Distinct-2 = {:.4}", distinct_n(&utterances, 2));

    println!("\nEM/F1 against reference answers:");
    let golds = ["old bridge", "a stream", "three herons", "yes"];
    for (t, gold) in conv.turns.iter().zip(golds) {
        println!(
            "  {:20} vs {:15} EM={} F1={:.3}",
            t.answer,
            gold,
            exact_match(&t.answer, gold),
            f1(&t.answer, gold)
        );
    }

    let mut contexts = HashMap::new();
    contexts.insert("walk".to_string(), ctx);
    let mut gold_map = GoldAnswers::new();
    gold_map.insert("walk".to_string(), golds.iter().map(|s| s.to_string()).collect());
    let report = evaluate(&[conv], &contexts, &gold_map, &EvalConfig::default())?;
    println!(
        "\nfull report:\n{}",
        serde_json::to_string_pretty(&report.to_report_json())?
    );
    Ok(())
}
