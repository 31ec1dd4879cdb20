//! Watch the rationale-selection traversal walk a graph, with a scripted
//! accept/reject policy: every even-numbered sentence is rejected, so
//! accepted neighbors go to the front of the queue while rejected ones fall
//! to the back.
//!
//! Usage: cargo run --example traverse [path/to/context.json]

use std::path::PathBuf;

use sgcqg::traversal::{generate_conversation, QuestionType, TurnOutcome};
use sgcqg::{build_graph, AnnotatedContext};

fn main() -> sgcqg::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/contexts/mary-park.json")
    });
    let ctx = AnnotatedContext::from_path(&path)?;
    let graph = build_graph(&ctx);
    println!("graph: {} node(s), {} edge(s)", graph.nodes.len(), graph.edges.len());

    let mut attempt_no = 0;
    let run = generate_conversation(&graph, &ctx.id, 8, |_history, rationale, node| {
        attempt_no += 1;
        let accept = rationale % 2 == 1;
        println!(
            "attempt {attempt_no}: node {node} (sentence {rationale}) -> {}",
            if accept { "accept" } else { "reject" }
        );
        if accept {
            Ok(TurnOutcome::Accepted {
                question: format!("What happens in sentence {rationale}?"),
                answer: ctx.sentence_text(rationale).to_string(),
                rationale_sentence: rationale,
                question_type: QuestionType::Normal,
            })
        } else {
            Ok(TurnOutcome::Rejected {
                reason: "scripted policy".into(),
            })
        }
    })?;

    println!("\naccepted rationale order:");
    for (i, turn) in run.conversation.turns.iter().enumerate() {
        println!("  turn {}: sentence {:?}", i + 1, turn.rationale);
    }
    Ok(())
}
