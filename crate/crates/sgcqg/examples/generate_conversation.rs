//! Run the full offline pipeline on one context and print the resulting
//! conversation with its attempt trace.
//!
//! Usage: cargo run --example generate_conversation [path/to/context.json]

use std::path::PathBuf;

use sgcqg::pipeline::{generate_for_context, Backends};
use sgcqg::{AnnotatedContext, PipelineConfig};

fn main() -> sgcqg::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/contexts/mary-park.json")
    });
    let ctx = AnnotatedContext::from_path(&path)?;
    let config = PipelineConfig::default();
    let backends = Backends::stub(&config);
    let output = generate_for_context(&ctx, &backends, &config)?;

    println!("conversation for '{}':", ctx.id);
    for (i, turn) in output.conversation.turns.iter().enumerate() {
        println!(
            "  Q{}: {}\n  A{}: {}   (rationale s{}, {:?})",
            i + 1,
            turn.question,
            i + 1,
            turn.answer,
            turn.rationale.unwrap_or(0),
            turn.question_type
        );
    }

    println!("\ntrace ({} attempt(s)):", output.trace.len());
    for record in &output.trace {
        let spans: Vec<String> = record
            .spans
            .iter()
            .map(|s| {
                format!(
                    "'{}'{}",
                    s.span,
                    s.reject_reason
                        .as_deref()
                        .map(|r| format!(" [{r}]"))
                        .unwrap_or_default()
                )
            })
            .collect();
        println!(
            "  attempt {} node {} s{} -> {} ({})",
            record.attempt,
            record.node,
            record.rationale,
            record.outcome,
            spans.join(", ")
        );
    }
    Ok(())
}
