//! Swap one model role for a custom implementation: a question generator
//! that phrases every span-based question as a cloze. Any of the four roles
//! (span extraction, type classification, QG, CQA) can be replaced the same
//! way, including with [`sgcqg::HttpBackend`] for a real model server.
//!
//! Usage: cargo run --example custom_backend

use std::path::PathBuf;

use sgcqg::generation::QgRequest;
use sgcqg::pipeline::{generate_for_context, Backends};
use sgcqg::typing::ControlSignal;
use sgcqg::{AnnotatedContext, PipelineConfig, QuestionGeneratorBackend, Result};

struct ClozeGenerator;

impl QuestionGeneratorBackend for ClozeGenerator {
    fn name(&self) -> &str {
        "cloze"
    }

    fn generate(&self, request: &QgRequest) -> Result<String> {
        Ok(match request.signal {
            ControlSignal::Boolean => format!("Was there {}?", request.answer_span),
            ControlSignal::Normal => {
                // Blank the span out of its rationale sentence.
                let blanked = request
                    .rationale_text
                    .replace(&request.answer_span, "___");
                format!("Fill in the blank: {blanked}")
            }
        })
    }
}

fn main() -> Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/contexts/baker.json")
    });
    let ctx = AnnotatedContext::from_path(&path)?;
    let config = PipelineConfig::default();
    let mut backends = Backends::stub(&config);
    backends.qg = Box::new(ClozeGenerator);

    let output = generate_for_context(&ctx, &backends, &config)?;
    println!(
        "{} turn(s) accepted out of {} attempt(s):",
        output.conversation.turns.len(),
        output.trace.len()
    );
    for (i, turn) in output.conversation.turns.iter().enumerate() {
        println!("  Q{}: {}\n  A{}: {}", i + 1, turn.question, i + 1, turn.answer);
    }
    Ok(())
}
