//! Two-stage conversational question generation over annotated passages.
//!
//! Stage one decides *what to ask*: a semantic graph built from coreference
//! clusters and named entities is traversed to pick a rationale sentence
//! per turn, and candidate answer spans are extracted from it. Stage two
//! decides *how to ask*: a type classifier picks a span-based or boolean
//! control signal, a question generator produces the question, and a
//! rewrite-and-filter pass validates it against a conversational answerer
//! plus lexical heuristics before the turn is accepted.
//!
//! Everything runs offline by default on deterministic stub backends; each
//! model role can be swapped for an HTTP service via [`config`]. The
//! [`metrics`] module scores generated corpora (diversity, context
//! coverage, jumping score, EM/F1, entailment).
//!
//! See the crate `examples/` directory for a runnable tour of each stage.

pub mod answer;
pub mod backend;
pub mod config;
pub mod context;
pub mod error;
pub mod filter;
pub mod generation;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod traversal;
pub mod typing;

pub use answer::{extract_spans, AnswerSpan, SpanExtractorBackend, StubSpanExtractor};
pub use backend::{Capability, HttpBackend};
pub use config::{BackendKind, PipelineConfig};
pub use context::{tokenize, AnnotatedContext};
pub use error::{Error, Result};
pub use filter::{filter, fuzzy_ratio, FilterVerdict, RejectReason, RfConfig, TurnCandidate};
pub use generation::{
    build_cqa_input, build_qg_prompt, AnswererBackend, QuestionGeneratorBackend, StubAnswerer,
    StubQuestionGenerator,
};
pub use graph::{build_graph, EdgeKind, SemanticGraph};
pub use metrics::{evaluate, EvalConfig, MetricReport};
pub use pipeline::{
    generate_for_context, run_evaluate, run_generate, run_inspect, Backends, GeneratedOutput,
};
pub use traversal::{generate_conversation, Conversation, QuestionType, Turn};
pub use typing::{ControlSignal, StubTypeClassifier, TypeClassifierBackend};
