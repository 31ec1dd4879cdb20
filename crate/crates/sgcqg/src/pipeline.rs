//! End-to-end orchestration: turn attempts over the semantic-graph
//! traversal, conversation + trace serialization, corpus generation and
//! evaluation entry points, and trace inspection.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::answer::{deselect_previous, extract_spans, SpanExtractorBackend, StubSpanExtractor};
use crate::backend::{Capability, HttpBackend};
use crate::config::{BackendKind, PipelineConfig};
use crate::context::AnnotatedContext;
use crate::error::{Error, Result};
use crate::filter::{filter, RejectReason, TurnCandidate};
use crate::generation::{
    build_qg_prompt, generate_question, AnswererBackend, QgRequest, QuestionGeneratorBackend,
    StubAnswerer, StubQuestionGenerator,
};
use crate::graph::build_graph;
use crate::metrics::{
    attribute_rationales_lcs, evaluate, EvalConfig, GoldAnswers, MetricReport,
};
use crate::traversal::{
    generate_conversation, Conversation, QuestionType, Turn, TurnOutcome,
};
use crate::typing::{
    build_classifier_input, classify, stable_hash, ClassifierRequest, ControlSignal,
    StubTypeClassifier, TypeClassifierBackend,
};

/// The four model roles behind one pipeline run.
pub struct Backends {
    pub qg: Box<dyn QuestionGeneratorBackend>,
    pub cqa: Box<dyn AnswererBackend>,
    pub span: Box<dyn SpanExtractorBackend>,
    pub classifier: Box<dyn TypeClassifierBackend>,
}

impl Backends {
    /// All-offline stub backends.
    pub fn stub(config: &PipelineConfig) -> Backends {
        Backends {
            qg: Box::new(StubQuestionGenerator),
            cqa: Box::new(StubAnswerer),
            span: Box::new(StubSpanExtractor),
            classifier: Box::new(StubTypeClassifier {
                boolean_modulus: config.stub_boolean_modulus,
            }),
        }
    }

    /// Build each role from its configuration (stub or HTTP).
    pub fn from_config(config: &PipelineConfig) -> Result<Backends> {
        config.validate()?;
        let mut backends = Backends::stub(config);
        let http = |cap: Capability| -> Result<HttpBackend> {
            let b = config.backends.for_capability(cap);
            HttpBackend::new(
                cap,
                b.url.clone().expect("validated"),
                config.backends.timeout_ms,
                config.backends.retries,
            )
        };
        if config.backends.qg.kind == BackendKind::Http {
            backends.qg = Box::new(http(Capability::Qg)?);
        }
        if config.backends.cqa.kind == BackendKind::Http {
            backends.cqa = Box::new(http(Capability::Cqa)?);
        }
        if config.backends.span_extract.kind == BackendKind::Http {
            backends.span = Box::new(http(Capability::SpanExtract)?);
        }
        if config.backends.type_classify.kind == BackendKind::Http {
            backends.classifier = Box::new(http(Capability::TypeClassify)?);
        }
        Ok(backends)
    }
}

/// One candidate span tried during a turn attempt, as recorded in the
/// trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSpanAttempt {
    pub span: String,
    pub rank: usize,
    pub signal: String,
    pub question: Option<String>,
    /// Stable hash of the QG prompt, hex-encoded; lets traces be compared
    /// across runs without storing full prompts.
    pub prompt_hash: String,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reject_reason: Option<String>,
}

/// One traversal attempt (one popped node), as recorded in the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub context_id: String,
    /// 1-based ordinal of this attempt within the run.
    pub attempt: usize,
    /// Turn number when the attempt produced an accepted turn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub turn: Option<usize>,
    pub node: usize,
    pub rationale: usize,
    pub spans: Vec<TraceSpanAttempt>,
    /// "accepted" or the final rejection reason.
    pub outcome: String,
}

fn signal_to_type(signal: ControlSignal) -> QuestionType {
    match signal {
        ControlSignal::Normal => QuestionType::Normal,
        ControlSignal::Boolean => QuestionType::Boolean,
    }
}

/// Attempt one turn at a rationale sentence: extract candidate spans, drop
/// previously used answers, then per span classify the control signal,
/// generate, and filter. The first accepted span wins; the recorded
/// rejection reason is the last span's when every span fails.
pub fn turn_attempt(
    ctx: &AnnotatedContext,
    rationale_sentence: usize,
    history: &Conversation,
    backends: &Backends,
    config: &PipelineConfig,
) -> Result<(TurnOutcome, Vec<TraceSpanAttempt>)> {
    let rationale_text = ctx.sentence_text(rationale_sentence).to_string();
    let spans = extract_spans(
        ctx,
        rationale_sentence,
        backends.span.as_ref(),
        config.max_spans_per_rationale,
    )?;
    let spans = deselect_previous(spans, history);
    let mut attempts: Vec<TraceSpanAttempt> = Vec::new();
    if spans.is_empty() {
        return Ok((
            TurnOutcome::Rejected {
                reason: RejectReason::NoSpans.as_str().to_string(),
            },
            attempts,
        ));
    }

    for span in &spans {
        let span_is_entity = ctx.entity_at(span.char_start, span.char_end).is_some();
        let classifier_request = ClassifierRequest {
            input: build_classifier_input(&rationale_text, &span.text, ctx, history),
            rationale_text: rationale_text.clone(),
            answer_text: span.text.clone(),
            span_is_entity,
        };
        let signal = classify(&classifier_request, backends.classifier.as_ref())?;

        let prompt = build_qg_prompt(signal, &span.text, &rationale_text, ctx, history);
        let prompt_hash = format!("{:016x}", stable_hash(prompt.as_bytes()));
        let qg_request = QgRequest {
            prompt,
            signal,
            answer_span: span.text.clone(),
            entity_label: ctx
                .entity_at(span.char_start, span.char_end)
                .map(|e| e.label.clone()),
            rationale_text: rationale_text.clone(),
        };
        let question = match generate_question(&qg_request, backends.qg.as_ref()) {
            Ok(q) => q,
            Err(Error::EmptyGeneration) => {
                attempts.push(TraceSpanAttempt {
                    span: span.text.clone(),
                    rank: span.rank,
                    signal: format!("{signal:?}").to_lowercase(),
                    question: None,
                    prompt_hash,
                    accepted: false,
                    reject_reason: Some(RejectReason::EmptyGeneration.as_str().to_string()),
                });
                continue;
            }
            Err(e) => return Err(e),
        };

        let candidate = TurnCandidate {
            question: question.clone(),
            answer_span: span.clone(),
            rationale_sentence,
            rationale_text: rationale_text.clone(),
            signal,
        };
        let verdict = filter(&candidate, ctx, history, backends.cqa.as_ref(), &config.filter)?;
        attempts.push(TraceSpanAttempt {
            span: span.text.clone(),
            rank: span.rank,
            signal: format!("{signal:?}").to_lowercase(),
            question: Some(question.clone()),
            prompt_hash,
            accepted: verdict.accepted,
            reject_reason: verdict.reason.map(|r| r.as_str().to_string()),
        });
        if verdict.accepted {
            return Ok((
                TurnOutcome::Accepted {
                    question,
                    answer: verdict.rewritten_answer.expect("accepted verdicts carry an answer"),
                    rationale_sentence,
                    question_type: signal_to_type(signal),
                },
                attempts,
            ));
        }
    }

    let reason = attempts
        .last()
        .and_then(|a| a.reject_reason.clone())
        .unwrap_or_else(|| RejectReason::NoSpans.as_str().to_string());
    Ok((TurnOutcome::Rejected { reason }, attempts))
}

/// One context's generated conversation plus the full attempt trace.
#[derive(Debug)]
pub struct GeneratedOutput {
    pub conversation: Conversation,
    pub trace: Vec<AttemptRecord>,
    /// Message of the backend error that cut the run short, if any.
    pub error: Option<String>,
}

/// Generate one conversation for a context, tracing every attempt.
pub fn generate_for_context(
    ctx: &AnnotatedContext,
    backends: &Backends,
    config: &PipelineConfig,
) -> Result<GeneratedOutput> {
    let graph = build_graph(ctx);
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut trace: Vec<AttemptRecord> = Vec::new();
    let mut accepted_turns = 0usize;
    let run = {
        let trace = &mut trace;
        let accepted = &mut accepted_turns;
        generate_conversation(&graph, &ctx.id, config.max_turns, |history, rationale, node| {
            let (outcome, spans) = turn_attempt(ctx, rationale, history, backends, config)?;
            let (turn, label) = match &outcome {
                TurnOutcome::Accepted { .. } => {
                    *accepted += 1;
                    (Some(*accepted), "accepted".to_string())
                }
                TurnOutcome::Rejected { reason } => (None, reason.clone()),
            };
            trace.push(AttemptRecord {
                context_id: ctx.id.clone(),
                attempt: trace.len() + 1,
                turn,
                node,
                rationale,
                spans,
                outcome: label,
            });
            Ok(outcome)
        })?
    };
    Ok(GeneratedOutput {
        conversation: run.conversation,
        trace,
        error: run.error.map(|e| e.to_string()),
    })
}

// --- conversation / trace files --------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TurnLine {
    turn: usize,
    q: String,
    a: String,
    rationale: Option<usize>,
    #[serde(rename = "type")]
    question_type: QuestionType,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold_a: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryLine {
    id: String,
    turns: usize,
}

/// Write one conversation as JSONL: one line per turn, then a summary line
/// carrying the context id and turn count.
pub fn write_conversation_jsonl(conv: &Conversation, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (i, t) in conv.turns.iter().enumerate() {
        let line = TurnLine {
            turn: i + 1,
            q: t.question.clone(),
            a: t.answer.clone(),
            rationale: t.rationale,
            question_type: t.question_type,
            gold_a: None,
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(&SummaryLine {
        id: conv.context_id.clone(),
        turns: conv.turns.len(),
    })?);
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse conversation JSONL (possibly several conversations back to back in
/// one file). Turn lines may carry an optional `gold_a` reference answer;
/// those are collected per context id.
pub fn parse_conversations_jsonl(raw: &str) -> Result<(Vec<Conversation>, GoldAnswers)> {
    let mut conversations = Vec::new();
    let mut golds: GoldAnswers = HashMap::new();
    let mut pending: Vec<(TurnLine, Option<String>)> = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(turn) = serde_json::from_str::<TurnLine>(line) {
            let gold = turn.gold_a.clone();
            pending.push((turn, gold));
            continue;
        }
        let summary: SummaryLine = serde_json::from_str(line).map_err(|e| {
            Error::MalformedDocument(format!("line {}: not a turn or summary: {e}", lineno + 1))
        })?;
        if summary.turns != pending.len() {
            return Err(Error::MalformedDocument(format!(
                "line {}: summary says {} turn(s), found {}",
                lineno + 1,
                summary.turns,
                pending.len()
            )));
        }
        let mut conv = Conversation::new(summary.id.clone());
        let mut conv_golds = Vec::new();
        let mut any_gold = false;
        for (t, gold) in pending.drain(..) {
            conv.turns.push(Turn {
                question: t.q,
                answer: t.a,
                rationale: t.rationale,
                question_type: t.question_type,
            });
            any_gold |= gold.is_some();
            conv_golds.push(gold.unwrap_or_default());
        }
        if any_gold {
            golds.insert(summary.id, conv_golds);
        }
        conversations.push(conv);
    }
    if !pending.is_empty() {
        return Err(Error::MalformedDocument(
            "trailing turn lines without a summary line".into(),
        ));
    }
    Ok((conversations, golds))
}

/// Write the attempt trace as JSONL, one record per attempt.
pub fn write_trace_jsonl(trace: &[AttemptRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in trace {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load every `*.json` context from a directory, or the single file, sorted
/// by path for determinism.
pub fn load_contexts(path: &Path) -> Result<Vec<AnnotatedContext>> {
    let mut files: Vec<PathBuf> = if path.is_dir() {
        std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect()
    } else {
        vec![path.to_path_buf()]
    };
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    files.iter().map(|f| AnnotatedContext::from_path(f)).collect()
}

/// Load conversations (and any gold answers) from a JSONL file or a
/// directory of `*.jsonl` files; `*.trace.jsonl` files are skipped.
pub fn load_conversations(path: &Path) -> Result<(Vec<Conversation>, GoldAnswers)> {
    let mut files: Vec<PathBuf> = if path.is_dir() {
        std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|e| e == "jsonl")
                    && !p
                        .file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.ends_with(".trace.jsonl"))
            })
            .collect()
    } else {
        vec![path.to_path_buf()]
    };
    files.sort();
    let mut conversations = Vec::new();
    let mut golds = GoldAnswers::new();
    for f in files {
        let raw = std::fs::read_to_string(&f)?;
        let (convs, g) = parse_conversations_jsonl(&raw)?;
        conversations.extend(convs);
        golds.extend(g);
    }
    Ok((conversations, golds))
}

/// Generate conversations for a whole corpus, in parallel across contexts,
/// writing `<id>.jsonl` and `<id>.trace.jsonl` per context into `out_dir`.
/// Per-context failures are reported, not fatal for the batch.
pub fn run_generate(
    contexts_path: &Path,
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<Vec<(String, Result<GeneratedOutput>)>> {
    let contexts = load_contexts(contexts_path)?;
    std::fs::create_dir_all(out_dir)?;
    let results: Vec<(String, Result<GeneratedOutput>)> = contexts
        .par_iter()
        .map(|ctx| {
            let backends = match Backends::from_config(config) {
                Ok(b) => b,
                Err(e) => return (ctx.id.clone(), Err(e)),
            };
            (ctx.id.clone(), generate_for_context(ctx, &backends, config))
        })
        .collect();
    for (id, result) in &results {
        if let Ok(output) = result {
            write_conversation_jsonl(&output.conversation, &out_dir.join(format!("{id}.jsonl")))?;
            write_trace_jsonl(&output.trace, &out_dir.join(format!("{id}.trace.jsonl")))?;
        }
    }
    Ok(results)
}

/// Evaluate a corpus of conversation files against their contexts. Turns
/// lacking a rationale are attributed by longest-common-substring first.
pub fn run_evaluate(
    conversations_path: &Path,
    contexts_path: &Path,
    config: &PipelineConfig,
) -> Result<MetricReport> {
    let (conversations, golds) = load_conversations(conversations_path)?;
    let contexts: HashMap<String, AnnotatedContext> = load_contexts(contexts_path)?
        .into_iter()
        .map(|c| (c.id.clone(), c))
        .collect();
    let attributed: Vec<Conversation> = conversations
        .iter()
        .map(|conv| {
            let ctx = contexts
                .get(&conv.context_id)
                .ok_or_else(|| Error::UnknownContext(conv.context_id.clone()))?;
            Ok(attribute_rationales_lcs(conv, ctx))
        })
        .collect::<Result<_>>()?;
    let eval_config = EvalConfig {
        distinct_ns: vec![1, 2],
        questions_only: config.questions_only,
    };
    evaluate(&attributed, &contexts, &golds, &eval_config)
}

/// Aggregated view over one trace file.
#[derive(Debug, Serialize)]
pub struct InspectReport {
    pub attempts: usize,
    pub accepted: usize,
    /// Outcome label -> count, including "accepted".
    pub outcomes: std::collections::BTreeMap<String, usize>,
    /// Records matching the reason filter (all records when unfiltered).
    pub records: Vec<AttemptRecord>,
}

/// Parse a trace file and summarize it, optionally keeping only attempts
/// whose outcome or any span-level rejection matches `reason`.
pub fn run_inspect(trace_path: &Path, reason: Option<&str>) -> Result<InspectReport> {
    let raw = std::fs::read_to_string(trace_path)?;
    let mut records = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: AttemptRecord = serde_json::from_str(line)
            .map_err(|e| Error::MalformedTrace(format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    let mut outcomes = std::collections::BTreeMap::new();
    let mut accepted = 0usize;
    for r in &records {
        *outcomes.entry(r.outcome.clone()).or_insert(0) += 1;
        if r.outcome == "accepted" {
            accepted += 1;
        }
    }
    let attempts = records.len();
    let filtered = match reason {
        None => records,
        Some(want) => records
            .into_iter()
            .filter(|r| {
                r.outcome == want
                    || r.spans
                        .iter()
                        .any(|s| s.reject_reason.as_deref() == Some(want))
            })
            .collect(),
    };
    Ok(InspectReport {
        attempts,
        accepted,
        outcomes,
        records: filtered,
    })
}
