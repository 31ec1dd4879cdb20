//! Queue-driven rationale selection over the semantic graph.
//!
//! Nodes seed the queue from the history's rationale sentences (or the
//! earliest node when there is no history). Each pop retrieves the node's
//! sentence as the candidate rationale and hands it to the turn-attempt
//! callback; on success the node's unvisited neighbors are prepended to the
//! queue, on failure appended. A node is processed at most twice; a node
//! popped after its second visit is skipped without invoking the callback.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SemanticGraph};

/// A question type, decided per turn by the control signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    Normal,
    Boolean,
}

/// One finished turn of a conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub question: String,
    pub answer: String,
    pub rationale: Option<usize>,
    #[serde(rename = "type")]
    pub question_type: QuestionType,
}

/// Ordered turns generated for one context.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub context_id: String,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(context_id: impl Into<String>) -> Self {
        Conversation {
            context_id: context_id.into(),
            turns: Vec::new(),
        }
    }

    /// Distinct rationale sentence indices, in first-use order.
    pub fn rationale_sentences(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        for t in &self.turns {
            if let Some(r) = t.rationale {
                if !seen.contains(&r) {
                    seen.push(r);
                }
            }
        }
        seen
    }
}

/// Outcome of one turn attempt at a rationale sentence.
#[derive(Debug, Clone)]
pub enum TurnOutcome {
    Accepted {
        question: String,
        answer: String,
        rationale_sentence: usize,
        question_type: QuestionType,
    },
    Rejected {
        reason: String,
    },
}

/// Mutable traversal bookkeeping for one conversation.
#[derive(Debug, Clone)]
pub struct TraversalState {
    queue: VecDeque<NodeId>,
    visit_count: Vec<u8>,
    /// Total enqueue operations, for the termination-bound audit.
    insertions: usize,
}

impl TraversalState {
    pub fn queue(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.queue.iter().copied()
    }

    pub fn visit_count(&self, node: NodeId) -> u8 {
        self.visit_count[node]
    }

    pub fn insertions(&self) -> usize {
        self.insertions
    }
}

/// Seed the queue from the history's rationale sentences, in
/// (sentence, offset) order; with no history, seed with the earliest node
/// in the context.
pub fn init_queue(graph: &SemanticGraph, history: &Conversation) -> Result<TraversalState> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut queue = VecDeque::new();
    let rationales = history.rationale_sentences();
    if rationales.is_empty() {
        // Node ids are dense in (sentence, offset) order, so node 0 is the
        // earliest node in the context.
        queue.push_back(0);
    } else {
        let mut sorted = rationales;
        sorted.sort_unstable();
        for s in sorted {
            if let Some(ids) = graph.sentence_to_nodes.get(&s) {
                queue.extend(ids.iter().copied());
            }
        }
    }
    let insertions = queue.len();
    Ok(TraversalState {
        queue,
        visit_count: vec![0; graph.nodes.len()],
        insertions,
    })
}

/// Result of a single [`step`].
#[derive(Debug)]
pub enum StepResult {
    Attempted { node: NodeId, outcome: TurnOutcome },
    Exhausted,
}

/// Pop and process the next eligible node. Nodes already visited twice are
/// skipped without invoking the callback. The callback receives the
/// rationale sentence index of the popped node.
pub fn step<F>(state: &mut TraversalState, graph: &SemanticGraph, mut attempt: F) -> Result<StepResult>
where
    F: FnMut(usize, NodeId) -> Result<TurnOutcome>,
{
    while let Some(cur) = state.queue.pop_front() {
        if state.visit_count[cur] >= 2 {
            continue;
        }
        state.visit_count[cur] += 1;
        let rationale = graph.node(cur)?.sentence_index;
        let outcome = attempt(rationale, cur)?;
        let unvisited: Vec<NodeId> = graph
            .neighbors(cur)?
            .iter()
            .copied()
            .filter(|&n| state.visit_count[n] == 0)
            .collect();
        state.insertions += unvisited.len();
        match outcome {
            TurnOutcome::Accepted { .. } => {
                for &n in unvisited.iter().rev() {
                    state.queue.push_front(n);
                }
            }
            TurnOutcome::Rejected { .. } => {
                for &n in &unvisited {
                    state.queue.push_back(n);
                }
            }
        }
        return Ok(StepResult::Attempted { node: cur, outcome });
    }
    Ok(StepResult::Exhausted)
}

/// A finished traversal run; `error` is set when a backend failed mid-run,
/// in which case `conversation` holds the turns generated so far.
#[derive(Debug)]
pub struct ConversationRun {
    pub conversation: Conversation,
    pub error: Option<Error>,
}

/// Drive [`step`] until the queue is exhausted or `max_turns` turns have
/// been accepted. The callback sees the conversation so far (the history
/// for the attempted turn).
pub fn generate_conversation<F>(
    graph: &SemanticGraph,
    context_id: &str,
    max_turns: usize,
    mut attempt: F,
) -> Result<ConversationRun>
where
    F: FnMut(&Conversation, usize, NodeId) -> Result<TurnOutcome>,
{
    let mut conversation = Conversation::new(context_id);
    if max_turns == 0 || graph.is_empty() {
        return Ok(ConversationRun {
            conversation,
            error: None,
        });
    }
    let mut state = init_queue(graph, &conversation)?;
    while conversation.turns.len() < max_turns {
        let step_result = {
            let history = &conversation;
            // Borrow dance: step's closure must not capture `conversation`
            // mutably, so the accepted turn is appended after the step.
            step(&mut state, graph, |rationale, node| {
                attempt(history, rationale, node)
            })
        };
        match step_result {
            Ok(StepResult::Exhausted) => break,
            Ok(StepResult::Attempted { outcome, .. }) => {
                if let TurnOutcome::Accepted {
                    question,
                    answer,
                    rationale_sentence,
                    question_type,
                } = outcome
                {
                    conversation.turns.push(Turn {
                        question,
                        answer,
                        rationale: Some(rationale_sentence),
                        question_type,
                    });
                }
            }
            Err(e) => {
                return Ok(ConversationRun {
                    conversation,
                    error: Some(e),
                });
            }
        }
    }
    Ok(ConversationRun {
        conversation,
        error: None,
    })
}
