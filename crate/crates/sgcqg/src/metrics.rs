//! Evaluation suite for generated conversations: Distinct-N, Context
//! Coverage (CC), Conv-Distinct (CC * Distinct), Jumping Score, EM/F1,
//! greedy-matching entailment with pluggable embedders, and
//! longest-common-substring rationale attribution for end-to-end outputs.
//!
//! All computations are pure. Fractions stay unrounded internally; percent
//! rounding happens only at report serialization.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::context::{tokenize, AnnotatedContext};
use crate::error::{Error, Result};
use crate::traversal::Conversation;

/// (distinct n-grams) / (total n-grams) over the concatenated tokenized
/// utterances; 0 when no n-grams exist.
pub fn distinct_n(utterances: &[String], n: usize) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    let tokens: Vec<String> = utterances.iter().flat_map(|u| tokenize(u)).collect();
    if tokens.len() < n {
        return 0.0;
    }
    let total = tokens.len() - n + 1;
    let distinct: HashSet<&[String]> = tokens.windows(n).collect();
    distinct.len() as f64 / total as f64
}

/// Fraction of context sentences serving as rationales. Every turn must
/// carry a rationale index (attribute first for end-to-end outputs).
pub fn context_coverage(conv: &Conversation, ctx: &AnnotatedContext) -> Result<f64> {
    let mut used = HashSet::new();
    for (i, t) in conv.turns.iter().enumerate() {
        match t.rationale {
            Some(r) => {
                used.insert(r);
            }
            None => return Err(Error::MissingRationale { turn: i + 1 }),
        }
    }
    if ctx.sentence_count() == 0 {
        return Ok(0.0);
    }
    Ok(used.len() as f64 / ctx.sentence_count() as f64)
}

/// The utterance list a conversation contributes to Distinct: questions
/// and answers interleaved, or questions only.
pub fn conversation_utterances(conv: &Conversation, questions_only: bool) -> Vec<String> {
    conv.turns
        .iter()
        .flat_map(|t| {
            if questions_only {
                vec![t.question.clone()]
            } else {
                vec![t.question.clone(), t.answer.clone()]
            }
        })
        .collect()
}

/// Conv-Distinct = CC * Distinct, with unrounded CC.
pub fn conv_distinct(conv: &Conversation, ctx: &AnnotatedContext, n: usize, questions_only: bool) -> Result<f64> {
    let cc = context_coverage(conv, ctx)?;
    Ok(cc * distinct_n(&conversation_utterances(conv, questions_only), n))
}

/// Fraction of turn transitions whose rationale index decreases
/// (tracebacks); 0 for single-element lists.
pub fn jumping_score(rationale_indices: &[usize]) -> f64 {
    if rationale_indices.len() < 2 {
        return 0.0;
    }
    let jumps = rationale_indices
        .windows(2)
        .filter(|w| w[1] < w[0])
        .count();
    jumps as f64 / (rationale_indices.len() - 1) as f64
}

/// Length of the longest common substring of two strings (character level,
/// case-insensitive).
pub fn longest_common_substring(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut best = 0;
    for i in 1..=a.len() {
        let mut cur = vec![0usize; b.len() + 1];
        for j in 1..=b.len() {
            if a[i - 1] == b[j - 1] {
                cur[j] = prev[j - 1] + 1;
                best = best.max(cur[j]);
            }
        }
        prev = cur;
    }
    best
}

/// Fill in missing rationale indices: each turn gets the sentence with the
/// longest common substring against "question answer"; ties go to the
/// smallest sentence index. Turns that already carry a rationale keep it.
pub fn attribute_rationales_lcs(conv: &Conversation, ctx: &AnnotatedContext) -> Conversation {
    let mut out = conv.clone();
    for turn in &mut out.turns {
        if turn.rationale.is_some() {
            continue;
        }
        let target = format!("{} {}", turn.question, turn.answer);
        let mut best = (0usize, 1usize);
        for s in &ctx.sentences {
            let len = longest_common_substring(ctx.sentence_text(s.index), &target);
            if len > best.0 {
                best = (len, s.index);
            }
        }
        turn.rationale = Some(best.1);
    }
    out
}

// --- EM / F1 ----------------------------------------------------------------

/// SQuAD/CoQA answer normalization: lowercase, strip punctuation, drop the
/// articles a/an/the, split on whitespace.
pub fn normalize_answer(s: &str) -> Vec<String> {
    let lowered: String = s
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    lowered
        .split_whitespace()
        .filter(|t| !matches!(*t, "a" | "an" | "the"))
        .map(str::to_string)
        .collect()
}

/// Exact match after normalization.
pub fn exact_match(pred: &str, gold: &str) -> u8 {
    u8::from(normalize_answer(pred) == normalize_answer(gold))
}

/// Token-multiset F1 after normalization. Both sides empty scores 1; one
/// side empty scores 0.
pub fn f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&String, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

// --- entailment -------------------------------------------------------------

/// Token embedder; must be deterministic with a fixed dimension.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, token: &str) -> Vec<f32>;
}

/// Vocabulary-identity embedder: cosine similarity is 1 for equal tokens
/// and 0 otherwise, reducing the greedy matching to token-overlap F1.
#[derive(Debug)]
pub struct OneHotEmbedder {
    vocab: HashMap<String, usize>,
}

impl OneHotEmbedder {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut vocab = HashMap::new();
        for t in tokens {
            let next = vocab.len();
            vocab.entry(t.to_string()).or_insert(next);
        }
        OneHotEmbedder { vocab }
    }
}

impl Embedder for OneHotEmbedder {
    fn name(&self) -> &str {
        "onehot"
    }

    fn dimension(&self) -> usize {
        self.vocab.len() + 1
    }

    fn embed(&self, token: &str) -> Vec<f32> {
        let mut v = vec![0.0; self.dimension()];
        // Unknown tokens share the final slot so identical unknowns still
        // match each other.
        let idx = self.vocab.get(token).copied().unwrap_or(self.vocab.len());
        v[idx] = 1.0;
        v
    }
}

/// Embedder backed by a token -> vector table loaded from a whitespace
/// separated text file (`token v1 v2 ...` per line). Out-of-vocabulary
/// tokens embed to the zero vector.
#[derive(Debug)]
pub struct VectorFileEmbedder {
    table: HashMap<String, Vec<f32>>,
    dimension: usize,
}

impl VectorFileEmbedder {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let mut table = HashMap::new();
        let mut dimension = 0usize;
        for (lineno, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap().to_string();
            let vec: std::result::Result<Vec<f32>, _> =
                parts.map(str::parse::<f32>).collect();
            let vec = vec.map_err(|e| {
                Error::EmbedderUnavailable(format!("line {}: {e}", lineno + 1))
            })?;
            if dimension == 0 {
                dimension = vec.len();
            } else if vec.len() != dimension {
                return Err(Error::EmbedderUnavailable(format!(
                    "line {}: expected {} dims, got {}",
                    lineno + 1,
                    dimension,
                    vec.len()
                )));
            }
            table.insert(token, vec);
        }
        if dimension == 0 {
            return Err(Error::EmbedderUnavailable("empty vector file".into()));
        }
        Ok(VectorFileEmbedder { table, dimension })
    }
}

impl Embedder for VectorFileEmbedder {
    fn name(&self) -> &str {
        "vectors"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, token: &str) -> Vec<f32> {
        self.table
            .get(token)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dimension])
    }
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// History window for entailment scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntailmentWindow {
    Turns(usize),
    All,
}

/// Greedy-matching similarity F1 between a response (premise) and the
/// concatenation of the last `window` history utterances (hypothesis):
/// each premise token matches its max-cosine hypothesis token and vice
/// versa. Returns None when the window is empty (turn 1 has no history).
pub fn entailment_score(
    response: &str,
    history_utterances: &[String],
    window: EntailmentWindow,
    embedder: &dyn Embedder,
) -> Option<f64> {
    let start = match window {
        EntailmentWindow::All => 0,
        EntailmentWindow::Turns(k) => history_utterances.len().saturating_sub(k),
    };
    let hypothesis = history_utterances[start..].join(" ");
    let premise_tokens = tokenize(response);
    let hypothesis_tokens = tokenize(&hypothesis);
    if hypothesis_tokens.is_empty() || premise_tokens.is_empty() {
        return None;
    }
    let embed_all = |tokens: &[String]| -> Vec<Vec<f32>> {
        tokens.iter().map(|t| embedder.embed(t)).collect()
    };
    let p_vecs = embed_all(&premise_tokens);
    let h_vecs = embed_all(&hypothesis_tokens);
    let greedy = |from: &[Vec<f32>], to: &[Vec<f32>]| -> f64 {
        from.iter()
            .map(|v| to.iter().map(|w| cosine(v, w)).fold(0.0, f64::max))
            .sum::<f64>()
            / from.len() as f64
    };
    let precision = greedy(&p_vecs, &h_vecs);
    let recall = greedy(&h_vecs, &p_vecs);
    if precision + recall == 0.0 {
        return Some(0.0);
    }
    Some(2.0 * precision * recall / (precision + recall))
}

/// Conversation-level entailment: mean over turns with a non-empty window.
/// Each turn's response and history utterances serialize as "q a". None
/// when no turn has history.
pub fn conversation_entailment(
    conv: &Conversation,
    window: EntailmentWindow,
    embedder: &dyn Embedder,
) -> Option<f64> {
    let utterances: Vec<String> = conv
        .turns
        .iter()
        .map(|t| format!("{} {}", t.question, t.answer))
        .collect();
    let mut scores = Vec::new();
    for i in 1..utterances.len() {
        if let Some(s) = entailment_score(&utterances[i], &utterances[..i], window, embedder) {
            scores.push(s);
        }
    }
    if scores.is_empty() {
        None
    } else {
        Some(scores.iter().sum::<f64>() / scores.len() as f64)
    }
}

// --- corpus evaluation ------------------------------------------------------

/// Evaluation knobs; `distinct_ns` defaults to {1, 2}.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub distinct_ns: Vec<usize>,
    pub questions_only: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            distinct_ns: vec![1, 2],
            questions_only: false,
        }
    }
}

/// Raw (unrounded, fractional) metric values for one conversation or for
/// the corpus mean.
#[derive(Debug, Clone, Serialize)]
pub struct MetricValues {
    pub distinct: BTreeMap<usize, f64>,
    pub conv_distinct: BTreeMap<usize, f64>,
    pub cc: f64,
    pub js: f64,
    /// Keyed "1", "2", "all"; absent values mean no turn had history.
    pub entailment: BTreeMap<String, Option<f64>>,
    pub em: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConversationReport {
    pub id: String,
    #[serde(flatten)]
    pub values: MetricValues,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub corpus: MetricValues,
    pub per_conversation: Vec<ConversationReport>,
}

/// Optional gold answers for EM/F1, parallel to a conversation's turns.
pub type GoldAnswers = HashMap<String, Vec<String>>;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_opt(values: Vec<Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.into_iter().flatten().collect();
    if present.is_empty() {
        None
    } else {
        Some(mean(&present))
    }
}

/// Evaluate a corpus of conversations. Corpus values are unweighted means
/// over conversations; EM/F1 is computed only for conversations with gold
/// answers supplied. Errors on an empty corpus or an unresolvable context
/// id.
pub fn evaluate(
    conversations: &[Conversation],
    contexts: &HashMap<String, AnnotatedContext>,
    golds: &GoldAnswers,
    config: &EvalConfig,
) -> Result<MetricReport> {
    if conversations.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    // One shared vocabulary keeps one-hot embeddings comparable across the
    // corpus.
    let mut vocab_tokens: Vec<String> = Vec::new();
    for conv in conversations {
        for t in &conv.turns {
            vocab_tokens.extend(tokenize(&format!("{} {}", t.question, t.answer)));
        }
    }
    let embedder = OneHotEmbedder::from_tokens(vocab_tokens.iter().map(String::as_str));

    let windows: [(&str, EntailmentWindow); 3] = [
        ("1", EntailmentWindow::Turns(1)),
        ("2", EntailmentWindow::Turns(2)),
        ("all", EntailmentWindow::All),
    ];

    let mut per_conversation = Vec::with_capacity(conversations.len());
    for conv in conversations {
        let ctx = contexts
            .get(&conv.context_id)
            .ok_or_else(|| Error::UnknownContext(conv.context_id.clone()))?;
        let utterances = conversation_utterances(conv, config.questions_only);
        let cc = context_coverage(conv, ctx)?;
        let mut distinct = BTreeMap::new();
        let mut conv_dist = BTreeMap::new();
        for &n in &config.distinct_ns {
            let d = distinct_n(&utterances, n);
            distinct.insert(n, d);
            conv_dist.insert(n, cc * d);
        }
        let rationales: Vec<usize> = conv.turns.iter().filter_map(|t| t.rationale).collect();
        let js = jumping_score(&rationales);
        let mut entailment = BTreeMap::new();
        for (key, w) in windows {
            entailment.insert(key.to_string(), conversation_entailment(conv, w, &embedder));
        }
        let (em, f1_score) = match golds.get(&conv.context_id) {
            Some(gold) if gold.len() == conv.turns.len() && !gold.is_empty() => {
                let ems: Vec<f64> = conv
                    .turns
                    .iter()
                    .zip(gold)
                    .map(|(t, g)| f64::from(exact_match(&t.answer, g)))
                    .collect();
                let f1s: Vec<f64> = conv
                    .turns
                    .iter()
                    .zip(gold)
                    .map(|(t, g)| f1(&t.answer, g))
                    .collect();
                (Some(mean(&ems)), Some(mean(&f1s)))
            }
            _ => (None, None),
        };
        per_conversation.push(ConversationReport {
            id: conv.context_id.clone(),
            values: MetricValues {
                distinct,
                conv_distinct: conv_dist,
                cc,
                js,
                entailment,
                em,
                f1: f1_score,
            },
        });
    }

    let agg = |get: &dyn Fn(&MetricValues) -> f64| -> f64 {
        mean(&per_conversation.iter().map(|c| get(&c.values)).collect::<Vec<_>>())
    };
    let mut corpus_distinct = BTreeMap::new();
    let mut corpus_conv_distinct = BTreeMap::new();
    for &n in &config.distinct_ns {
        corpus_distinct.insert(n, agg(&|v| v.distinct[&n]));
        corpus_conv_distinct.insert(n, agg(&|v| v.conv_distinct[&n]));
    }
    let mut corpus_entailment = BTreeMap::new();
    for (key, _) in windows {
        corpus_entailment.insert(
            key.to_string(),
            mean_opt(
                per_conversation
                    .iter()
                    .map(|c| c.values.entailment[key])
                    .collect(),
            ),
        );
    }
    let corpus = MetricValues {
        distinct: corpus_distinct,
        conv_distinct: corpus_conv_distinct,
        cc: agg(&|v| v.cc),
        js: agg(&|v| v.js),
        entailment: corpus_entailment,
        em: mean_opt(per_conversation.iter().map(|c| c.values.em).collect()),
        f1: mean_opt(per_conversation.iter().map(|c| c.values.f1).collect()),
    };

    Ok(MetricReport {
        corpus,
        per_conversation,
    })
}

/// Percent with 2 decimals, matching table formatting.
pub fn to_percent(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}

fn values_to_json(values: &MetricValues) -> serde_json::Value {
    let map_pct = |m: &BTreeMap<usize, f64>| -> serde_json::Value {
        serde_json::Value::Object(
            m.iter()
                .map(|(k, v)| (k.to_string(), serde_json::json!(to_percent(*v))))
                .collect(),
        )
    };
    let ent: serde_json::Map<String, serde_json::Value> = values
        .entailment
        .iter()
        .map(|(k, v)| {
            (
                k.clone(),
                v.map_or(serde_json::Value::Null, |x| serde_json::json!(to_percent(x))),
            )
        })
        .collect();
    serde_json::json!({
        "distinct": map_pct(&values.distinct),
        "conv_distinct": map_pct(&values.conv_distinct),
        "cc": to_percent(values.cc),
        "js": to_percent(values.js),
        "entailment": ent,
        "em": values.em.map(to_percent),
        "f1": values.f1.map(to_percent),
    })
}

impl MetricReport {
    /// External report JSON with percent-formatted, 2-decimal fields.
    pub fn to_report_json(&self) -> serde_json::Value {
        let per: Vec<serde_json::Value> = self
            .per_conversation
            .iter()
            .map(|c| {
                let mut v = values_to_json(&c.values);
                v.as_object_mut()
                    .unwrap()
                    .insert("id".into(), serde_json::json!(c.id));
                v
            })
            .collect();
        serde_json::json!({
            "corpus": values_to_json(&self.corpus),
            "per_conversation": per,
        })
    }
}
