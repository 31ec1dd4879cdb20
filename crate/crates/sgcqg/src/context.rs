//! Annotated-context ingestion and shared text normalization.
//!
//! A context arrives as a JSON file carrying the passage text, sentence
//! boundaries, coreference clusters, and named entities. All offsets in the
//! file are 0-based character offsets into `text`, end-exclusive. Parsing
//! validates the annotation invariants and derives each span's sentence
//! index; nothing is computed from raw text beyond that.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sentence boundary; `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sentence {
    pub index: usize,
    pub char_start: usize,
    pub char_end: usize,
}

/// A coreference mention, anchored to the sentence that contains it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MentionSpan {
    pub char_start: usize,
    pub char_end: usize,
    pub sentence_index: usize,
}

/// A named-entity span, anchored to the sentence that contains it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntitySpan {
    pub char_start: usize,
    pub char_end: usize,
    pub sentence_index: usize,
    pub label: String,
}

/// Validated in-memory form of one annotated passage. Immutable after
/// construction; safe to share across concurrent conversation runs.
#[derive(Debug, Clone)]
pub struct AnnotatedContext {
    pub id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
    pub clusters: Vec<Vec<MentionSpan>>,
    pub entities: Vec<EntitySpan>,
    /// Char offset -> byte offset, length `char_count + 1`.
    char_to_byte: Vec<usize>,
}

// --- file schema ------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContextFile {
    pub id: String,
    pub text: String,
    pub sentences: Vec<FileSpan>,
    #[serde(default)]
    pub clusters: Vec<Vec<FileSpan>>,
    #[serde(default)]
    pub entities: Vec<FileEntity>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct FileSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FileEntity {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl AnnotatedContext {
    pub fn parse_file(file: ContextFile) -> Result<Self> {
        let char_to_byte: Vec<usize> = file
            .text
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(file.text.len()))
            .collect();
        let char_len = char_to_byte.len() - 1;

        let mut sentences = Vec::with_capacity(file.sentences.len());
        let mut prev_end = 0usize;
        for (i, s) in file.sentences.iter().enumerate() {
            if s.start >= s.end {
                return Err(Error::OffsetError {
                    start: s.start,
                    end: s.end,
                    problem: "empty or inverted sentence span".into(),
                });
            }
            if s.end > char_len {
                return Err(Error::OffsetError {
                    start: s.start,
                    end: s.end,
                    problem: format!("sentence span exceeds text length {char_len}"),
                });
            }
            if s.start < prev_end {
                return Err(Error::OffsetError {
                    start: s.start,
                    end: s.end,
                    problem: "sentence spans overlap or are out of order".into(),
                });
            }
            prev_end = s.end;
            sentences.push(Sentence {
                index: i + 1,
                char_start: s.start,
                char_end: s.end,
            });
        }

        let locate = |start: usize, end: usize| -> Result<usize> {
            if start >= end {
                return Err(Error::OffsetError {
                    start,
                    end,
                    problem: "empty or inverted span".into(),
                });
            }
            for s in &sentences {
                if start >= s.char_start && end <= s.char_end {
                    return Ok(s.index);
                }
            }
            Err(Error::OffsetError {
                start,
                end,
                problem: "span is out of bounds or straddles a sentence boundary".into(),
            })
        };

        let mut clusters = Vec::with_capacity(file.clusters.len());
        for (ci, cluster) in file.clusters.iter().enumerate() {
            if cluster.len() < 2 {
                return Err(Error::MalformedDocument(format!(
                    "cluster {ci} has {} mention(s); clusters need at least 2",
                    cluster.len()
                )));
            }
            let mut mentions = Vec::with_capacity(cluster.len());
            for m in cluster {
                mentions.push(MentionSpan {
                    char_start: m.start,
                    char_end: m.end,
                    sentence_index: locate(m.start, m.end)?,
                });
            }
            clusters.push(mentions);
        }

        let mut entities = Vec::with_capacity(file.entities.len());
        for e in &file.entities {
            entities.push(EntitySpan {
                char_start: e.start,
                char_end: e.end,
                sentence_index: locate(e.start, e.end)?,
                label: e.label.clone(),
            });
        }

        Ok(AnnotatedContext {
            id: file.id,
            text: file.text,
            sentences,
            clusters,
            entities,
            char_to_byte,
        })
    }

    pub fn parse_str(json: &str) -> Result<Self> {
        let file: ContextFile = serde_json::from_str(json)
            .map_err(|e| Error::MalformedDocument(e.to_string()))?;
        Self::parse_file(file)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        Self::parse_str(&raw)
    }

    /// Serialize back to the on-disk schema (sentence indices are derived,
    /// not stored).
    pub fn to_file(&self) -> ContextFile {
        ContextFile {
            id: self.id.clone(),
            text: self.text.clone(),
            sentences: self
                .sentences
                .iter()
                .map(|s| FileSpan {
                    start: s.char_start,
                    end: s.char_end,
                })
                .collect(),
            clusters: self
                .clusters
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|m| FileSpan {
                            start: m.char_start,
                            end: m.char_end,
                        })
                        .collect()
                })
                .collect(),
            entities: self
                .entities
                .iter()
                .map(|e| FileEntity {
                    start: e.char_start,
                    end: e.char_end,
                    label: e.label.clone(),
                })
                .collect(),
        }
    }

    /// Number of sentences in the passage.
    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    /// Substring at a character span.
    pub fn span_text(&self, char_start: usize, char_end: usize) -> &str {
        &self.text[self.char_to_byte[char_start]..self.char_to_byte[char_end]]
    }

    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        self.sentences.get(index.checked_sub(1)?)
    }

    pub fn sentence_text(&self, index: usize) -> &str {
        let s = &self.sentences[index - 1];
        self.span_text(s.char_start, s.char_end)
    }

    /// True when some named entity occupies exactly this span.
    pub fn entity_at(&self, char_start: usize, char_end: usize) -> Option<&EntitySpan> {
        self.entities
            .iter()
            .find(|e| e.char_start == char_start && e.char_end == char_end)
    }
}

// --- tokenization -----------------------------------------------------------

/// Normalized token sequence shared by the diversity metrics, overlap
/// checks, and stopword filtering.
pub type TokenSeq = Vec<String>;

/// Lowercase, whitespace-split, with leading/trailing non-alphanumeric
/// characters stripped from each piece; empty pieces dropped. Idempotent on
/// its own joined output.
pub fn tokenize(text: &str) -> TokenSeq {
    tokens_with_spans(text).into_iter().map(|t| t.text).collect()
}

/// A normalized token with its character span in the input string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

/// Offset-preserving variant of [`tokenize`]; spans cover the token after
/// punctuation trimming, in character offsets relative to `text`.
pub fn tokens_with_spans(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let piece_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let mut start = piece_start;
        let mut end = i;
        while start < end && !chars[start].is_alphanumeric() {
            start += 1;
        }
        while end > start && !chars[end - 1].is_alphanumeric() {
            end -= 1;
        }
        if start < end {
            let text: String = chars[start..end].iter().collect::<String>().to_lowercase();
            tokens.push(Token {
                text,
                char_start: start,
                char_end: end,
            });
        }
    }
    tokens
}

/// Normalized form used for span-equality comparisons: tokens joined by a
/// single space.
pub fn normalize_join(text: &str) -> String {
    tokenize(text).join(" ")
}

// --- stopwords --------------------------------------------------------------

/// 179-entry English stopword list, bundled as a versioned data file.
static STOPWORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();

fn stopwords() -> &'static HashSet<&'static str> {
    STOPWORDS.get_or_init(|| {
        include_str!("data/stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}
