use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Context;
use crate::logic::{Denotation, Value};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown context `{id}`")]
    UnknownContext { line: usize, id: String },
    #[error("line {line}: empty utterance")]
    EmptyUtterance { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One weakly supervised training triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub utterance: Vec<String>,
    pub context_id: String,
    pub target: Denotation,
}

/// Examples plus the contexts they refer to.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub contexts: BTreeMap<String, Arc<Context>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn context_of(&self, ex: &Example) -> &Context {
        &self.contexts[&ex.context_id]
    }
}

const PUNCTUATION: &[char] = &['?', '.', '!', ',', ';', ':'];

/// Lowercases, splits on whitespace, and detaches trailing punctuation into
/// separate tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.to_lowercase().split_whitespace() {
        let body = word.trim_end_matches(PUNCTUATION);
        if !body.is_empty() {
            out.push(body.to_string());
        }
        // one token per trailing mark, in order
        for c in word[body.len()..].chars() {
            out.push(c.to_string());
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    utterance: String,
    context: String,
    target: TargetRecord,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TargetRecord {
    Set { set: Vec<SetItem> },
    Count { count: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum SetItem {
    Number(f64),
    Entity(String),
}

/// Parses the JSON-lines dataset format against already loaded contexts.
pub fn parse_dataset(src: &str, contexts: &BTreeMap<String, Arc<Context>>) -> Result<Dataset, DatasetError> {
    let mut examples = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(raw)
            .map_err(|e| DatasetError::Malformed { line, message: e.to_string() })?;
        if !contexts.contains_key(&rec.context) {
            return Err(DatasetError::UnknownContext { line, id: rec.context });
        }
        let utterance = tokenize(&rec.utterance);
        if utterance.is_empty() {
            return Err(DatasetError::EmptyUtterance { line });
        }
        let target = match rec.target {
            TargetRecord::Count { count } => Denotation::singleton(Value::number(count)),
            TargetRecord::Set { set } => Denotation::FiniteSet(
                set.into_iter()
                    .map(|item| match item {
                        SetItem::Number(n) => Value::number(n),
                        SetItem::Entity(e) => Value::Entity(e),
                    })
                    .collect(),
            ),
        };
        examples.push(Example { utterance, context_id: rec.context, target });
    }
    Ok(Dataset { examples, contexts: contexts.clone() })
}

pub fn load_dataset(
    path: impl AsRef<Path>,
    contexts: &BTreeMap<String, Arc<Context>>,
) -> Result<Dataset, DatasetError> {
    parse_dataset(&std::fs::read_to_string(path)?, contexts)
}

/// Renders examples as JSON lines. Interval targets are not representable and are skipped.
pub fn dataset_to_jsonl(examples: &[Example]) -> String {
    let mut out = String::new();
    for ex in examples {
        let Denotation::FiniteSet(values) = &ex.target else { continue };
        let set = values
            .iter()
            .map(|v| match v {
                Value::Number(n) => SetItem::Number(*n),
                Value::Entity(e) => SetItem::Entity(e.clone()),
            })
            .collect();
        let rec = Record {
            utterance: ex.utterance.join(" "),
            context: ex.context_id.clone(),
            target: TargetRecord::Set { set },
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}
