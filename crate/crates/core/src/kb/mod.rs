//! Knowledge-base contexts, datasets and the synthetic arithmetic domain.

mod context;
mod dataset;
mod synth;

pub use context::{load_kb, save_kb, Builtin, Context, ContextBuilder, KbError};
pub use dataset::{dataset_to_jsonl, load_dataset, parse_dataset, tokenize, Dataset, DatasetError, Example};
pub use synth::{arith_context, arith_questions, make_arith_domain, ArithQuestion, ARITH_CONTEXT};
