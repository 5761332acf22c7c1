//! Lambda DCS logical forms, their type system, and the executor.

mod denotation;
mod execute;
mod form;
pub(crate) mod text;
mod types;

pub use denotation::{denotation_equals, Denotation, Value, NUMERIC_TOLERANCE};
pub use execute::{execute, intersect, ExecError};
pub use form::{serialize_lf, LogicalForm};
pub(crate) use form::format_number;
pub use text::{parse_lf, ParseError};
pub use types::{typecheck, SemType, TermPath, TypeError, ANY_CLASS};
