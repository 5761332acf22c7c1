//! Grammar rules, syntactic categories and semantic templates.

mod category;
mod rule;
mod template;

pub use category::{Category, ROOT};
pub use rule::{
    apply_application, load_grammar, validate_grammar, ApplicationError, Direction, Grammar, GrammarError, RhsItem,
    Rule, MAX_NONTERMINALS,
};
pub use template::{fill_binder, instantiate_template, SemValue, Template, TemplateError};

/// Grammar for the running example "what is the largest prime less than 10 ?".
pub const RUNNING_GRAMMAR: &str = include_str!("../../grammars/running.gr");
/// Join/intersect grammar over "prime less than 10".
pub const CRUDE_GRAMMAR: &str = include_str!("../../grammars/crude.gr");
/// CCG lexicon with forward and backward application.
pub const CCG_GRAMMAR: &str = include_str!("../../grammars/ccg.gr");
/// Floating predicates with wildcard word absorption.
pub const FLOATING_GRAMMAR: &str = include_str!("../../grammars/floating.gr");
/// Grammar for the synthetic arithmetic domain.
pub const ARITH_GRAMMAR: &str = include_str!("../../grammars/arith.gr");
