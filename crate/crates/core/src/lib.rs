//! Semantic parsing into lambda DCS with a beam chart parser and a log-linear
//! model trained from answers alone.

pub mod grammar;
pub mod kb;
pub mod learner;
pub mod logic;
pub mod model;
pub mod parser;
