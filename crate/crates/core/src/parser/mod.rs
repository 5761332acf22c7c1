//! Chart parsing into candidate derivations, plus an exhaustive enumerator.

mod chart;
mod derivation;
mod enumerate;

pub use chart::{parse, BeamConfig, DerivationScorer};
pub use derivation::{check_span_partition, Derivation, Origin, Span, MAX_UNARY_CHAIN};
pub use enumerate::{enumerate_derivations, EnumerateError, DEFAULT_DERIVATION_CAP};
