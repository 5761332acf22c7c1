use std::collections::BTreeSet;

use super::FeatureVector;
use crate::kb::Context;
use crate::logic::{execute, Denotation};
use crate::parser::{Derivation, Span};

/// Shortest common prefix that counts as a word/predicate match.
pub const MATCH_PREFIX: usize = 4;

/// Whether a word names a predicate: equal, or sharing a prefix of at least
/// [`MATCH_PREFIX`] characters.
pub fn word_matches(word: &str, pred: &str) -> bool {
    let word = word.to_lowercase();
    if word == pred {
        return true;
    }
    word.chars().zip(pred.chars()).take_while(|(a, b)| a == b).count() >= MATCH_PREFIX
}

fn size_bucket(n: usize) -> &'static str {
    match n {
        0 => "denotSize:0",
        1 => "denotSize:1",
        2..=10 => "denotSize:2-10",
        _ => "denotSize:11+",
    }
}

/// Features contributed by the top node of `d` alone.
pub fn local_features(tokens: &[String], ctx: &Context, d: &Derivation) -> FeatureVector {
    let mut phi = FeatureVector::new();
    if let Some(rule) = d.rule() {
        phi.add(&format!("rule:{}", rule.id), 1.0);
        let words: BTreeSet<&str> = match d.span {
            Span::Anchored { start, end } => tokens[start..end].iter().map(String::as_str).collect(),
            Span::Floating => tokens.iter().map(String::as_str).collect(),
        };
        for pred in rule.predicates() {
            for w in &words {
                phi.add(&format!("cooc:{w}~{pred}"), 1.0);
                if word_matches(w, pred) {
                    phi.add("match", 1.0);
                }
            }
        }
    }
    if d.category.is_root() {
        match d.logical_form().map(|z| execute(z, ctx)) {
            Some(Ok(y)) if y.is_empty() => {
                phi.add("exec:empty", 1.0);
                phi.add(size_bucket(0), 1.0);
            }
            Some(Ok(y)) => {
                phi.add("exec:ok", 1.0);
                if let Denotation::FiniteSet(s) = &y {
                    phi.add(size_bucket(s.len()), 1.0);
                }
            }
            _ => phi.add("exec:error", 1.0),
        }
    }
    phi
}

/// Full feature vector of a derivation, summed over all its nodes.
pub fn featurize(tokens: &[String], ctx: &Context, d: &Derivation) -> FeatureVector {
    let mut phi = FeatureVector::new();
    for node in d.walk() {
        phi.add_scaled(&local_features(tokens, ctx, node), 1.0);
    }
    phi
}
