use std::cell::Cell as Counter;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use super::chart::{lexical_overrides, numeric_token, BeamConfig, NUMBER_CATEGORIES};
use super::derivation::{Derivation, NodeFactory, Span, MAX_UNARY_CHAIN};
use crate::grammar::{Category, Direction, Grammar, RhsItem, Rule};
use crate::kb::Context;

/// Default ceiling on derivations built by [`enumerate_derivations`].
pub const DEFAULT_DERIVATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerateError {
    #[error("enumeration exceeded {cap} derivations")]
    CapExceeded { cap: usize },
}

/// Every ROOT derivation the grammar licenses, with no beam. Scores are 0;
/// results are ordered by logical form.
pub fn enumerate_derivations(
    tokens: &[String],
    ctx: &Context,
    grammar: &Grammar,
    cfg: BeamConfig,
    cap: usize,
) -> Result<Vec<Arc<Derivation>>, EnumerateError> {
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let mut e = Enumerator {
        tokens,
        grammar,
        nodes: NodeFactory { ctx, n_tokens: tokens.len(), max_floating: cfg.max_floating },
        overrides: lexical_overrides(grammar),
        max_floating: cfg.max_floating,
        cap,
        built: Counter::new(0),
        spans: HashMap::new(),
        floats: HashMap::new(),
    };
    let mut out: Vec<_> = e
        .anchored(0, tokens.len(), MAX_UNARY_CHAIN)?
        .into_iter()
        .filter(|d| d.category.is_root())
        .collect();
    out.sort_by(|a, b| a.sem_key.cmp(&b.sem_key));
    Ok(out)
}

type Derivs = Vec<Arc<Derivation>>;

struct Enumerator<'a> {
    tokens: &'a [String],
    grammar: &'a Grammar,
    nodes: NodeFactory<'a>,
    overrides: BTreeSet<String>,
    max_floating: usize,
    cap: usize,
    built: Counter<usize>,
    /// (start, end, chain budget) -> derivations of every category.
    spans: HashMap<(usize, usize, usize), Derivs>,
    /// (floating size, chain budget) -> floating derivations.
    floats: HashMap<(usize, usize), Derivs>,
}

/// One partially tiled right-hand side.
struct Partial {
    children: Derivs,
    floats: usize,
}

impl Enumerator<'_> {
    fn keep(&self, out: &mut Derivs, d: Option<Derivation>) -> Result<(), EnumerateError> {
        if let Some(d) = d {
            self.built.set(self.built.get() + 1);
            if self.built.get() > self.cap {
                return Err(EnumerateError::CapExceeded { cap: self.cap });
            }
            out.push(Arc::new(d));
        }
        Ok(())
    }

    /// Floating derivations containing exactly `size` floating rules, with
    /// unary chains no longer than `budget`.
    fn floating(&mut self, size: usize, budget: usize) -> Result<Derivs, EnumerateError> {
        if let Some(hit) = self.floats.get(&(size, budget)) {
            return Ok(hit.clone());
        }
        let mut out = Vec::new();
        let grammar = self.grammar;
        for rule in &grammar.rules {
            if rule.floating {
                if size == 1 {
                    let d = self.nodes.from_rule(rule, Span::Floating, Vec::new());
                    self.keep(&mut out, d)?;
                }
                continue;
            }
            if rule.has_terminals() {
                continue;
            }
            let cats: Vec<&Category> = rule.nonterminals().collect();
            match cats.as_slice() {
                [only] if budget > 0 => {
                    for c in self.floating(size, budget - 1)? {
                        if &c.category == *only {
                            let d = self.nodes.from_rule(rule, Span::Floating, vec![c]);
                            self.keep(&mut out, d)?;
                        }
                    }
                }
                [a, b] => {
                    for left in 1..size {
                        let lefts = self.floating(left, MAX_UNARY_CHAIN)?;
                        let rights = self.floating(size - left, MAX_UNARY_CHAIN)?;
                        for l in lefts.iter().filter(|d| &d.category == *a) {
                            for r in rights.iter().filter(|d| &d.category == *b) {
                                let d = self.nodes.from_rule(rule, Span::Floating, vec![l.clone(), r.clone()]);
                                self.keep(&mut out, d)?;
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        self.floats.insert((size, budget), out.clone());
        Ok(out)
    }

    /// Anchored derivations over `[start, end)` of any category.
    fn anchored(&mut self, start: usize, end: usize, budget: usize) -> Result<Derivs, EnumerateError> {
        if let Some(hit) = self.spans.get(&(start, end, budget)) {
            return Ok(hit.clone());
        }
        let mut out = Vec::new();
        if end == start + 1 {
            if let Some(v) = numeric_token(&self.tokens[start]) {
                if !self.overrides.contains(&self.tokens[start]) {
                    for name in NUMBER_CATEGORIES {
                        let d = self.nodes.number(v, Category::atom(name), start);
                        self.keep(&mut out, d)?;
                    }
                }
            }
        }
        let grammar = self.grammar;
        for rule in grammar.rules.iter().filter(|r| !r.floating) {
            let mut tilings = Vec::new();
            self.tile(rule, start, end, budget, 0, start, Partial { children: Vec::new(), floats: 0 }, &mut tilings)?;
            for children in tilings {
                let d = self.nodes.from_rule(rule, Span::new(start, end), children);
                self.keep(&mut out, d)?;
            }
        }
        if grammar.include_application {
            for mid in start + 1..end {
                let lefts = self.anchored(start, mid, MAX_UNARY_CHAIN)?;
                let rights = self.anchored(mid, end, MAX_UNARY_CHAIN)?;
                for l in &lefts {
                    for r in &rights {
                        for dir in [Direction::Forward, Direction::Backward] {
                            let d = self.nodes.application(l, r, dir);
                            self.keep(&mut out, d)?;
                        }
                    }
                }
            }
        }
        self.spans.insert((start, end, budget), out.clone());
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn tile(
        &mut self,
        rule: &Arc<Rule>,
        start: usize,
        end: usize,
        budget: usize,
        item: usize,
        pos: usize,
        acc: Partial,
        out: &mut Vec<Derivs>,
    ) -> Result<(), EnumerateError> {
        if item == rule.rhs.len() {
            if pos == end {
                out.push(acc.children);
            }
            return Ok(());
        }
        match &rule.rhs[item] {
            RhsItem::Terminal(t) => {
                if pos < end && self.tokens[pos] == *t {
                    self.tile(rule, start, end, budget, item + 1, pos + 1, acc, out)?;
                }
            }
            RhsItem::Wildcard => {
                if pos < end {
                    self.tile(rule, start, end, budget, item + 1, pos + 1, acc, out)?;
                }
            }
            RhsItem::NonTerminal(cat) => {
                for e in pos + 1..=end {
                    let full = pos == start && e == end;
                    if full && budget == 0 {
                        continue;
                    }
                    let sub_budget = if full { budget - 1 } else { MAX_UNARY_CHAIN };
                    for d in self.anchored(pos, e, sub_budget)? {
                        if &d.category != cat || acc.floats + d.floating_count > self.max_floating {
                            continue;
                        }
                        let mut children = acc.children.clone();
                        let floats = acc.floats + d.floating_count;
                        children.push(d);
                        let next = Partial { children, floats };
                        self.tile(rule, start, end, budget, item + 1, e, next, out)?;
                    }
                }
                for size in 1..=self.max_floating.saturating_sub(acc.floats) {
                    for d in self.floating(size, MAX_UNARY_CHAIN)? {
                        if &d.category != cat {
                            continue;
                        }
                        let mut children = acc.children.clone();
                        children.push(d);
                        let next = Partial { children, floats: acc.floats + size };
                        self.tile(rule, start, end, budget, item + 1, pos, next, out)?;
                    }
                }
            }
        }
        Ok(())
    }
}
