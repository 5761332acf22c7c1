use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::derivation::{Derivation, NodeFactory, Span, MAX_UNARY_CHAIN};
use crate::grammar::{Category, Direction, Grammar, RhsItem, Rule};
use crate::kb::Context;
use crate::logic::Value;

/// Beam search settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamConfig {
    /// Derivations kept per chart cell.
    pub beam_size: usize,
    /// Most floating-rule applications allowed in one derivation.
    pub max_floating: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig { beam_size: 200, max_floating: 2 }
    }
}

/// Assigns features and a score to a freshly built derivation whose
/// children are already scored.
pub trait DerivationScorer {
    fn score(&self, tokens: &[String], d: &mut Derivation);
}

impl<F: Fn(&Derivation) -> f64> DerivationScorer for F {
    fn score(&self, _tokens: &[String], d: &mut Derivation) {
        d.score = self(d);
    }
}

/// Categories of the built-in entries for numeric tokens.
pub(crate) const NUMBER_CATEGORIES: [&str; 2] = ["NP", "N"];

/// Tokens with an explicit single-token rule; the built-in number entry
/// steps aside for these.
pub(crate) fn lexical_overrides(g: &Grammar) -> BTreeSet<String> {
    g.rules
        .iter()
        .filter_map(|r| match r.rhs.as_slice() {
            [RhsItem::Terminal(t)] if !r.floating => Some(t.clone()),
            _ => None,
        })
        .collect()
}

pub(crate) fn numeric_token(token: &str) -> Option<f64> {
    Value::parse_token(token).as_number()
}

type Cell = BTreeMap<Category, Vec<Arc<Derivation>>>;

/// Orders by descending score, then by the canonical text of the semantics.
pub(crate) fn rank(a: &Derivation, b: &Derivation) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.sem_key.cmp(&b.sem_key))
}

fn prune(list: &mut Vec<Arc<Derivation>>, k: usize) {
    list.sort_by(|a, b| rank(a, b));
    list.truncate(k);
}

struct ChartParser<'a, S: ?Sized> {
    tokens: &'a [String],
    grammar: &'a Grammar,
    scorer: &'a S,
    cfg: BeamConfig,
    nodes: NodeFactory<'a>,
    overrides: BTreeSet<String>,
    pool: BTreeMap<(Category, usize), Vec<Arc<Derivation>>>,
    chart: HashMap<(usize, usize), Cell>,
}

/// Beam-limited CKY parse of `tokens`; returns the ROOT derivations over the
/// whole utterance, best first.
pub fn parse(
    tokens: &[String],
    ctx: &Context,
    grammar: &Grammar,
    scorer: &(impl DerivationScorer + ?Sized),
    cfg: BeamConfig,
) -> Vec<Arc<Derivation>> {
    assert!(cfg.beam_size >= 1, "beam size must be at least 1");
    if tokens.is_empty() {
        return Vec::new();
    }
    let mut p = ChartParser {
        tokens,
        grammar,
        scorer,
        cfg,
        nodes: NodeFactory { ctx, n_tokens: tokens.len(), max_floating: cfg.max_floating },
        overrides: lexical_overrides(grammar),
        pool: BTreeMap::new(),
        chart: HashMap::new(),
    };
    p.build_pool();
    let n = tokens.len();
    for len in 1..=n {
        for start in 0..=n - len {
            p.fill_cell(start, start + len);
        }
    }
    p.chart
        .remove(&(0, n))
        .and_then(|mut cell| cell.remove(&Category::root()))
        .unwrap_or_default()
}

impl<S: DerivationScorer + ?Sized> ChartParser<'_, S> {
    fn scored(&self, d: Option<Derivation>) -> Option<Arc<Derivation>> {
        let mut d = d?;
        self.scorer.score(self.tokens, &mut d);
        Some(Arc::new(d))
    }

    fn floating_of(&self, cat: &Category, size: usize) -> &[Arc<Derivation>] {
        self.pool.get(&(cat.clone(), size)).map(Vec::as_slice).unwrap_or(&[])
    }

    fn build_pool(&mut self) {
        let k = self.cfg.beam_size;
        for size in 1..=self.cfg.max_floating {
            let mut fresh: Vec<Arc<Derivation>> = Vec::new();
            for rule in &self.grammar.rules {
                if rule.floating && size == 1 {
                    fresh.extend(self.scored(self.nodes.from_rule(rule, Span::Floating, Vec::new())));
                } else if !rule.floating && !rule.has_terminals() && rule.nonterminal_count() == 2 {
                    let cats: Vec<&Category> = rule.nonterminals().collect();
                    for left in 1..size {
                        for a in self.floating_of(cats[0], left) {
                            for b in self.floating_of(cats[1], size - left) {
                                let node = self.nodes.from_rule(rule, Span::Floating, vec![a.clone(), b.clone()]);
                                fresh.extend(self.scored(node));
                            }
                        }
                    }
                }
            }
            let mut frontier = self.insert_pool(size, fresh, k);
            // span-preserving chains among floating derivations of this size
            while !frontier.is_empty() {
                let mut fresh = Vec::new();
                for rule in self.grammar.rules.iter().filter(|r| is_unary(r)) {
                    let cat = rule.nonterminals().next().expect("unary rule");
                    for d in frontier.iter().filter(|d| &d.category == cat && d.chain_depth < MAX_UNARY_CHAIN) {
                        fresh.extend(self.scored(self.nodes.from_rule(rule, Span::Floating, vec![d.clone()])));
                    }
                }
                frontier = self.insert_pool(size, fresh, k);
            }
        }
    }

    /// Adds candidates to the pool and returns those that survived pruning.
    fn insert_pool(&mut self, size: usize, fresh: Vec<Arc<Derivation>>, k: usize) -> Vec<Arc<Derivation>> {
        let mut touched = BTreeSet::new();
        for d in &fresh {
            touched.insert(d.category.clone());
            self.pool.entry((d.category.clone(), size)).or_default().push(d.clone());
        }
        for cat in touched {
            prune(self.pool.get_mut(&(cat, size)).expect("touched"), k);
        }
        survivors(&fresh, |cat| self.floating_of(cat, size))
    }

    fn fill_cell(&mut self, start: usize, end: usize) {
        let k = self.cfg.beam_size;
        let mut fresh: Vec<Arc<Derivation>> = Vec::new();

        if end - start == 1 {
            if let Some(value) = numeric_token(&self.tokens[start]) {
                if !self.overrides.contains(&self.tokens[start]) {
                    for name in NUMBER_CATEGORIES {
                        fresh.extend(self.scored(self.nodes.number(value, Category::atom(name), start)));
                    }
                }
            }
        }
        for rule in self.grammar.rules.iter().filter(|r| !r.floating) {
            let mut matcher = Matcher { parser: self, rule, start, end, frontier: None, out: &mut fresh };
            matcher.extend(0, start, Vec::new(), 0, 0, false);
        }
        if self.grammar.include_application {
            for mid in start + 1..end {
                let (Some(left), Some(right)) = (self.chart.get(&(start, mid)), self.chart.get(&(mid, end))) else {
                    continue;
                };
                for (lcat, ls) in left {
                    for (rcat, rs) in right {
                        let direction = match (lcat, rcat) {
                            (Category::Forward(_, arg), _) if **arg == *rcat => Direction::Forward,
                            (_, Category::Backward(_, arg)) if **arg == *lcat => Direction::Backward,
                            _ => continue,
                        };
                        for l in ls {
                            for r in rs {
                                fresh.extend(self.scored(self.nodes.application(l, r, direction)));
                            }
                        }
                    }
                }
            }
        }

        let mut frontier = self.insert_cell(start, end, fresh, k);
        while !frontier.is_empty() {
            let mut fresh = Vec::new();
            let by_cat: Cell = frontier.iter().fold(BTreeMap::new(), |mut m, d| {
                if d.chain_depth < MAX_UNARY_CHAIN {
                    m.entry(d.category.clone()).or_insert_with(Vec::new).push(d.clone());
                }
                m
            });
            for rule in self.grammar.rules.iter().filter(|r| !r.floating && !r.has_terminals()) {
                let mut matcher = Matcher { parser: self, rule, start, end, frontier: Some(&by_cat), out: &mut fresh };
                matcher.extend(0, start, Vec::new(), 0, 0, false);
            }
            frontier = self.insert_cell(start, end, fresh, k);
        }
    }

    fn insert_cell(&mut self, start: usize, end: usize, fresh: Vec<Arc<Derivation>>, k: usize) -> Vec<Arc<Derivation>> {
        let cell = self.chart.entry((start, end)).or_default();
        let mut touched = BTreeSet::new();
        for d in &fresh {
            touched.insert(d.category.clone());
            cell.entry(d.category.clone()).or_default().push(d.clone());
        }
        for cat in touched {
            prune(cell.get_mut(&cat).expect("touched"), k);
        }
        let cell = &self.chart[&(start, end)];
        survivors(&fresh, |cat| cell.get(cat).map(Vec::as_slice).unwrap_or(&[]))
    }
}

fn is_unary(rule: &Rule) -> bool {
    !rule.floating && !rule.has_terminals() && rule.nonterminal_count() == 1
}

fn survivors<'b>(
    fresh: &[Arc<Derivation>],
    kept: impl Fn(&Category) -> &'b [Arc<Derivation>],
) -> Vec<Arc<Derivation>> {
    fresh
        .iter()
        .filter(|d| kept(&d.category).iter().any(|s| Arc::ptr_eq(s, d)))
        .cloned()
        .collect()
}

/// Enumerates the ways one rule's right-hand side tiles a span.
struct Matcher<'p, 'a, S: ?Sized> {
    parser: &'p ChartParser<'a, S>,
    rule: &'p Arc<Rule>,
    start: usize,
    end: usize,
    /// Closure pass: the one anchored child covering the whole span comes from here.
    frontier: Option<&'p Cell>,
    out: &'p mut Vec<Arc<Derivation>>,
}

impl<S: DerivationScorer + ?Sized> Matcher<'_, '_, S> {
    fn extend(
        &mut self,
        item: usize,
        pos: usize,
        children: Vec<Arc<Derivation>>,
        anchored: usize,
        floats: usize,
        used_full: bool,
    ) {
        let p = self.parser;
        if item == self.rule.rhs.len() {
            if pos == self.end && anchored >= 1 && used_full == self.frontier.is_some() {
                let node = p.nodes.from_rule(self.rule, Span::new(self.start, self.end), children);
                self.out.extend(p.scored(node));
            }
            return;
        }
        match &self.rule.rhs[item] {
            RhsItem::Terminal(t) => {
                if pos < self.end && p.tokens[pos] == *t {
                    self.extend(item + 1, pos + 1, children, anchored + 1, floats, used_full);
                }
            }
            RhsItem::Wildcard => {
                if pos < self.end {
                    self.extend(item + 1, pos + 1, children, anchored + 1, floats, used_full);
                }
            }
            RhsItem::NonTerminal(cat) => {
                for e in pos + 1..=self.end {
                    let full = pos == self.start && e == self.end;
                    let source = if full {
                        match self.frontier {
                            Some(f) => f.get(cat),
                            None => None,
                        }
                    } else {
                        p.chart.get(&(pos, e)).and_then(|c| c.get(cat))
                    };
                    for d in source.into_iter().flatten() {
                        let mut next = children.clone();
                        next.push(d.clone());
                        self.extend(item + 1, e, next, anchored + 1, floats + d.floating_count, used_full || full);
                    }
                }
                for size in 1..=p.cfg.max_floating.saturating_sub(floats) {
                    for d in p.floating_of(cat, size) {
                        let mut next = children.clone();
                        next.push(d.clone());
                        self.extend(item + 1, pos, next, anchored, floats + size, used_full);
                    }
                }
            }
        }
    }
}
