use std::fmt::Write as _;
use std::sync::Arc;

use crate::grammar::{apply_application, instantiate_template, Category, Direction, Rule, SemValue};
use crate::kb::Context;
use crate::logic::{typecheck, LogicalForm, TypeError};
use crate::model::FeatureVector;

/// Longest run of span-preserving rule applications allowed in one derivation.
pub const MAX_UNARY_CHAIN: usize = 4;

/// Where a derivation sits in the utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Span {
    /// Tokens `start..end`.
    Anchored { start: usize, end: usize },
    /// Not tied to any words.
    Floating,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span::Anchored { start, end }
    }

    pub fn range(&self) -> Option<(usize, usize)> {
        match self {
            Span::Anchored { start, end } => Some((*start, *end)),
            Span::Floating => None,
        }
    }
}

/// What built a derivation node.
#[derive(Debug, Clone)]
pub enum Origin {
    Rule(Arc<Rule>),
    /// Built-in lexical entry for a numeric token.
    Number,
    /// Built-in CCG combinator.
    Application(Direction),
}

/// A tree of rule applications carrying a semantic value.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub origin: Origin,
    pub category: Category,
    pub span: Span,
    pub children: Vec<Arc<Derivation>>,
    pub sem: SemValue,
    pub floating_count: usize,
    pub features: FeatureVector,
    pub score: f64,
    pub(crate) chain_depth: usize,
    pub(crate) sem_key: String,
}

impl Derivation {
    /// Grammar rule id, or 0 for built-ins.
    pub fn rule_id(&self) -> usize {
        match &self.origin {
            Origin::Rule(r) => r.id,
            _ => 0,
        }
    }

    pub fn rule(&self) -> Option<&Arc<Rule>> {
        match &self.origin {
            Origin::Rule(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_floating_rule(&self) -> bool {
        self.rule().is_some_and(|r| r.floating)
    }

    pub fn logical_form(&self) -> Option<&LogicalForm> {
        self.sem.logical_form()
    }

    /// Canonical text of the semantic value, used for deterministic tie-breaking.
    pub fn sem_key(&self) -> &str {
        &self.sem_key
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&Derivation> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    /// Indented rendering, one node per line, children below their parent.
    pub fn render(&self, tokens: &[String]) -> String {
        let mut out = String::new();
        self.render_into(tokens, 0, &mut out);
        out
    }

    fn render_into(&self, tokens: &[String], depth: usize, out: &mut String) {
        let how = match &self.origin {
            Origin::Rule(r) if r.floating => format!("float R{}", r.id),
            Origin::Rule(r) => format!("R{}", r.id),
            Origin::Number => "num".into(),
            Origin::Application(Direction::Forward) => ">".into(),
            Origin::Application(Direction::Backward) => "<".into(),
        };
        let words = match self.span {
            Span::Anchored { start, end } => format!("[{start},{end}) \"{}\"", tokens[start..end].join(" ")),
            Span::Floating => "floating".into(),
        };
        writeln!(out, "{}{}[{}]  ({how}; {words})", "  ".repeat(depth), self.category, self.sem).unwrap();
        for c in &self.children {
            c.render_into(tokens, depth + 1, out);
        }
    }
}

/// Shared node construction: semantics, type pruning and bookkeeping.
pub(crate) struct NodeFactory<'a> {
    pub ctx: &'a Context,
    pub n_tokens: usize,
    pub max_floating: usize,
}

impl NodeFactory<'_> {
    /// Builds a node from a rule, or `None` when the combination is invalid.
    pub fn from_rule(&self, rule: &Arc<Rule>, span: Span, children: Vec<Arc<Derivation>>) -> Option<Derivation> {
        let sems: Vec<SemValue> = children.iter().map(|c| c.sem.clone()).collect();
        let sem = instantiate_template(&rule.template, &sems).ok()?;
        self.finish(Origin::Rule(rule.clone()), rule.lhs.clone(), span, children, sem)
    }

    pub fn number(&self, value: f64, category: Category, position: usize) -> Option<Derivation> {
        let sem = SemValue::Complete(LogicalForm::number(value));
        self.finish(Origin::Number, category, Span::new(position, position + 1), Vec::new(), sem)
    }

    pub fn application(&self, left: &Arc<Derivation>, right: &Arc<Derivation>, direction: Direction) -> Option<Derivation> {
        let (func, arg) = match direction {
            Direction::Forward => (left, right),
            Direction::Backward => (right, left),
        };
        let (category, sem) = apply_application(&func.sem, &arg.sem, &func.category, &arg.category, direction).ok()?;
        let (start, _) = left.span.range()?;
        let (_, end) = right.span.range()?;
        self.finish(
            Origin::Application(direction),
            category,
            Span::new(start, end),
            vec![left.clone(), right.clone()],
            sem,
        )
    }

    fn finish(
        &self,
        origin: Origin,
        category: Category,
        span: Span,
        children: Vec<Arc<Derivation>>,
        sem: SemValue,
    ) -> Option<Derivation> {
        let own = matches!(&origin, Origin::Rule(r) if r.floating) as usize;
        let floating_count = own + children.iter().map(|c| c.floating_count).sum::<usize>();
        if floating_count > self.max_floating {
            return None;
        }
        if category.is_root() && (!sem.is_complete() || span != Span::new(0, self.n_tokens)) {
            return None;
        }
        if let SemValue::Complete(z) = &sem {
            if let Err(TypeError::Mismatch { .. }) = typecheck(z, self.ctx) {
                return None;
            }
        }
        let chain_depth = chain_depth(&origin, span, &children);
        if chain_depth > MAX_UNARY_CHAIN {
            return None;
        }
        let sem_key = sem.to_string();
        Some(Derivation {
            origin,
            category,
            span,
            children,
            sem,
            floating_count,
            features: FeatureVector::new(),
            score: 0.0,
            chain_depth,
            sem_key,
        })
    }
}

/// Number of consecutive span-preserving applications ending at this node.
///
/// A node preserves its span when its rule has no terminals and exactly one
/// anchored child (floating nodes: exactly one child).
fn chain_depth(origin: &Origin, span: Span, children: &[Arc<Derivation>]) -> usize {
    let Origin::Rule(rule) = origin else { return 0 };
    if rule.has_terminals() {
        return 0;
    }
    match span {
        Span::Floating if children.len() == 1 => children[0].chain_depth + 1,
        Span::Floating => 0,
        Span::Anchored { .. } => {
            let mut anchored = children.iter().filter(|c| c.span != Span::Floating);
            match (anchored.next(), anchored.next()) {
                (Some(only), None) => only.chain_depth + 1,
                _ => 0,
            }
        }
    }
}

/// Checks that every anchored node's children tile its span together with
/// the rule's terminals. Returns a description of the first violation.
pub fn check_span_partition(d: &Derivation) -> Result<(), String> {
    for node in d.walk() {
        let Span::Anchored { start, end } = node.span else {
            if node.children.iter().any(|c| c.span != Span::Floating) {
                return Err(format!("floating node {} has an anchored child", node.category));
            }
            continue;
        };
        let mut spans: Vec<(usize, usize)> = node.children.iter().filter_map(|c| c.span.range()).collect();
        spans.sort();
        let mut covered = 0;
        let mut cursor = start;
        for (s, e) in &spans {
            if *s < cursor || *e > end || s >= e {
                return Err(format!("child span [{s},{e}) overlaps or escapes [{start},{end})"));
            }
            cursor = *e;
            covered += e - s;
        }
        let terminals = match &node.origin {
            Origin::Rule(r) => r.rhs.iter().filter(|i| !i.is_nonterminal()).count(),
            Origin::Number => 1,
            Origin::Application(_) => 0,
        };
        if covered + terminals != end - start {
            return Err(format!(
                "node {} over [{start},{end}) covers {covered} tokens via children and {terminals} via terminals",
                node.category
            ));
        }
        if terminals == 0 && spans.len() == 2 && spans[0].1 != spans[1].0 {
            return Err("binary children are not adjacent".into());
        }
    }
    Ok(())
}
