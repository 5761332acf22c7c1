use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::category::Category;
use super::template::{fill_binder, SemValue, Template, TemplateError};
use crate::kb::Context;

/// Most nonterminals a single rule may combine.
pub const MAX_NONTERMINALS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RhsItem {
    Terminal(String),
    /// `_`: matches any single token.
    Wildcard,
    NonTerminal(Category),
}

impl RhsItem {
    pub fn is_nonterminal(&self) -> bool {
        matches!(self, RhsItem::NonTerminal(_))
    }
}

impl fmt::Display for RhsItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsItem::Terminal(t) => write!(f, "\"{t}\""),
            RhsItem::Wildcard => f.write_str("_"),
            RhsItem::NonTerminal(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: usize,
    pub lhs: Category,
    pub rhs: Vec<RhsItem>,
    pub template: Template,
    pub floating: bool,
    predicates: Vec<String>,
}

impl Rule {
    pub fn new(id: usize, lhs: Category, rhs: Vec<RhsItem>, template: Template, floating: bool) -> Self {
        let predicates = template.predicates();
        Rule { id, lhs, rhs, template, floating, predicates }
    }

    /// Predicates the rule's own template introduces.
    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &Category> {
        self.rhs.iter().filter_map(|i| match i {
            RhsItem::NonTerminal(c) => Some(c),
            _ => None,
        })
    }

    pub fn nonterminal_count(&self) -> usize {
        self.nonterminals().count()
    }

    pub fn has_terminals(&self) -> bool {
        self.rhs.iter().any(|i| !i.is_nonterminal())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.floating {
            return write!(f, "float {} => {}", self.lhs, self.template);
        }
        write!(f, "rule {} :=", self.lhs)?;
        for item in &self.rhs {
            write!(f, " {item}")?;
        }
        write!(f, " => {}", self.template)
    }
}

/// A rule set plus the switch for the built-in application combinators.
#[derive(Debug, Clone, Default)]
pub struct Grammar {
    pub rules: Vec<Arc<Rule>>,
    pub include_application: bool,
}

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Template { line: usize, source: TemplateError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Grammar {
    pub fn parse(src: &str) -> Result<Grammar, GrammarError> {
        let mut g = Grammar::default();
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let text = strip_comment(raw).trim();
            if text.is_empty() {
                continue;
            }
            let syntax = |message: String| GrammarError::Syntax { line, message };
            let (keyword, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
            let rest = rest.trim();
            match keyword {
                "option" => match rest.split_whitespace().collect::<Vec<_>>().as_slice() {
                    ["application", "on"] => g.include_application = true,
                    ["application", "off"] => g.include_application = false,
                    _ => return Err(syntax(format!("unknown option `{rest}`"))),
                },
                "rule" | "float" => {
                    let (head, template_src) =
                        rest.split_once("=>").ok_or_else(|| syntax("missing `=>`".into()))?;
                    let template = Template::parse(template_src.trim())
                        .map_err(|source| GrammarError::Template { line, source })?;
                    let floating = keyword == "float";
                    let (lhs_src, rhs) = if floating {
                        (head.trim(), Vec::new())
                    } else {
                        let (lhs_src, items_src) =
                            head.split_once(":=").ok_or_else(|| syntax("missing `:=`".into()))?;
                        (lhs_src.trim(), parse_items(items_src).map_err(&syntax)?)
                    };
                    let lhs = Category::parse(lhs_src).map_err(&syntax)?;
                    let rule = Rule::new(g.rules.len() + 1, lhs, rhs, template, floating);
                    check_rule(&rule).map_err(|e| match e {
                        RuleProblem::Syntax(m) => syntax(m),
                        RuleProblem::Template(source) => GrammarError::Template { line, source },
                    })?;
                    g.rules.push(Arc::new(rule));
                }
                other => return Err(syntax(format!("unknown directive `{other}`"))),
            }
        }
        Ok(g)
    }

    pub fn rule(&self, id: usize) -> Option<&Arc<Rule>> {
        id.checked_sub(1).and_then(|i| self.rules.get(i))
    }
}

fn strip_comment(line: &str) -> &str {
    // `#` inside a quoted terminal is literal
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_items(src: &str) -> Result<Vec<RhsItem>, String> {
    let mut items = Vec::new();
    let mut rest = src.trim_start();
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix('"') {
            let end = after.find('"').ok_or("unterminated quoted token")?;
            let words: Vec<&str> = after[..end].split_whitespace().collect();
            if words.is_empty() {
                return Err("empty quoted token".into());
            }
            items.extend(words.into_iter().map(|w| RhsItem::Terminal(w.to_lowercase())));
            rest = after[end + 1..].trim_start();
        } else {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let chunk = &rest[..end];
            items.push(if chunk == "_" { RhsItem::Wildcard } else { RhsItem::NonTerminal(Category::parse(chunk)?) });
            rest = rest[end..].trim_start();
        }
    }
    Ok(items)
}

enum RuleProblem {
    Syntax(String),
    Template(TemplateError),
}

fn check_rule(rule: &Rule) -> Result<(), RuleProblem> {
    let nts = rule.nonterminal_count();
    if !rule.floating && rule.rhs.is_empty() {
        return Err(RuleProblem::Syntax("anchored rule needs at least one right-hand-side item".into()));
    }
    if nts > MAX_NONTERMINALS {
        return Err(RuleProblem::Syntax(format!(
            "rule has {nts} nonterminals; at most {MAX_NONTERMINALS} are allowed"
        )));
    }
    if rule.nonterminals().any(Category::is_root) {
        return Err(RuleProblem::Syntax("ROOT may only appear on the left-hand side".into()));
    }
    if rule.floating && rule.lhs.is_root() {
        return Err(RuleProblem::Syntax("ROOT cannot be produced by a floating rule".into()));
    }
    let k = rule.template.max_child();
    if k > nts || rule.template.child_indices().contains(&0) {
        return Err(RuleProblem::Template(TemplateError::ChildOutOfRange { index: k, available: nts }));
    }
    Ok(())
}

pub fn load_grammar(path: impl AsRef<Path>) -> Result<Grammar, GrammarError> {
    Grammar::parse(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplicationError {
    #[error("category mismatch: cannot apply {fn_cat} to {arg_cat}")]
    CategoryMismatch { fn_cat: Category, arg_cat: Category },
    #[error("function value `{0}` has no binder to fill")]
    NotAFunction(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// CCG forward (`A/B B => A`) or backward (`B A\B => A`) application.
pub fn apply_application(
    func: &SemValue,
    arg: &SemValue,
    fn_cat: &Category,
    arg_cat: &Category,
    direction: Direction,
) -> Result<(Category, SemValue), ApplicationError> {
    let result = match (direction, fn_cat) {
        (Direction::Forward, Category::Forward(a, b)) | (Direction::Backward, Category::Backward(a, b))
            if **b == *arg_cat =>
        {
            (**a).clone()
        }
        _ => {
            return Err(ApplicationError::CategoryMismatch { fn_cat: fn_cat.clone(), arg_cat: arg_cat.clone() })
        }
    };
    if func.is_complete() {
        return Err(ApplicationError::NotAFunction(func.to_string()));
    }
    Ok((result, fill_binder(func, arg)?))
}

/// Reports predicates missing from the schema and categories that can never
/// contribute to a ROOT derivation.
pub fn validate_grammar(g: &Grammar, schema: &Context) -> Vec<String> {
    let mut warnings = Vec::new();
    for rule in &g.rules {
        let mut seen = BTreeSet::new();
        for p in rule.template.predicates() {
            if matches!(p.as_str(), "count" | "max" | "min") {
                continue;
            }
            if !schema.has_predicate(&p) && seen.insert(p.clone()) {
                warnings.push(format!("rule {}: predicate `{p}` is not in the schema", rule.id));
            }
        }
    }

    let mut feeds: BTreeSet<Category> = BTreeSet::from([Category::root()]);
    let all_categories: BTreeSet<Category> = g
        .rules
        .iter()
        .flat_map(|r| std::iter::once(r.lhs.clone()).chain(r.nonterminals().cloned()))
        .collect();
    loop {
        let before = feeds.len();
        for rule in &g.rules {
            if feeds.contains(&rule.lhs) {
                feeds.extend(rule.nonterminals().cloned());
            }
        }
        if g.include_application {
            for cat in &all_categories {
                if let Category::Forward(a, b) | Category::Backward(a, b) = cat {
                    if feeds.contains(a) {
                        feeds.insert(cat.clone());
                        feeds.insert((**b).clone());
                    }
                }
            }
        }
        if feeds.len() == before {
            break;
        }
    }
    let mut reported = BTreeSet::new();
    for rule in &g.rules {
        if !feeds.contains(&rule.lhs) && reported.insert(rule.lhs.clone()) {
            warnings.push(format!("category {} never feeds ROOT", rule.lhs));
        }
    }
    warnings
}
