//! Semantic construction templates and the lambda machinery behind them.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::logic::text::{Cursor, Tok};
use crate::logic::{format_number, LogicalForm, ParseError};

/// Upper bound on beta reductions while normalizing one term.
const MAX_REDUCTIONS: usize = 10_000;

/// A term over logical-form constructors, child references, lambdas and
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Template {
    Unary(String),
    Entity(String),
    Rel(String),
    Number(f64),
    Join(Box<Template>, Box<Template>),
    And(Box<Template>, Box<Template>),
    Count(Box<Template>),
    Max(Box<Template>),
    Min(Box<Template>),
    App(Box<Template>, Box<Template>),
    /// `$k`, 1-based index into the rule's nonterminals.
    Child(usize),
    Lam(String, Box<Template>),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("child reference ${index} out of range (rule has {available} nonterminals)")]
    ChildOutOfRange { index: usize, available: usize },
    #[error("template references ${needed} but only {given} children were supplied")]
    ArityMismatch { needed: usize, given: usize },
    #[error("a function value appears where a set term is required: {0}")]
    PartialInSetPosition(String),
    #[error("beta reduction did not terminate")]
    Divergent,
}

/// The semantics carried by a derivation.
#[derive(Debug, Clone, PartialEq)]
pub enum SemValue {
    Complete(LogicalForm),
    /// A closed lambda term with at least one binder left to fill.
    Partial(Template),
}

impl SemValue {
    pub fn is_complete(&self) -> bool {
        matches!(self, SemValue::Complete(_))
    }

    pub fn logical_form(&self) -> Option<&LogicalForm> {
        match self {
            SemValue::Complete(z) => Some(z),
            SemValue::Partial(_) => None,
        }
    }

    /// Number of leading binders still to be filled.
    pub fn binders(&self) -> usize {
        match self {
            SemValue::Complete(_) => 0,
            SemValue::Partial(t) => t.leading_binders(),
        }
    }

    fn to_template(&self) -> Template {
        match self {
            SemValue::Complete(z) => Template::from_lf(z),
            SemValue::Partial(t) => t.clone(),
        }
    }
}

impl fmt::Display for SemValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemValue::Complete(z) => write!(f, "{z}"),
            SemValue::Partial(t) => write!(f, "{t}"),
        }
    }
}

impl Template {
    pub fn from_lf(z: &LogicalForm) -> Template {
        let b = |z: &LogicalForm| Box::new(Template::from_lf(z));
        match z {
            LogicalForm::Entity(e) => Template::Entity(e.clone()),
            LogicalForm::Number(n) => Template::Number(*n),
            LogicalForm::Unary(p) => Template::Unary(p.clone()),
            LogicalForm::Rel(p) => Template::Rel(p.clone()),
            LogicalForm::Join(r, a) => Template::Join(b(r), b(a)),
            LogicalForm::Intersect(l, r) => Template::And(b(l), b(r)),
            LogicalForm::Count(a) => Template::Count(b(a)),
            LogicalForm::Max(a) => Template::Max(b(a)),
            LogicalForm::Min(a) => Template::Min(b(a)),
        }
    }

    /// Converts a lambda-free, child-free term into a logical form.
    pub fn to_lf(&self) -> Option<LogicalForm> {
        Some(match self {
            Template::Unary(p) => LogicalForm::Unary(p.clone()),
            Template::Entity(e) => LogicalForm::Entity(e.clone()),
            Template::Rel(p) => LogicalForm::Rel(p.clone()),
            Template::Number(n) => LogicalForm::number(*n),
            Template::Join(a, b) => LogicalForm::join(a.to_lf()?, b.to_lf()?),
            Template::And(a, b) => LogicalForm::and(a.to_lf()?, b.to_lf()?),
            Template::Count(a) => LogicalForm::count(a.to_lf()?),
            Template::Max(a) => LogicalForm::max(a.to_lf()?),
            Template::Min(a) => LogicalForm::min(a.to_lf()?),
            Template::App(..) | Template::Child(_) | Template::Lam(..) | Template::Var(_) => return None,
        })
    }

    pub fn leading_binders(&self) -> usize {
        match self {
            Template::Lam(_, body) => 1 + body.leading_binders(),
            _ => 0,
        }
    }

    fn children(&self) -> Vec<&Template> {
        match self {
            Template::Join(a, b) | Template::And(a, b) | Template::App(a, b) => vec![a, b],
            Template::Count(a) | Template::Max(a) | Template::Min(a) | Template::Lam(_, a) => vec![a],
            _ => Vec::new(),
        }
    }

    fn map_children(&self, f: &mut impl FnMut(&Template) -> Template) -> Template {
        let b = |t: Template| Box::new(t);
        match self {
            Template::Join(x, y) => Template::Join(b(f(x)), b(f(y))),
            Template::And(x, y) => Template::And(b(f(x)), b(f(y))),
            Template::App(x, y) => Template::App(b(f(x)), b(f(y))),
            Template::Count(x) => Template::Count(b(f(x))),
            Template::Max(x) => Template::Max(b(f(x))),
            Template::Min(x) => Template::Min(b(f(x))),
            Template::Lam(v, x) => Template::Lam(v.clone(), b(f(x))),
            leaf => leaf.clone(),
        }
    }

    /// Largest `$k` index mentioned, or 0.
    pub fn max_child(&self) -> usize {
        match self {
            Template::Child(k) => *k,
            other => other.children().into_iter().map(Template::max_child).max().unwrap_or(0),
        }
    }

    /// All `$k` indices mentioned, in order of appearance.
    pub fn child_indices(&self) -> Vec<usize> {
        match self {
            Template::Child(k) => vec![*k],
            other => other.children().into_iter().flat_map(Template::child_indices).collect(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Template::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Template::Lam(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            other => other.children().into_iter().for_each(|c| c.collect_free(bound, out)),
        }
    }

    fn all_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Template::Var(v) => {
                out.insert(v.clone());
            }
            Template::Lam(v, body) => {
                out.insert(v.clone());
                body.all_vars(out);
            }
            other => other.children().into_iter().for_each(|c| c.all_vars(out)),
        }
    }

    /// Predicate and operator names this template introduces by itself
    /// (children's contributions excluded), deduplicated in order.
    pub fn predicates(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates(&self, out: &mut Vec<String>) {
        let name = match self {
            Template::Unary(p) | Template::Rel(p) | Template::Entity(p) => Some(p.as_str()),
            Template::Count(_) => Some("count"),
            Template::Max(_) => Some("max"),
            Template::Min(_) => Some("min"),
            _ => None,
        };
        if let Some(n) = name {
            if !out.iter().any(|o| o == n) {
                out.push(n.to_string());
            }
        }
        self.children().into_iter().for_each(|c| c.collect_predicates(out));
    }

    /// Capture-avoiding substitution of `value` for free occurrences of `var`.
    pub fn subst(&self, var: &str, value: &Template) -> Template {
        self.subst_with(var, value, &value.free_vars())
    }

    fn subst_with(&self, var: &str, value: &Template, value_fv: &BTreeSet<String>) -> Template {
        match self {
            Template::Var(v) if v == var => value.clone(),
            Template::Lam(v, _) if v == var => self.clone(),
            Template::Lam(v, body) if value_fv.contains(v) => {
                let mut taken = value_fv.clone();
                body.all_vars(&mut taken);
                taken.insert(var.to_string());
                let fresh = fresh_name(v, &taken);
                let renamed = body.subst(v, &Template::Var(fresh.clone()));
                Template::Lam(fresh, Box::new(renamed.subst_with(var, value, value_fv)))
            }
            other => other.map_children(&mut |c| c.subst_with(var, value, value_fv)),
        }
    }

    fn fill_children(&self, children: &[Template]) -> Template {
        match self {
            Template::Child(k) => children[k - 1].clone(),
            other => other.map_children(&mut |c| c.fill_children(children)),
        }
    }

    /// Reduces every beta redex.
    pub fn normalize(&self) -> Result<Template, TemplateError> {
        let mut budget = MAX_REDUCTIONS;
        self.normalize_with(&mut budget)
    }

    fn normalize_with(&self, budget: &mut usize) -> Result<Template, TemplateError> {
        match self {
            Template::App(f, a) => {
                let f = f.normalize_with(budget)?;
                if let Template::Lam(v, body) = f {
                    if *budget == 0 {
                        return Err(TemplateError::Divergent);
                    }
                    *budget -= 1;
                    body.subst(&v, a).normalize_with(budget)
                } else {
                    Ok(Template::App(Box::new(f), Box::new(a.normalize_with(budget)?)))
                }
            }
            other => {
                let mut err = None;
                let out = other.map_children(&mut |c| match c.normalize_with(budget) {
                    Ok(t) => t,
                    Err(e) => {
                        err.get_or_insert(e);
                        c.clone()
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(out),
                }
            }
        }
    }

    /// Normalizes and classifies the result as complete or partial.
    pub fn into_value(&self) -> Result<SemValue, TemplateError> {
        let t = self.normalize()?;
        if let Template::Lam(..) = t {
            if let Some(v) = t.free_vars().into_iter().next() {
                return Err(TemplateError::UnboundVariable(v));
            }
            return Ok(SemValue::Partial(t));
        }
        match t.to_lf() {
            Some(z) => Ok(SemValue::Complete(z)),
            None => match t.free_vars().into_iter().next() {
                Some(v) => Err(TemplateError::UnboundVariable(v)),
                None => Err(TemplateError::PartialInSetPosition(t.to_string())),
            },
        }
    }

    /// Parses the template language used on the right of `=>`.
    pub fn parse(src: &str) -> Result<Template, TemplateError> {
        let mut cur = Cursor::new(src)?;
        let mut scope = Vec::new();
        let t = read_template(&mut cur, &mut scope, false)?;
        cur.finish()?;
        Ok(t)
    }
}

fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded supply of names")
}

fn read_template(cur: &mut Cursor, scope: &mut Vec<String>, relation_slot: bool) -> Result<Template, TemplateError> {
    let pos = cur.pos();
    match cur.next() {
        Tok::Number(n) => Ok(Template::Number(n)),
        Tok::Child(k) => Ok(Template::Child(k)),
        Tok::Ident(name) if name == "lam" => {
            let var = cur.ident()?;
            cur.expect(Tok::Dot)?;
            scope.push(var.clone());
            let body = read_template(cur, scope, false);
            scope.pop();
            Ok(Template::Lam(var, Box::new(body?)))
        }
        Tok::Ident(name) if *cur.peek() == Tok::LParen => {
            cur.next();
            let b = Box::new;
            let t = match name.as_str() {
                "const" => Template::Unary(cur.ident()?),
                "ent" => Template::Entity(cur.ident()?),
                "rel" => Template::Rel(cur.ident()?),
                "number" => match cur.next() {
                    Tok::Number(n) => Template::Number(n),
                    other => {
                        return Err(ParseError::new(pos, format!("number() expects a literal, found {}", other.describe())).into())
                    }
                },
                "join" => {
                    let r = read_template(cur, scope, true)?;
                    cur.expect(Tok::Comma)?;
                    Template::Join(b(r), b(read_template(cur, scope, false)?))
                }
                "and" | "app" => {
                    let l = read_template(cur, scope, false)?;
                    cur.expect(Tok::Comma)?;
                    let r = read_template(cur, scope, false)?;
                    if name == "and" {
                        Template::And(b(l), b(r))
                    } else {
                        Template::App(b(l), b(r))
                    }
                }
                "count" => Template::Count(b(read_template(cur, scope, false)?)),
                "max" => Template::Max(b(read_template(cur, scope, false)?)),
                "min" => Template::Min(b(read_template(cur, scope, false)?)),
                other => return Err(ParseError::new(pos, format!("unknown template operator `{other}`")).into()),
            };
            cur.expect(Tok::RParen)?;
            Ok(t)
        }
        Tok::Ident(name) => {
            if scope.contains(&name) {
                Ok(Template::Var(name))
            } else if relation_slot {
                // a free name in a join's relation slot is a relation constant
                Ok(Template::Rel(name))
            } else {
                Err(TemplateError::UnboundVariable(name))
            }
        }
        other => Err(ParseError::new(pos, format!("expected template, found {}", other.describe())).into()),
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Template::Unary(p) => write!(f, "const({p})"),
            Template::Entity(e) => write!(f, "ent({e})"),
            Template::Rel(p) => write!(f, "rel({p})"),
            Template::Number(n) => f.write_str(&format_number(*n)),
            Template::Join(r, a) => match r.as_ref() {
                Template::Rel(p) => write!(f, "join({p}, {a})"),
                other => write!(f, "join({other}, {a})"),
            },
            Template::And(a, b) => write!(f, "and({a}, {b})"),
            Template::App(a, b) => write!(f, "app({a}, {b})"),
            Template::Count(a) => write!(f, "count({a})"),
            Template::Max(a) => write!(f, "max({a})"),
            Template::Min(a) => write!(f, "min({a})"),
            Template::Child(k) => write!(f, "${k}"),
            Template::Lam(v, body) => write!(f, "lam {v}. {body}"),
            Template::Var(v) => f.write_str(v),
        }
    }
}

/// Substitutes `children` for the `$k` references of `t` and normalizes.
pub fn instantiate_template(t: &Template, children: &[SemValue]) -> Result<SemValue, TemplateError> {
    let needed = t.max_child();
    if needed > children.len() {
        return Err(TemplateError::ArityMismatch { needed, given: children.len() });
    }
    let filled: Vec<Template> = children.iter().map(SemValue::to_template).collect();
    t.fill_children(&filled).into_value()
}

/// Fills the outermost binder of `f` with `arg`.
pub fn fill_binder(f: &SemValue, arg: &SemValue) -> Result<SemValue, TemplateError> {
    match f {
        SemValue::Partial(Template::Lam(v, body)) => body.subst(v, &arg.to_template()).into_value(),
        other => Err(TemplateError::PartialInSetPosition(format!("`{other}` has no binder to fill"))),
    }
}
