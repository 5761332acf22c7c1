use std::fmt;

use thiserror::Error;

use super::form::LogicalForm;
use crate::kb::Context;

/// Entity class that is compatible with every other class.
pub const ANY_CLASS: &str = "*";

/// Semantic type of a term. Set-denoting terms are typed by their elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemType {
    Number,
    Entity(String),
    Relation(Box<SemType>, Box<SemType>),
}

impl SemType {
    pub fn entity(class: impl Into<String>) -> Self {
        SemType::Entity(class.into())
    }

    pub fn relation(domain: SemType, range: SemType) -> Self {
        SemType::Relation(Box::new(domain), Box::new(range))
    }

    pub fn is_relation(&self) -> bool {
        matches!(self, SemType::Relation(..))
    }

    /// Most specific common type of two set types, if they are compatible.
    pub fn unify(&self, other: &SemType) -> Option<SemType> {
        match (self, other) {
            (SemType::Number, SemType::Number) => Some(SemType::Number),
            (SemType::Entity(a), SemType::Entity(b)) => {
                if a == b || b == ANY_CLASS {
                    Some(self.clone())
                } else if a == ANY_CLASS {
                    Some(other.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Parses `number`, `entity:<class>` or `relation:<dom>:<range>`.
    pub fn parse_spec(spec: &str) -> Option<SemType> {
        fn element(tok: &str) -> Option<SemType> {
            match tok {
                "" => None,
                "number" => Some(SemType::Number),
                class => Some(SemType::entity(class)),
            }
        }
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            ["number"] => Some(SemType::Number),
            ["entity"] => Some(SemType::entity(ANY_CLASS)),
            ["entity", class] if !class.is_empty() => Some(SemType::entity(*class)),
            ["relation", d, r] => Some(SemType::relation(element(d)?, element(r)?)),
            _ => None,
        }
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn element(t: &SemType) -> String {
            match t {
                SemType::Number => "number".into(),
                SemType::Entity(c) => c.clone(),
                SemType::Relation(..) => t.to_string(),
            }
        }
        match self {
            SemType::Number => f.write_str("number"),
            SemType::Entity(c) => write!(f, "entity:{c}"),
            SemType::Relation(d, r) => write!(f, "relation:{}:{}", element(d), element(r)),
        }
    }
}

/// Child-index path from the root of a logical form to a subterm.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermPath(pub Vec<usize>);

impl TermPath {
    fn child(&self, idx: usize) -> TermPath {
        let mut v = self.0.clone();
        v.push(idx);
        TermPath(v)
    }
}

impl fmt::Display for TermPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, ".{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("type mismatch at {path}: {message}")]
    Mismatch { path: TermPath, message: String },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
}

impl TypeError {
    pub fn is_mismatch(&self) -> bool {
        matches!(self, TypeError::Mismatch { .. })
    }
}

fn mismatch(path: &TermPath, message: impl Into<String>) -> TypeError {
    TypeError::Mismatch { path: path.clone(), message: message.into() }
}

/// Infers the type of `z` against the schema of `schema`.
pub fn typecheck(z: &LogicalForm, schema: &Context) -> Result<SemType, TypeError> {
    check(z, schema, &TermPath::default())
}

fn set_type(z: &LogicalForm, schema: &Context, path: &TermPath) -> Result<SemType, TypeError> {
    let t = check(z, schema, path)?;
    if t.is_relation() {
        return Err(mismatch(path, format!("relation `{z}` used where a set is required")));
    }
    Ok(t)
}

fn check(z: &LogicalForm, schema: &Context, path: &TermPath) -> Result<SemType, TypeError> {
    match z {
        LogicalForm::Number(_) => Ok(SemType::Number),
        LogicalForm::Entity(id) => Ok(SemType::entity(schema.entity_class(id).unwrap_or(ANY_CLASS))),
        LogicalForm::Unary(p) => {
            let t = schema.predicate_type(p).ok_or_else(|| TypeError::UnknownPredicate(p.clone()))?;
            if t.is_relation() {
                return Err(mismatch(path, format!("relation `{p}` used where a set is required")));
            }
            Ok(t)
        }
        LogicalForm::Rel(p) => {
            let t = schema.predicate_type(p).ok_or_else(|| TypeError::UnknownPredicate(p.clone()))?;
            if !t.is_relation() {
                return Err(mismatch(path, format!("`{p}` of type {t} used as a relation")));
            }
            Ok(t)
        }
        LogicalForm::Join(r, arg) => {
            let rel_path = path.child(0);
            let LogicalForm::Rel(_) = r.as_ref() else {
                return Err(mismatch(&rel_path, format!("join expects a relation, found `{r}`")));
            };
            let SemType::Relation(domain, range) = check(r, schema, &rel_path)? else {
                unreachable!("relations type as relations");
            };
            let arg_path = path.child(1);
            let arg_t = set_type(arg, schema, &arg_path)?;
            if range.unify(&arg_t).is_none() {
                return Err(mismatch(&arg_path, format!("`{r}` expects {range}, found {arg_t}")));
            }
            Ok(*domain)
        }
        LogicalForm::Intersect(a, b) => {
            let ta = set_type(a, schema, &path.child(0))?;
            let tb = set_type(b, schema, &path.child(1))?;
            ta.unify(&tb)
                .ok_or_else(|| mismatch(path, format!("cannot intersect {ta} with {tb}")))
        }
        LogicalForm::Count(a) => {
            set_type(a, schema, &path.child(0))?;
            Ok(SemType::Number)
        }
        LogicalForm::Max(a) | LogicalForm::Min(a) => {
            let t = set_type(a, schema, &path.child(0))?;
            if t != SemType::Number {
                return Err(mismatch(&path.child(0), format!("superlative over {t}, expected number")));
            }
            Ok(SemType::Number)
        }
    }
}
