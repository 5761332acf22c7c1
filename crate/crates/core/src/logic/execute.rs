use std::collections::BTreeSet;

use thiserror::Error;

use super::denotation::{Denotation, Value};
use super::form::LogicalForm;
use crate::kb::{Builtin, Context};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("infinite denotation: {0}")]
    InfiniteDenotation(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("aggregate over an empty set: {0}")]
    EmptyAggregate(String),
}

/// Computes the denotation of `z` in context `c`.
pub fn execute(z: &LogicalForm, c: &Context) -> Result<Denotation, ExecError> {
    match z {
        LogicalForm::Entity(id) => Ok(Denotation::singleton(Value::entity(id.clone()))),
        LogicalForm::Number(n) => Ok(Denotation::singleton(Value::number(*n))),
        LogicalForm::Unary(p) => match c.unary(p) {
            Some(values) => Ok(Denotation::FiniteSet(values.clone())),
            None if c.binary(p).is_some() || Builtin::from_name(p).is_some() => {
                Err(ExecError::TypeMismatch(format!("relation `{p}` used as a set")))
            }
            None => Err(ExecError::UnknownPredicate(p.clone())),
        },
        LogicalForm::Rel(p) => Err(ExecError::TypeMismatch(format!("relation `{p}` used as a set"))),
        LogicalForm::Join(r, arg) => {
            let LogicalForm::Rel(name) = r.as_ref() else {
                return Err(ExecError::TypeMismatch(format!("join expects a relation, found `{r}`")));
            };
            let arg = execute(arg, c)?;
            join(name, &arg, c)
        }
        LogicalForm::Intersect(a, b) => Ok(intersect(&execute(a, c)?, &execute(b, c)?)),
        LogicalForm::Count(a) => match execute(a, c)? {
            Denotation::FiniteSet(s) => Ok(Denotation::singleton(Value::number(s.len() as f64))),
            interval => Err(ExecError::InfiniteDenotation(format!("count of {interval}"))),
        },
        LogicalForm::Max(a) => extremum(&execute(a, c)?, true),
        LogicalForm::Min(a) => extremum(&execute(a, c)?, false),
    }
}

fn numeric_values(s: &BTreeSet<Value>, what: &str) -> Result<Vec<f64>, ExecError> {
    s.iter()
        .map(|v| {
            v.as_number()
                .ok_or_else(|| ExecError::TypeMismatch(format!("{what} over entity `{v}`")))
        })
        .collect()
}

fn join(rel: &str, arg: &Denotation, c: &Context) -> Result<Denotation, ExecError> {
    if let Some(builtin) = Builtin::from_name(rel) {
        return Ok(match arg {
            Denotation::FiniteSet(s) => {
                let nums = numeric_values(s, rel)?;
                if nums.is_empty() {
                    return Ok(Denotation::empty());
                }
                match builtin {
                    // {x : x < y for some y in S} = (-inf, max S)
                    Builtin::Less => {
                        let hi = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        Denotation::interval(f64::NEG_INFINITY, hi, true, true)
                    }
                    Builtin::More => {
                        let lo = nums.iter().copied().fold(f64::INFINITY, f64::min);
                        Denotation::interval(lo, f64::INFINITY, true, true)
                    }
                }
            }
            Denotation::Interval { lower, upper, .. } => match builtin {
                Builtin::Less => Denotation::interval(f64::NEG_INFINITY, *upper, true, true),
                Builtin::More => Denotation::interval(*lower, f64::INFINITY, true, true),
            },
        });
    }
    let pairs = match c.binary(rel) {
        Some(p) => p,
        None if c.unary(rel).is_some() => {
            return Err(ExecError::TypeMismatch(format!("`{rel}` is not a relation")))
        }
        None => return Err(ExecError::UnknownPredicate(rel.to_string())),
    };
    let image = pairs
        .iter()
        .filter(|(_, y)| match (arg, y) {
            (Denotation::FiniteSet(s), y) => s.contains(y),
            (interval, Value::Number(n)) => interval.contains_number(*n),
            (_, Value::Entity(_)) => false,
        })
        .map(|(x, _)| x.clone())
        .collect();
    Ok(Denotation::FiniteSet(image))
}

/// Set intersection over finite sets and intervals.
pub fn intersect(a: &Denotation, b: &Denotation) -> Denotation {
    match (a, b) {
        (Denotation::FiniteSet(x), Denotation::FiniteSet(y)) => {
            Denotation::FiniteSet(x.intersection(y).cloned().collect())
        }
        (Denotation::FiniteSet(s), interval) | (interval, Denotation::FiniteSet(s)) => {
            Denotation::FiniteSet(
                s.iter()
                    .filter(|v| v.as_number().is_some_and(|n| interval.contains_number(n)))
                    .cloned()
                    .collect(),
            )
        }
        (
            Denotation::Interval { lower: l1, upper: u1, lower_open: lo1, upper_open: uo1 },
            Denotation::Interval { lower: l2, upper: u2, lower_open: lo2, upper_open: uo2 },
        ) => {
            let (lower, lower_open) = if l1 > l2 {
                (*l1, *lo1)
            } else if l2 > l1 {
                (*l2, *lo2)
            } else {
                (*l1, *lo1 || *lo2)
            };
            let (upper, upper_open) = if u1 < u2 {
                (*u1, *uo1)
            } else if u2 < u1 {
                (*u2, *uo2)
            } else {
                (*u1, *uo1 || *uo2)
            };
            Denotation::interval(lower, upper, lower_open, upper_open)
        }
    }
}

fn extremum(d: &Denotation, largest: bool) -> Result<Denotation, ExecError> {
    let op = if largest { "max" } else { "min" };
    match d {
        Denotation::Interval { .. } => Err(ExecError::InfiniteDenotation(format!("{op} of {d}"))),
        Denotation::FiniteSet(s) => {
            let nums = numeric_values(s, op)?;
            let best = if largest {
                nums.iter().copied().reduce(f64::max)
            } else {
                nums.iter().copied().reduce(f64::min)
            };
            best.map(|n| Denotation::singleton(Value::number(n)))
                .ok_or_else(|| ExecError::EmptyAggregate(op.to_string()))
        }
    }
}
