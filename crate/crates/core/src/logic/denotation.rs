use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use super::form::format_number;

/// Absolute tolerance used when comparing numbers in denotations.
pub const NUMERIC_TOLERANCE: f64 = 1e-9;

/// An element of a denotation.
#[derive(Debug, Clone)]
pub enum Value {
    Entity(String),
    Number(f64),
}

impl Value {
    pub fn number(value: f64) -> Self {
        Value::Number(if value == 0.0 { 0.0 } else { value })
    }

    pub fn entity(id: impl Into<String>) -> Self {
        Value::Entity(id.into())
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            Value::Entity(_) => None,
        }
    }

    /// Parses a KB or dataset token: decimal literals become numbers,
    /// anything else an entity id.
    pub fn parse_token(token: &str) -> Value {
        match token.parse::<f64>() {
            Ok(n) if n.is_finite() && looks_numeric(token) => Value::number(n),
            _ => Value::Entity(token.to_string()),
        }
    }
}

fn looks_numeric(token: &str) -> bool {
    let body = token.strip_prefix('-').unwrap_or(token);
    !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.chars().filter(|&c| c == '.').count() <= 1
        && body.chars().any(|c| c.is_ascii_digit())
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => a.total_cmp(b),
            (Value::Number(_), Value::Entity(_)) => Ordering::Less,
            (Value::Entity(_), Value::Number(_)) => Ordering::Greater,
            (Value::Entity(a), Value::Entity(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Entity(id) => f.write_str(id),
            Value::Number(n) => f.write_str(&format_number(*n)),
        }
    }
}

/// The value of an executed logical form.
#[derive(Debug, Clone, PartialEq)]
pub enum Denotation {
    FiniteSet(BTreeSet<Value>),
    /// A set of reals bounded by `lower` and `upper`, either of which may be infinite.
    Interval {
        lower: f64,
        upper: f64,
        lower_open: bool,
        upper_open: bool,
    },
}

impl Denotation {
    pub fn empty() -> Self {
        Denotation::FiniteSet(BTreeSet::new())
    }

    pub fn singleton(value: Value) -> Self {
        Denotation::FiniteSet(BTreeSet::from([value]))
    }

    pub fn numbers(values: impl IntoIterator<Item = f64>) -> Self {
        Denotation::FiniteSet(values.into_iter().map(Value::number).collect())
    }

    /// Builds an interval, collapsing empty and single-point ranges to finite sets.
    pub fn interval(lower: f64, upper: f64, lower_open: bool, upper_open: bool) -> Self {
        let lower_open = lower_open || lower == f64::NEG_INFINITY;
        let upper_open = upper_open || upper == f64::INFINITY;
        if lower > upper || (lower == upper && (lower_open || upper_open)) {
            Denotation::empty()
        } else if lower == upper {
            Denotation::singleton(Value::number(lower))
        } else {
            Denotation::Interval { lower, upper, lower_open, upper_open }
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Denotation::FiniteSet(_))
    }

    /// Number of elements, or `None` for an interval.
    pub fn len(&self) -> Option<usize> {
        match self {
            Denotation::FiniteSet(s) => Some(s.len()),
            Denotation::Interval { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn contains_number(&self, x: f64) -> bool {
        match self {
            Denotation::FiniteSet(s) => s.contains(&Value::number(x)),
            Denotation::Interval { lower, upper, lower_open, upper_open } => {
                let above = if *lower_open { x > *lower } else { x >= *lower };
                let below = if *upper_open { x < *upper } else { x <= *upper };
                above && below
            }
        }
    }
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format_number(x)
    }
}

impl fmt::Display for Denotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Denotation::FiniteSet(s) => {
                f.write_str("{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            Denotation::Interval { lower, upper, lower_open, upper_open } => write!(
                f,
                "{}{}, {}{}",
                if *lower_open { "(" } else { "[" },
                fmt_bound(*lower),
                fmt_bound(*upper),
                if *upper_open { ")" } else { "]" }
            ),
        }
    }
}

fn numbers_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= NUMERIC_TOLERANCE
}

fn values_close(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => numbers_close(*x, *y),
        (Value::Entity(x), Value::Entity(y)) => x == y,
        _ => false,
    }
}

/// Set equality with a `1e-9` absolute tolerance on numbers.
///
/// A finite set never equals an interval.
pub fn denotation_equals(a: &Denotation, b: &Denotation) -> bool {
    match (a, b) {
        (Denotation::FiniteSet(x), Denotation::FiniteSet(y)) => {
            // both sides are sorted, so tolerant matches pair up positionally
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(u, v)| values_close(u, v))
        }
        (
            Denotation::Interval { lower: l1, upper: u1, lower_open: lo1, upper_open: uo1 },
            Denotation::Interval { lower: l2, upper: u2, lower_open: lo2, upper_open: uo2 },
        ) => numbers_close(*l1, *l2) && numbers_close(*u1, *u2) && lo1 == lo2 && uo1 == uo2,
        _ => false,
    }
}
