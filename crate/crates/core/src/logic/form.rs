use std::fmt;

/// A lambda DCS logical form.
///
/// Set-denoting terms occupy every position except the first child of
/// [`LogicalForm::Join`], which holds a binary relation.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicalForm {
    Entity(String),
    Number(f64),
    Unary(String),
    Rel(String),
    Join(Box<LogicalForm>, Box<LogicalForm>),
    Intersect(Box<LogicalForm>, Box<LogicalForm>),
    Count(Box<LogicalForm>),
    Max(Box<LogicalForm>),
    Min(Box<LogicalForm>),
}

impl LogicalForm {
    pub fn entity(id: impl Into<String>) -> Self {
        LogicalForm::Entity(id.into())
    }

    pub fn number(value: f64) -> Self {
        // -0.0 and 0.0 must serialize identically
        LogicalForm::Number(if value == 0.0 { 0.0 } else { value })
    }

    pub fn unary(pred: impl Into<String>) -> Self {
        LogicalForm::Unary(pred.into())
    }

    pub fn rel(pred: impl Into<String>) -> Self {
        LogicalForm::Rel(pred.into())
    }

    pub fn join(rel: LogicalForm, arg: LogicalForm) -> Self {
        LogicalForm::Join(Box::new(rel), Box::new(arg))
    }

    pub fn and(left: LogicalForm, right: LogicalForm) -> Self {
        LogicalForm::Intersect(Box::new(left), Box::new(right))
    }

    pub fn count(arg: LogicalForm) -> Self {
        LogicalForm::Count(Box::new(arg))
    }

    pub fn max(arg: LogicalForm) -> Self {
        LogicalForm::Max(Box::new(arg))
    }

    pub fn min(arg: LogicalForm) -> Self {
        LogicalForm::Min(Box::new(arg))
    }

    /// Direct subterms, in serialization order.
    pub fn children(&self) -> Vec<&LogicalForm> {
        match self {
            LogicalForm::Entity(_)
            | LogicalForm::Number(_)
            | LogicalForm::Unary(_)
            | LogicalForm::Rel(_) => Vec::new(),
            LogicalForm::Join(a, b) | LogicalForm::Intersect(a, b) => vec![a, b],
            LogicalForm::Count(a) | LogicalForm::Max(a) | LogicalForm::Min(a) => vec![a],
        }
    }

    /// Checks the structural invariants: relations appear exactly in the
    /// first slot of a join, nowhere else.
    pub fn is_well_formed(&self) -> bool {
        self.well_formed_at(false) && !matches!(self, LogicalForm::Rel(_))
    }

    fn well_formed_at(&self, relation_slot: bool) -> bool {
        match self {
            LogicalForm::Rel(_) => relation_slot,
            _ if relation_slot => false,
            LogicalForm::Join(r, z) => r.well_formed_at(true) && z.well_formed_at(false),
            other => other.children().iter().all(|c| c.well_formed_at(false)),
        }
    }

    /// Every predicate name mentioned by the form, in pre-order.
    pub fn predicates(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            LogicalForm::Unary(p) | LogicalForm::Rel(p) => out.push(p),
            _ => self.children().into_iter().for_each(|c| c.collect_predicates(out)),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

/// Formats a number so that `str::parse::<f64>` recovers it exactly.
pub(crate) fn format_number(value: f64) -> String {
    format!("{value}")
}

impl fmt::Display for LogicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicalForm::Entity(id) => write!(f, "ent({id})"),
            LogicalForm::Number(n) => f.write_str(&format_number(*n)),
            LogicalForm::Unary(p) | LogicalForm::Rel(p) => f.write_str(p),
            LogicalForm::Join(r, z) => write!(f, "join({r}, {z})"),
            LogicalForm::Intersect(a, b) => write!(f, "and({a}, {b})"),
            LogicalForm::Count(a) => write!(f, "count({a})"),
            LogicalForm::Max(a) => write!(f, "max({a})"),
            LogicalForm::Min(a) => write!(f, "min({a})"),
        }
    }
}

/// Canonical text form of a logical form.
pub fn serialize_lf(z: &LogicalForm) -> String {
    z.to_string()
}
