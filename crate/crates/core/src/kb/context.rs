use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::logic::{SemType, Value, ANY_CLASS};

/// Built-in numeric comparison relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Less,
    More,
}

impl Builtin {
    pub const NAMES: [&'static str; 2] = ["less", "more"];

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "less" => Some(Builtin::Less),
            "more" => Some(Builtin::More),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: `{name}` is a reserved builtin and cannot be redefined")]
    ReservedBuiltin { line: usize, name: String },
    #[error("predicate `{pred}`: value `{value}` violates declared type {ty}")]
    TypeViolation { pred: String, value: String, ty: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A knowledge base: interpretations for unary and binary predicates plus
/// their declared types.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Context {
    id: String,
    unaries: BTreeMap<String, BTreeSet<Value>>,
    binaries: BTreeMap<String, BTreeSet<(Value, Value)>>,
    schema: BTreeMap<String, SemType>,
    entity_classes: BTreeMap<String, String>,
}

impl Context {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn unary(&self, pred: &str) -> Option<&BTreeSet<Value>> {
        self.unaries.get(pred)
    }

    pub fn binary(&self, pred: &str) -> Option<&BTreeSet<(Value, Value)>> {
        self.binaries.get(pred)
    }

    pub fn unaries(&self) -> &BTreeMap<String, BTreeSet<Value>> {
        &self.unaries
    }

    pub fn binaries(&self) -> &BTreeMap<String, BTreeSet<(Value, Value)>> {
        &self.binaries
    }

    pub fn schema(&self) -> &BTreeMap<String, SemType> {
        &self.schema
    }

    /// Declared type of a predicate, including the builtins.
    pub fn predicate_type(&self, pred: &str) -> Option<SemType> {
        if Builtin::from_name(pred).is_some() {
            return Some(SemType::relation(SemType::Number, SemType::Number));
        }
        self.schema.get(pred).cloned()
    }

    pub fn has_predicate(&self, pred: &str) -> bool {
        Builtin::from_name(pred).is_some() || self.schema.contains_key(pred)
    }

    pub fn entity_class(&self, id: &str) -> Option<&str> {
        self.entity_classes.get(id).map(String::as_str)
    }

    /// Parses the KB TSV format.
    pub fn parse_tsv(id: impl Into<String>, src: &str) -> Result<Context, KbError> {
        let mut b = ContextBuilder::new(id);
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            let malformed = |message: &str| KbError::Malformed { line, message: message.to_string() };
            match fields.as_slice() {
                [] => {}
                ["unary", pred, value] => {
                    reserved(pred, line)?;
                    b.unary(pred, Value::parse_token(value));
                }
                ["binary", pred, v1, v2] => {
                    reserved(pred, line)?;
                    b.binary(pred, Value::parse_token(v1), Value::parse_token(v2));
                }
                ["type", pred, spec] => {
                    reserved(pred, line)?;
                    let ty = SemType::parse_spec(spec)
                        .ok_or_else(|| malformed(&format!("bad type spec `{spec}`")))?;
                    b.declare(pred, ty);
                }
                ["type", pred, ..] => {
                    reserved(pred, line)?;
                    return Err(malformed("expected `type <pred> <type-spec>`"));
                }
                [kind @ ("unary" | "binary"), ..] => {
                    return Err(malformed(&format!("wrong number of fields for `{kind}`")));
                }
                [other, ..] => return Err(malformed(&format!("unknown directive `{other}`"))),
            }
        }
        b.build()
    }

    /// Renders the context in the KB TSV format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (pred, ty) in &self.schema {
            writeln!(out, "type\t{pred}\t{ty}").unwrap();
            if let Some(values) = self.unaries.get(pred) {
                for v in values {
                    writeln!(out, "unary\t{pred}\t{v}").unwrap();
                }
            }
            if let Some(pairs) = self.binaries.get(pred) {
                for (a, b) in pairs {
                    writeln!(out, "binary\t{pred}\t{a}\t{b}").unwrap();
                }
            }
        }
        out
    }
}

fn reserved(pred: &str, line: usize) -> Result<(), KbError> {
    if Builtin::from_name(pred).is_some() {
        Err(KbError::ReservedBuiltin { line, name: pred.to_string() })
    } else {
        Ok(())
    }
}

/// Accumulates facts and declarations, then validates them into a [`Context`].
#[derive(Debug, Default)]
pub struct ContextBuilder {
    id: String,
    unaries: BTreeMap<String, BTreeSet<Value>>,
    binaries: BTreeMap<String, BTreeSet<(Value, Value)>>,
    declared: BTreeMap<String, SemType>,
}

impl ContextBuilder {
    pub fn new(id: impl Into<String>) -> Self {
        ContextBuilder { id: id.into(), ..Default::default() }
    }

    pub fn unary(&mut self, pred: &str, value: Value) -> &mut Self {
        self.unaries.entry(pred.to_string()).or_default().insert(value);
        self
    }

    pub fn binary(&mut self, pred: &str, a: Value, b: Value) -> &mut Self {
        self.binaries.entry(pred.to_string()).or_default().insert((a, b));
        self
    }

    pub fn declare(&mut self, pred: &str, ty: SemType) -> &mut Self {
        self.declared.insert(pred.to_string(), ty);
        self
    }

    pub fn build(self) -> Result<Context, KbError> {
        let ContextBuilder { id, mut unaries, mut binaries, declared } = self;
        for name in Builtin::NAMES {
            if unaries.contains_key(name) || binaries.contains_key(name) || declared.contains_key(name) {
                return Err(KbError::ReservedBuiltin { line: 0, name: name.to_string() });
            }
        }
        if let Some(p) = unaries.keys().find(|p| binaries.contains_key(*p)) {
            return Err(KbError::Malformed { line: 0, message: format!("`{p}` used as both unary and binary") });
        }
        let mut schema = BTreeMap::new();
        for (pred, values) in &unaries {
            let ty = match declared.get(pred) {
                Some(t) => t.clone(),
                None => infer_element(pred, values.iter())?,
            };
            for v in values {
                if !conforms(v, &ty) {
                    return Err(violation(pred, v, &ty));
                }
            }
            schema.insert(pred.clone(), ty);
        }
        for (pred, pairs) in &binaries {
            let ty = match declared.get(pred) {
                Some(t) => t.clone(),
                None => SemType::relation(
                    infer_element(pred, pairs.iter().map(|p| &p.0))?,
                    infer_element(pred, pairs.iter().map(|p| &p.1))?,
                ),
            };
            let SemType::Relation(dom, range) = &ty else {
                return Err(KbError::TypeViolation {
                    pred: pred.clone(),
                    value: "<pair>".into(),
                    ty: ty.to_string(),
                });
            };
            for (a, b) in pairs {
                if !conforms(a, dom) {
                    return Err(violation(pred, a, &ty));
                }
                if !conforms(b, range) {
                    return Err(violation(pred, b, &ty));
                }
            }
            schema.insert(pred.clone(), ty);
        }
        // declarations without facts still define (empty) predicates
        for (pred, ty) in &declared {
            if schema.contains_key(pred) {
                continue;
            }
            if ty.is_relation() {
                binaries.insert(pred.clone(), BTreeSet::new());
            } else {
                unaries.insert(pred.clone(), BTreeSet::new());
            }
            schema.insert(pred.clone(), ty.clone());
        }

        let mut entity_classes = BTreeMap::new();
        for (pred, values) in &unaries {
            if let Some(SemType::Entity(class)) = schema.get(pred) {
                if class != ANY_CLASS {
                    for v in values {
                        if let Value::Entity(e) = v {
                            entity_classes.entry(e.clone()).or_insert_with(|| class.clone());
                        }
                    }
                }
            }
        }
        for (pred, pairs) in &binaries {
            if let Some(SemType::Relation(dom, range)) = schema.get(pred) {
                for (a, b) in pairs {
                    for (v, t) in [(a, dom), (b, range)] {
                        if let (Value::Entity(e), SemType::Entity(class)) = (v, t.as_ref()) {
                            if class != ANY_CLASS {
                                entity_classes.entry(e.clone()).or_insert_with(|| class.clone());
                            }
                        }
                    }
                }
            }
        }
        Ok(Context { id, unaries, binaries, schema, entity_classes })
    }
}

fn violation(pred: &str, v: &Value, ty: &SemType) -> KbError {
    KbError::TypeViolation { pred: pred.to_string(), value: v.to_string(), ty: ty.to_string() }
}

fn conforms(v: &Value, ty: &SemType) -> bool {
    matches!((v, ty), (Value::Number(_), SemType::Number) | (Value::Entity(_), SemType::Entity(_)))
}

fn infer_element<'a>(pred: &str, mut values: impl Iterator<Item = &'a Value>) -> Result<SemType, KbError> {
    let Some(first) = values.next() else {
        return Ok(SemType::entity(ANY_CLASS));
    };
    let ty = match first {
        Value::Number(_) => SemType::Number,
        Value::Entity(_) => SemType::entity(ANY_CLASS),
    };
    match values.find(|v| !conforms(v, &ty)) {
        Some(v) => Err(violation(pred, v, &ty)),
        None => Ok(ty),
    }
}

/// Loads a KB file; the context id is the file stem.
pub fn load_kb(path: impl AsRef<Path>) -> Result<Context, KbError> {
    let path = path.as_ref();
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("kb").to_string();
    Context::parse_tsv(id, &std::fs::read_to_string(path)?)
}

pub fn save_kb(c: &Context, path: impl AsRef<Path>) -> Result<(), KbError> {
    std::fs::write(path, c.to_tsv())?;
    Ok(())
}
