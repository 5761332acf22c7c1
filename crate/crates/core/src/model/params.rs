use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::features::local_features;
use super::FeatureVector;
use crate::kb::Context;
use crate::parser::{Derivation, DerivationScorer};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("softmax over an empty list")]
    EmptyDistribution,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hidden layer of the nonlinear scorer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NnParams {
    pub alpha: Vec<f64>,
    pub w: Vec<FeatureVector>,
}

impl NnParams {
    pub fn m(&self) -> usize {
        self.alpha.len()
    }
}

/// Model parameters: linear weights and an optional nonlinear layer. When
/// both are present the score is their sum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub linear: FeatureVector,
    pub nn: Option<NnParams>,
}

impl Params {
    pub fn score(&self, phi: &FeatureVector) -> f64 {
        let nn = self.nn.as_ref().map_or(0.0, |nn| score_nn(phi, nn));
        score_linear(phi, &self.linear) + nn
    }

    pub fn nonzero_weights(&self) -> usize {
        self.linear.len()
    }
}

pub fn score_linear(phi: &FeatureVector, theta: &FeatureVector) -> f64 {
    phi.dot(theta)
}

/// `sum_i alpha_i * tanh(phi . w_i)`
pub fn score_nn(phi: &FeatureVector, nn: &NnParams) -> f64 {
    nn.alpha.iter().zip(&nn.w).map(|(a, w)| a * phi.dot(w).tanh()).sum()
}

/// Normalized exponentiated scores, computed with the maximum subtracted.
pub fn softmax_distribution(scores: &[f64]) -> Result<Vec<f64>, ModelError> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.is_empty() {
        return Err(ModelError::EmptyDistribution);
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// `log sum exp`, stable for any finite input.
pub fn log_sum_exp(scores: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = scores.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + scores.into_iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// Weights file text: sorted `key<TAB>weight` lines, then an optional `#nn`
/// section with `alpha<TAB>i<TAB>v` and `w<TAB>i<TAB>key<TAB>v` lines.
pub fn params_to_string(p: &Params) -> String {
    let mut out = String::new();
    for (k, v) in p.linear.iter() {
        writeln!(out, "{k}\t{v:?}").unwrap();
    }
    if let Some(nn) = &p.nn {
        writeln!(out, "#nn m={}", nn.m()).unwrap();
        for (i, a) in nn.alpha.iter().enumerate() {
            writeln!(out, "alpha\t{i}\t{a:?}").unwrap();
        }
        for (i, w) in nn.w.iter().enumerate() {
            for (k, v) in w.iter() {
                writeln!(out, "w\t{i}\t{k}\t{v:?}").unwrap();
            }
        }
    }
    out
}

fn number(line: usize, s: &str) -> Result<f64, ModelError> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ModelError::Malformed { line, message: format!("bad weight `{s}`") })
}

fn index(line: usize, s: &str, m: usize) -> Result<usize, ModelError> {
    s.parse::<usize>()
        .ok()
        .filter(|i| *i < m)
        .ok_or_else(|| ModelError::Malformed { line, message: format!("bad unit index `{s}`") })
}

pub fn params_from_str(src: &str) -> Result<Params, ModelError> {
    let mut linear: BTreeMap<String, f64> = BTreeMap::new();
    let mut nn: Option<(Vec<Option<f64>>, Vec<BTreeMap<String, f64>>)> = None;
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(rest) = raw.strip_prefix("#nn") {
            if nn.is_some() {
                return Err(ModelError::Malformed { line, message: "second #nn section".into() });
            }
            let m = rest
                .trim()
                .strip_prefix("m=")
                .and_then(|m| m.parse::<usize>().ok())
                .filter(|m| *m >= 1)
                .ok_or_else(|| ModelError::Malformed { line, message: "expected `#nn m=<m>` with m >= 1".into() })?;
            nn = Some((vec![None; m], vec![BTreeMap::new(); m]));
            continue;
        }
        if raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        match (&mut nn, fields.as_slice()) {
            (None, [key, v]) => {
                if linear.insert(key.to_string(), number(line, v)?).is_some() {
                    return Err(ModelError::DuplicateKey { line, key: key.to_string() });
                }
            }
            (Some((alpha, _)), ["alpha", i, v]) => {
                let i = index(line, i, alpha.len())?;
                if alpha[i].replace(number(line, v)?).is_some() {
                    return Err(ModelError::DuplicateKey { line, key: format!("alpha {i}") });
                }
            }
            (Some((_, w)), ["w", i, key, v]) => {
                let i = index(line, i, w.len())?;
                if w[i].insert(key.to_string(), number(line, v)?).is_some() {
                    return Err(ModelError::DuplicateKey { line, key: format!("w {i} {key}") });
                }
            }
            _ => return Err(ModelError::Malformed { line, message: format!("unrecognized line `{raw}`") }),
        }
    }
    let nn = match nn {
        None => None,
        Some((alpha, w)) => {
            let alpha = alpha
                .into_iter()
                .enumerate()
                .map(|(i, a)| {
                    a.ok_or_else(|| ModelError::Malformed { line: 0, message: format!("missing alpha {i}") })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(NnParams { alpha, w: w.into_iter().map(|m| m.into_iter().collect()).collect() })
        }
    };
    Ok(Params { linear: linear.into_iter().collect(), nn })
}

pub fn save_params(p: &Params, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, params_to_string(p))?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<Params, ModelError> {
    params_from_str(&std::fs::read_to_string(path)?)
}

/// Scores derivations during parsing: features accumulate bottom-up and the
/// score is recomputed from the full vector at every node.
pub struct ModelScorer<'a> {
    pub params: &'a Params,
    pub ctx: &'a Context,
    /// Optional view applied to each linear weight before use.
    pub weight_view: Option<&'a (dyn Fn(&str, f64) -> f64 + Sync)>,
}

impl<'a> ModelScorer<'a> {
    pub fn new(params: &'a Params, ctx: &'a Context) -> Self {
        ModelScorer { params, ctx, weight_view: None }
    }

    pub fn score_features(&self, phi: &FeatureVector) -> f64 {
        match self.weight_view {
            None => self.params.score(phi),
            Some(view) => {
                let linear: f64 = phi.iter().map(|(k, v)| v * view(k, self.params.linear.get(k))).sum();
                linear + self.params.nn.as_ref().map_or(0.0, |nn| score_nn(phi, nn))
            }
        }
    }
}

impl DerivationScorer for ModelScorer<'_> {
    fn score(&self, tokens: &[String], d: &mut Derivation) {
        let mut phi = local_features(tokens, self.ctx, d);
        for c in &d.children {
            phi.add_scaled(&c.features, 1.0);
        }
        d.score = self.score_features(&phi);
        d.features = phi;
    }
}
