use thiserror::Error;

use crate::model::{log_sum_exp, softmax_distribution, FeatureVector, Params};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("{left} probabilities but {right} consistency flags")]
    LengthMismatch { left: usize, right: usize },
}

/// The model distribution restricted to consistent derivations and
/// renormalized. `Ok(None)` when no consistent derivation has mass.
pub fn consistent_posterior(p: &[f64], consistent: &[bool]) -> Result<Option<Vec<f64>>, LearnError> {
    if p.len() != consistent.len() {
        return Err(LearnError::LengthMismatch { left: p.len(), right: consistent.len() });
    }
    let z: f64 = p.iter().zip(consistent).filter(|(_, c)| **c).map(|(p, _)| p).sum();
    if z <= 0.0 {
        return Ok(None);
    }
    Ok(Some(p.iter().zip(consistent).map(|(p, c)| if *c { p / z } else { 0.0 }).collect()))
}

/// Log of the probability mass on consistent derivations, with the model
/// normalized over `phis`. `None` when nothing is consistent.
pub fn example_objective(phis: &[&FeatureVector], consistent: &[bool], params: &Params) -> Option<f64> {
    assert_eq!(phis.len(), consistent.len());
    if !consistent.iter().any(|c| *c) {
        return None;
    }
    let scores: Vec<f64> = phis.iter().map(|phi| params.score(phi)).collect();
    let good = scores.iter().zip(consistent).filter(|(_, c)| **c).map(|(s, _)| *s);
    Some(log_sum_exp(good) - log_sum_exp(scores.iter().copied()))
}

/// Gradient of [`example_objective`] with respect to every parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub linear: FeatureVector,
    pub alpha: Vec<f64>,
    pub w: Vec<FeatureVector>,
}

/// `sum_d (q(d) - p(d)) * d score / d params`. `None` when nothing is consistent.
pub fn example_gradient(phis: &[&FeatureVector], consistent: &[bool], params: &Params) -> Option<Gradient> {
    assert_eq!(phis.len(), consistent.len());
    if phis.is_empty() {
        return None;
    }
    let scores: Vec<f64> = phis.iter().map(|phi| params.score(phi)).collect();
    let p = softmax_distribution(&scores).expect("non-empty");
    let q = consistent_posterior(&p, consistent).expect("equal lengths")?;
    let mut g = Gradient::default();
    if let Some(nn) = &params.nn {
        g.alpha = vec![0.0; nn.m()];
        g.w = vec![FeatureVector::new(); nn.m()];
    }
    for ((phi, q), p) in phis.iter().zip(&q).zip(&p) {
        let r = q - p;
        if r == 0.0 {
            continue;
        }
        g.linear.add_scaled(phi, r);
        if let Some(nn) = &params.nn {
            for i in 0..nn.m() {
                let h = phi.dot(&nn.w[i]).tanh();
                g.alpha[i] += r * h;
                g.w[i].add_scaled(phi, r * nn.alpha[i] * (1.0 - h * h));
            }
        }
    }
    Some(g)
}
