use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::model::{FeatureVector, Params};

use super::Gradient;

/// AdaGrad denominator offset.
pub const ADAGRAD_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    #[default]
    Sgd,
    AdaGrad,
}

impl FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            "adagrad" => Ok(Optimizer::AdaGrad),
            other => Err(format!("unknown optimizer `{other}` (expected sgd or adagrad)")),
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::AdaGrad => "adagrad",
        })
    }
}

/// Per-key optimizer bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct OptimizerState {
    /// AdaGrad accumulators.
    pub sum_squared_grads: HashMap<String, f64>,
    /// Update count up to which each key's L1 shrinkage has been applied.
    pub lazy_l1: HashMap<String, u64>,
    /// Updates performed so far.
    pub step: u64,
}

/// `theta += eta * grad`
pub fn sgd_step(theta: &mut FeatureVector, grad: &FeatureVector, eta: f64) {
    theta.add_scaled(grad, eta);
}

/// Per-key adaptive step: `G_k += g_k^2; theta_k += eta * g_k / sqrt(G_k + eps)`.
pub fn adagrad_step(theta: &mut FeatureVector, grad: &FeatureVector, state: &mut OptimizerState, eta: f64) {
    for (k, g) in grad.iter() {
        theta.add(k, adagrad_delta(state, k, g, eta));
    }
}

fn adagrad_delta(state: &mut OptimizerState, key: &str, g: f64, eta: f64) -> f64 {
    if g == 0.0 {
        return 0.0;
    }
    let acc = match state.sum_squared_grads.get_mut(key) {
        Some(a) => a,
        None => state.sum_squared_grads.entry(key.to_string()).or_insert(0.0),
    };
    *acc += g * g;
    eta * g / (*acc + ADAGRAD_EPSILON).sqrt()
}

/// `sign(x) * max(0, |x| - t)`
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Soft-thresholds every weight by `lambda * effective_step`.
pub fn l1_prox(theta: &mut FeatureVector, lambda: f64, effective_step: f64) {
    let t = lambda * effective_step;
    if t == 0.0 {
        return;
    }
    let keys: Vec<String> = theta.keys().map(str::to_string).collect();
    for k in keys {
        let v = soft_threshold(theta.get(&k), t);
        theta.set(&k, v);
    }
}

/// Gradient ascent with proximal L1 shrinkage applied lazily.
///
/// Each update shrinks every linear weight by `lambda` times that key's step
/// size. A key untouched by the gradient keeps a constant step size, and
/// repeated soft-thresholding composes additively, so the shrinkage owed to
/// a key can be settled in one go whenever it is next read or updated.
#[derive(Debug, Clone)]
pub struct Updater {
    pub optimizer: Optimizer,
    pub eta: f64,
    pub lambda: f64,
    pub state: OptimizerState,
}

impl Updater {
    pub fn new(optimizer: Optimizer, eta: f64, lambda: f64) -> Self {
        Updater { optimizer, eta, lambda, state: OptimizerState::default() }
    }

    /// Step size the L1 penalty is scaled by for `key`.
    fn effective_step(&self, key: &str) -> f64 {
        match self.optimizer {
            Optimizer::Sgd => self.eta,
            Optimizer::AdaGrad => {
                let acc = self.state.sum_squared_grads.get(key).copied().unwrap_or(0.0);
                self.eta / (acc + ADAGRAD_EPSILON).sqrt()
            }
        }
    }

    fn pending(&self, key: &str) -> f64 {
        let last = self.state.lazy_l1.get(key).copied().unwrap_or(self.state.step);
        self.lambda * self.effective_step(key) * (self.state.step - last) as f64
    }

    /// The weight `key` would have under eager shrinkage.
    pub fn current_weight(&self, key: &str, stored: f64) -> f64 {
        if self.lambda == 0.0 || stored == 0.0 {
            return stored;
        }
        soft_threshold(stored, self.pending(key))
    }

    /// Applies the shrinkage owed to each of `keys`.
    pub fn settle<'k>(&mut self, theta: &mut FeatureVector, keys: impl IntoIterator<Item = &'k str>) {
        if self.lambda == 0.0 {
            return;
        }
        for k in keys {
            let v = theta.get(k);
            if v != 0.0 {
                let shrunk = soft_threshold(v, self.pending(k));
                theta.set(k, shrunk);
            }
            match self.state.lazy_l1.get_mut(k) {
                Some(last) => *last = self.state.step,
                None => {
                    self.state.lazy_l1.insert(k.to_string(), self.state.step);
                }
            }
        }
    }

    /// Settles every key; afterwards the stored weights equal eager ones.
    pub fn flush(&mut self, theta: &mut FeatureVector) {
        let keys: Vec<String> = theta.keys().map(str::to_string).collect();
        self.settle(theta, keys.iter().map(String::as_str));
    }

    /// One ascent step followed by this step's shrinkage on the touched keys.
    pub fn update(&mut self, params: &mut Params, grad: &Gradient) {
        let keys: Vec<String> = grad.linear.keys().map(str::to_string).collect();
        self.settle(&mut params.linear, keys.iter().map(String::as_str));
        match self.optimizer {
            Optimizer::Sgd => sgd_step(&mut params.linear, &grad.linear, self.eta),
            Optimizer::AdaGrad => adagrad_step(&mut params.linear, &grad.linear, &mut self.state, self.eta),
        }
        if let Some(nn) = &mut params.nn {
            for (i, g) in grad.alpha.iter().enumerate() {
                nn.alpha[i] += self.delta(&format!("\u{1}alpha\u{1}{i}"), *g);
            }
            for (i, gw) in grad.w.iter().enumerate() {
                for (k, g) in gw.iter() {
                    let d = self.delta(&format!("\u{1}w\u{1}{i}\u{1}{k}"), g);
                    nn.w[i].add(k, d);
                }
            }
        }
        self.state.step += 1;
        if self.lambda > 0.0 {
            for k in &keys {
                let shrunk = soft_threshold(params.linear.get(k), self.lambda * self.effective_step(k));
                params.linear.set(k, shrunk);
                self.state.lazy_l1.insert(k.clone(), self.state.step);
            }
        }
    }

    fn delta(&mut self, key: &str, g: f64) -> f64 {
        match self.optimizer {
            Optimizer::Sgd => self.eta * g,
            Optimizer::AdaGrad => adagrad_delta(&mut self.state, key, g, self.eta),
        }
    }
}
