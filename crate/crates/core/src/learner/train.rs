use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{example_gradient, example_objective, Optimizer, Updater};
use crate::grammar::Grammar;
use crate::kb::{Context, Dataset};
use crate::logic::{denotation_equals, execute, Denotation};
use crate::model::{FeatureVector, ModelScorer, NnParams, Params};
use crate::parser::{parse, BeamConfig, Derivation};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Constant step size.
    pub step_size: f64,
    pub optimizer: Optimizer,
    pub l1: f64,
    pub beam: BeamConfig,
    pub shuffle_seed: u64,
    /// Hidden units of the nonlinear scorer; `None` trains a linear model.
    pub nn_units: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            step_size: 0.1,
            optimizer: Optimizer::Sgd,
            l1: 0.0,
            beam: BeamConfig::default(),
            shuffle_seed: 0,
            nn_units: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.epochs < 1 {
            return Err("epochs must be at least 1".into());
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err("step size must be positive".into());
        }
        if !(self.l1 >= 0.0 && self.l1.is_finite()) {
            return Err("l1 must be non-negative".into());
        }
        if self.beam.beam_size < 1 {
            return Err("beam size must be at least 1".into());
        }
        if self.nn_units == Some(0) {
            return Err("nn needs at least one unit".into());
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean objective over examples that were not skipped.
    pub objective: f64,
    pub train_acc: f64,
    pub skipped: usize,
    pub nonzero_weights: usize,
    pub seconds: f64,
}

/// Whether each derivation's logical form executes to `target`.
pub fn consistency(derivations: &[Arc<Derivation>], ctx: &Context, target: &Denotation) -> Vec<bool> {
    derivations
        .iter()
        .map(|d| d.logical_form().and_then(|z| execute(z, ctx).ok()).is_some_and(|y| denotation_equals(&y, target)))
        .collect()
}

/// Maximizes the beam-approximated marginal likelihood of the targets.
pub fn train(data: &Dataset, grammar: &Grammar, cfg: &TrainConfig) -> (Params, Vec<EpochMetrics>) {
    train_with(data, grammar, cfg, |_| {})
}

/// Like [`train`], calling `on_epoch` as each epoch finishes.
pub fn train_with(
    data: &Dataset,
    grammar: &Grammar,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> (Params, Vec<EpochMetrics>) {
    let mut params = Params::default();
    if let Some(m) = cfg.nn_units {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed ^ 0x6e6e);
        params.nn = Some(NnParams {
            alpha: (0..m).map(|_| rng.gen_range(-0.1..0.1)).collect(),
            w: vec![FeatureVector::new(); m],
        });
    }
    let mut updater = Updater::new(cfg.optimizer, cfg.step_size, cfg.l1);
    let mut metrics = Vec::new();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let (mut objective, mut used, mut correct, mut skipped) = (0.0, 0usize, 0usize, 0usize);
        for i in order {
            let ex = &data.examples[i];
            let ctx = data.context_of(ex);
            let beam = {
                let view = |k: &str, w: f64| updater.current_weight(k, w);
                let scorer = ModelScorer { params: &params, ctx, weight_view: Some(&view) };
                parse(&ex.utterance, ctx, grammar, &scorer, cfg.beam)
            };
            let consistent = consistency(&beam, ctx, &ex.target);
            if consistent.first() == Some(&true) {
                correct += 1;
            }
            if !consistent.iter().any(|c| *c) {
                skipped += 1;
                continue;
            }
            for d in &beam {
                updater.settle(&mut params.linear, d.features.keys());
            }
            let phis: Vec<&FeatureVector> = beam.iter().map(|d| &d.features).collect();
            objective += example_objective(&phis, &consistent, &params).expect("has support");
            used += 1;
            let grad = example_gradient(&phis, &consistent, &params).expect("has support");
            updater.update(&mut params, &grad);
        }
        updater.flush(&mut params.linear);
        let m = EpochMetrics {
            epoch,
            objective: if used > 0 { objective / used as f64 } else { 0.0 },
            train_acc: if data.is_empty() { 0.0 } else { correct as f64 / data.len() as f64 },
            skipped,
            nonzero_weights: params.nonzero_weights(),
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&m);
        metrics.push(m);
    }
    (params, metrics)
}

/// Outcome of predicting one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub lf: Option<String>,
    pub denotation: Option<Denotation>,
    pub correct: bool,
}

/// Top-scoring derivation's answer for each example, in dataset order.
/// Examples are parsed in parallel on the current rayon pool.
pub fn predict(data: &Dataset, grammar: &Grammar, params: &Params, beam: BeamConfig) -> Vec<Prediction> {
    data.examples
        .par_iter()
        .map(|ex| {
            let ctx = data.context_of(ex);
            let top = parse(&ex.utterance, ctx, grammar, &ModelScorer::new(params, ctx), beam).into_iter().next();
            let lf = top.as_ref().map(|d| d.sem_key().to_string());
            let denotation = top.as_ref().and_then(|d| d.logical_form()).and_then(|z| execute(z, ctx).ok());
            let correct = denotation.as_ref().is_some_and(|y| denotation_equals(y, &ex.target));
            Prediction { lf, denotation, correct }
        })
        .collect()
}

/// Fraction of examples whose top derivation executes to the target; 0 for
/// an empty dataset.
pub fn evaluate(data: &Dataset, grammar: &Grammar, params: &Params, beam: BeamConfig) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let preds = predict(data, grammar, params, beam);
    preds.iter().filter(|p| p.correct).count() as f64 / preds.len() as f64
}
