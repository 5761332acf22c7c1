//! Weakly supervised training and evaluation.

mod objective;
mod optim;
mod train;

pub use objective::{consistent_posterior, example_gradient, example_objective, Gradient, LearnError};
pub use optim::{
    adagrad_step, l1_prox, sgd_step, soft_threshold, Optimizer, OptimizerState, Updater, ADAGRAD_EPSILON,
};
pub use train::{consistency, evaluate, predict, train, train_with, EpochMetrics, Prediction, TrainConfig};
