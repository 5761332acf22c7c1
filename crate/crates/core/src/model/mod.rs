//! Features, parameters and derivation scoring.

mod features;
mod params;
mod vector;

pub use features::{featurize, local_features, word_matches, MATCH_PREFIX};
pub use params::{
    load_params, log_sum_exp, params_from_str, params_to_string, save_params, score_linear, score_nn,
    softmax_distribution, ModelError, ModelScorer, NnParams, Params,
};
pub use vector::FeatureVector;
