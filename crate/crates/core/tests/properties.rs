mod common;

use common::*;

fn ok(r: Result<(), String>) {
    if let Err(e) = r {
        panic!("{e}");
    }
}

#[test]
fn lf_text_round_trips() {
    ok(prop_lf_round_trip());
}

#[test]
fn intersection_is_compositional() {
    ok(prop_compositionality());
}

#[test]
fn join_matches_brute_force() {
    ok(prop_join_oracle());
}

#[test]
fn well_typed_forms_do_not_mismatch() {
    ok(prop_type_soundness());
}

#[test]
fn substitution_avoids_capture() {
    ok(prop_capture_avoidance());
}

#[test]
fn shadowed_binders_fill_correctly() {
    ok(prop_ccg_shadowing());
}

#[test]
fn filled_binders_round_trip() {
    ok(prop_binder_filling_round_trip());
}

#[test]
fn softmax_is_shift_invariant() {
    ok(prop_softmax());
}

#[test]
fn score_is_linear_in_theta() {
    ok(prop_score_linearity());
}

#[test]
fn features_decompose_over_children() {
    ok(prop_feature_decomposition());
}

#[test]
fn derivations_partition_their_span() {
    ok(prop_span_partition());
}

#[test]
fn wide_beam_equals_enumeration_on_random_grammars() {
    ok(prop_oracle_equivalence());
}

#[test]
fn wide_beam_equals_enumeration_on_fixtures() {
    for (name, g, ctx, x) in fixture_instances() {
        let n = beam_matches_oracle(&x, &ctx, &g, 2).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(n.is_some_and(|n| n > 0), "{name}: no derivations or cap hit");
    }
}

#[test]
fn larger_beams_keep_logical_forms() {
    ok(prop_beam_monotonicity());
}

#[test]
fn parsing_is_deterministic() {
    ok(prop_determinism());
}

#[test]
fn posterior_is_supported_on_consistent() {
    ok(prop_posterior());
}

#[test]
fn linear_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let case = gradient_case(seed);
        let err = gradient_error(&case, 1e-5);
        assert!(err <= 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn nonlinear_gradient_matches_finite_differences() {
    ok(prop_nn_gradient());
}

#[test]
fn small_step_increases_objective() {
    ok(prop_small_step_ascends());
}

#[test]
fn large_penalty_zeroes_weights() {
    ok(prop_l1_totality());
}

#[test]
fn training_is_deterministic() {
    ok(training_is_reproducible());
}


#[test]
fn tokenization_is_idempotent() {
    ok(prop_tokenize_idempotent());
}

#[test]
fn kb_survives_save_and_load() {
    ok(prop_kb_round_trip());
}
