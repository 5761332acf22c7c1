//! Generators, reference implementations and property checks shared by the
//! property tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semparse::grammar::{fill_binder, instantiate_template, Grammar, SemValue, Template, ARITH_GRAMMAR, CCG_GRAMMAR, CRUDE_GRAMMAR, FLOATING_GRAMMAR, RUNNING_GRAMMAR};
use semparse::kb::{arith_questions, make_arith_domain, tokenize, Context, ContextBuilder};
use semparse::learner::{consistency, example_gradient, train, TrainConfig};
use semparse::logic::{
    denotation_equals, execute, intersect, parse_lf, serialize_lf, typecheck, Denotation, ExecError, LogicalForm,
    SemType, Value,
};
use semparse::model::{featurize, softmax_distribution, FeatureVector, ModelScorer, NnParams, Params};
use semparse::parser::{check_span_partition, enumerate_derivations, parse, BeamConfig, Derivation};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn primes_kb() -> Context {
    semparse::kb::load_kb(fixture("primes.tsv")).expect("fixture kb")
}

pub const RUNNING_UTTERANCE: &str = "What is the largest prime less than 10?";

/// Runs `test` over `cases` values of `strategy` with a fixed seed.
pub fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- contexts

/// Small random KB: number sets `p0..p2`, entity class `city`, relations
/// `near` (number -> number) and `in` (city -> country).
pub fn random_context(seed: u64) -> Context {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ContextBuilder::new("rand");
    for p in ["p0", "p1", "p2"] {
        b.declare(p, SemType::Number);
        for n in 1..=12 {
            if rng.gen_bool(0.4) {
                b.unary(p, Value::number(n as f64));
            }
        }
    }
    b.declare("city", SemType::entity("city"));
    b.declare("country", SemType::entity("country"));
    b.declare("near", SemType::relation(SemType::Number, SemType::Number));
    b.declare("in", SemType::relation(SemType::entity("city"), SemType::entity("country")));
    for c in ["a", "b", "c", "d"] {
        if rng.gen_bool(0.7) {
            b.unary("city", Value::entity(c));
        }
    }
    for k in ["x", "y"] {
        b.unary("country", Value::entity(k));
    }
    for _ in 0..rng.gen_range(0..12) {
        b.binary("near", Value::number(rng.gen_range(1..=12) as f64), Value::number(rng.gen_range(1..=12) as f64));
    }
    for c in ["a", "b", "c"] {
        if rng.gen_bool(0.6) {
            b.binary("in", Value::entity(c), Value::entity(["x", "y"][rng.gen_range(0..2)]));
        }
    }
    b.build().expect("random context")
}

// ---------------------------------------------------------- logical forms

/// Random logical forms over the predicates of [`random_context`], not
/// necessarily well-typed.
pub fn arb_lf() -> impl Strategy<Value = LogicalForm> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["p0", "p1", "p2", "city", "country"]).prop_map(LogicalForm::unary),
        (0i32..14).prop_map(|n| LogicalForm::number(n as f64)),
        prop::sample::select(vec!["a", "b", "x"]).prop_map(LogicalForm::entity),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["less", "more", "near", "in"]), inner.clone())
                .prop_map(|(r, z)| LogicalForm::join(LogicalForm::rel(r), z)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LogicalForm::and(a, b)),
            inner.clone().prop_map(LogicalForm::count),
            inner.clone().prop_map(LogicalForm::max),
            inner.prop_map(LogicalForm::min),
        ]
    })
}

/// Membership test against a denotation, used to compare with brute force.
fn members(d: &Denotation, universe: &BTreeSet<Value>) -> BTreeSet<Value> {
    match d {
        Denotation::FiniteSet(s) => s.clone(),
        Denotation::Interval { .. } => {
            universe.iter().filter(|v| v.as_number().is_some_and(|x| d.contains_number(x))).cloned().collect()
        }
    }
}

fn universe(c: &Context) -> BTreeSet<Value> {
    let mut u: BTreeSet<Value> = (-2..=16).map(|n| Value::number(n as f64)).collect();
    for vs in c.unaries().values() {
        u.extend(vs.iter().cloned());
    }
    for ps in c.binaries().values() {
        for (a, b) in ps {
            u.insert(a.clone());
            u.insert(b.clone());
        }
    }
    u
}

pub fn prop_lf_round_trip() -> Result<(), String> {
    check(256, arb_lf(), |z| {
        let text = serialize_lf(&z);
        let back = parse_lf(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back, z);
        Ok(())
    })
}

pub fn prop_compositionality() -> Result<(), String> {
    check(256, (arb_lf(), arb_lf(), arb_lf(), any::<u64>()), |(a, b, z3, seed)| {
        let c = random_context(seed);
        let u = universe(&c);
        let (Ok(da), Ok(db)) = (execute(&a, &c), execute(&b, &c)) else { return Ok(()) };
        let both = execute(&LogicalForm::and(a.clone(), b.clone()), &c).expect("operands executed");
        let brute: BTreeSet<Value> = members(&da, &u).intersection(&members(&db, &u)).cloned().collect();
        prop_assert_eq!(members(&both, &u), brute);
        let swapped = execute(&LogicalForm::and(b.clone(), a.clone()), &c).unwrap();
        prop_assert!(denotation_equals(&both, &swapped));
        if let Ok(d3) = execute(&z3, &c) {
            let left = intersect(&intersect(&da, &db), &d3);
            let right = intersect(&da, &intersect(&db, &d3));
            prop_assert_eq!(members(&left, &u), members(&right, &u));
        }
        prop_assert_eq!(execute(&a, &c), Ok(da));
        Ok(())
    })
}

pub fn prop_join_oracle() -> Result<(), String> {
    check(256, (arb_lf(), prop::sample::select(vec!["near", "in"]), any::<u64>()), |(z, r, seed)| {
        let c = random_context(seed);
        let u = universe(&c);
        let Ok(dz) = execute(&z, &c) else { return Ok(()) };
        let Ok(joined) = execute(&LogicalForm::join(LogicalForm::rel(r), z), &c) else { return Ok(()) };
        let arg = members(&dz, &u);
        let brute: BTreeSet<Value> =
            c.binary(r).unwrap().iter().filter(|(_, y)| arg.contains(y)).map(|(x, _)| x.clone()).collect();
        prop_assert_eq!(members(&joined, &u), brute);
        Ok(())
    })
}

pub fn prop_type_soundness() -> Result<(), String> {
    check(512, (arb_lf(), any::<u64>()), |(z, seed)| {
        let c = random_context(seed);
        if typecheck(&z, &c).is_ok() {
            if let Err(ExecError::TypeMismatch(m)) = execute(&z, &c) {
                return Err(TestCaseError::fail(format!("{z} typechecks but execution failed: {m}")));
            }
        }
        Ok(())
    })
}

// -------------------------------------------------------------- templates

fn arb_open_term() -> impl Strategy<Value = Template> {
    let var = prop::sample::select(vec!["x", "y", "z"]);
    let leaf = prop_oneof![
        var.clone().prop_map(|v| Template::Var(v.to_string())),
        prop::sample::select(vec!["p0", "p1"]).prop_map(|p| Template::Unary(p.to_string())),
    ];
    leaf.prop_recursive(4, 20, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Template::And(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|t| Template::Count(Box::new(t))),
            (var.clone(), inner).prop_map(|(v, t)| Template::Lam(v.to_string(), Box::new(t))),
        ]
    })
}

/// Free variables computed directly from the definition.
fn reference_free_vars(t: &Template, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Template::Var(v) if !bound.contains(v) => {
            out.insert(v.clone());
        }
        Template::Lam(v, body) => {
            bound.push(v.clone());
            reference_free_vars(body, bound, out);
            bound.pop();
        }
        Template::And(a, b) | Template::Join(a, b) | Template::App(a, b) => {
            reference_free_vars(a, bound, out);
            reference_free_vars(b, bound, out);
        }
        Template::Count(a) | Template::Max(a) | Template::Min(a) => reference_free_vars(a, bound, out),
        _ => {}
    }
}

fn fv(t: &Template) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    reference_free_vars(t, &mut Vec::new(), &mut out);
    out
}

/// Replaces free variables by closed markers.
fn close_with_markers(t: &Template) -> Template {
    let mut out = t.clone();
    for v in fv(t) {
        out = naive_subst(&out, &v, &Template::Entity(format!("free_{v}")));
    }
    out
}

/// Textbook substitution with no renaming; correct whenever `value` is closed.
fn naive_subst(t: &Template, var: &str, value: &Template) -> Template {
    let go = |x: &Template| Box::new(naive_subst(x, var, value));
    match t {
        Template::Var(v) if v == var => value.clone(),
        Template::Lam(v, _) if v == var => t.clone(),
        Template::Lam(v, body) => Template::Lam(v.clone(), go(body)),
        Template::And(a, b) => Template::And(go(a), go(b)),
        Template::Join(a, b) => Template::Join(go(a), go(b)),
        Template::App(a, b) => Template::App(go(a), go(b)),
        Template::Count(a) => Template::Count(go(a)),
        Template::Max(a) => Template::Max(go(a)),
        Template::Min(a) => Template::Min(go(a)),
        other => other.clone(),
    }
}

/// Capture-avoiding substitution keeps every free variable of the argument
/// free, and agrees with plain substitution when the argument is closed.
pub fn prop_capture_avoidance() -> Result<(), String> {
    check(512, (arb_open_term(), arb_open_term(), prop::sample::select(vec!["x", "y", "z"])), |(t, v, var)| {
        let out = t.subst(var, &v);
        let mut expected: BTreeSet<String> = fv(&t);
        if expected.remove(var) {
            expected.extend(fv(&v));
        }
        prop_assert_eq!(fv(&out), expected, "t = {}, v = {}", t, v);
        let closed = close_with_markers(&v);
        prop_assert_eq!(t.subst(var, &closed), naive_subst(&t, var, &closed));
        Ok(())
    })
}

/// Nested same-named binders in CCG-style entries.
pub fn prop_ccg_shadowing() -> Result<(), String> {
    check(128, (0i32..20, prop::sample::select(vec!["p0", "p1", "p2"])), |(n, p)| {
        let f = Template::parse("lam x. lam y. and(y, join(less, x))").unwrap();
        let g = Template::parse("lam x. lam x. and(x, count(x))").unwrap();
        let num = SemValue::Complete(LogicalForm::number(n as f64));
        let set = SemValue::Complete(LogicalForm::unary(p));
        let once = fill_binder(&f.into_value().unwrap(), &num).unwrap();
        let done = fill_binder(&once, &set).unwrap();
        let want = LogicalForm::and(LogicalForm::unary(p), LogicalForm::join(LogicalForm::rel("less"), LogicalForm::number(n as f64)));
        prop_assert_eq!(done.logical_form(), Some(&want));
        let inner = fill_binder(&fill_binder(&g.into_value().unwrap(), &num).unwrap(), &set).unwrap();
        let want = LogicalForm::and(LogicalForm::unary(p), LogicalForm::count(LogicalForm::unary(p)));
        prop_assert_eq!(inner.logical_form(), Some(&want));
        // a child filled into a template under a binder of the same name
        let h = Template::parse("lam x. and(x, $1)").unwrap();
        let partial = instantiate_template(&h, &[set.clone()]).unwrap();
        let done = fill_binder(&partial, &num).unwrap();
        let want = LogicalForm::and(LogicalForm::number(n as f64), LogicalForm::unary(p));
        prop_assert_eq!(done.logical_form(), Some(&want));
        Ok(())
    })
}

/// Filling every binder of a partial value with ground terms gives a
/// complete form whose text parses back to itself.
pub fn prop_binder_filling_round_trip() -> Result<(), String> {
    check(256, (prop::collection::vec(arb_lf(), 1..=3), prop::sample::select(vec!["x", "y"])), |(args, name)| {
        let mut body = Template::Unary("p0".into());
        let mut names = Vec::new();
        for i in 0..args.len() {
            let v = if i % 2 == 0 { name.to_string() } else { format!("{name}{i}") };
            body = Template::And(Box::new(body), Box::new(Template::Var(v.clone())));
            names.push(v);
        }
        let mut t = body;
        for v in names.iter().rev() {
            t = Template::Lam(v.clone(), Box::new(t));
        }
        let mut value = t.into_value().map_err(|e| TestCaseError::fail(e.to_string()))?;
        for a in &args {
            value = fill_binder(&value, &SemValue::Complete(a.clone())).map_err(|e| TestCaseError::fail(e.to_string()))?;
        }
        let z = value.logical_form().cloned().ok_or_else(|| TestCaseError::fail("still partial"))?;
        prop_assert_eq!(parse_lf(&serialize_lf(&z)).unwrap(), z);
        Ok(())
    })
}

// ------------------------------------------------------------------ model

pub fn prop_softmax() -> Result<(), String> {
    let scores = prop::collection::vec(-50.0f64..50.0, 1..12);
    check(512, (scores, -1e3f64..1e3), |(s, shift)| {
        let p = softmax_distribution(&s).unwrap();
        let shifted: Vec<f64> = s.iter().map(|x| x + shift).collect();
        let q = softmax_distribution(&shifted).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|x| *x > 0.0 || s.iter().cloned().fold(f64::MIN, f64::max) - 700.0 > 0.0));
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
        let argmax = |v: &[f64]| v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        prop_assert_eq!(argmax(&p), argmax(&q));
        Ok(())
    })
}

pub fn prop_score_linearity() -> Result<(), String> {
    let fv_strategy = || prop::collection::btree_map(prop::sample::select(vec!["a", "b", "c", "d"]), -5.0f64..5.0, 0..4);
    check(256, (fv_strategy(), fv_strategy(), fv_strategy(), -3.0f64..3.0, -3.0f64..3.0), |(phi, t1, t2, a, b)| {
        let to_fv = |m: BTreeMap<&str, f64>| -> FeatureVector { m.into_iter().collect() };
        let (phi, t1, t2) = (to_fv(phi), to_fv(t1), to_fv(t2));
        let mut combo = FeatureVector::new();
        combo.add_scaled(&t1, a);
        combo.add_scaled(&t2, b);
        let lhs = semparse::model::score_linear(&phi, &combo);
        let rhs = a * semparse::model::score_linear(&phi, &t1) + b * semparse::model::score_linear(&phi, &t2);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        Ok(())
    })
}

fn random_theta(seed: u64, keys: impl IntoIterator<Item = String>) -> FeatureVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    keys.into_iter().map(|k| (k, rng.gen_range(-1.0..1.0))).collect()
}

/// Arith questions with a random subset of question templates.
fn arith_utterance(seed: u64) -> Vec<String> {
    let qs = arith_questions();
    tokenize(&qs[(seed as usize) % qs.len()].text)
}

/// Features assigned during search equal those recomputed from the finished
/// tree, rule counts decompose over children, and scores are not stale.
pub fn prop_feature_decomposition() -> Result<(), String> {
    let ctx = semparse::kb::arith_context();
    let g = Grammar::parse(ARITH_GRAMMAR).unwrap();
    check(48, (any::<u64>(), any::<u64>()), |(q, seed)| {
        let x = arith_utterance(q);
        let keys = (1..=g.rules.len()).map(|i| format!("rule:{i}")).chain(["match".to_string(), "exec:ok".into()]);
        let params = Params { linear: random_theta(seed, keys), nn: None };
        let out = parse(&x, &ctx, &g, &ModelScorer::new(&params, &ctx), BeamConfig { beam_size: 20, max_floating: 2 });
        for d in &out {
            for node in d.walk() {
                prop_assert_eq!(&featurize(&x, &ctx, node), &node.features);
                let mut sum = FeatureVector::new();
                for c in &node.children {
                    sum.add_scaled(&c.features.restrict("rule:"), 1.0);
                }
                if node.rule_id() > 0 {
                    sum.add(&format!("rule:{}", node.rule_id()), 1.0);
                }
                prop_assert_eq!(node.features.restrict("rule:"), sum);
                let recomputed = params.score(&featurize(&x, &ctx, node));
                prop_assert!((recomputed - node.score).abs() <= 1e-9, "{} vs {}", recomputed, node.score);
            }
        }
        Ok(())
    })
}

// ----------------------------------------------------------------- parser

/// A small random grammar, context and utterance.
pub struct Instance {
    pub grammar: Grammar,
    pub grammar_text: String,
    pub ctx: Context,
    pub tokens: Vec<String>,
}

const CONTENT_WORDS: [&str; 4] = ["alpha", "beta", "gamma", "delta"];

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    for w in CONTENT_WORDS {
        for _ in 0..rng.gen_range(1..=2) {
            lines.push(format!("rule N := \"{w}\" => const(p{})", rng.gen_range(0..3)));
        }
    }
    lines.push("rule Rel := \"under\" => rel(less)".into());
    lines.push("rule Rel := \"over\" => rel(more)".into());
    if rng.gen_bool(0.5) {
        lines.push("rule Rel := \"under\" => rel(more)".into());
    }
    lines.push("rule N := Rel NP => join($1, $2)".into());
    lines.push("rule N := N N => and($1, $2)".into());
    lines.push("rule ROOT := N => $1".into());
    let optional = [
        "rule N := \"most\" N => max($1)",
        "rule N := \"many\" N => count($1)",
        "rule N := N \"and\" N => and($1, $2)",
        "float N => const(p0)",
        "float Rel => rel(less)",
        "rule N := _ N => $1",
        "rule NP := N => $1",
    ];
    for rule in optional {
        if lines.len() < 15 && rng.gen_bool(0.4) {
            lines.push(rule.into());
        }
    }
    let text = lines.join("\n");
    let grammar = Grammar::parse(&text).expect("generated grammar");
    let vocab = ["alpha", "beta", "gamma", "delta", "under", "over", "most", "many", "and", "3", "7", "10"];
    let len = rng.gen_range(1..=8);
    let tokens = (0..len).map(|_| vocab.choose(&mut rng).unwrap().to_string()).collect();
    Instance { grammar, grammar_text: text, ctx: random_context(rng.gen()), tokens }
}

type LfBag = BTreeMap<(String, String), usize>;

fn bag(ds: &[Arc<Derivation>]) -> LfBag {
    let mut m = BTreeMap::new();
    for d in ds {
        *m.entry((d.category.to_string(), d.sem_key().to_string())).or_insert(0) += 1;
    }
    m
}

/// Compares a wide beam with the exhaustive enumerator. Returns the number
/// of derivations, or `None` when the enumerator hit its cap.
pub fn beam_matches_oracle(x: &[String], ctx: &Context, g: &Grammar, max_floating: usize) -> Result<Option<usize>, String> {
    let cfg = BeamConfig { beam_size: 10_000, max_floating };
    let Ok(oracle) = enumerate_derivations(x, ctx, g, cfg, 200_000) else { return Ok(None) };
    let beam = parse(x, ctx, g, &|_: &Derivation| 0.0, cfg);
    if bag(&beam) != bag(&oracle) {
        return Err(format!("beam {:?}\noracle {:?}", bag(&beam), bag(&oracle)));
    }
    for d in &beam {
        check_span_partition(d)?;
        if !d.category.is_root() || !d.sem.is_complete() {
            return Err("non-ROOT or partial result".into());
        }
        let walk = d.walk();
        let own: usize = walk.iter().filter(|n| n.is_floating_rule()).count();
        if own != d.floating_count || own > max_floating {
            return Err(format!("floating count {} vs {own}", d.floating_count));
        }
    }
    Ok(Some(beam.len()))
}

/// The fixed instances: every bundled grammar on its example utterance.
pub fn fixture_instances() -> Vec<(&'static str, Grammar, Context, Vec<String>)> {
    let primes = primes_kb();
    let g = |s: &str| Grammar::parse(s).unwrap();
    let mut out = vec![
        ("running", g(RUNNING_GRAMMAR), primes.clone(), tokenize(RUNNING_UTTERANCE)),
        ("crude", g(CRUDE_GRAMMAR), primes.clone(), tokenize("prime less than 10")),
        ("ccg", g(CCG_GRAMMAR), primes.clone(), tokenize("prime less than 10")),
        ("floating", g(FLOATING_GRAMMAR), primes.clone(), tokenize("primes below ten")),
        ("floating-short", g(FLOATING_GRAMMAR), primes, tokenize("prime")),
    ];
    let arith = semparse::kb::arith_context();
    for text in ["what is the largest prime less than 10 ?", "how many squares are smaller than 50 ?", "what is the biggest odd more than 90 ?"] {
        out.push(("arith", g(ARITH_GRAMMAR), arith.clone(), tokenize(text)));
    }
    out
}

pub fn prop_oracle_equivalence() -> Result<(), String> {
    check(64, (any::<u64>(), 0usize..=2), |(seed, mf)| {
        let inst = random_instance(seed);
        beam_matches_oracle(&inst.tokens, &inst.ctx, &inst.grammar, mf)
            .map(|_| ())
            .map_err(|e| TestCaseError::fail(format!("{e}\n{}\n{:?}", inst.grammar_text, inst.tokens)))
    })
}

pub fn prop_span_partition() -> Result<(), String> {
    let ctx = semparse::kb::arith_context();
    let g = Grammar::parse(ARITH_GRAMMAR).unwrap();
    check(64, (any::<u64>(), 1usize..50), |(q, k)| {
        let x = arith_utterance(q);
        for d in parse(&x, &ctx, &g, &|_: &Derivation| 0.0, BeamConfig { beam_size: k, max_floating: 2 }) {
            check_span_partition(&d).map_err(TestCaseError::fail)?;
            prop_assert_eq!(d.span, semparse::parser::Span::new(0, x.len()));
            prop_assert!(d.sem.is_complete());
        }
        Ok(())
    })
}

/// Larger beams never lose ROOT logical forms, checked with additive rule
/// weights on random instances.
pub fn prop_beam_monotonicity() -> Result<(), String> {
    check(64, (any::<u64>(), any::<u64>(), 1usize..6, 1usize..6), |(seed, wseed, k, extra)| {
        let inst = random_instance(seed);
        let theta = random_theta(wseed, (1..=inst.grammar.rules.len()).map(|i| format!("rule:{i}")));
        let params = Params { linear: theta, nn: None };
        let scorer = ModelScorer::new(&params, &inst.ctx);
        let lfs = |k: usize| -> BTreeSet<String> {
            parse(&inst.tokens, &inst.ctx, &inst.grammar, &scorer, BeamConfig { beam_size: k, max_floating: 2 })
                .iter()
                .map(|d| d.sem_key().to_string())
                .collect()
        };
        let (small, large) = (lfs(k), lfs(k + extra));
        prop_assert!(small.is_subset(&large), "K={} {:?} not within K={} {:?}", k, small, k + extra, large);
        Ok(())
    })
}

pub fn prop_determinism() -> Result<(), String> {
    check(32, any::<u64>(), |seed| {
        let inst = random_instance(seed);
        let theta = random_theta(seed, (1..=inst.grammar.rules.len()).map(|i| format!("rule:{i}")));
        let params = Params { linear: theta, nn: None };
        let run = || {
            parse(&inst.tokens, &inst.ctx, &inst.grammar, &ModelScorer::new(&params, &inst.ctx), BeamConfig { beam_size: 3, max_floating: 2 })
                .iter()
                .map(|d| (d.sem_key().to_string(), d.score.to_bits(), d.render(&inst.tokens)))
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
        Ok(())
    })
}

// ---------------------------------------------------------------- learner

/// A random instance whose beam has at least two derivations, some
/// consistent with the target and some not.
pub struct GradientCase {
    pub phis: Vec<FeatureVector>,
    pub consistent: Vec<bool>,
    pub theta: FeatureVector,
    pub tokens: usize,
}

pub fn gradient_case(seed: u64) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inst = random_instance(rng.gen());
        let keys: BTreeSet<String> = (1..=inst.grammar.rules.len()).map(|i| format!("rule:{i}")).collect();
        let params = Params { linear: random_theta(rng.gen(), keys), nn: None };
        let beam = parse(&inst.tokens, &inst.ctx, &inst.grammar, &ModelScorer::new(&params, &inst.ctx), BeamConfig::default());
        if beam.len() < 2 {
            continue;
        }
        let answers: Vec<Denotation> =
            beam.iter().filter_map(|d| execute(d.logical_form()?, &inst.ctx).ok()).collect();
        let Some(target) = answers.choose(&mut rng) else { continue };
        let consistent = consistency(&beam, &inst.ctx, target);
        if consistent.iter().all(|c| *c) {
            continue;
        }
        let phis: Vec<FeatureVector> = beam.iter().map(|d| d.features.clone()).collect();
        let all_keys: BTreeSet<String> = phis.iter().flat_map(|p| p.keys().map(str::to_string)).collect();
        return GradientCase { phis, consistent, theta: random_theta(rng.gen(), all_keys), tokens: inst.tokens.len() };
    }
}

/// Reference objective: log of consistent mass under the softmax over the
/// given scores, computed directly.
pub fn reference_objective(scores: &[f64], consistent: &[bool]) -> f64 {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
    let good: f64 = scores.iter().zip(consistent).filter(|(_, c)| **c).map(|(s, _)| (s - m).exp()).sum();
    (good / z).ln()
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, over every feature of the case.
///
/// Along one coordinate the objective is `ln G(t) - ln Z(t)` with
/// `G(t) = sum_consistent w_i e^(t d_i)`. The central difference
/// `ln G(h) - ln G(-h)` is evaluated as
/// `ln1p(sum w_i 2 sinh(h d_i) / sum w_i e^(-h d_i))`, which is the same
/// quantity without the cancellation of subtracting two nearby logs.
pub fn gradient_error(case: &GradientCase, h: f64) -> f64 {
    let params = Params { linear: case.theta.clone(), nn: None };
    let refs: Vec<&FeatureVector> = case.phis.iter().collect();
    let analytic = example_gradient(&refs, &case.consistent, &params).expect("has support");
    let scores: Vec<f64> = case.phis.iter().map(|phi| phi.dot(&case.theta)).collect();
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let reference = &case.phis[0];
    let mut worst: f64 = 0.0;
    for key in case.theta.keys() {
        let d: Vec<f64> = case.phis.iter().map(|phi| phi.get(key) - reference.get(key)).collect();
        let log_ratio = |only_consistent: bool| {
            let (mut up, mut down) = (0.0, 0.0);
            for i in 0..w.len() {
                if only_consistent && !case.consistent[i] {
                    continue;
                }
                up += w[i] * 2.0 * (h * d[i]).sinh();
                down += w[i] * (-h * d[i]).exp();
            }
            (up / down).ln_1p()
        };
        let numeric = (log_ratio(true) - log_ratio(false)) / (2.0 * h);
        let a = analytic.linear.get(key);
        worst = worst.max((a - numeric).abs() / (a.abs() + 1e-8));
    }
    worst
}

/// Central differences for the nonlinear layer's parameters.
pub fn prop_nn_gradient() -> Result<(), String> {
    check(20, any::<u64>(), |seed| {
        let case = gradient_case(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let keys: Vec<String> = case.theta.keys().map(str::to_string).collect();
        let nn = NnParams {
            alpha: (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            w: (0..2).map(|_| keys.iter().map(|k| (k.clone(), rng.gen_range(-0.5..0.5))).collect()).collect(),
        };
        let params = Params { linear: case.theta.clone(), nn: Some(nn.clone()) };
        let refs: Vec<&FeatureVector> = case.phis.iter().collect();
        let g = example_gradient(&refs, &case.consistent, &params).unwrap();
        let objective = |p: &Params| {
            let scores: Vec<f64> = case.phis.iter().map(|phi| {
                let mut s = phi.dot(&p.linear);
                let nn = p.nn.as_ref().unwrap();
                for (a, w) in nn.alpha.iter().zip(&nn.w) {
                    s += a * phi.dot(w).tanh();
                }
                s
            }).collect();
            reference_objective(&scores, &case.consistent)
        };
        let h = 1e-5;
        let tol = |a: f64, n: f64| (a - n).abs() <= 1e-4 * (a.abs() + 1e-8) || (a - n).abs() <= 1e-9;
        for i in 0..2 {
            let mut plus = params.clone();
            plus.nn.as_mut().unwrap().alpha[i] += h;
            let mut minus = params.clone();
            minus.nn.as_mut().unwrap().alpha[i] -= h;
            let n = (objective(&plus) - objective(&minus)) / (2.0 * h);
            prop_assert!(tol(g.alpha[i], n), "alpha {}: {} vs {}", i, g.alpha[i], n);
            for k in &keys {
                let mut plus = params.clone();
                plus.nn.as_mut().unwrap().w[i].add(k, h);
                let mut minus = params.clone();
                minus.nn.as_mut().unwrap().w[i].add(k, -h);
                let n = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let a = g.w[i].get(k);
                prop_assert!(tol(a, n), "w {} {}: {} vs {}", i, k, a, n);
            }
        }
        Ok(())
    })
}

/// The posterior is a distribution supported on consistent derivations.
pub fn prop_posterior() -> Result<(), String> {
    let inputs = prop::collection::vec((-20.0f64..20.0, any::<bool>()), 1..10);
    check(512, inputs, |pairs| {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let consistent: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let p = softmax_distribution(&scores).unwrap();
        match semparse::learner::consistent_posterior(&p, &consistent).unwrap() {
            None => prop_assert!(!consistent.iter().any(|c| *c)),
            Some(q) => {
                prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (qk, ck) in q.iter().zip(&consistent) {
                    prop_assert!(*qk >= 0.0);
                    prop_assert!(*ck || *qk == 0.0);
                }
            }
        }
        Ok(())
    })
}

/// A small SGD step on one example raises that example's objective.
pub fn prop_small_step_ascends() -> Result<(), String> {
    check(30, any::<u64>(), |seed| {
        let case = gradient_case(seed);
        let mut params = Params { linear: case.theta.clone(), nn: None };
        let refs: Vec<&FeatureVector> = case.phis.iter().collect();
        let before = semparse::learner::example_objective(&refs, &case.consistent, &params).unwrap();
        let g = example_gradient(&refs, &case.consistent, &params).unwrap();
        if g.linear.iter().all(|(_, v)| v.abs() < 1e-9) {
            return Ok(());
        }
        semparse::learner::sgd_step(&mut params.linear, &g.linear, 1e-4);
        let after = semparse::learner::example_objective(&refs, &case.consistent, &params).unwrap();
        prop_assert!(after > before, "{} -> {}", before, after);
        Ok(())
    })
}

/// A large enough penalty zeroes every weight.
pub fn prop_l1_totality() -> Result<(), String> {
    let weights = prop::collection::btree_map("[a-e]", -10.0f64..10.0, 0..6);
    check(128, weights, |m| {
        let mut theta: FeatureVector = m.into_iter().collect();
        semparse::learner::l1_prox(&mut theta, 100.0, 0.2);
        prop_assert!(theta.is_empty());
        Ok(())
    })
}

/// Training twice with the same inputs gives bit-identical weights.
pub fn training_is_reproducible() -> Result<(), String> {
    let (data, _) = make_arith_domain(3, 40, 5);
    let g = Grammar::parse(ARITH_GRAMMAR).unwrap();
    let cfg = TrainConfig { epochs: 2, shuffle_seed: 9, ..Default::default() };
    let (a, ma) = train(&data, &g, &cfg);
    let (b, mb) = train(&data, &g, &cfg);
    let bits = |p: &Params| p.linear.iter().map(|(k, v)| (k.to_string(), v.to_bits())).collect::<Vec<_>>();
    if bits(&a) != bits(&b) || ma.iter().zip(&mb).any(|(x, y)| x.objective.to_bits() != y.objective.to_bits()) {
        return Err("training runs differ".into());
    }
    Ok(())
}

pub fn prop_tokenize_idempotent() -> Result<(), String> {
    check(512, "[A-Za-z0-9 ?,.'-]{0,40}", |text| {
        let once = tokenize(&text);
        prop_assert_eq!(tokenize(&once.join(" ")), once);
        Ok(())
    })
}

pub fn prop_kb_round_trip() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    check(64, any::<u64>(), |seed| {
        let c = random_context(seed);
        let path = dir.path().join("rand.tsv");
        semparse::kb::save_kb(&c, &path).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let back = semparse::kb::load_kb(&path).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back, c);
        Ok(())
    })
}

/// All invariant suites, by name.
pub fn invariant_suites() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![
        ("lf round trip", prop_lf_round_trip),
        ("compositionality", prop_compositionality),
        ("join oracle", prop_join_oracle),
        ("type soundness", prop_type_soundness),
        ("capture avoidance", prop_capture_avoidance),
        ("ccg binder shadowing", prop_ccg_shadowing),
        ("binder filling round trip", prop_binder_filling_round_trip),
        ("softmax shift invariance and normalization", prop_softmax),
        ("score linearity", prop_score_linearity),
        ("feature decomposition", prop_feature_decomposition),
        ("span partition", prop_span_partition),
        ("oracle equivalence", prop_oracle_equivalence),
        ("beam monotonicity", prop_beam_monotonicity),
        ("parse determinism", prop_determinism),
        ("posterior support", prop_posterior),
        ("nonlinear gradient", prop_nn_gradient),
        ("small step ascends", prop_small_step_ascends),
        ("l1 totality", prop_l1_totality),
        ("training reproducibility", training_is_reproducible),
        ("tokenization idempotence", prop_tokenize_idempotent),
        ("kb save and load", prop_kb_round_trip),
    ]
}
