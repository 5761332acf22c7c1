use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{tokenize, Context, ContextBuilder, Dataset, Example};
use crate::logic::{execute, LogicalForm, SemType, Value};

/// Id of the generated arithmetic context.
pub const ARITH_CONTEXT: &str = "arith";

const NOUNS: [(&str, &str, &str); 4] =
    [("prime", "prime", "primes"), ("even", "even", "evens"), ("odd", "odd", "odds"), ("square", "square", "squares")];

#[derive(Clone, Copy)]
enum Agg {
    Max,
    Min,
    Count,
}

/// (surface pattern, aggregate, comparison predicate). `{p}` is the
/// singular noun, `{ps}` the plural, `{n}` the number.
const TEMPLATES: [(&str, Agg, &str); 12] = [
    ("what is the largest {p} less than {n}?", Agg::Max, "less"),
    ("what is the biggest {p} less than {n}?", Agg::Max, "less"),
    ("what is the largest {p} smaller than {n}?", Agg::Max, "less"),
    ("what is the biggest {p} smaller than {n}?", Agg::Max, "less"),
    ("what is the largest {p} more than {n}?", Agg::Max, "more"),
    ("what is the biggest {p} more than {n}?", Agg::Max, "more"),
    ("what is the smallest {p} less than {n}?", Agg::Min, "less"),
    ("what is the smallest {p} smaller than {n}?", Agg::Min, "less"),
    ("what is the smallest {p} more than {n}?", Agg::Min, "more"),
    ("how many {ps} are less than {n}?", Agg::Count, "less"),
    ("how many {ps} are smaller than {n}?", Agg::Count, "less"),
    ("how many {ps} are more than {n}?", Agg::Count, "more"),
];

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Numbers 1..=100 with prime, even, odd and square tables.
pub fn arith_context() -> Context {
    let mut b = ContextBuilder::new(ARITH_CONTEXT);
    for pred in ["prime", "even", "odd", "square"] {
        b.declare(pred, SemType::Number);
    }
    for n in 1..=100u32 {
        let v = || Value::number(n as f64);
        if is_prime(n) {
            b.unary("prime", v());
        }
        if n % 2 == 0 {
            b.unary("even", v());
        } else {
            b.unary("odd", v());
        }
        let r = (n as f64).sqrt() as u32;
        if r * r == n {
            b.unary("square", v());
        }
    }
    b.build().expect("arith context is well-typed")
}

/// Question with its gold logical form.
pub struct ArithQuestion {
    pub template: usize,
    pub number: u32,
    pub text: String,
    pub gold: LogicalForm,
}

fn gold_lf(agg: Agg, pred: &str, cmp: &str, n: u32) -> LogicalForm {
    let set = LogicalForm::and(
        LogicalForm::unary(pred),
        LogicalForm::join(LogicalForm::rel(cmp), LogicalForm::number(n as f64)),
    );
    match agg {
        Agg::Max => LogicalForm::max(set),
        Agg::Min => LogicalForm::min(set),
        Agg::Count => LogicalForm::count(set),
    }
}

/// Every question the generator can produce, in a fixed order.
pub fn arith_questions() -> Vec<ArithQuestion> {
    let mut out = Vec::new();
    for (t, (pattern, agg, cmp)) in TEMPLATES.iter().enumerate() {
        for n in 2..=99u32 {
            for (pred, sing, plural) in NOUNS {
                let text = pattern.replace("{ps}", plural).replace("{p}", sing).replace("{n}", &n.to_string());
                out.push(ArithQuestion { template: t, number: n, text, gold: gold_lf(*agg, pred, cmp, n) });
            }
        }
    }
    out
}

/// Deterministic train/test split of generated questions. Answers come from
/// executing the gold forms; questions whose gold form fails are dropped.
/// No (template, number) pair appears in both splits.
pub fn make_arith_domain(seed: u64, n_train: usize, n_test: usize) -> (Dataset, Dataset) {
    let ctx = Arc::new(arith_context());
    let mut groups: BTreeMap<(usize, u32), Vec<Example>> = BTreeMap::new();
    for q in arith_questions() {
        let Ok(target) = execute(&q.gold, &ctx) else { continue };
        if !target.is_finite() {
            continue;
        }
        let ex = Example { utterance: tokenize(&q.text), context_id: ARITH_CONTEXT.into(), target };
        groups.entry((q.template, q.number)).or_default().push(ex);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: Vec<Vec<Example>> = groups.into_values().collect();
    groups.shuffle(&mut rng);

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut group in groups {
        group.shuffle(&mut rng);
        let (bucket, cap) = if test.len() < n_test {
            (&mut test, n_test)
        } else if train.len() < n_train {
            (&mut train, n_train)
        } else {
            break;
        };
        let want = cap - bucket.len();
        bucket.extend(group.into_iter().take(want));
    }
    let contexts: BTreeMap<String, Arc<Context>> = [(ARITH_CONTEXT.to_string(), ctx)].into_iter().collect();
    (
        Dataset { examples: train, contexts: contexts.clone() },
        Dataset { examples: test, contexts },
    )
}
