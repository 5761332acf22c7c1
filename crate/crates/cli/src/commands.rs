use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use semparse::grammar::{load_grammar, validate_grammar, Grammar, ARITH_GRAMMAR};
use semparse::kb::{dataset_to_jsonl, load_dataset, load_kb, make_arith_domain, save_kb, Context, Dataset};
use semparse::learner::{predict, train_with, TrainConfig};
use semparse::logic::execute;
use semparse::model::{load_params, save_params, ModelScorer, Params};
use semparse::parser::{parse as chart_parse, BeamConfig};

use crate::{Failure, Opts};

pub type Outcome = Result<(), Failure>;

fn config<E: std::fmt::Display>(what: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Config(format!("{}: {e}", what.display()))
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    p.as_deref().ok_or_else(|| Failure::Config(format!("missing --{flag}")))
}

pub fn beam(opts: &Opts) -> BeamConfig {
    BeamConfig { beam_size: opts.beam as usize, max_floating: opts.max_floating }
}

pub fn grammar(opts: &Opts) -> Result<Grammar, Failure> {
    let path = required(&opts.grammar, "grammar")?;
    load_grammar(path).map_err(config(path))
}

pub fn contexts(opts: &Opts) -> Result<BTreeMap<String, Arc<Context>>, Failure> {
    if opts.kb.is_empty() {
        return Err(Failure::Config("missing --kb".into()));
    }
    let mut out = BTreeMap::new();
    for path in &opts.kb {
        let c = load_kb(path).map_err(config(path))?;
        out.insert(c.id().to_string(), Arc::new(c));
    }
    Ok(out)
}

pub fn model(path: Option<&Path>) -> Result<Params, Failure> {
    match path {
        Some(p) => load_params(p).map_err(config(p)),
        None => Ok(Params::default()),
    }
}

fn warn_grammar(opts: &Opts, g: &Grammar, contexts: &BTreeMap<String, Arc<Context>>) {
    if !opts.verbose {
        return;
    }
    for c in contexts.values() {
        for w in validate_grammar(g, c) {
            eprintln!("warning: {w}");
        }
    }
}

fn dataset(path: &Path, contexts: &BTreeMap<String, Arc<Context>>) -> Result<Dataset, Failure> {
    load_dataset(path, contexts).map_err(config(path))
}

fn pool(opts: &Opts) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs as usize)
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn io(e: std::io::Error) -> Failure {
    Failure::Internal(e.to_string())
}

pub fn train(opts: &Opts) -> Outcome {
    let g = grammar(opts)?;
    let contexts = contexts(opts)?;
    let train_path = required(&opts.train, "train")?;
    let out = required(&opts.out, "out")?;
    let data = dataset(train_path, &contexts)?;
    let dev = opts.dev.as_deref().map(|p| dataset(p, &contexts)).transpose()?;
    warn_grammar(opts, &g, &contexts);
    let cfg = TrainConfig {
        epochs: opts.epochs as usize,
        step_size: opts.lr,
        optimizer: opts.optimizer.parse().map_err(Failure::Config)?,
        l1: opts.l1,
        beam: beam(opts),
        shuffle_seed: opts.seed,
        nn_units: None,
    };
    cfg.validate().map_err(Failure::Config)?;
    if data.is_empty() {
        return Err(Failure::Config(format!("{}: no examples", train_path.display())));
    }
    let stdout = std::io::stdout();
    let (params, _) = train_with(&data, &g, &cfg, |m| {
        let mut lock = stdout.lock();
        let _ = writeln!(lock, "{}", serde_json::to_string(m).expect("metrics serialize"));
        let _ = lock.flush();
    });
    save_params(&params, out).map_err(|e| Failure::Internal(format!("{}: {e}", out.display())))?;
    if let Some(dev) = dev {
        let acc = accuracy(opts, &dev, &g, &params)?;
        println!("{}", serde_json::json!({ "devAcc": acc }));
    }
    Ok(())
}

fn accuracy(opts: &Opts, data: &Dataset, g: &Grammar, params: &Params) -> Result<f64, Failure> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let preds = pool(opts)?.install(|| predict(data, g, params, beam(opts)));
    Ok(preds.iter().filter(|p| p.correct).count() as f64 / preds.len() as f64)
}

pub fn eval(opts: &Opts) -> Outcome {
    let g = grammar(opts)?;
    let contexts = contexts(opts)?;
    let data = dataset(required(&opts.data, "data")?, &contexts)?;
    let params = model(Some(required(&opts.model, "model")?))?;
    warn_grammar(opts, &g, &contexts);
    if data.is_empty() {
        eprintln!("warning: empty dataset");
        println!("accuracy 0.0");
        return Ok(());
    }
    let preds = pool(opts)?.install(|| predict(&data, &g, &params, beam(opts)));
    if opts.verbose {
        for (ex, p) in data.examples.iter().zip(&preds) {
            println!(
                "{}\t{}\t{}\t{}\t{}",
                if p.correct { "ok" } else { "wrong" },
                ex.utterance.join(" "),
                p.lf.as_deref().unwrap_or("-"),
                p.denotation.as_ref().map_or("-".into(), |d| d.to_string()),
                ex.target,
            );
        }
    }
    let acc = preds.iter().filter(|p| p.correct).count() as f64 / preds.len() as f64;
    println!("accuracy {acc:?}");
    Ok(())
}

/// Prints the top derivations for one utterance; `false` when nothing parses.
pub fn answer(opts: &Opts, g: &Grammar, ctx: &Context, params: &Params, text: &str) -> bool {
    let tokens = semparse::kb::tokenize(text);
    let derivations = chart_parse(&tokens, ctx, g, &ModelScorer::new(params, ctx), beam(opts));
    if derivations.is_empty() {
        return false;
    }
    for (rank, d) in derivations.iter().take(opts.topk as usize).enumerate() {
        let denotation = match d.logical_form().map(|z| execute(z, ctx)) {
            Some(Ok(y)) => y.to_string(),
            Some(Err(e)) => format!("error: {e}"),
            None => "error: incomplete".into(),
        };
        println!("{}\t{:.4}\t{}\t{}", rank + 1, d.score, d.sem_key(), denotation);
        if opts.show_derivations {
            print!("{}", d.render(&tokens));
        }
    }
    true
}

pub fn parse(opts: &Opts, text: &str) -> Outcome {
    let g = grammar(opts)?;
    let contexts = contexts(opts)?;
    let params = model(opts.model.as_deref())?;
    warn_grammar(opts, &g, &contexts);
    let ctx = contexts.values().next().expect("at least one kb");
    if answer(opts, &g, ctx, &params, text) {
        Ok(())
    } else {
        Err(Failure::NoResult("no derivations".into()))
    }
}

pub fn generate(out: &Path, seed: u64, train_size: usize, test_size: usize) -> Outcome {
    if train_size == 0 || test_size == 0 {
        return Err(Failure::Config("split sizes must be at least 1".into()));
    }
    std::fs::create_dir_all(out).map_err(config(out))?;
    let (train, test) = make_arith_domain(seed, train_size, test_size);
    let ctx = train.contexts.values().next().expect("arith context");
    save_kb(ctx, out.join(format!("{}.tsv", ctx.id()))).map_err(|e| Failure::Internal(e.to_string()))?;
    std::fs::write(out.join("arith.gr"), ARITH_GRAMMAR).map_err(io)?;
    std::fs::write(out.join("train.jsonl"), dataset_to_jsonl(&train.examples)).map_err(io)?;
    std::fs::write(out.join("test.jsonl"), dataset_to_jsonl(&test.examples)).map_err(io)?;
    Ok(())
}
