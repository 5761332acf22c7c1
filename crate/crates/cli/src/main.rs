use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod repl;

/// Semantic parser: train, evaluate and query lambda DCS parsers.
#[derive(Debug, Parser)]
#[command(name = "semparse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn weights from (utterance, context, answer) examples.
    Train(Opts),
    /// Report denotation accuracy of a model on a dataset.
    Eval(Opts),
    /// Parse one utterance and print the best derivations.
    Parse {
        #[command(flatten)]
        opts: Opts,
        /// Words of the utterance.
        #[arg(required = true, num_args = 1..)]
        utterance: Vec<String>,
    },
    /// Read utterances from stdin, one per line.
    Repl(Opts),
    /// Write the synthetic arithmetic KB, grammar and splits to a directory.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        train_size: usize,
        #[arg(long, default_value_t = 100)]
        test_size: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Knowledge base TSV; its file stem is the context id. Repeatable.
    #[arg(long)]
    pub kb: Vec<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Weights file to load.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to write trained weights.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub beam: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// sgd or adagrad
    #[arg(long, default_value = "sgd")]
    pub optimizer: String,
    #[arg(long, default_value_t = 0.0)]
    pub l1: f64,
    #[arg(long, default_value_t = 2)]
    pub max_floating: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub topk: u64,
    #[arg(long)]
    pub show_derivations: bool,
    #[arg(long)]
    pub verbose: bool,
    /// Threads for evaluation.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    NoResult(String),
    Config(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::NoResult(_) => 1,
            Failure::Config(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = std::panic::catch_unwind(|| match cli.command {
        Command::Train(opts) => commands::train(&opts),
        Command::Eval(opts) => commands::eval(&opts),
        Command::Parse { opts, utterance } => commands::parse(&opts, &utterance.join(" ")),
        Command::Repl(opts) => repl::run(&opts),
        Command::Generate { out, seed, train_size, test_size } => {
            commands::generate(&out, seed, train_size, test_size)
        }
    });
    match run {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            match &f {
                Failure::NoResult(m) => println!("{m}"),
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Internal(m) => eprintln!("internal error: {m}"),
            }
            ExitCode::from(f.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
