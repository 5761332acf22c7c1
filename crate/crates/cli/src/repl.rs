use std::io::{BufRead, IsTerminal, Write};

use semparse::logic::{execute, parse_lf};

use crate::commands::{answer, contexts, grammar, model, Outcome};
use crate::{Failure, Opts};

pub fn run(opts: &Opts) -> Outcome {
    let g = grammar(opts)?;
    let contexts = contexts(opts)?;
    let ctx = contexts.values().next().expect("at least one kb");
    let mut params = model(opts.model.as_deref())?;
    let interactive = std::io::stdin().is_terminal();
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            print!("> ");
            std::io::stdout().flush().map_err(|e| Failure::Internal(e.to_string()))?;
        }
        let Some(line) = lines.next() else { break };
        let line = line.map_err(|e| Failure::Internal(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == ":quit" {
            break;
        }
        if let Some(src) = line.strip_prefix(":lf") {
            match parse_lf(src.trim()) {
                Ok(z) => match execute(&z, ctx) {
                    Ok(y) => println!("{y}"),
                    Err(e) => println!("error: {e}"),
                },
                Err(e) => println!("error: {e}"),
            }
        } else if let Some(path) = line.strip_prefix(":load-model") {
            match model(Some(path.trim().as_ref())) {
                Ok(p) => {
                    params = p;
                    println!("loaded {}", path.trim());
                }
                Err(Failure::Config(m)) => println!("error: {m}"),
                Err(other) => return Err(other),
            }
        } else if line.starts_with(':') {
            println!("unknown command {line}");
        } else if !answer(opts, &g, ctx, &params, line) {
            println!("no derivations");
        }
    }
    Ok(())
}
