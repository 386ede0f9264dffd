mod cli;
mod commands;
mod config;
mod manifest;
mod overlay;

use clap::Parser;

use cli::{Cli, Command};

fn main() {
    let args = Cli::parse();
    let result = match &args.command {
        Command::Synth(a) => commands::cmd_synth(a),
        Command::Assign(a) => commands::cmd_assign(a),
        Command::Extract(a) => commands::cmd_extract(a),
        Command::Eval(a) => commands::cmd_eval(a),
        Command::Pipeline(a) => commands::cmd_pipeline(a),
        Command::Sweep(a) => commands::cmd_sweep(a),
    };
    if let Err(err) = result {
        eprintln!(
            "error: category={} message={:?}",
            category(&err),
            format!("{err:#}")
        );
        std::process::exit(1);
    }
}

/// Single-word failure category for scripted callers.
fn category(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<spart::Error>() {
            return e.category();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return "config";
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return "format";
        }
    }
    "config"
}
