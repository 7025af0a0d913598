mod commands;
mod output;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "weightlab", version, about = "Two-weight constants and random dyadic grid experiments")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "WEIGHTLAB_THREADS")]
    pub threads: Option<usize>,

    /// Omit the timestamp so identical runs give identical files.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a measure file.
    Gen(commands::GenArgs),
    /// Every characteristic constant for a pair of measures.
    Constants(commands::ConstantsArgs),
    /// Good-λ and one-dimensional strong ratios over a random corpus.
    Goodlambda(commands::GoodLambdaArgs),
    /// Surgery inequalities over translations of a periodic union.
    Surgery(commands::SurgeryArgs),
    /// Decay of the probability of badness in `r`.
    ProbeGoodness(commands::ProbeArgs),
    /// Cauchy integral testing ratios on a graph curve.
    Cauchy(commands::CauchyArgs),
    /// Merge experiment files into one CSV.
    Report(commands::ReportArgs),
}

#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub stamp: bool,
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(w) = e.downcast_ref::<weightlab::Error>() {
        return match w {
            weightlab::Error::Json(_) | weightlab::Error::Parse(_) => "malformed_input",
            weightlab::Error::Io(_) => "io",
            _ => "validation",
        };
    }
    if e.downcast_ref::<serde_json::Error>().is_some() {
        return "malformed_input";
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    "validation"
}

fn report_error(kind: &str, message: &str) {
    let v = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{v}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            report_error("validation", "--threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            report_error("validation", &e.to_string());
            return ExitCode::from(2);
        }
    }
    let g = Globals { stamp: !cli.no_timestamp };
    let res = match &cli.command {
        Command::Gen(a) => commands::gen(a, g),
        Command::Constants(a) => commands::constants(a, g),
        Command::Goodlambda(a) => commands::goodlambda(a, g),
        Command::Surgery(a) => commands::surgery(a, g),
        Command::ProbeGoodness(a) => commands::probe_goodness(a, g),
        Command::Cauchy(a) => commands::cauchy(a, g),
        Command::Report(a) => commands::report(a, g),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            report_error("check_failed", "one or more checks failed; see the report");
            ExitCode::from(3)
        }
        Err(e) => {
            report_error(error_kind(&e), &format!("{e:#}"));
            ExitCode::from(2)
        }
    }
}
