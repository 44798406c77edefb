use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use favinfo::cli::{run, Command, Overrides};

#[derive(Parser)]
#[command(name = "favinfo", version, about = "Favors and information in committee promotion decisions")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit successfully and report standard errors even if the fit did not
    /// converge.
    #[arg(long, global = true)]
    allow_nonconverged: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Draw a synthetic dataset and its truth record.
    Simulate,
    /// Estimate a model and write the coefficient report.
    Fit,
    /// Likelihood-ratio test between two saved fits.
    Lrtest,
    /// Favor/information decomposition of connection effects.
    Counterfactual,
    /// Balance regressions and baseline variance selection.
    Balance,
    /// Print a configuration file with every default.
    Defaults,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let cmd = match args.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Fit => Command::Fit,
        Cmd::Lrtest => Command::Lrtest,
        Cmd::Counterfactual => Command::Counterfactual,
        Cmd::Balance => Command::Balance,
        Cmd::Defaults => Command::Defaults,
    };
    let ov = Overrides {
        seed: args.seed,
        out: args.out,
        allow_nonconverged: args.allow_nonconverged,
    };
    match run(cmd, args.config.as_deref(), &ov) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
