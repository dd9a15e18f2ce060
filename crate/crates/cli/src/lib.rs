//! Command-line front end: argument parsing, benchmark configs and report files.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;

use clap::Parser;

use cli::{Cli, Command};
use error::CliError;

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(usize::from(jobs)).build_global() {
            log::warn!("--jobs ignored: {e}");
        }
    }
    let invocation = output::invocation(args);
    let outcome = match &cli.command {
        Command::Train(a) => commands::train_cmd(a, &invocation).map(|()| true),
        Command::Predict(a) => commands::predict_cmd(a, &invocation).map(|()| true),
        Command::Evaluate(a) => commands::evaluate_cmd(a, &invocation).map(|()| true),
        Command::Benchmark(a) => commands::benchmark_cmd(a, &invocation),
        Command::Stats(a) => commands::stats_cmd(a, &invocation),
        Command::DatasetInfo(a) => commands::dataset_info_cmd(a, &invocation).map(|()| true),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("mlkfhe: {e}");
            e.exit_code()
        }
    }
}

impl From<std::convert::Infallible> for CliError {
    fn from(e: std::convert::Infallible) -> Self {
        match e {}
    }
}
