use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;
use orv::{list_scenarios, load_suite, run, EXIT_CONFIG, EXIT_FAIL};

/// Runs Liouville regular-variation verification scenarios from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "orv", version)]
struct Cli {
    /// Scenario suite (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Directory for report.json and per-scenario files.
    #[arg(long, value_name = "DIR", default_value = "orv-out")]
    out: PathBuf,
    /// Suite seed; overrides the config value.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Run scenarios concurrently.
    #[arg(long)]
    parallel: bool,
    /// Override a config value, e.g. `scenarios.ref.tolerance=1e-4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print scenario names, operations and grids without running.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORV_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    if cli.list {
        return match load_suite(&cli.config, &cli.set, cli.seed) {
            Ok(loaded) => {
                print!("{}", list_scenarios(&loaded.suite));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("orv: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        };
    }
    match run(&cli.config, &cli.out, &cli.set, cli.seed, cli.parallel) {
        Ok((code, bundle)) => {
            for s in &bundle.scenarios {
                let status = if s.passed { "PASS" } else { "FAIL" };
                let note = match (&s.error, s.expect_failure) {
                    (Some(e), _) => format!(" ({e})"),
                    (None, true) => " (negative control)".to_string(),
                    _ => String::new(),
                };
                println!("{status}  {}  [{}]{note}", s.name, s.operation);
            }
            println!(
                "{}/{} scenarios passed; report at {}",
                bundle.summary.passed,
                bundle.summary.total,
                cli.out.join("report.json").display()
            );
            ExitCode::from(code as u8)
        }
        Err(e) => {
            error!("{e}");
            eprintln!("orv: {e}");
            let code = e.exit_code();
            ExitCode::from(if code == 0 { EXIT_FAIL as u8 } else { code as u8 })
        }
    }
}
