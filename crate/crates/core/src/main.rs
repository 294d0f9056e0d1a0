use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use emnlms::config::ScenarioConfig;
use emnlms::experiment::{run_scenario, write_artifacts};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "emnlms", version, about = "EM-NLMS echo-cancellation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write traces plus summary.txt.
    Run {
        config: PathBuf,
        /// Also write downsampled (t, delta_h_db, alpha) series per algorithm.
        #[arg(long)]
        emit_plot_data: bool,
        /// Output directory (overrides `output` from the config).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Override a seed, e.g. `--seed-override noise=7`. Repeatable.
        #[arg(long, value_name = "K=V")]
        seed_override: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            emit_plot_data,
            out,
            seed_override,
        } => {
            let mut scenario = match ScenarioConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            for spec in &seed_override {
                if let Err(e) = scenario.apply_seed_override(spec) {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
            if let Some(dir) = out {
                scenario.output = dir;
            }
            let output = match run_scenario(&scenario) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            match write_artifacts(&scenario, &output, &scenario.output, emit_plot_data) {
                Ok(artifacts) => {
                    for trace in &output.traces {
                        println!(
                            "{:<11} final delta_h = {:8.2} dB",
                            trace.algo,
                            trace.final_delta_h_db()
                        );
                    }
                    println!("wrote {}", artifacts.dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}
