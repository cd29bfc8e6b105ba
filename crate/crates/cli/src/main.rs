use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relay_sentinel_cli::commands::{self, ScenarioSource, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "relay-sentinel", version, about = "Relay manipulability certification and maliciousness detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a channel can hide relay manipulation (exit 2 if so).
    Certify { channel: PathBuf },
    /// Run a Monte Carlo experiment and write per-trial results.
    Simulate {
        /// Scenario JSON file.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        scenario: Option<PathBuf>,
        /// Built-in scenario, e.g. `fig3b` or `fig3b:phi4`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Use the full 5000-trial count.
        #[arg(long, conflicts_with = "trials")]
        paper_scale: bool,
        /// Also write the node and relay traces of every trial here.
        #[arg(long)]
        emit_trace: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the detector on a recorded node trace.
    Detect {
        channel: PathBuf,
        trace: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Regenerate the CDF data of one figure.
    Reproduce {
        figure: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, conflicts_with = "trials")]
        paper_scale: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Certify { channel } => commands::cmd_certify(&channel),
        Command::Simulate {
            scenario,
            preset,
            trials,
            paper_scale,
            emit_trace,
            output,
        } => {
            let src = match (&scenario, &preset) {
                (Some(p), _) => ScenarioSource::File(p),
                (None, Some(name)) => ScenarioSource::Preset(name),
                (None, None) => anyhow::bail!("give a scenario file or --preset"),
            };
            let s = commands::load_scenario(src, commands::paper_trials(paper_scale, trials))?;
            commands::cmd_simulate(s, &output, emit_trace.as_deref())
        }
        Command::Detect {
            channel,
            trace,
            mu,
            delta,
        } => commands::cmd_detect(&channel, &trace, mu, delta),
        Command::Reproduce {
            figure,
            output,
            trials,
            paper_scale,
        } => {
            let written =
                commands::cmd_reproduce(&figure, &output, commands::paper_trials(paper_scale, trials))?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(commands::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
