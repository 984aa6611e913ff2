use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ehsa_cli::config::{parse_gains, parse_orders};
use ehsa_cli::{execute, CliError, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "ehsa", version, about = "Electro-hydraulic actuator experiment pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Open-loop plant response to the excitation (trajectory.csv)
    Simulate(Common),
    /// Record or load a dataset and fit an ARX model (model.txt, report.csv)
    Identify(Common),
    /// Test-signal RMSE between the plant and the model (validation.csv)
    Validate(Common),
    /// NPID closed loop on the model and the plant (closed_loop_*.csv)
    Control(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Signal kind: the excitation for simulate/identify, the only test
    /// signal for validate, the reference for control
    #[arg(long)]
    signal: Option<String>,
    /// ARX orders `na,nb,nk`
    #[arg(long)]
    orders: Option<String>,
    /// Estimation fraction of the dataset
    #[arg(long)]
    split: Option<f64>,
    /// PID gains `kp,ki,kd` or `auto-zn`
    #[arg(long)]
    gains: Option<String>,
    /// Output directory (overrides `output_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(command: Command, args: Common) -> Result<(), CliError> {
    let overrides = Overrides {
        signal: args.signal,
        orders: args.orders.as_deref().map(parse_orders).transpose()?,
        split: args.split,
        gains: args.gains.as_deref().map(parse_gains).transpose()?,
    };
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    let dir = config.output_dir.clone();
    let artifacts = execute(command, config, &overrides)?;
    for path in artifacts.write_to(&dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Identify(a) => (Command::Identify, a),
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Control(a) => (Command::Control, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ehsa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
