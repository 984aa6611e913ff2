//! Config-driven experiment pipelines for the actuator toolkit: open-loop
//! simulation, ARX identification, test-signal validation and closed-loop
//! control, each writing CSV artifacts.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod table;

pub use config::{ExperimentConfig, Overrides, SignalTarget};
pub use error::{CliError, Result};
pub use pipeline::Artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Identify,
    Validate,
    Control,
}

impl Command {
    fn signal_target(self) -> SignalTarget {
        match self {
            Self::Simulate | Self::Identify => SignalTarget::Excitation,
            Self::Validate => SignalTarget::Validation,
            Self::Control => SignalTarget::Reference,
        }
    }
}

/// Applies `overrides` to `config` and computes the command's artifacts
/// without touching the file system's output side.
pub fn execute(command: Command, mut config: ExperimentConfig, overrides: &Overrides) -> Result<Artifacts> {
    config.apply(overrides, command.signal_target())?;
    Ok(match command {
        Command::Simulate => pipeline::simulate(&config)?,
        Command::Identify => pipeline::identify(&config)?.1,
        Command::Validate => pipeline::validate(&config)?.1,
        Command::Control => pipeline::control(&config)?.1,
    })
}
