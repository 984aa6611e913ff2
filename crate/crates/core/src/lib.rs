//! Simulation, black-box identification and nonlinear PID control of an
//! electro-hydraulic servo actuator.
//!
//! The crate is organised along the experiment chain:
//!
//! * [`plant`]: nonlinear valve/cylinder/load model and its linearisation.
//! * [`signals`]: excitation and test signals, selectable by name through a
//!   [`signals::SignalRegistry`].
//! * [`sysid`]: dataset preparation, ARX least squares and free-run simulation.
//! * [`metrics`]: fit quality and step-response metrics.
//! * [`control`]: nonlinear-gain PID, critical-gain search and closed loops.
//! * [`target`]: the common interface through which the nonlinear plant and
//!   identified models are driven sample by sample.

pub mod control;
pub mod error;
pub mod metrics;
pub mod plant;
pub mod series;
pub mod signals;
pub mod sysid;
pub mod target;
pub mod units;

pub use error::{Error, Result};
pub use series::TimeSeries;
