//! Electro-hydraulic servo actuator: nonlinear dynamics and linearised model.

mod dynamics;
mod linear;
mod params;

pub use dynamics::{
    advance, contact_force, friction_force, max_penetration, orifice_flows, plant_derivatives,
    simulate_open_loop, simulate_trajectory, step_rk4, substeps_for, valve_displacement, OrificeFlows,
    PlantState, StateRate, MAX_STEP,
};
pub use linear::{
    bandwidth, bandwidth_within, linearized_constants, linearized_tf, LinearTf,
    LinearizedConstants, StateSpace, BANDWIDTH_RANGE,
};
pub use params::PlantParams;
