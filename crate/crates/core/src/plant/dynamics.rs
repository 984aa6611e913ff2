//! Nonlinear servo valve + double-acting cylinder + load model.

use serde::{Deserialize, Serialize};

use super::params::PlantParams;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Largest internal integration step accepted by [`step_rk4`].
pub const MAX_STEP: f64 = 1e-3;

/// Piston position/velocity and chamber pressures.
///
/// Position is measured from the retracted end stop, so `0 <= position <= Xs`
/// away from contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub position: f64,
    pub velocity: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PlantState {
    /// Piston at rest at mid-stroke with both chambers at `(Ps + Pr) / 2`.
    pub fn rest(params: &PlantParams) -> Self {
        let p = 0.5 * (params.supply_pressure + params.return_pressure);
        Self {
            position: 0.5 * params.piston_stroke,
            velocity: 0.0,
            p1: p,
            p2: p,
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.position, self.velocity, self.p1, self.p2]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            position: a[0],
            velocity: a[1],
            p1: a[2],
            p2: a[3],
        }
    }

    fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Time derivative of a [`PlantState`]: `(velocity, acceleration, dp1/dt, dp2/dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    pub velocity: f64,
    pub acceleration: f64,
    pub dp1: f64,
    pub dp2: f64,
}

impl StateRate {
    fn to_array(self) -> [f64; 4] {
        [self.velocity, self.acceleration, self.dp1, self.dp2]
    }
}

/// Valve metering flows.
///
/// `q1` is the flow into chamber 1 and `q2` the flow out of chamber 2, both
/// through the valve. `leakage` is the flow across the piston from chamber 1
/// to chamber 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrificeFlows {
    pub q1: f64,
    pub q2: f64,
    pub leakage: f64,
}

impl OrificeFlows {
    /// Net chamber flows `(into chamber 1, out of chamber 2)` including leakage.
    pub fn net(&self) -> (f64, f64) {
        (self.q1 - self.leakage, self.q2 - self.leakage)
    }
}

/// Spool displacement `Kv * clamp(u, -u_max, u_max)`, limited to the maximum opening.
pub fn valve_displacement(u: f64, params: &PlantParams) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!("valve input must be finite, got {u}")));
    }
    let u = u.clamp(-params.input_limit, params.input_limit);
    let xv = params.servo_valve_gain * u;
    Ok(xv.clamp(-params.max_opening, params.max_opening))
}

/// Square-root orifice law for the two metering edges plus piston leakage.
///
/// For `xv >= 0` supply feeds chamber 1 and chamber 2 drains to return; for
/// `xv < 0` the roles swap. A negative pressure drop under a radical yields
/// zero flow.
pub fn orifice_flows(xv: f64, p1: f64, p2: f64, params: &PlantParams) -> Result<OrificeFlows> {
    if !(xv.is_finite() && p1.is_finite() && p2.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "orifice inputs must be finite (xv={xv}, p1={p1}, p2={p2})"
        )));
    }
    Ok(orifice_flows_unchecked(xv, p1, p2, params))
}

fn orifice_flows_unchecked(xv: f64, p1: f64, p2: f64, params: &PlantParams) -> OrificeFlows {
    let k = params.orifice_gain();
    let ps = params.supply_pressure;
    let pr = params.return_pressure;
    let root = |dp: f64| dp.max(0.0).sqrt();
    let (q1, q2) = if xv >= 0.0 {
        (k * xv * root(ps - p1), k * xv * root(p2 - pr))
    } else {
        (k * xv * root(p1 - pr), k * xv * root(ps - p2))
    };
    let dp = p1 - p2;
    let leak_gain =
        params.discharge_coeff * params.leakage_area * (2.0 / params.fluid_density).sqrt();
    let leakage = leak_gain * dp.signum() * dp.abs().sqrt();
    OrificeFlows { q1, q2, leakage }
}

/// Smoothed Coulomb plus viscous friction force.
pub fn friction_force(velocity: f64, params: &PlantParams) -> f64 {
    params.coulomb_friction * (velocity / params.friction_smoothing_velocity).tanh()
        + params.viscous_friction * velocity
}

/// End-stop reaction: a spring-damper that only pushes, and only while the
/// piston is beyond `[0, Xs]`.
pub fn contact_force(position: f64, velocity: f64, params: &PlantParams) -> f64 {
    if position < 0.0 {
        (params.contact_stiffness * position + params.contact_damping * velocity).min(0.0)
    } else if position > params.piston_stroke {
        let penetration = position - params.piston_stroke;
        (params.contact_stiffness * penetration + params.contact_damping * velocity).max(0.0)
    } else {
        0.0
    }
}

/// Largest end-stop penetration the full hydraulic force can produce.
pub fn max_penetration(params: &PlantParams) -> f64 {
    (params.supply_pressure - params.return_pressure) * params.piston_area
        / params.contact_stiffness
}

/// Right-hand side of the plant ODE for input voltage `u`.
pub fn plant_derivatives(state: &PlantState, u: f64, params: &PlantParams) -> Result<StateRate> {
    if !state.is_finite() {
        return Err(Error::InvalidInput(format!("plant state is not finite: {state:?}")));
    }
    let xv = valve_displacement(u, params)?;
    let flows = orifice_flows_unchecked(xv, state.p1, state.p2, params);
    let (q_in1, q_out2) = flows.net();

    let ap = params.piston_area;
    let v1 = params.dead_volume + ap * state.position;
    let v2 = params.dead_volume + ap * (params.piston_stroke - state.position);
    if v1 <= 0.0 || v2 <= 0.0 {
        return Err(Error::ModelConfig(format!(
            "chamber volume is not positive (V1={v1:e}, V2={v2:e}) at position {}",
            state.position
        )));
    }
    let dp1 = params.bulk_modulus / v1 * (q_in1 - ap * state.velocity);
    let dp2 = params.bulk_modulus / v2 * (ap * state.velocity - q_out2);

    let spring = params.spring_stiffness * (state.position - 0.5 * params.piston_stroke);
    let force = ap * (state.p1 - state.p2)
        - friction_force(state.velocity, params)
        - spring
        - params.damping_coeff * state.velocity
        - contact_force(state.position, state.velocity, params);

    Ok(StateRate {
        velocity: state.velocity,
        acceleration: force / params.load_mass,
        dp1,
        dp2,
    })
}

/// One classical fourth-order Runge-Kutta step with `u` held constant.
///
/// Chamber pressures are clamped to `[Pr, Ps]` after the step.
pub fn step_rk4(state: &PlantState, u: f64, dt: f64, params: &PlantParams) -> Result<PlantState> {
    if !(dt > 0.0 && dt <= MAX_STEP * (1.0 + 1e-12)) {
        return Err(Error::Config(format!(
            "integration step must lie in (0, {MAX_STEP}] s, got {dt}"
        )));
    }
    let x0 = state.to_array();
    let eval = |x: [f64; 4]| -> Result<[f64; 4]> {
        Ok(plant_derivatives(&PlantState::from_array(x), u, params)?.to_array())
    };
    let offset = |k: &[f64; 4], h: f64| std::array::from_fn(|i| x0[i] + h * k[i]);

    let k1 = eval(x0)?;
    let k2 = eval(offset(&k1, 0.5 * dt))?;
    let k3 = eval(offset(&k2, 0.5 * dt))?;
    let k4 = eval(offset(&k3, dt))?;
    let mut next =
        PlantState::from_array(std::array::from_fn(|i| {
            x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        }));
    if !next.is_finite() {
        return Err(Error::Divergence {
            index: 0,
            detail: format!("non-finite plant state after RK4 step from {state:?}"),
        });
    }
    next.p1 = next.p1.clamp(params.return_pressure, params.supply_pressure);
    next.p2 = next.p2.clamp(params.return_pressure, params.supply_pressure);
    Ok(next)
}

/// Integrates the plant over one sample period `dt` in `substeps` equal RK4 steps.
pub fn advance(
    state: &PlantState,
    u: f64,
    dt: f64,
    substeps: usize,
    params: &PlantParams,
) -> Result<PlantState> {
    let h = internal_step(dt, substeps)?;
    let mut s = *state;
    for _ in 0..substeps {
        s = step_rk4(&s, u, h, params)?;
    }
    Ok(s)
}

/// Smallest substep count keeping the internal step within [`MAX_STEP`].
pub fn substeps_for(dt: f64) -> usize {
    ((dt / MAX_STEP) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

fn internal_step(dt: f64, substeps: usize) -> Result<f64> {
    if substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".into()));
    }
    let h = dt / substeps as f64;
    if h > MAX_STEP * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "sample period {dt} s with {substeps} substeps gives a {h} s step; at most {MAX_STEP} s allowed"
        )));
    }
    Ok(h)
}

/// Simulates the plant under a zero-order-hold input and returns the state at
/// every input sample time (`states[0] == initial`).
pub fn simulate_trajectory(
    input: &TimeSeries,
    initial: &PlantState,
    params: &PlantParams,
    substeps: usize,
) -> Result<Vec<PlantState>> {
    params.validate()?;
    internal_step(input.dt(), substeps)?;
    let mut states = Vec::with_capacity(input.len());
    let mut s = *initial;
    states.push(s);
    let last = input.len() - 1;
    for (i, &u) in input.samples()[..last].iter().enumerate() {
        s = advance(&s, u, input.dt(), substeps, params).map_err(|e| match e {
            Error::Divergence { detail, .. } => Error::Divergence { index: i + 1, detail },
            other => other,
        })?;
        states.push(s);
    }
    Ok(states)
}

/// Piston position response to `input`, sampled at the input's sample times.
pub fn simulate_open_loop(
    input: &TimeSeries,
    initial: &PlantState,
    params: &PlantParams,
    substeps: usize,
) -> Result<TimeSeries> {
    let states = simulate_trajectory(input, initial, params, substeps)?;
    TimeSeries::new(
        input.t0(),
        input.dt(),
        states.iter().map(|s| s.position).collect(),
    )
}
