//! Physical constants of the actuator and the unit-tagged parameter file.
//!
//! The file format is one `key = value unit` entry per line, `#` starts a
//! comment. Every value is converted to SI on load; unknown keys, unknown or
//! mismatched unit tags and duplicate keys are rejected.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Quantity;

/// Actuator parameters, all in SI units.
///
/// The defaults are the catalogue values of a Moog MCR-M-1002 cylinder with a
/// Moog 725-106 servo valve. Supply and return pressure, fluid density,
/// `flow_pressure_coeff`, `total_leakage_coeff`, the input limit and the
/// friction smoothing velocity are not catalogue values; their defaults are
/// assumptions and should be overridden when better data is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Ps [Pa]. Assumed 3000 psi.
    pub supply_pressure: f64,
    /// Pr [Pa]. Assumed 0.1 MPa.
    pub return_pressure: f64,
    /// Kv [m/V], spool displacement per volt.
    pub servo_valve_gain: f64,
    /// Om [m].
    pub max_opening: f64,
    /// Cf, orifice discharge coefficient.
    pub discharge_coeff: f64,
    /// ka [m²], cross-piston leakage area.
    pub leakage_area: f64,
    /// As [m²], full valve port area.
    pub valve_area: f64,
    /// rho [kg/m³]. Assumed mineral oil.
    pub fluid_density: f64,
    /// Ap [m²], equal on both sides of the piston.
    pub piston_area: f64,
    /// Xs [m].
    pub piston_stroke: f64,
    /// Vd [m³], per chamber.
    pub dead_volume: f64,
    /// beta [Pa].
    pub bulk_modulus: f64,
    /// M [kg].
    pub load_mass: f64,
    /// Ks [N/m], acting about mid-stroke.
    pub spring_stiffness: f64,
    /// Bs [N/(m/s)].
    pub damping_coeff: f64,
    /// alpha1 [N].
    pub coulomb_friction: f64,
    /// alpha2 [N/(m/s)].
    pub viscous_friction: f64,
    /// Cs [N/m], end-stop contact stiffness.
    pub contact_stiffness: f64,
    /// Cd [N/(m/s)], end-stop contact damping.
    pub contact_damping: f64,
    /// Kq, flow gain of the linearised load-flow equation.
    pub flow_gain_coeff: f64,
    /// Kc [m³/(s·Pa)]. Placeholder default.
    pub flow_pressure_coeff: f64,
    /// Ctp [m³/(s·Pa)]. Placeholder default.
    pub total_leakage_coeff: f64,
    /// Ka as listed in the catalogue table (compare with [`PlantParams::derived_actuator_gain`]).
    pub actuator_gain: f64,
    /// Specific heat ratio from the catalogue table. Not used by any model equation.
    pub specific_heat_ratio: f64,
    /// u_max [V], symmetric input saturation.
    pub input_limit: f64,
    /// v_eps [m/s], velocity scale of the smoothed Coulomb friction.
    pub friction_smoothing_velocity: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        let inch = 0.0254;
        let psi = 6894.757293168361;
        Self {
            supply_pressure: 20.68e6,
            return_pressure: 0.1e6,
            servo_valve_gain: 2.2e-6,
            max_opening: 0.0178,
            discharge_coeff: 0.6,
            leakage_area: 1e-12,
            valve_area: 0.0002318,
            fluid_density: 850.0,
            piston_area: 12.5 * inch * inch,
            piston_stroke: 60.0 * inch,
            dead_volume: 0.0003048,
            bulk_modulus: 22e4 * psi,
            load_mass: 500.0,
            spring_stiffness: 20.0,
            damping_coeff: 100.0,
            coulomb_friction: 450.0,
            viscous_friction: 64.0,
            contact_stiffness: 6.14e8,
            contact_damping: 200.0,
            flow_gain_coeff: 1.8e-6,
            flow_pressure_coeff: 1e-14,
            total_leakage_coeff: 1e-14,
            actuator_gain: 491.04e-12,
            specific_heat_ratio: 1.4,
            input_limit: 10.0,
            friction_smoothing_velocity: 1e-3,
        }
    }
}

type Field = fn(&mut PlantParams) -> &mut f64;

/// Parameter-file keys, in file order.
const FIELDS: &[(&str, Quantity, Field)] = &[
    ("supply_pressure", Quantity::Pressure, |p| &mut p.supply_pressure),
    ("return_pressure", Quantity::Pressure, |p| &mut p.return_pressure),
    ("servo_valve_gain", Quantity::ValveGain, |p| &mut p.servo_valve_gain),
    ("max_opening", Quantity::Length, |p| &mut p.max_opening),
    ("discharge_coeff", Quantity::Dimensionless, |p| &mut p.discharge_coeff),
    ("leakage_area", Quantity::Area, |p| &mut p.leakage_area),
    ("valve_area", Quantity::Area, |p| &mut p.valve_area),
    ("fluid_density", Quantity::Density, |p| &mut p.fluid_density),
    ("piston_area", Quantity::Area, |p| &mut p.piston_area),
    ("piston_stroke", Quantity::Length, |p| &mut p.piston_stroke),
    ("dead_volume", Quantity::Volume, |p| &mut p.dead_volume),
    ("bulk_modulus", Quantity::Pressure, |p| &mut p.bulk_modulus),
    ("load_mass", Quantity::Mass, |p| &mut p.load_mass),
    ("spring_stiffness", Quantity::Stiffness, |p| &mut p.spring_stiffness),
    ("damping_coeff", Quantity::Damping, |p| &mut p.damping_coeff),
    ("coulomb_friction", Quantity::Force, |p| &mut p.coulomb_friction),
    ("viscous_friction", Quantity::Damping, |p| &mut p.viscous_friction),
    ("contact_stiffness", Quantity::Stiffness, |p| &mut p.contact_stiffness),
    ("contact_damping", Quantity::Damping, |p| &mut p.contact_damping),
    ("flow_gain_coeff", Quantity::FlowGain, |p| &mut p.flow_gain_coeff),
    ("flow_pressure_coeff", Quantity::FlowPressureCoeff, |p| &mut p.flow_pressure_coeff),
    ("total_leakage_coeff", Quantity::FlowPressureCoeff, |p| &mut p.total_leakage_coeff),
    ("actuator_gain", Quantity::Dimensionless, |p| &mut p.actuator_gain),
    ("specific_heat_ratio", Quantity::Dimensionless, |p| &mut p.specific_heat_ratio),
    ("input_limit", Quantity::Voltage, |p| &mut p.input_limit),
    ("friction_smoothing_velocity", Quantity::Velocity, |p| &mut p.friction_smoothing_velocity),
];

impl PlantParams {
    /// Checks the physical invariants of the parameter set.
    pub fn validate(&self) -> Result<()> {
        let mut p = self.clone();
        for (key, _, field) in FIELDS {
            let v = *field(&mut p);
            if !v.is_finite() {
                return Err(Error::Config(format!("{key} must be finite, got {v}")));
            }
        }
        if !(self.supply_pressure > self.return_pressure && self.return_pressure >= 0.0) {
            return Err(Error::Config(format!(
                "need supply_pressure > return_pressure >= 0 (got {} and {})",
                self.supply_pressure, self.return_pressure
            )));
        }
        let positive = [
            ("servo_valve_gain", self.servo_valve_gain),
            ("max_opening", self.max_opening),
            ("leakage_area", self.leakage_area),
            ("valve_area", self.valve_area),
            ("fluid_density", self.fluid_density),
            ("piston_area", self.piston_area),
            ("piston_stroke", self.piston_stroke),
            ("dead_volume", self.dead_volume),
            ("bulk_modulus", self.bulk_modulus),
            ("load_mass", self.load_mass),
            ("spring_stiffness", self.spring_stiffness),
            ("contact_stiffness", self.contact_stiffness),
            ("input_limit", self.input_limit),
            ("friction_smoothing_velocity", self.friction_smoothing_velocity),
        ];
        for (key, v) in positive {
            if v <= 0.0 {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("damping_coeff", self.damping_coeff),
            ("coulomb_friction", self.coulomb_friction),
            ("viscous_friction", self.viscous_friction),
            ("contact_damping", self.contact_damping),
            ("flow_pressure_coeff", self.flow_pressure_coeff),
            ("total_leakage_coeff", self.total_leakage_coeff),
        ];
        for (key, v) in non_negative {
            if v < 0.0 {
                return Err(Error::Config(format!("{key} must be non-negative, got {v}")));
            }
        }
        if !(self.discharge_coeff > 0.0 && self.discharge_coeff <= 1.0) {
            return Err(Error::Config(format!(
                "discharge_coeff must lie in (0, 1], got {}",
                self.discharge_coeff
            )));
        }
        Ok(())
    }

    /// Total oil volume `Vd + Ap * Xs`.
    pub fn total_volume(&self) -> f64 {
        self.dead_volume + self.piston_area * self.piston_stroke
    }

    /// Orifice gain `Cf * (As / Om) * sqrt(2 / rho)` shared by both metering edges.
    pub fn orifice_gain(&self) -> f64 {
        self.discharge_coeff * (self.valve_area / self.max_opening) * (2.0 / self.fluid_density).sqrt()
    }

    /// `Kq * Kv / Ap`, the actuator gain implied by the flow gain.
    pub fn derived_actuator_gain(&self) -> f64 {
        self.flow_gain_coeff * self.servo_valve_gain / self.piston_area
    }

    /// Relative disagreement between the listed and the derived actuator gain.
    pub fn actuator_gain_mismatch(&self) -> f64 {
        let derived = self.derived_actuator_gain();
        (self.actuator_gain - derived).abs() / derived.abs().max(f64::MIN_POSITIVE)
    }

    /// Flow gain of the orifice law linearised at null spool and balanced
    /// chambers, `K * sqrt((Ps - Pr) / 2)` in m²/s.
    ///
    /// Substituting this for `flow_gain_coeff` makes the linear model's
    /// velocity gain agree with the nonlinear plant.
    pub fn matched_flow_gain(&self) -> f64 {
        self.orifice_gain() * ((self.supply_pressure - self.return_pressure) / 2.0).sqrt()
    }

    /// Parses a parameter file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::default().with_overrides(text)
    }

    /// Applies `key = value unit` lines on top of `self` and validates the result.
    pub fn with_overrides(&self, text: &str) -> Result<Self> {
        let mut params = self.clone();
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value unit`", lineno + 1))
            })?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            params.set(key, value.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
            seen.push(key);
        }
        params.validate()?;
        Ok(params)
    }

    /// Sets one parameter from a `"value unit"` string.
    pub fn set(&mut self, key: &str, value_with_unit: &str) -> Result<()> {
        let (quantity, field) = FIELDS
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|(_, q, f)| (*q, *f))
            .ok_or_else(|| Error::Config(format!("unknown parameter `{key}`")))?;
        let mut parts = value_with_unit.split_whitespace();
        let number = parts
            .next()
            .ok_or_else(|| Error::Config(format!("`{key}` has no value")))?;
        let tag = parts
            .next()
            .ok_or_else(|| Error::Config(format!("`{key}` needs a unit tag ({quantity})")))?;
        if parts.next().is_some() {
            return Err(Error::Config(format!(
                "`{key}`: unit tags must not contain spaces"
            )));
        }
        let value: f64 = number
            .parse()
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse number `{number}`")))?;
        let factor = quantity.factor(tag).ok_or_else(|| {
            Error::Config(format!("`{key}`: `{tag}` is not a unit of {quantity}"))
        })?;
        *field(self) = value * factor;
        Ok(())
    }

    /// Writes every parameter in SI with 17 significant digits.
    pub fn to_param_file(&self) -> String {
        let mut p = self.clone();
        let mut out = String::new();
        for (key, quantity, field) in FIELDS {
            let _ = writeln!(out, "{key} = {:.16e} {}", *field(&mut p), quantity.si_tag());
        }
        out
    }
}
