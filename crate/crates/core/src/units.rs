//! Unit tags accepted by the parameter file and their SI conversion factors.

use std::fmt;

/// Physical kind of a parameter; each kind accepts its own set of unit tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Pressure,
    Length,
    Area,
    Volume,
    Mass,
    Density,
    Force,
    Stiffness,
    Damping,
    Velocity,
    Voltage,
    ValveGain,
    FlowGain,
    FlowPressureCoeff,
    Dimensionless,
}

const INCH: f64 = 0.0254;
const PSI: f64 = 6894.757293168361;
const POUND_FORCE: f64 = 4.4482216152605;
const POUND_MASS: f64 = 0.45359237;

impl Quantity {
    /// SI multiplier for `tag`, or `None` when the tag is not a unit of this quantity.
    pub fn factor(self, tag: &str) -> Option<f64> {
        use Quantity::*;
        let f = match (self, tag) {
            (Pressure, "Pa") => 1.0,
            (Pressure, "kPa") => 1e3,
            (Pressure, "MPa") => 1e6,
            (Pressure, "bar") => 1e5,
            (Pressure, "psi") => PSI,

            (Length, "m") => 1.0,
            (Length, "cm") => 1e-2,
            (Length, "mm") => 1e-3,
            (Length, "in") => INCH,

            (Area, "m2") => 1.0,
            (Area, "cm2") => 1e-4,
            (Area, "mm2") => 1e-6,
            (Area, "in2") => INCH * INCH,

            (Volume, "m3") => 1.0,
            (Volume, "L") => 1e-3,
            (Volume, "cm3") => 1e-6,
            (Volume, "in3") => INCH * INCH * INCH,

            (Mass, "kg") => 1.0,
            (Mass, "lb") => POUND_MASS,

            (Density, "kg/m3") => 1.0,

            (Force, "N") => 1.0,
            (Force, "kN") => 1e3,
            (Force, "lbf") => POUND_FORCE,

            // Table values for the load spring are printed as "Nm"; read as N/m.
            (Stiffness, "N/m") | (Stiffness, "Nm") => 1.0,
            (Stiffness, "kN/m") => 1e3,
            (Stiffness, "lbf/in") => POUND_FORCE / INCH,

            (Damping, "N/(m/s)") | (Damping, "Ns/m") => 1.0,

            (Velocity, "m/s") => 1.0,
            (Velocity, "mm/s") => 1e-3,

            (Voltage, "V") => 1.0,
            (Voltage, "mV") => 1e-3,

            (ValveGain, "m/V") => 1.0,
            (ValveGain, "mm/V") => 1e-3,

            // The flow gain is carried as printed: tagged either with its
            // catalogue unit or with the linearised flow unit.
            (FlowGain, "m/V") | (FlowGain, "m2/s") => 1.0,

            (FlowPressureCoeff, "m3/(s*Pa)") => 1.0,

            (Dimensionless, "1") | (Dimensionless, "-") => 1.0,
            _ => return None,
        };
        Some(f)
    }

    /// The tag the parameter writer uses for this quantity.
    pub fn si_tag(self) -> &'static str {
        use Quantity::*;
        match self {
            Pressure => "Pa",
            Length => "m",
            Area => "m2",
            Volume => "m3",
            Mass => "kg",
            Density => "kg/m3",
            Force => "N",
            Stiffness => "N/m",
            Damping => "N/(m/s)",
            Velocity => "m/s",
            Voltage => "V",
            ValveGain => "m/V",
            FlowGain => "m2/s",
            FlowPressureCoeff => "m3/(s*Pa)",
            Dimensionless => "1",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imperial_conversions() {
        let area = 12.5 * Quantity::Area.factor("in2").unwrap();
        assert!((area - 8.0645e-3).abs() < 1e-15);
        let stroke = 60.0 * Quantity::Length.factor("in").unwrap();
        assert!((stroke - 1.524).abs() < 1e-15);
        let beta = 22e4 * Quantity::Pressure.factor("psi").unwrap();
        assert!((beta / 1.5168466e9 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn tag_must_match_quantity() {
        assert!(Quantity::Area.factor("m").is_none());
        assert!(Quantity::Pressure.factor("in2").is_none());
    }
}
