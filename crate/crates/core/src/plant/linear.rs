//! Continuous-time rational transfer functions and the linearised actuator model.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::params::PlantParams;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// `num(s) / den(s)`, coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl LinearTf {
    /// Leading zeros of both polynomials are stripped; the denominator must
    /// have a nonzero leading coefficient and the function must be strictly proper.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let num = strip_leading_zeros(num);
        let den = strip_leading_zeros(den);
        if den.is_empty() {
            return Err(Error::ModelConfig("denominator is identically zero".into()));
        }
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(Error::ModelConfig("transfer function coefficients must be finite".into()));
        }
        if num.len() >= den.len() {
            return Err(Error::ModelConfig(format!(
                "transfer function must be strictly proper (numerator degree {} >= denominator degree {})",
                num.len().saturating_sub(1),
                den.len() - 1
            )));
        }
        Ok(Self {
            num: if num.is_empty() { vec![0.0] } else { num },
            den,
        })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// Evaluates the transfer function at the complex frequency `s`.
    pub fn eval(&self, s: Complex<f64>) -> Complex<f64> {
        polyval(&self.num, s) / polyval(&self.den, s)
    }

    /// Magnitude of the frequency response at `omega` rad/s.
    pub fn magnitude(&self, omega: f64) -> f64 {
        self.eval(Complex::new(0.0, omega)).norm()
    }

    /// Multiplies the numerator by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            num: self.num.iter().map(|c| c * k).collect(),
            den: self.den.clone(),
        }
    }

    /// Unity negative feedback loop `G / (1 + G)`.
    pub fn unity_feedback(&self) -> Self {
        let n = self.den.len();
        let mut den = self.den.clone();
        let offset = n - self.num.len();
        for (i, c) in self.num.iter().enumerate() {
            den[offset + i] += c;
        }
        Self {
            num: self.num.clone(),
            den,
        }
    }

    /// Controllable canonical (companion form) realisation.
    pub fn state_space(&self) -> StateSpace {
        let lead = self.den[0];
        let n = self.order();
        // den = s^n + a1 s^(n-1) + ... + an after normalisation.
        let a: Vec<f64> = self.den[1..].iter().map(|c| c / lead).collect();
        let mut c = vec![0.0; n];
        // num padded to n coefficients: b0 s^(n-1) + ... + b_{n-1}
        let pad = n - self.num.len();
        for (i, v) in self.num.iter().enumerate() {
            c[pad + i] = v / lead;
        }
        // States x1..xn with x1' = x2, ..., xn' = -an x1 - ... - a1 xn + u.
        c.reverse();
        StateSpace { a, c }
    }

    /// Response to a zero-order-hold input from zero initial state.
    pub fn simulate(&self, input: &TimeSeries, substeps: usize) -> Result<TimeSeries> {
        let ss = self.state_space();
        let mut x = vec![0.0; ss.order()];
        let mut y = Vec::with_capacity(input.len());
        let h = input.dt() / substeps.max(1) as f64;
        for (i, &u) in input.samples().iter().enumerate() {
            y.push(ss.output(&x));
            for _ in 0..substeps.max(1) {
                ss.rk4(&mut x, u, h);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    index: i + 1,
                    detail: "linear model state is not finite".into(),
                });
            }
        }
        input.with_samples(y)
    }
}

/// Companion-form state-space model of a strictly proper [`LinearTf`].
#[derive(Debug, Clone)]
pub struct StateSpace {
    /// Monic denominator coefficients `a1..an`.
    a: Vec<f64>,
    /// Output weights on `x1..xn`.
    c: Vec<f64>,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.c).map(|(x, c)| x * c).sum()
    }

    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.order();
        dx[..n - 1].copy_from_slice(&x[1..n]);
        let feedback: f64 = (0..n).map(|i| self.a[n - 1 - i] * x[i]).sum();
        dx[n - 1] = u - feedback;
    }

    /// One RK4 step of length `h` with constant input `u`.
    pub fn rk4(&self, x: &mut [f64], u: f64, h: f64) {
        let n = self.order();
        let f = |x: &[f64]| {
            let mut dx = vec![0.0; n];
            self.derivative(x, u, &mut dx);
            dx
        };
        let shifted = |k: &[f64], w: f64| -> Vec<f64> { (0..n).map(|i| x[i] + w * k[i]).collect() };
        let k1 = f(x);
        let k2 = f(&shifted(&k1, 0.5 * h));
        let k3 = f(&shifted(&k2, 0.5 * h));
        let k4 = f(&shifted(&k3, h));
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// Actuator gain, natural frequency and damping of the linearised model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedConstants {
    pub actuator_gain: f64,
    pub natural_frequency: f64,
    pub damping: f64,
}

/// `Ka = Kq Kv / Ap`, `wa = Ap sqrt(4 beta / (Vt M))`,
/// `za = sqrt((4 beta / Vt)(Kc + Ctp)) / (2 Ap)`.
pub fn linearized_constants(params: &PlantParams) -> Result<LinearizedConstants> {
    let vt = params.total_volume();
    if !(vt > 0.0) {
        return Err(Error::Config(format!("total volume must be positive, got {vt}")));
    }
    if !(params.load_mass > 0.0) {
        return Err(Error::Config(format!(
            "load mass must be positive, got {}",
            params.load_mass
        )));
    }
    let ap = params.piston_area;
    let stiffness = 4.0 * params.bulk_modulus / vt;
    Ok(LinearizedConstants {
        actuator_gain: params.flow_gain_coeff * params.servo_valve_gain / ap,
        natural_frequency: ap * (stiffness / params.load_mass).sqrt(),
        damping: (stiffness * (params.flow_pressure_coeff + params.total_leakage_coeff)).sqrt()
            / (2.0 * ap),
    })
}

/// Position-per-volt transfer function
/// `wa Ka / (s^3 + 2 za wa s^2 + wa s)`.
///
/// The coefficients are kept exactly in this printed form. Note that the
/// dimensionally consistent third-order hydraulic model carries `wa^2` in
/// both the numerator and the `s` term; both forms share the low-frequency
/// velocity gain `Ka`.
pub fn linearized_tf(params: &PlantParams) -> Result<LinearTf> {
    let c = linearized_constants(params)?;
    let wa = c.natural_frequency;
    LinearTf::new(
        vec![wa * c.actuator_gain],
        vec![1.0, 2.0 * c.damping * wa, wa, 0.0],
    )
}

/// Default search range for [`bandwidth`], rad/s.
pub const BANDWIDTH_RANGE: (f64, f64) = (1e-3, 1e5);

/// Closed unity-loop -3 dB bandwidth searched over [`BANDWIDTH_RANGE`].
pub fn bandwidth(tf: &LinearTf) -> Result<f64> {
    bandwidth_within(tf, BANDWIDTH_RANGE)
}

/// Lowest frequency in `range` at which `|T(jw)|` of `T = G / (1 + G)` falls
/// below `1/sqrt(2)` of its DC value.
pub fn bandwidth_within(tf: &LinearTf, range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("invalid bandwidth search range {range:?}")));
    }
    let closed = tf.unity_feedback();
    let n0 = *closed.num.last().unwrap_or(&0.0);
    let d0 = *closed.den.last().unwrap_or(&0.0);
    let dc = (n0 / d0).abs();
    if !(dc.is_finite() && dc > 0.0) {
        return Err(Error::Analysis(
            "closed loop has no finite nonzero DC gain".into(),
        ));
    }
    let level = dc / std::f64::consts::SQRT_2;
    let below = |w: f64| closed.magnitude(w) < level;

    if below(lo) {
        return Err(Error::Analysis(format!(
            "closed-loop response is already below -3 dB at {lo:e} rad/s"
        )));
    }
    const PER_DECADE: f64 = 50.0;
    let steps = ((hi / lo).log10() * PER_DECADE).ceil() as usize;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let mut prev = lo;
    for i in 1..=steps {
        let w = if i == steps { hi } else { lo * ratio.powi(i as i32) };
        if below(w) {
            let (mut a, mut b) = (prev.ln(), w.ln());
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if below(m.exp()) {
                    b = m;
                } else {
                    a = m;
                }
                if b - a < 1e-14 {
                    break;
                }
            }
            return Ok((0.5 * (a + b)).exp());
        }
        prev = w;
    }
    Err(Error::Analysis(format!(
        "no -3 dB crossing in [{lo:e}, {hi:e}] rad/s"
    )))
}

fn polyval(coeffs: &[f64], s: Complex<f64>) -> Complex<f64> {
    coeffs
        .iter()
        .fold(Complex::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn strip_leading_zeros(mut v: Vec<f64>) -> Vec<f64> {
    let first = v.iter().position(|c| *c != 0.0).unwrap_or(v.len());
    v.drain(..first);
    v
}
