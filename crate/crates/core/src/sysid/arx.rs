use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::series::{same_time, TimeSeries};

/// Largest accepted condition number of the column-normalised regressor.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArxOrders {
    pub na: usize,
    pub nb: usize,
    pub nk: usize,
}

impl ArxOrders {
    pub const fn new(na: usize, nb: usize, nk: usize) -> Self {
        Self { na, nb, nk }
    }

    pub fn n_params(&self) -> usize {
        self.na + self.nb
    }

    /// Number of leading samples that only serve as regressor history.
    pub fn lag(&self) -> usize {
        self.na.max(self.nk + self.nb - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nb == 0 {
            return Err(Error::Config("ARX model needs nb >= 1".into()));
        }
        Ok(())
    }
}

impl std::fmt::Display for ArxOrders {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARX({},{},{})", self.na, self.nb, self.nk)
    }
}

/// Offset handling before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detrend {
    None,
    /// Subtract the record means of `u` and `y`; the model keeps them as offsets.
    #[default]
    Mean,
}

/// `A(q) (y - y_offset) = B(q) q^-nk (u - u_offset)` with
/// `A = 1 + a1 q^-1 + ... + a_na q^-na` and `B = b1 + b2 q^-1 + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArxModel {
    pub orders: ArxOrders,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub ts: f64,
    pub u_offset: f64,
    pub y_offset: f64,
}

impl ArxModel {
    pub fn new(nk: usize, a: Vec<f64>, b: Vec<f64>, ts: f64) -> Result<Self> {
        let m = Self {
            orders: ArxOrders::new(a.len(), b.len(), nk),
            a,
            b,
            ts,
            u_offset: 0.0,
            y_offset: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.orders.validate()?;
        if self.a.len() != self.orders.na || self.b.len() != self.orders.nb {
            return Err(Error::Config(format!(
                "{} has {} a and {} b coefficients",
                self.orders,
                self.a.len(),
                self.b.len()
            )));
        }
        if !(self.ts.is_finite() && self.ts > 0.0) {
            return Err(Error::Config(format!(
                "sampling period must be positive, got {}",
                self.ts
            )));
        }
        let all = self.a.iter().chain(&self.b).chain([&self.u_offset, &self.y_offset]);
        if all.into_iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("model coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Serialises to the flat `key = value` model format with 17 significant digits.
    pub fn to_model_file(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|c| format!("{c:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "na = {}", self.orders.na);
        let _ = writeln!(s, "nb = {}", self.orders.nb);
        let _ = writeln!(s, "nk = {}", self.orders.nk);
        let _ = writeln!(s, "Ts = {:.16e}", self.ts);
        let _ = writeln!(s, "a = {}", list(&self.a));
        let _ = writeln!(s, "b = {}", list(&self.b));
        let _ = writeln!(s, "u_offset = {:.16e}", self.u_offset);
        let _ = writeln!(s, "y_offset = {:.16e}", self.y_offset);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut na = None;
        let mut nb = None;
        let mut nk = None;
        let mut ts = None;
        let mut a = None;
        let mut b = None;
        let mut u_offset = 0.0;
        let mut y_offset = 0.0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Config(format!("model file line {}: {what}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let value = value.trim();
            let count = || value.parse::<usize>().map_err(|_| bad("expected a count"));
            let real = || value.parse::<f64>().map_err(|_| bad("expected a number"));
            let reals = || {
                value
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|_| bad("expected numbers")))
                    .collect::<Result<Vec<_>>>()
            };
            match key.trim() {
                "na" => na = Some(count()?),
                "nb" => nb = Some(count()?),
                "nk" => nk = Some(count()?),
                "Ts" => ts = Some(real()?),
                "a" => a = Some(reals()?),
                "b" => b = Some(reals()?),
                "u_offset" => u_offset = real()?,
                "y_offset" => y_offset = real()?,
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Config(format!("model file is missing `{k}`"));
        let na = na.ok_or_else(|| missing("na"))?;
        let nb = nb.ok_or_else(|| missing("nb"))?;
        let m = Self {
            orders: ArxOrders::new(na, nb, nk.ok_or_else(|| missing("nk"))?),
            a: a.unwrap_or_default(),
            b: b.ok_or_else(|| missing("b"))?,
            ts: ts.ok_or_else(|| missing("Ts"))?,
            u_offset,
            y_offset,
        };
        m.validate()?;
        Ok(m)
    }

    /// One free-run step in offset-free coordinates: `y_hist[0]` is the most
    /// recent output, `u_hist[j]` is `u(t - j)`.
    pub(crate) fn predict(&self, y_hist: &[f64], u_hist: &[f64]) -> f64 {
        let ar: f64 = self.a.iter().zip(y_hist).map(|(a, y)| a * y).sum();
        let x: f64 = self
            .b
            .iter()
            .zip(&u_hist[self.orders.nk..])
            .map(|(b, u)| b * u)
            .sum();
        x - ar
    }
}

/// Least-squares ARX estimate through a QR factorisation of the regressor.
///
/// Rows run over `t = lag .. N` (zero-based) so that every regressor entry is
/// a measured sample.
pub fn arx_fit(data: &Dataset, orders: ArxOrders, detrend: Detrend) -> Result<ArxModel> {
    orders.validate()?;
    let n = data.len();
    let d = orders.n_params();
    if n < 10 * d {
        return Err(Error::InsufficientData(format!(
            "{orders} needs at least {} samples, got {n}",
            10 * d
        )));
    }
    let (u_offset, y_offset) = match detrend {
        Detrend::None => (0.0, 0.0),
        Detrend::Mean => (data.u().mean(), data.y().mean()),
    };
    let u: Vec<f64> = data.u().samples().iter().map(|v| v - u_offset).collect();
    let y: Vec<f64> = data.y().samples().iter().map(|v| v - y_offset).collect();

    let lag = orders.lag();
    let rows = n - lag;
    let phi = DMatrix::from_fn(rows, d, |r, c| {
        let t = r + lag;
        if c < orders.na {
            -y[t - 1 - c]
        } else {
            u[t - orders.nk - (c - orders.na)]
        }
    });
    let target = DVector::from_iterator(rows, y[lag..].iter().copied());

    let norms: Vec<f64> = phi.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::Identifiability {
            condition: f64::INFINITY,
            threshold: CONDITION_LIMIT,
        });
    }
    let mut scaled = phi;
    for (mut col, norm) in scaled.column_iter_mut().zip(&norms) {
        col /= *norm;
    }
    let qr = scaled.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::Identifiability {
            condition,
            threshold: CONDITION_LIMIT,
        });
    }
    let qty = qr.q().transpose() * target;
    let theta = r.solve_upper_triangular(&qty).ok_or(Error::Identifiability {
        condition,
        threshold: CONDITION_LIMIT,
    })?;
    let coeffs: Vec<f64> = theta.iter().zip(&norms).map(|(t, s)| t / s).collect();

    let mut model = ArxModel::new(
        orders.nk,
        coeffs[..orders.na].to_vec(),
        coeffs[orders.na..].to_vec(),
        data.dt(),
    )?;
    model.u_offset = u_offset;
    model.y_offset = y_offset;
    Ok(model)
}

/// Free-run simulation with `y_init` as the outputs preceding `u`
/// (most recent last) and zero past inputs.
pub fn arx_simulate(model: &ArxModel, u: &TimeSeries, y_init: &[f64]) -> Result<TimeSeries> {
    arx_simulate_with_history(model, u, y_init, &[])
}

/// Free-run simulation with measured history. Both history slices are in
/// time order, most recent last; missing entries are taken as zero output
/// and zero input (before offsets are applied).
pub fn arx_simulate_with_history(
    model: &ArxModel,
    u: &TimeSeries,
    y_past: &[f64],
    u_past: &[f64],
) -> Result<TimeSeries> {
    model.validate()?;
    if !same_time(u.dt(), model.ts) {
        return Err(Error::InvalidInput(format!(
            "input sampled at {} s but model at {} s",
            u.dt(),
            model.ts
        )));
    }
    let na = model.orders.na;
    let span = model.orders.nk + model.orders.nb;
    let past = |hist: &[f64], len: usize, offset: f64| -> Vec<f64> {
        // Newest first, padded with the zero level.
        let mut v: Vec<f64> = hist.iter().rev().take(len).map(|x| x - offset).collect();
        v.resize(len, -offset);
        v
    };
    let mut y_hist = past(y_past, na, model.y_offset);
    let mut u_hist = past(u_past, span, model.u_offset);

    let mut out = Vec::with_capacity(u.len());
    for (i, ui) in u.samples().iter().enumerate() {
        if span > 0 {
            u_hist.rotate_right(1);
            u_hist[0] = ui - model.u_offset;
        }
        let y = model.predict(&y_hist, &u_hist);
        if !y.is_finite() || y.abs() > 1e150 {
            return Err(Error::Divergence {
                index: i,
                detail: format!("free-run output reached {y:e}"),
            });
        }
        if na > 0 {
            y_hist.rotate_right(1);
            y_hist[0] = y;
        }
        out.push(y + model.y_offset);
    }
    u.with_samples(out)
}
