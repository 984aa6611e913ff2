//! Sample-by-sample drivable systems for closed-loop simulation.

use crate::error::{Error, Result};
use crate::plant::{advance, substeps_for, LinearTf, PlantParams, PlantState, StateSpace};
use crate::series::same_time;
use crate::sysid::ArxModel;

/// A system that holds an input for one sample period and reports its output.
pub trait Target {
    fn name(&self) -> &str;

    /// Returns to the initial condition.
    fn reset(&mut self);

    /// Current output.
    fn output(&self) -> f64;

    /// Holds `u` for `dt` seconds and returns the output at the end of the period.
    fn advance(&mut self, u: f64, dt: f64) -> Result<f64>;
}

/// Nonlinear plant whose output is the piston displacement from its initial position.
#[derive(Debug, Clone)]
pub struct NonlinearPlantTarget {
    params: PlantParams,
    initial: PlantState,
    state: PlantState,
}

impl NonlinearPlantTarget {
    pub fn new(params: PlantParams) -> Result<Self> {
        params.validate()?;
        let initial = PlantState::rest(&params);
        Ok(Self::from_state(params, initial))
    }

    pub fn from_state(params: PlantParams, initial: PlantState) -> Self {
        Self {
            params,
            initial,
            state: initial,
        }
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }
}

impl Target for NonlinearPlantTarget {
    fn name(&self) -> &str {
        "nonlinear"
    }

    fn reset(&mut self) {
        self.state = self.initial;
    }

    fn output(&self) -> f64 {
        self.state.position - self.initial.position
    }

    fn advance(&mut self, u: f64, dt: f64) -> Result<f64> {
        self.state = advance(&self.state, u, dt, substeps_for(dt), &self.params)?;
        Ok(self.output())
    }
}

/// Identified ARX model started from zero input and output.
///
/// Needs `nk >= 1` so that the next output does not depend on the input being
/// computed from the current one.
#[derive(Debug, Clone)]
pub struct ArxTarget {
    model: ArxModel,
    /// Offset-free outputs, newest first.
    y_hist: Vec<f64>,
    /// Offset-free inputs, newest first.
    u_hist: Vec<f64>,
    y: f64,
}

impl ArxTarget {
    pub fn new(model: ArxModel) -> Result<Self> {
        model.validate()?;
        if model.orders.nk == 0 {
            return Err(Error::Config(
                "closed-loop simulation of an ARX model needs nk >= 1".into(),
            ));
        }
        let mut t = Self {
            y_hist: Vec::new(),
            u_hist: Vec::new(),
            y: 0.0,
            model,
        };
        t.reset();
        Ok(t)
    }

    pub fn model(&self) -> &ArxModel {
        &self.model
    }
}

impl Target for ArxTarget {
    fn name(&self) -> &str {
        "identified"
    }

    fn reset(&mut self) {
        let o = self.model.orders;
        self.y_hist = vec![-self.model.y_offset; o.na];
        self.u_hist = vec![-self.model.u_offset; o.nk + o.nb - 1];
        self.y = 0.0;
    }

    fn output(&self) -> f64 {
        self.y
    }

    fn advance(&mut self, u: f64, dt: f64) -> Result<f64> {
        if !same_time(dt, self.model.ts) {
            return Err(Error::InvalidInput(format!(
                "ARX model sampled at {} s driven with {dt} s steps",
                self.model.ts
            )));
        }
        self.u_hist.rotate_right(1);
        self.u_hist[0] = u - self.model.u_offset;
        let nk = self.model.orders.nk;
        let ar: f64 = self.model.a.iter().zip(&self.y_hist).map(|(a, y)| a * y).sum();
        let x: f64 = self
            .model
            .b
            .iter()
            .zip(&self.u_hist[nk - 1..])
            .map(|(b, u)| b * u)
            .sum();
        let next = x - ar;
        if !next.is_finite() || next.abs() > 1e150 {
            return Err(Error::Divergence {
                index: 0,
                detail: format!("model output reached {next:e}"),
            });
        }
        if !self.y_hist.is_empty() {
            self.y_hist.rotate_right(1);
            self.y_hist[0] = next;
        }
        self.y = next + self.model.y_offset;
        Ok(self.y)
    }
}

/// Continuous transfer function integrated with RK4 under a held input.
#[derive(Debug, Clone)]
pub struct TfTarget {
    ss: StateSpace,
    x: Vec<f64>,
    max_step: f64,
}

impl TfTarget {
    /// `max_step` bounds the internal RK4 step.
    pub fn new(tf: &LinearTf, max_step: f64) -> Result<Self> {
        if !(max_step.is_finite() && max_step > 0.0) {
            return Err(Error::Config(format!(
                "integration step must be positive, got {max_step}"
            )));
        }
        let ss = tf.state_space();
        Ok(Self {
            x: vec![0.0; ss.order()],
            ss,
            max_step,
        })
    }
}

impl Target for TfTarget {
    fn name(&self) -> &str {
        "transfer-function"
    }

    fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0.0);
    }

    fn output(&self) -> f64 {
        self.ss.output(&self.x)
    }

    fn advance(&mut self, u: f64, dt: f64) -> Result<f64> {
        let n = ((dt / self.max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = dt / n as f64;
        for _ in 0..n {
            self.ss.rk4(&mut self.x, u, h);
        }
        let y = self.output();
        if !y.is_finite() || self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                index: 0,
                detail: "transfer-function state is not finite".into(),
            });
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysid::arx_simulate_with_history;
    use crate::TimeSeries;

    #[test]
    fn arx_target_matches_free_run() {
        let mut m = ArxModel::new(1, vec![-1.2, 0.35], vec![0.4, -0.1], 0.05).unwrap();
        m.u_offset = 0.3;
        m.y_offset = -0.2;
        let u: Vec<f64> = (0..40).map(|i| (0.3 * i as f64).sin()).collect();
        let mut t = ArxTarget::new(m.clone()).unwrap();
        let driven: Vec<f64> = u.iter().map(|ui| t.advance(*ui, 0.05).unwrap()).collect();
        // Sample j of the free run is y(j + 1): it sees u(0) as the latest past input.
        let free = arx_simulate_with_history(
            &m,
            &TimeSeries::new(0.0, 0.05, u[1..].to_vec()).unwrap(),
            &[0.0, 0.0],
            &[0.0, u[0]],
        )
        .unwrap();
        for (a, b) in driven.iter().zip(free.samples()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn arx_target_needs_delay() {
        let m = ArxModel::new(0, vec![-0.5], vec![1.0], 0.05).unwrap();
        assert!(ArxTarget::new(m).is_err());
    }

    #[test]
    fn arx_target_rejects_other_periods() {
        let m = ArxModel::new(1, vec![], vec![1.0], 0.05).unwrap();
        assert!(ArxTarget::new(m).unwrap().advance(1.0, 0.01).is_err());
    }

    #[test]
    fn integrator_tf_target() {
        let tf = LinearTf::new(vec![2.0], vec![1.0, 0.0]).unwrap();
        let mut t = TfTarget::new(&tf, 1e-3).unwrap();
        for _ in 0..10 {
            t.advance(1.5, 0.1).unwrap();
        }
        assert!((t.output() - 3.0).abs() < 1e-12);
        t.reset();
        assert_eq!(t.output(), 0.0);
    }

    #[test]
    fn plant_target_starts_at_zero() {
        let mut t = NonlinearPlantTarget::new(PlantParams::default()).unwrap();
        assert_eq!(t.output(), 0.0);
        let y = t.advance(5.0, 0.05).unwrap();
        assert!(y > 0.0);
        t.reset();
        assert_eq!(t.output(), 0.0);
    }
}
