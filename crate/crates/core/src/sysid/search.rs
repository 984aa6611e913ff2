use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::arx::{arx_fit, arx_simulate, arx_simulate_with_history, ArxModel, ArxOrders, Detrend};
use super::dataset::{split_dataset, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{fpe, FitReport};
use crate::series::TimeSeries;

/// Where the free-run validation simulation takes its initial regressor history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialHistory {
    /// Zero past inputs and outputs.
    Zero,
    /// The measured samples immediately preceding the validation window.
    #[default]
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IdentifyOptions {
    pub detrend: Detrend,
    pub history: InitialHistory,
}

/// Result of fitting one model and validating it on held-out data.
#[derive(Debug, Clone)]
pub struct Identification {
    pub model: ArxModel,
    pub report: FitReport,
    pub estimation: Dataset,
    pub validation: Dataset,
    /// Free-run output over the validation window.
    pub simulated: TimeSeries,
}

/// Free-run simulation of `model` over `validation`, scored against its output.
///
/// `preceding` holds the samples recorded just before the validation window
/// and is only read when `history` is [`InitialHistory::Measured`].
pub fn validate_model(
    model: &ArxModel,
    preceding: &Dataset,
    validation: &Dataset,
    history: InitialHistory,
) -> Result<(TimeSeries, FitReport)> {
    let simulated = match history {
        InitialHistory::Zero => arx_simulate(model, validation.u(), &[])?,
        InitialHistory::Measured => arx_simulate_with_history(
            model,
            validation.u(),
            preceding.y().samples(),
            preceding.u().samples(),
        )?,
    };
    let report = FitReport::compute(validation.y(), &simulated, model.orders.n_params())?;
    Ok((simulated, report))
}

/// Splits, fits on the estimation part and validates on the rest.
pub fn identify(
    data: &Dataset,
    split: SplitSpec,
    orders: ArxOrders,
    options: IdentifyOptions,
) -> Result<Identification> {
    let (estimation, validation) = split_dataset(data, split)?;
    let model = arx_fit(&estimation, orders, options.detrend)?;
    let (simulated, report) = validate_model(&model, &estimation, &validation, options.history)?;
    Ok(Identification {
        model,
        report,
        estimation,
        validation,
        simulated,
    })
}

/// Candidate orders: every combination of the listed values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderGrid {
    pub na: Vec<usize>,
    pub nb: Vec<usize>,
    pub nk: Vec<usize>,
}

impl OrderGrid {
    pub fn single(orders: ArxOrders) -> Self {
        Self {
            na: vec![orders.na],
            nb: vec![orders.nb],
            nk: vec![orders.nk],
        }
    }

    /// Combinations in `na`, `nb`, `nk` nesting order.
    pub fn candidates(&self) -> Vec<ArxOrders> {
        let mut out = Vec::new();
        for &na in &self.na {
            for &nb in &self.nb {
                for &nk in &self.nk {
                    out.push(ArxOrders::new(na, nb, nk));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub orders: ArxOrders,
    pub outcome: std::result::Result<(ArxModel, FitReport), Error>,
}

/// Fits and validates every candidate, best first.
///
/// Candidates are ranked by validation best fit (differences below 1e-6
/// percentage points count as ties), then by FPE. For the FPE comparison the
/// MSE is floored at `(1e-9 std(y))^2` so that among exact fits the one with
/// fewer parameters wins. Failed candidates follow in grid order.
pub fn order_search(
    data: &Dataset,
    split: SplitSpec,
    grid: &OrderGrid,
    options: IdentifyOptions,
) -> Result<Vec<Candidate>> {
    let candidates = grid.candidates();
    if candidates.is_empty() {
        return Err(Error::Config("order search grid is empty".into()));
    }
    let (estimation, validation) = split_dataset(data, split)?;
    let mut results: Vec<Candidate> = candidates
        .into_iter()
        .map(|orders| {
            let outcome = arx_fit(&estimation, orders, options.detrend).and_then(|model| {
                validate_model(&model, &estimation, &validation, options.history)
                    .map(|(_, report)| (model, report))
            });
            Candidate { orders, outcome }
        })
        .collect();

    if results.iter().all(|c| c.outcome.is_err()) {
        return Err(Error::AllCandidatesFailed(
            results
                .into_iter()
                .map(|c| format!("{}: {}", c.orders, c.outcome.unwrap_err()))
                .collect(),
        ));
    }

    let y = validation.y();
    let mean = y.mean();
    let var = y.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let mse_floor = 1e-18 * var;
    let key = |c: &Candidate| {
        c.outcome.as_ref().ok().map(|(_, r)| {
            let fit = (r.best_fit_percent * 1e6).round();
            let penalised = fpe(r.mse.max(mse_floor), r.n_samples, r.n_params).unwrap_or(f64::INFINITY);
            (fit, penalised)
        })
    };
    results.sort_by(|x, y| match (key(x), key(y)) {
        (Some((fx, px)), Some((fy, py))) => fy.total_cmp(&fx).then(px.total_cmp(&py)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    });
    Ok(results)
}
