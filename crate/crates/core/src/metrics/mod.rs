//! Model-quality and step-response metrics.

mod fit;
mod transient;

pub use fit::{best_fit, fpe, mse, rmse, FitReport};
pub use transient::{transient_metrics, transient_metrics_with, TransientMetrics, TransientSpec};
