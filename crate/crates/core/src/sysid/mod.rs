//! Black-box identification: dataset preparation, ARX least squares,
//! free-run simulation and model-order search.

mod arx;
mod dataset;
mod search;

pub use arx::{arx_fit, arx_simulate, arx_simulate_with_history, ArxModel, ArxOrders, Detrend, CONDITION_LIMIT};
pub use dataset::{resample, split_dataset, Dataset, SplitSpec};
pub use search::{
    identify, order_search, validate_model, Candidate, Identification, IdentifyOptions,
    InitialHistory, OrderGrid,
};
