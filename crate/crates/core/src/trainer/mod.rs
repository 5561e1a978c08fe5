//! Alternating adversarial training on synthetic 2-D data, with per-epoch
//! FID logging and reproducible run records.

mod config;
mod dataset;
mod record;
mod run;

pub use config::{
    LossFamily, TrainConfig, DEFAULT_EVAL_SAMPLES, DEFAULT_LATENT_DIM, DEFAULT_POOL_SIZE, SCHEMA_VERSION,
};
pub use dataset::{
    mode_coverage, Coverage, SyntheticDataset, COVERAGE_RADIUS_STDS, DEFAULT_GRID_SPACING, MODE_HIT_FRACTION,
};
pub use record::{EpochRow, RecordHeader, RunRecord, CODE_VERSION, CSV_COLUMNS, RECORD_FORMAT, RECORD_VERSION};
pub use run::{equilibrium_probe, sweep, train, EquilibriumProbe, TrainOutcome, DIVERGENCE_LIMIT, PROBE_ALPHA};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::fid::FidError;
use crate::losses::LossError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("numerical divergence at epoch {epoch}: {quantity} = {value}")]
    NumericalDivergence {
        epoch: usize,
        quantity: String,
        value: f64,
        /// Completed epochs and the last good networks.
        partial: Box<TrainOutcome>,
    },
    #[error("mode coverage needs a mixture dataset")]
    WrongDatasetKind,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Fid(#[from] FidError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
