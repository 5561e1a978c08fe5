use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::dataset::Coverage;
use super::TrainError;

pub const RECORD_FORMAT: &str = "renyigan-lab/run-record";
pub const RECORD_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column order of `runrecord.csv`.
pub const CSV_COLUMNS: [&str; 8] = [
    "epoch",
    "alpha_in_effect",
    "disc_loss",
    "gen_loss",
    "penalty_value",
    "fid",
    "fid_clipped",
    "clamp_activations",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub format: String,
    pub version: u32,
    pub code_version: String,
    pub config: TrainConfig,
}

/// Per-epoch averages over the epoch's batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    /// Rényi order used by the generator loss; absent for other families.
    pub alpha_in_effect: Option<f64>,
    pub disc_loss: f64,
    pub gen_loss: f64,
    /// Mean penalty term added to the discriminator loss (0 when disabled).
    pub penalty_value: f64,
    pub fid: f64,
    pub fid_clipped: bool,
    /// Discriminator outputs outside the clamp range during the epoch.
    pub clamp_activations: u64,
    /// Wall time is not part of the reproducible record; it is written to a
    /// separate timing file.
    #[serde(skip)]
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub header: RecordHeader,
    pub rows: Vec<EpochRow>,
    /// Mode coverage of the final generator on the evaluation latents.
    pub final_coverage: Option<Coverage>,
    /// Set when the run stopped early; the rows cover the completed epochs.
    pub divergence: Option<String>,
}

impl RunRecord {
    pub fn new(config: TrainConfig) -> Self {
        RunRecord {
            header: RecordHeader {
                format: RECORD_FORMAT.to_string(),
                version: RECORD_VERSION,
                code_version: CODE_VERSION.to_string(),
                config,
            },
            rows: Vec::new(),
            final_coverage: None,
            divergence: None,
        }
    }

    /// Row with the smallest FID (earliest on ties).
    pub fn best_fid_row(&self) -> Option<&EpochRow> {
        self.rows
            .iter()
            .reduce(|best, r| if r.fid < best.fid { r } else { best })
    }

    pub fn to_csv_string(&self) -> Result<String, TrainError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.epoch.to_string(),
                r.alpha_in_effect.map(|a| a.to_string()).unwrap_or_default(),
                r.disc_loss.to_string(),
                r.gen_loss.to_string(),
                r.penalty_value.to_string(),
                r.fid.to_string(),
                r.fid_clipped.to_string(),
                r.clamp_activations.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| TrainError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String, TrainError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self, TrainError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn timing_csv(&self) -> Result<String, TrainError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["epoch", "wall_ms"])?;
        for r in &self.rows {
            w.write_record([r.epoch.to_string(), r.wall_ms.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| TrainError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `runrecord.csv`, `runrecord.json` and `timing.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), TrainError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("runrecord.csv"), self.to_csv_string()?)?;
        fs::write(dir.join("runrecord.json"), self.to_json_string()?)?;
        fs::write(dir.join("timing.csv"), self.timing_csv()?)?;
        Ok(())
    }
}
