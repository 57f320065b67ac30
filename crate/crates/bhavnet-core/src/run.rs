//! Run-directory output: the echoed config, per-epoch metrics rows, the best
//! checkpoint, and a final structured report.
//!
//! Layout under the run root:
//!
//! ```text
//! config.toml   effective configuration (flag overrides applied)
//! metrics.csv   epoch,split,loss,macro_f1,accuracy,p0,r0,f1_0,p1,r1,f1_1
//! best.ckpt     parameters at the best dev macro-F1
//! report.json   final summary
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::checkpoint::save_checkpoint;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::model::{HyperParams, ModelParams};
use crate::train::{EpochRecord, TrainState};

pub const METRICS_HEADER: &str =
    "epoch,split,loss,macro_f1,accuracy,p0,r0,f1_0,p1,r1,f1_1";

/// Writer for one training run's output directory.
pub struct RunWriter {
    root: PathBuf,
}

impl RunWriter {
    /// Create (or reuse) the run directory.
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(RunWriter {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.root.join("best.ckpt")
    }

    pub fn report_path(&self) -> PathBuf {
        self.root.join("report.json")
    }

    /// Write the effective config snapshot (TOML).
    pub fn write_config(&self, toml_text: &str) -> Result<()> {
        let path = self.config_path();
        fs::write(&path, toml_text).map_err(|e| Error::io(&path, e))
    }

    /// Append one epoch's train and dev rows to `metrics.csv`, writing the
    /// header first on an empty file.
    pub fn append_epoch(&self, record: &EpochRecord) -> Result<()> {
        let path = self.metrics_path();
        let exists = path.exists();
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut text = String::new();
        if !exists {
            text.push_str(METRICS_HEADER);
            text.push('\n');
        }
        text.push_str(&format!(
            "{},train,{},,,,,,,,\n",
            record.epoch, record.mean_train_loss
        ));
        if let Some(dev) = &record.dev {
            text.push_str(&format!(
                "{},dev,,{},{},{},{},{},{},{},{}\n",
                record.epoch,
                dev.macro_f1,
                dev.accuracy,
                dev.precision[0],
                dev.recall[0],
                dev.f1[0],
                dev.precision[1],
                dev.recall[1],
                dev.f1[1],
            ));
        }
        file.write_all(text.as_bytes())
            .map_err(|e| Error::io(&path, e))
    }

    /// Persist the given parameters as `best.ckpt`.
    pub fn save_best(&self, params: &ModelParams, hp: &HyperParams) -> Result<PathBuf> {
        let path = self.checkpoint_path();
        save_checkpoint(params, hp, &path)?;
        Ok(path)
    }

    /// Write the final JSON report.
    pub fn write_report(&self, report: &FinalReport) -> Result<()> {
        let path = self.report_path();
        let json = serde_json::to_string_pretty(report)
            .map_err(|e| Error::InvalidInput(format!("report serialization: {e}")))?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

/// End-of-run summary persisted as `report.json`.
#[derive(Debug, Serialize)]
pub struct FinalReport {
    pub epochs_run: usize,
    pub optimizer_steps: usize,
    pub final_train_loss: Option<f64>,
    pub best_epoch: usize,
    pub best_dev_macro_f1: Option<f64>,
    pub final_dev: Option<EvalReport>,
    pub checkpoint: Option<String>,
}

impl FinalReport {
    pub fn from_state(state: &TrainState, checkpoint: Option<&Path>) -> Self {
        FinalReport {
            epochs_run: state.epochs_run,
            optimizer_steps: state.loss_trace.len(),
            final_train_loss: state.loss_trace.last().copied(),
            best_epoch: state.best_epoch,
            best_dev_macro_f1: state.best_dev_macro_f1,
            final_dev: state.history.last().and_then(|r| r.dev.clone()),
            checkpoint: checkpoint.map(|p| p.display().to_string()),
        }
    }
}
