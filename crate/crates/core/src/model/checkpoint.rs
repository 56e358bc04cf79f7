use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{BbbgConfig, BbbgParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume analysis of a trained model. Floats are
/// written in shortest round-trip form, so loading is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: BbbgConfig,
    pub theme_names: Vec<String>,
    pub params: BbbgParams,
    /// Initial theme matrix the trainable one is anchored to.
    pub t0: Option<DMatrix<f64>>,
    /// Seed of the training random stream.
    pub seed: u64,
    pub epochs_completed: usize,
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer(&mut out, ckpt).map_err(|e| Error::Data(e.to_string()))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "checkpoint version {} is not supported",
            ckpt.version
        )));
    }
    if ckpt.params.input_dim() != ckpt.config.input_dim {
        return Err(Error::Data("checkpoint parameters do not match its config".into()));
    }
    Ok(ckpt)
}
