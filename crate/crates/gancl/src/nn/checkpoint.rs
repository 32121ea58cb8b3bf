//! Versioned network checkpoints.
//!
//! Checkpoints are JSON: layer specs plus the flat parameter vector. JSON
//! numbers round-trip `f64` exactly (shortest-representation printing), so a
//! save/load cycle reproduces parameters bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::network::{LayerSpec, Network};

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    specs: Vec<LayerSpec>,
    params: Vec<f64>,
}

pub fn checkpoint_string(net: &Network) -> String {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        specs: net.specs().to_vec(),
        params: net.params().values().to_vec(),
    };
    serde_json::to_string(&file).expect("checkpoint serialization cannot fail")
}

pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    fs::write(path, checkpoint_string(net))?;
    Ok(())
}

/// Parses a checkpoint from its JSON text, validating version, layer chaining
/// and parameter length/finiteness.
pub fn load_checkpoint_str(text: &str) -> Result<Network> {
    let file: CheckpointFile =
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    Network::from_parts(file.specs, file.params)
}

pub fn load_checkpoint(path: &Path) -> Result<Network> {
    load_checkpoint_str(&fs::read_to_string(path)?)
}
