//! Minimal dense networks with exact reverse-mode gradients.
//!
//! All per-parameter state in this crate (gradients, optimizer moments, the
//! consolidation buffers) lives in one flat `f64` address space described by
//! [`ParamLayout`]. Networks are stacks of dense layers; batches are `ndarray`
//! matrices with one sample per row.

mod activation;
mod checkpoint;
mod network;
mod optim;
mod params;

pub use activation::Activation;
pub use checkpoint::{load_checkpoint, load_checkpoint_str, save_checkpoint, checkpoint_string};
pub use network::{ForwardTrace, LayerSpec, Network, WeightInit};
pub use optim::{Direction, OptKind, OptimizerSettings, OptimizerState};
pub use params::{FlatParams, GradientVector, LayoutEntry, ParamKind, ParamLayout};
