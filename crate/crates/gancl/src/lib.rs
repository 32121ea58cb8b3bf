//! GAN training with a continual-learning memory on the discriminator.
//!
//! The discriminator of a GAN sees a sequence of generator distributions, one
//! per training step, and plain gradient updates let it forget how earlier
//! generations looked. This crate treats that as a continual-learning problem:
//! a per-parameter quadratic penalty anchors the discriminator to parameter
//! values that mattered for recognizing past generator output, with importance
//! estimated either from the squared loss gradient (EWC) or from a path
//! integral of gradient times parameter change (synaptic importance). Both
//! variants share one discounted online buffer, so memory cost stays at a few
//! vectors the size of the parameters regardless of how many tasks have
//! passed.
//!
//! The crate bundles everything needed to reproduce the 2D
//! mixture-of-Gaussians benchmark on a desktop machine:
//!
//! - [`nn`]: dense networks over a flat `f64` parameter vector, exact
//!   reverse-mode gradients, SGD/Adam.
//! - [`data`]: the eight-Gaussians ground truth and latent samplers.
//! - [`gan`]: the alternating min-max training loop with a pluggable
//!   discriminator-penalty hook.
//! - [`consolidation`]: the continual-learning memory and the hook wiring for
//!   EWC, synaptic importance, historical averaging and plain `l2`.
//! - [`metrics`]: classifier-based inception score, symmetric KL against the
//!   known mixture, mode coverage.
//! - [`forgetting`]: the sequential fine-tuning benchmark that measures
//!   discriminator forgetting directly.
//! - [`exp`]: config files, seeded experiment runners and artifact output
//!   backing the `gancl` binary.

pub mod consolidation;
pub mod data;
pub mod error;
pub mod exp;
pub mod forgetting;
pub mod gan;
pub mod metrics;
pub mod nn;

pub use error::{Error, Result};
