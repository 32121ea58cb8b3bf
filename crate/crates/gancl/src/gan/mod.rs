//! Alternating GAN training loop with a pluggable discriminator augmentation
//! hook. The generator update is never modified by the hook.

mod config;
mod loss;
mod train;

pub use config::GanConfig;
pub use loss::{
    discriminator_loss, discriminator_loss_parts, generator_loss, generator_loss_from_trace,
    PROB_CLAMP,
};
pub use train::{trace_csv, train, EvalMetrics, Evaluator, NullEvaluator, TraceRow, TrainRun};
