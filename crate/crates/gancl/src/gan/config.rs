use serde::{Deserialize, Serialize};

use crate::data::{LatentSpec, MixtureSpec};
use crate::error::{Error, Result};
use crate::nn::{Activation, LayerSpec, OptimizerSettings, WeightInit};

/// Full specification of one training run. The defaults are the vanilla
/// baseline configuration; continual-learning settings live separately in
/// [`crate::consolidation::ClConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanConfig {
    pub mixture: MixtureSpec,
    pub latent: LatentSpec,
    pub generator_layers: Vec<LayerSpec>,
    pub discriminator_layers: Vec<LayerSpec>,
    pub batch_size: usize,
    pub iterations: u64,
    pub generator_optimizer: OptimizerSettings,
    pub discriminator_optimizer: OptimizerSettings,
    pub weight_init: WeightInit,
    /// Generator minimizes log(1 − D(G(z))) when true, −log D(G(z)) when false.
    pub saturating_generator_loss: bool,
    pub eval_interval: u64,
    pub eval_samples: usize,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            mixture: MixtureSpec::eight_gaussians(),
            latent: LatentSpec { dimension: 64 },
            generator_layers: vec![
                LayerSpec::new(64, 128, Activation::Relu),
                LayerSpec::new(128, 128, Activation::Relu),
                LayerSpec::new(128, 2, Activation::Identity),
            ],
            discriminator_layers: vec![
                LayerSpec::new(2, 128, Activation::Relu),
                LayerSpec::new(128, 128, Activation::Relu),
                LayerSpec::new(128, 1, Activation::Sigmoid),
            ],
            batch_size: 256,
            iterations: 25_000,
            generator_optimizer: OptimizerSettings::adam(1e-4, 0.5, 0.999),
            discriminator_optimizer: OptimizerSettings::adam(1e-4, 0.5, 0.999),
            weight_init: WeightInit::XavierUniform,
            saturating_generator_loss: true,
            eval_interval: 500,
            eval_samples: 10_000,
            seed: 0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be ≥ 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iteration count must be ≥ 1".into()));
        }
        if self.eval_interval == 0 {
            return Err(Error::Config("evaluation interval must be ≥ 1".into()));
        }
        if self.eval_samples == 0 {
            return Err(Error::Config("evaluation sample count must be ≥ 1".into()));
        }
        let g_first = self
            .generator_layers
            .first()
            .ok_or_else(|| Error::Config("generator needs at least one layer".into()))?;
        if g_first.input_width != self.latent.dimension {
            return Err(Error::Config(format!(
                "generator input width {} does not match latent dimension {}",
                g_first.input_width, self.latent.dimension
            )));
        }
        let g_last = self.generator_layers.last().expect("non-empty");
        if g_last.output_width != 2 {
            return Err(Error::Config(format!(
                "generator must emit 2D points, got width {}",
                g_last.output_width
            )));
        }
        let d_first = self
            .discriminator_layers
            .first()
            .ok_or_else(|| Error::Config("discriminator needs at least one layer".into()))?;
        if d_first.input_width != 2 {
            return Err(Error::Config(format!(
                "discriminator must consume 2D points, got width {}",
                d_first.input_width
            )));
        }
        let d_last = self.discriminator_layers.last().expect("non-empty");
        if d_last.output_width != 1 || d_last.activation != Activation::Sigmoid {
            return Err(Error::Config(
                "discriminator head must be a single sigmoid unit".into(),
            ));
        }
        self.generator_optimizer.validate()?;
        self.discriminator_optimizer.validate()?;
        Ok(())
    }
}
