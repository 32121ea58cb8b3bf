//! Gradient-step optimizers over flat parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::{FlatParams, GradientVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptKind {
    Sgd,
    Adam,
}

/// Whether a step climbs the objective (discriminator) or descends it
/// (generator).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascent,
    Descent,
}

impl Direction {
    #[inline]
    fn sign(self) -> f64 {
        match self {
            Direction::Ascent => 1.0,
            Direction::Descent => -1.0,
        }
    }
}

/// Optimizer hyperparameters. The Adam fields are ignored for SGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub kind: OptKind,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerSettings {
    pub fn sgd(step_size: f64) -> Self {
        OptimizerSettings { kind: OptKind::Sgd, step_size, beta1: 0.0, beta2: 0.0, epsilon: 0.0 }
    }

    pub fn adam(step_size: f64, beta1: f64, beta2: f64) -> Self {
        OptimizerSettings { kind: OptKind::Adam, step_size, beta1, beta2, epsilon: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.kind == OptKind::Adam {
            for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
                if !(0.0..1.0).contains(&beta) {
                    return Err(Error::Config(format!("{name} must lie in [0, 1), got {beta}")));
                }
            }
            if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
                return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
            }
        }
        Ok(())
    }
}

/// Mutable optimizer state for one parameter vector.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    settings: OptimizerSettings,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    pub fn new(settings: OptimizerSettings, param_len: usize) -> Result<Self> {
        settings.validate()?;
        let moments = match settings.kind {
            OptKind::Sgd => 0,
            OptKind::Adam => param_len,
        };
        Ok(OptimizerState {
            settings,
            first_moment: vec![0.0; moments],
            second_moment: vec![0.0; moments],
            step: 0,
        })
    }

    pub fn settings(&self) -> &OptimizerSettings {
        &self.settings
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one optimizer step in the given direction, in place.
    ///
    /// SGD: `θ ← θ ± ε g`. Adam: bias-corrected moment update with the chosen
    /// sign. The step counter increments on every call.
    pub fn apply_step(
        &mut self,
        params: &mut FlatParams,
        grad: &GradientVector,
        direction: Direction,
    ) -> Result<()> {
        if grad.len() != params.len() {
            return Err(Error::Config(format!(
                "gradient length {} does not match parameter length {}",
                grad.len(),
                params.len()
            )));
        }
        if let Some(i) = grad.first_non_finite() {
            return Err(Error::Divergence {
                step: self.step + 1,
                msg: format!("non-finite gradient component at index {i}"),
            });
        }

        self.step += 1;
        let sign = direction.sign();
        let eps_step = self.settings.step_size;
        match self.settings.kind {
            OptKind::Sgd => {
                for (p, g) in params.values_mut().iter_mut().zip(grad.values()) {
                    *p += sign * eps_step * g;
                }
            }
            OptKind::Adam => {
                let b1 = self.settings.beta1;
                let b2 = self.settings.beta2;
                let eps_num = self.settings.epsilon;
                let corr1 = 1.0 - b1.powi(self.step as i32);
                let corr2 = 1.0 - b2.powi(self.step as i32);
                for (((p, g), m), v) in params
                    .values_mut()
                    .iter_mut()
                    .zip(grad.values())
                    .zip(self.first_moment.iter_mut())
                    .zip(self.second_moment.iter_mut())
                {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let m_hat = *m / corr1;
                    let v_hat = *v / corr2;
                    *p += sign * eps_step * m_hat / (v_hat.sqrt() + eps_num);
                }
            }
        }
        Ok(())
    }
}
