//! Continual-learning memory for the discriminator: per-parameter importance
//! estimates, a discounted online buffer over task boundaries, and the
//! quadratic penalty the training loop subtracts from the discriminator
//! objective.
//!
//! The buffer keeps `S = Σ_κ γ^{k−κ} Q_κ` and `P = Σ_κ γ^{k−κ} Q_κ θ*_κ`
//! recursively, with the frozen reference `θ̄* = P/S` wherever `S > 0`.

use std::fmt::Write as _;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gan::discriminator_loss;
use crate::nn::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClMethod {
    /// No penalty, no state; the baseline.
    None,
    /// Plain weight decay toward the origin: importance pinned to one.
    L2,
    /// Pull toward a discounted average of past parameters.
    HistAvg,
    /// Squared-gradient (Fisher diagonal) importance at each boundary.
    Ewc,
    /// Path-integral importance accumulated between boundaries.
    Is,
}

impl ClMethod {
    pub fn name(self) -> &'static str {
        match self {
            ClMethod::None => "none",
            ClMethod::L2 => "l2",
            ClMethod::HistAvg => "histavg",
            ClMethod::Ewc => "ewc",
            ClMethod::Is => "is",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(ClMethod::None),
            "l2" => Some(ClMethod::L2),
            "histavg" | "hist_avg" => Some(ClMethod::HistAvg),
            "ewc" => Some(ClMethod::Ewc),
            "is" => Some(ClMethod::Is),
            _ => None,
        }
    }
}

/// Hyperparameters of the memory: method, penalty weight λ, discount γ, and
/// task rate α (a boundary fires every α iterations, so a T-step run has
/// K = T/α tasks).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClConfig {
    pub method: ClMethod,
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: u64,
}

impl ClConfig {
    pub fn none() -> Self {
        ClConfig { method: ClMethod::None, lambda: 0.0, gamma: 0.0, alpha: 1 }
    }

    /// Validates ranges and pins the method-forced settings: `histavg` always
    /// uses α = 1, and `l2` additionally has γ = 0 (its state never changes).
    pub fn new(method: ClMethod, lambda: f64, gamma: f64, alpha: u64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be a non-negative real, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        if alpha == 0 {
            return Err(Error::Config("alpha must be a positive integer".into()));
        }
        let (gamma, alpha) = match method {
            ClMethod::L2 => (0.0, 1),
            ClMethod::HistAvg => (gamma, 1),
            _ => (gamma, alpha),
        };
        Ok(ClConfig { method, lambda, gamma, alpha })
    }
}

/// Memory arrays, all indexed like the discriminator's flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidationState {
    s: Vec<f64>,
    p: Vec<f64>,
    theta_bar: Vec<f64>,
    omega_accum: Vec<f64>,
    tasks_completed: u64,
}

impl ConsolidationState {
    pub fn zeros(len: usize) -> Self {
        ConsolidationState {
            s: vec![0.0; len],
            p: vec![0.0; len],
            theta_bar: vec![0.0; len],
            omega_accum: vec![0.0; len],
            tasks_completed: 0,
        }
    }

    /// Weight-decay state: unit importance anchored at the origin, never
    /// updated by boundaries.
    pub fn pinned_unit(len: usize) -> Self {
        ConsolidationState { s: vec![1.0; len], ..ConsolidationState::zeros(len) }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn theta_bar(&self) -> &[f64] {
        &self.theta_bar
    }

    pub fn omega_accum(&self) -> &[f64] {
        &self.omega_accum
    }

    pub fn tasks_completed(&self) -> u64 {
        self.tasks_completed
    }

    /// True once any parameter carries positive importance.
    pub fn has_support(&self) -> bool {
        self.s.iter().any(|&s| s > 0.0)
    }

    /// Per-parameter dump of the memory arrays.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,s,p,theta_bar\n");
        for i in 0..self.s.len() {
            writeln!(out, "{},{},{},{}", i, self.s[i], self.p[i], self.theta_bar[i])
                .expect("string write");
        }
        out
    }
}

/// Penalty scalar `(λ/2) Σ_i S_i (θ_i − θ̄*_i)²` and its gradient
/// `λ S_i (θ_i − θ̄*_i)` written into `grad_out`. Entries with `S_i ≤ 0`
/// contribute nothing: at `S_i = 0` the reference is undefined and the term's
/// limit is 0, and non-positive importance carries no memory to protect.
pub fn penalty_into(
    state: &ConsolidationState,
    lambda: f64,
    theta: &[f64],
    grad_out: &mut [f64],
) -> Result<f64> {
    if state.len() != theta.len() || grad_out.len() != theta.len() {
        return Err(Error::Config(format!(
            "penalty length mismatch: state {}, theta {}, grad {}",
            state.len(),
            theta.len(),
            grad_out.len()
        )));
    }
    let mut acc = 0.0;
    for i in 0..theta.len() {
        let s = state.s[i];
        if s > 0.0 {
            let dev = theta[i] - state.theta_bar[i];
            acc += s * dev * dev;
            grad_out[i] = lambda * s * dev;
        } else {
            grad_out[i] = 0.0;
        }
    }
    Ok(0.5 * lambda * acc)
}

/// Allocating convenience wrapper around [`penalty_into`].
pub fn penalty(state: &ConsolidationState, lambda: f64, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; theta.len()];
    let scalar = penalty_into(state, lambda, theta, &mut grad)?;
    Ok((scalar, grad))
}

/// Squared gradient of the plain (un-penalized) discriminator objective on a
/// fresh minibatch, evaluated at the current parameters. This is the Fisher
/// diagonal estimate consumed at EWC boundaries.
pub fn fisher_diag(
    d: &Network,
    gen: &Network,
    real: ArrayView2<'_, f64>,
    latent: ArrayView2<'_, f64>,
) -> Result<Vec<f64>> {
    let (_, grad) = discriminator_loss(d, gen, real, latent)?;
    if !grad.is_finite() {
        return Err(Error::Numerical("non-finite gradient in importance estimate".into()));
    }
    Ok(grad.values().iter().map(|g| g * g).collect())
}

/// Path-integral accumulation `ω_i += g_i δ_i`, where `g` is the gradient of
/// the augmented objective at the pre-step parameters and `δ` is the realized
/// parameter change just applied.
pub fn accumulate_importance(
    state: &mut ConsolidationState,
    g: &[f64],
    delta: &[f64],
) -> Result<()> {
    if g.len() != state.len() || delta.len() != state.len() {
        return Err(Error::Config(format!(
            "importance length mismatch: state {}, g {}, delta {}",
            state.len(),
            g.len(),
            delta.len()
        )));
    }
    for i in 0..g.len() {
        state.omega_accum[i] += g[i] * delta[i];
    }
    Ok(())
}

/// Folds one finished task into the buffer: `S ← γS + Q`, `P ← γP + Q θ*`,
/// and `θ̄* ← P/S` wherever `S > 0`.
pub fn end_task(
    state: &mut ConsolidationState,
    q: &[f64],
    theta_star: &[f64],
    gamma: f64,
) -> Result<()> {
    if q.len() != state.len() || theta_star.len() != state.len() {
        return Err(Error::Config(format!(
            "task boundary length mismatch: state {}, q {}, theta* {}",
            state.len(),
            q.len(),
            theta_star.len()
        )));
    }
    for i in 0..q.len() {
        state.s[i] = gamma * state.s[i] + q[i];
        state.p[i] = gamma * state.p[i] + q[i] * theta_star[i];
        if state.s[i] > 0.0 {
            state.theta_bar[i] = state.p[i] / state.s[i];
        }
    }
    state.tasks_completed += 1;
    Ok(())
}

/// Per-run memory owned by one training loop. The trainer drives it with
/// three call sites: a boundary before the discriminator step (EWC Fisher, or
/// unit importance for the averaging method), the per-step path-integral
/// accumulation, and a boundary after the step (path-integral methods).
#[derive(Debug, Clone)]
pub struct ConsolidationHook {
    config: ClConfig,
    state: ConsolidationState,
    unit_q: Vec<f64>,
}

impl ConsolidationHook {
    pub fn new(config: ClConfig, param_len: usize) -> Self {
        let state = match config.method {
            ClMethod::L2 => ConsolidationState::pinned_unit(param_len),
            _ => ConsolidationState::zeros(param_len),
        };
        let unit_q = match config.method {
            ClMethod::HistAvg => vec![1.0; param_len],
            _ => Vec::new(),
        };
        ConsolidationHook { config, state, unit_q }
    }

    pub fn config(&self) -> &ClConfig {
        &self.config
    }

    pub fn state(&self) -> &ConsolidationState {
        &self.state
    }

    /// True when the penalty can be nonzero, so the trainer may skip the
    /// penalty pass entirely otherwise.
    pub fn penalty_active(&self) -> bool {
        self.config.lambda > 0.0
            && match self.config.method {
                ClMethod::None => false,
                ClMethod::L2 => true,
                _ => self.state.tasks_completed > 0,
            }
    }

    /// Penalty gradient into `grad_out`; returns the scalar.
    pub fn penalty_into(&self, theta: &[f64], grad_out: &mut [f64]) -> Result<f64> {
        penalty_into(&self.state, self.config.lambda, theta, grad_out)
    }

    /// Squared-gradient boundary due before the update of iteration `t`?
    pub fn fisher_boundary_due(&self, t: u64) -> bool {
        self.config.method == ClMethod::Ewc && t % self.config.alpha == 0
    }

    /// Unit-importance boundary due before the update of iteration `t`?
    /// Fires every iteration (α is pinned to 1 for the averaging method).
    pub fn averaging_boundary_due(&self, t: u64) -> bool {
        self.config.method == ClMethod::HistAvg && t % self.config.alpha == 0
    }

    /// Path-integral boundary due after the update of iteration `t`?
    pub fn importance_boundary_due(&self, t: u64) -> bool {
        self.config.method == ClMethod::Is && t % self.config.alpha == 0
    }

    /// EWC boundary: fold the supplied Fisher diagonal and the pre-step
    /// parameters into the buffer.
    pub fn boundary_with_fisher(&mut self, t: u64, fisher: &[f64], theta: &[f64]) -> Result<()> {
        for (i, q) in fisher.iter().enumerate() {
            if !(q.is_finite() && *q >= 0.0) {
                return Err(Error::Boundary {
                    step: t,
                    msg: format!("importance estimate entry {i} is {q}, expected finite ≥ 0"),
                });
            }
        }
        end_task(&mut self.state, fisher, theta, self.config.gamma)
    }

    /// Averaging boundary: unit importance at the current parameters.
    pub fn averaging_boundary(&mut self, theta: &[f64]) -> Result<()> {
        let unit = std::mem::take(&mut self.unit_q);
        let r = end_task(&mut self.state, &unit, theta, self.config.gamma);
        self.unit_q = unit;
        r
    }

    /// Per-step path-integral accumulation; a no-op for other methods.
    pub fn accumulate_step(&mut self, g: &[f64], delta: &[f64]) -> Result<()> {
        if self.config.method != ClMethod::Is {
            return Ok(());
        }
        accumulate_importance(&mut self.state, g, delta)
    }

    /// Path-integral boundary: fold the accumulated ω and the post-step
    /// parameters into the buffer, then reset ω.
    pub fn importance_boundary(&mut self, t: u64, theta: &[f64]) -> Result<()> {
        if let Some(i) = self.state.omega_accum.iter().position(|w| !w.is_finite()) {
            return Err(Error::Boundary {
                step: t,
                msg: format!("accumulated importance entry {i} is not finite"),
            });
        }
        let omega = std::mem::take(&mut self.state.omega_accum);
        let r = end_task(&mut self.state, &omega, theta, self.config.gamma);
        self.state.omega_accum = omega;
        self.state.omega_accum.fill(0.0);
        r
    }
}
