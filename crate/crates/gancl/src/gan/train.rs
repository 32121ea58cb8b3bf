//! The alternating training loop: one discriminator ascent step and one
//! generator descent step per iteration, with consolidation boundaries fired
//! around the discriminator update.
//!
//! Three ChaCha streams derive from the run seed so that neither the
//! consolidation hook nor evaluation can perturb the training trajectory:
//! stream 0 feeds initialization and the per-iteration batches (latent first,
//! then real), stream 1 feeds boundary minibatches, stream 2 feeds evaluation.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::consolidation::{fisher_diag, ClConfig, ClMethod, ConsolidationHook, ConsolidationState};
use crate::data::{sample_latent, sample_mixture_batch};
use crate::error::{Error, Result};
use crate::gan::config::GanConfig;
use crate::gan::loss::{discriminator_loss_parts, generator_loss_from_trace};
use crate::nn::{Direction, Network, OptimizerState};

/// Metrics computed by an [`Evaluator`] at one evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct EvalMetrics {
    pub icp: f64,
    pub sym_kl: f64,
    pub mode_coverage: f64,
}

/// Periodic measurement callback. Implementations draw only from the RNG
/// handed to them (the dedicated evaluation stream) and may write sample
/// snapshots as a side effect.
pub trait Evaluator {
    fn evaluate(&mut self, iteration: u64, gen: &Network, rng: &mut ChaCha12Rng)
        -> Result<EvalMetrics>;
}

/// Evaluator that measures nothing; useful for tests and timing probes.
pub struct NullEvaluator;

impl Evaluator for NullEvaluator {
    fn evaluate(&mut self, _: u64, _: &Network, _: &mut ChaCha12Rng) -> Result<EvalMetrics> {
        Ok(EvalMetrics { icp: 0.0, sym_kl: 0.0, mode_coverage: 0.0 })
    }
}

/// One evaluation-point record. `iters_per_sec` covers training work since
/// the previous record, excluding evaluation pauses.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: u64,
    pub icp: f64,
    pub sym_kl: f64,
    pub mode_coverage: f64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub iters_per_sec: f64,
}

/// Trace CSV holds only seed-determined columns; timing lives in the run
/// summary so re-runs produce byte-identical trace files.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("iteration,icp,sym_kl,mode_coverage,d_loss,g_loss\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration, r.icp, r.sym_kl, r.mode_coverage, r.d_loss, r.g_loss
        )
        .expect("string write");
    }
    out
}

/// Completed run: config echo, evaluation trace, and final state.
#[derive(Debug)]
pub struct TrainRun {
    pub config: GanConfig,
    pub cl_config: ClConfig,
    pub trace: Vec<TraceRow>,
    pub generator: Network,
    pub discriminator: Network,
    pub memory: ConsolidationState,
    pub d_updates: u64,
    pub g_updates: u64,
    /// Whole-run training throughput, evaluation pauses excluded.
    pub mean_iters_per_sec: f64,
}

fn at_step(step: u64, e: Error) -> Error {
    match e {
        Error::Numerical(msg) => Error::Divergence { step, msg },
        Error::Divergence { msg, .. } => Error::Divergence { step, msg },
        other => other,
    }
}

pub fn train(
    config: &GanConfig,
    cl_config: &ClConfig,
    evaluator: &mut dyn Evaluator,
) -> Result<TrainRun> {
    config.validate()?;
    let m = config.batch_size;

    let mut main_rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut hook_rng = ChaCha12Rng::seed_from_u64(config.seed);
    hook_rng.set_stream(1);
    let mut eval_rng = ChaCha12Rng::seed_from_u64(config.seed);
    eval_rng.set_stream(2);

    // Initialization order is part of the trajectory contract: generator
    // first, then discriminator, both from the main stream.
    let mut gen = Network::init(config.generator_layers.clone(), config.weight_init, &mut main_rng)?;
    let mut disc =
        Network::init(config.discriminator_layers.clone(), config.weight_init, &mut main_rng)?;

    let mut g_opt = OptimizerState::new(config.generator_optimizer, gen.param_len())?;
    let mut d_opt = OptimizerState::new(config.discriminator_optimizer, disc.param_len())?;

    let mut hook = ConsolidationHook::new(*cl_config, disc.param_len());
    let is_path_integral = cl_config.method == ClMethod::Is;

    let mut penalty_grad = vec![0.0; disc.param_len()];
    let mut theta_before = vec![0.0; disc.param_len()];
    let mut delta = vec![0.0; disc.param_len()];

    let mut trace = Vec::new();
    let mut train_time = Duration::ZERO;
    let mut last_record_time = Duration::ZERO;
    let mut last_record_iter = 0u64;
    let (mut d_updates, mut g_updates) = (0u64, 0u64);

    for t in 1..=config.iterations {
        let tick = Instant::now();

        // Boundaries that precede the discriminator update. The boundary
        // minibatch mirrors the main draw order: latent first, then real.
        if hook.fisher_boundary_due(t) {
            let latent = sample_latent(&config.latent, m, &mut hook_rng);
            let real = sample_mixture_batch(&config.mixture, m, &mut hook_rng);
            let q = fisher_diag(&disc, &gen, real.view(), latent.view()).map_err(|e| at_step(t, e))?;
            hook.boundary_with_fisher(t, &q, disc.params().values())?;
        } else if hook.averaging_boundary_due(t) {
            hook.averaging_boundary(disc.params().values())?;
        }

        let latent = sample_latent(&config.latent, m, &mut main_rng);
        let real = sample_mixture_batch(&config.mixture, m, &mut main_rng);

        let gen_trace = gen.forward_trace(latent.view()).map_err(|e| at_step(t, e))?;
        let (d_loss, mut d_grad) = discriminator_loss_parts(&disc, real.view(), gen_trace.output())
            .map_err(|e| at_step(t, e))?;

        // Ascend the augmented objective: plain GAN loss minus the penalty.
        if hook.penalty_active() {
            hook.penalty_into(disc.params().values(), &mut penalty_grad)?;
            for (g, p) in d_grad.values_mut().iter_mut().zip(&penalty_grad) {
                *g -= p;
            }
        }

        if is_path_integral {
            theta_before.copy_from_slice(disc.params().values());
        }
        d_opt
            .apply_step(disc.params_mut(), &d_grad, Direction::Ascent)
            .map_err(|e| at_step(t, e))?;
        d_updates += 1;

        if is_path_integral {
            for ((d, after), before) in
                delta.iter_mut().zip(disc.params().values()).zip(&theta_before)
            {
                *d = after - before;
            }
            hook.accumulate_step(d_grad.values(), &delta)?;
            if hook.importance_boundary_due(t) {
                hook.importance_boundary(t, disc.params().values())?;
            }
        }

        // Generator update against the just-updated discriminator, reusing
        // the same latent batch and generator forward pass.
        let (g_loss, g_grad) =
            generator_loss_from_trace(&disc, &gen, &gen_trace, config.saturating_generator_loss)
                .map_err(|e| at_step(t, e))?;
        g_opt.apply_step(gen.params_mut(), &g_grad, Direction::Descent).map_err(|e| at_step(t, e))?;
        g_updates += 1;

        train_time += tick.elapsed();

        if t % config.eval_interval == 0 || t == config.iterations {
            let span = (train_time - last_record_time).as_secs_f64();
            let iters_per_sec = (t - last_record_iter) as f64 / span.max(1e-12);
            let metrics = evaluator.evaluate(t, &gen, &mut eval_rng)?;
            if !(metrics.icp.is_finite()
                && metrics.sym_kl.is_finite()
                && metrics.mode_coverage.is_finite()
                && d_loss.is_finite()
                && g_loss.is_finite())
            {
                return Err(Error::Divergence {
                    step: t,
                    msg: "non-finite value in evaluation record".into(),
                });
            }
            trace.push(TraceRow {
                iteration: t,
                icp: metrics.icp,
                sym_kl: metrics.sym_kl,
                mode_coverage: metrics.mode_coverage,
                d_loss,
                g_loss,
                iters_per_sec,
            });
            last_record_time = train_time;
            last_record_iter = t;
        }
    }

    let mean_iters_per_sec = config.iterations as f64 / train_time.as_secs_f64().max(1e-12);
    Ok(TrainRun {
        config: config.clone(),
        cl_config: *cl_config,
        trace,
        generator: gen,
        discriminator: disc,
        memory: hook.state().clone(),
        d_updates,
        g_updates,
        mean_iters_per_sec,
    })
}
