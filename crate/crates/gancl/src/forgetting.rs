//! Discriminator catastrophic-forgetting benchmark: snapshot generated
//! datasets along a vanilla GAN run, then sequentially fine-tune a fresh
//! discriminator on each real-vs-snapshot task and measure how well it still
//! detects earlier snapshots, with and without a consolidation penalty.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::consolidation::{end_task, ClConfig, ClMethod, ConsolidationState};
use crate::data::{sample_latent, sample_mixture_batch, MixtureSpec};
use crate::error::{Error, Result};
use crate::gan::{train, EvalMetrics, Evaluator, GanConfig, PROB_CLAMP};
use crate::nn::{
    Direction, GradientVector, LayerSpec, Network, OptimizerSettings, OptimizerState, WeightInit,
};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;

/// One generated dataset with disjoint train/test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    pub iteration: u64,
    pub train: Array2<f64>,
    pub test: Array2<f64>,
}

/// Ordered snapshots taken along one source run.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub datasets: Vec<SnapshotDataset>,
    pub source_seed: u64,
    pub interval: u64,
}

/// Read access to snapshot data, so tests can interpose an access logger and
/// prove the fine-tuner never touches out-of-task splits.
pub trait SnapshotAccess {
    fn n_tasks(&self) -> usize;
    fn iteration_tag(&self, task: usize) -> u64;
    fn train_split(&self, task: usize) -> ArrayView2<'_, f64>;
    fn test_split(&self, task: usize) -> ArrayView2<'_, f64>;
}

impl SnapshotAccess for SnapshotSet {
    fn n_tasks(&self) -> usize {
        self.datasets.len()
    }

    fn iteration_tag(&self, task: usize) -> u64 {
        self.datasets[task].iteration
    }

    fn train_split(&self, task: usize) -> ArrayView2<'_, f64> {
        self.datasets[task].train.view()
    }

    fn test_split(&self, task: usize) -> ArrayView2<'_, f64> {
        self.datasets[task].test.view()
    }
}

struct SnapshotCollector {
    interval: u64,
    n_per_dataset: usize,
    train_fraction: f64,
    out: Vec<SnapshotDataset>,
}

impl Evaluator for SnapshotCollector {
    fn evaluate(
        &mut self,
        iteration: u64,
        gen: &Network,
        rng: &mut ChaCha12Rng,
    ) -> Result<EvalMetrics> {
        if iteration % self.interval == 0 {
            let latent = sample_latent(
                &crate::data::LatentSpec { dimension: gen.input_width() },
                self.n_per_dataset,
                rng,
            );
            let points = gen.forward(latent.view())?;
            if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
                return Err(Error::Snapshot {
                    iteration,
                    msg: format!("generator produced non-finite sample value {bad}"),
                });
            }
            let n_train = (self.n_per_dataset as f64 * self.train_fraction).round() as usize;
            let train = points.slice(ndarray::s![..n_train, ..]).to_owned();
            let test = points.slice(ndarray::s![n_train.., ..]).to_owned();
            self.out.push(SnapshotDataset { iteration, train, test });
        }
        Ok(EvalMetrics { icp: 0.0, sym_kl: 0.0, mode_coverage: 0.0 })
    }
}

/// Runs a vanilla GAN with the given config and captures a generated dataset
/// every `interval` iterations, split into train/test.
pub fn snapshot_datasets(
    config: &GanConfig,
    interval: u64,
    n_per_dataset: usize,
    train_fraction: f64,
) -> Result<SnapshotSet> {
    if interval == 0 {
        return Err(Error::Config("snapshot interval must be ≥ 1".into()));
    }
    if n_per_dataset < 2 {
        return Err(Error::Config("snapshot datasets need ≥ 2 samples".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut run_config = config.clone();
    run_config.eval_interval = interval;
    let mut collector = SnapshotCollector {
        interval,
        n_per_dataset,
        train_fraction,
        out: Vec::new(),
    };
    train(&run_config, &ClConfig::none(), &mut collector)?;
    if collector.out.len() < 2 {
        return Err(Error::Config(format!(
            "need ≥ 2 snapshot datasets, got {} (iterations {} at interval {})",
            collector.out.len(),
            config.iterations,
            interval
        )));
    }
    Ok(SnapshotSet { datasets: collector.out, source_seed: config.seed, interval })
}

/// Fine-tuning configuration for the sequential benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub discriminator_layers: Vec<LayerSpec>,
    pub weight_init: WeightInit,
    pub optimizer: OptimizerSettings,
    /// Total balanced batch: half real, half snapshot samples.
    pub batch_size: usize,
    pub epochs_per_task: usize,
    pub target_train_accuracy: f64,
    pub cl: ClConfig,
    pub seed: u64,
}

impl BenchConfig {
    /// Plain-sgd baseline configuration for the benchmark discriminator.
    pub fn sgd_baseline(seed: u64) -> Self {
        BenchConfig {
            discriminator_layers: GanConfig::default().discriminator_layers,
            weight_init: WeightInit::XavierUniform,
            optimizer: OptimizerSettings::adam(1e-3, 0.9, 0.999),
            batch_size: 128,
            epochs_per_task: 20,
            target_train_accuracy: 0.99,
            cl: ClConfig::none(),
            seed,
        }
    }

    /// Same run with the consolidation penalty active: λ = 100, no discount,
    /// one boundary per task.
    pub fn with_ewc(seed: u64, lambda: f64) -> Result<Self> {
        let mut cfg = BenchConfig::sgd_baseline(seed);
        cfg.cl = ClConfig::new(ClMethod::Ewc, lambda, 1.0, 1)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 || self.batch_size % 2 != 0 {
            return Err(Error::Config(format!(
                "balanced batches need an even batch size ≥ 2, got {}",
                self.batch_size
            )));
        }
        if self.epochs_per_task == 0 {
            return Err(Error::Config("epoch budget must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.target_train_accuracy) {
            return Err(Error::Config("convergence target must lie in [0, 1]".into()));
        }
        if !matches!(self.cl.method, ClMethod::None | ClMethod::Ewc) {
            return Err(Error::Config(format!(
                "benchmark supports methods none and ewc, got {}",
                self.cl.method.name()
            )));
        }
        self.optimizer.validate()?;
        Ok(())
    }
}

/// Lower-triangular accuracy record: `entries[t][s]` is the fake-detection
/// accuracy on snapshot `s`'s test split after fine-tuning through task `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    pub method: String,
    pub entries: Vec<Vec<f64>>,
    /// Per-task convergence flags; a false entry means the epoch budget ran
    /// out before the train-accuracy target.
    pub converged: Vec<bool>,
}

impl AccuracyMatrix {
    pub fn n_tasks(&self) -> usize {
        self.entries.len()
    }

    pub fn diagonal_mean(&self) -> f64 {
        let n = self.entries.len();
        self.entries.iter().enumerate().map(|(t, row)| row[t]).sum::<f64>() / n as f64
    }

    /// Mean accuracy over all strictly-backward entries (s < t).
    pub fn backward_mean(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, row) in self.entries.iter().enumerate() {
            for &v in &row[..t] {
                sum += v;
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    /// Mean one-task drop: `entries[t][t] − entries[t+1][t]` averaged over t.
    pub fn immediate_drop_mean(&self) -> f64 {
        let n = self.entries.len();
        if n < 2 {
            return f64::NAN;
        }
        (0..n - 1)
            .map(|t| self.entries[t][t] - self.entries[t + 1][t])
            .sum::<f64>()
            / (n - 1) as f64
    }

    /// Rows are after-task indices; column `d{s}` is the evaluated dataset.
    pub fn to_csv(&self) -> String {
        let n = self.entries.len();
        let mut out = String::from("after_task");
        for s in 0..n {
            write!(out, ",d{s}").expect("string write");
        }
        out.push('\n');
        for (t, row) in self.entries.iter().enumerate() {
            write!(out, "{t}").expect("string write");
            for s in 0..n {
                if s < row.len() {
                    write!(out, ",{}", row[s]).expect("string write");
                } else {
                    out.push(',');
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Aggregates for one method, serialized into the benchmark report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForgettingSummary {
    pub method: String,
    pub diagonal_mean: f64,
    pub backward_mean: f64,
    pub immediate_drop_mean: f64,
    pub all_converged: bool,
}

impl ForgettingSummary {
    pub fn from_matrix(m: &AccuracyMatrix) -> Self {
        ForgettingSummary {
            method: m.method.clone(),
            diagonal_mean: m.diagonal_mean(),
            backward_mean: m.backward_mean(),
            immediate_drop_mean: m.immediate_drop_mean(),
            all_converged: m.converged.iter().all(|c| *c),
        }
    }
}

/// Binary cross-entropy on the discriminator head: label 1 = real, 0 = fake.
/// Probabilities are clamped like the adversarial losses.
fn bce_loss_grad(
    d: &Network,
    points: ArrayView2<'_, f64>,
    labels: &[f64],
) -> Result<(f64, GradientVector)> {
    let m = points.nrows();
    debug_assert_eq!(m, labels.len());
    let trace = d.forward_trace(points)?;
    let inv_m = 1.0 / m as f64;
    let mut loss = 0.0;
    let mut upstream = Array2::<f64>::zeros((m, 1));
    for (j, row) in trace.output().rows().into_iter().enumerate() {
        let raw = row[0];
        if !raw.is_finite() {
            return Err(Error::Numerical(format!("discriminator output is {raw}")));
        }
        let p = raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let y = labels[j];
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        upstream[[j, 0]] = inv_m * ((1.0 - y) / (1.0 - p) - y / p);
    }
    let grad = d.backward(&trace, upstream.view())?;
    Ok((loss * inv_m, grad))
}

/// Balanced sample size per class for the task-boundary Fisher estimate.
const FISHER_SAMPLES_PER_CLASS: usize = 512;

/// Diagonal empirical Fisher over a balanced sample: the mean of squared
/// single-sample loss gradients. Unlike the squared batch-mean gradient it
/// stays positive at a fitted optimum, where per-sample terms cancel in the
/// mean but not in the square.
fn per_sample_fisher(
    d: &Network,
    real: ArrayView2<'_, f64>,
    fake: ArrayView2<'_, f64>,
) -> Result<Vec<f64>> {
    let mut fisher = vec![0.0; d.param_len()];
    for (points, label) in [(real, 1.0), (fake, 0.0)] {
        for i in 0..points.nrows() {
            let row = points.row(i).insert_axis(ndarray::Axis(0));
            let (_, grad) = bce_loss_grad(d, row, &[label])?;
            for (f, g) in fisher.iter_mut().zip(grad.values()) {
                *f += g * g;
            }
        }
    }
    let n = (real.nrows() + fake.nrows()).max(1) as f64;
    for f in &mut fisher {
        *f /= n;
    }
    Ok(fisher)
}

/// Fraction of points the discriminator calls fake (p < 0.5).
fn fake_detection_accuracy(d: &Network, points: ArrayView2<'_, f64>) -> Result<f64> {
    let out = d.forward(points)?;
    let hits = out.column(0).iter().filter(|p| **p < 0.5).count();
    Ok(hits as f64 / points.nrows() as f64)
}

fn classification_accuracy(
    d: &Network,
    real: ArrayView2<'_, f64>,
    fake: ArrayView2<'_, f64>,
) -> Result<f64> {
    let real_out = d.forward(real)?;
    let fake_out = d.forward(fake)?;
    let hits = real_out.column(0).iter().filter(|p| **p >= 0.5).count()
        + fake_out.column(0).iter().filter(|p| **p < 0.5).count();
    Ok(hits as f64 / (real.nrows() + fake.nrows()) as f64)
}

/// Gathers `rows` from `source` into a dense batch.
fn gather(source: ArrayView2<'_, f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((rows.len(), source.ncols()));
    for (i, &r) in rows.iter().enumerate() {
        out.row_mut(i).assign(&source.row(r));
    }
    out
}

/// Sequentially fine-tunes one discriminator through every snapshot task and
/// records the accuracy matrix.
///
/// Three RNG streams derive from the seed: initialization (stream 0), batch
/// order and per-task real data (stream 1), and boundary minibatch selection
/// (stream 2). Runs that differ only in the penalty therefore share
/// initialization and batch order exactly.
pub fn sequential_finetune(
    snapshots: &dyn SnapshotAccess,
    mixture: &MixtureSpec,
    config: &BenchConfig,
) -> Result<AccuracyMatrix> {
    config.validate()?;
    let n_tasks = snapshots.n_tasks();
    if n_tasks < 2 {
        return Err(Error::Config(format!("benchmark needs ≥ 2 tasks, got {n_tasks}")));
    }

    let mut init_rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut data_rng = ChaCha12Rng::seed_from_u64(config.seed);
    data_rng.set_stream(1);
    let mut boundary_rng = ChaCha12Rng::seed_from_u64(config.seed);
    boundary_rng.set_stream(2);

    let mut disc =
        Network::init(config.discriminator_layers.clone(), config.weight_init, &mut init_rng)?;
    let mut opt = OptimizerState::new(config.optimizer, disc.param_len())?;
    let mut memory = ConsolidationState::zeros(disc.param_len());
    let penalized = config.cl.method == ClMethod::Ewc && config.cl.lambda > 0.0;
    let mut penalty_grad = vec![0.0; disc.param_len()];

    let half = config.batch_size / 2;
    let mut entries: Vec<Vec<f64>> = Vec::with_capacity(n_tasks);
    let mut converged = Vec::with_capacity(n_tasks);
    let mut batch_labels = vec![1.0; half];
    batch_labels.extend(std::iter::repeat(0.0).take(half));

    for task in 0..n_tasks {
        let fake_train = snapshots.train_split(task);
        let n_fake = fake_train.nrows();
        // Fresh real samples each task, matching the fake split size.
        let real_train = sample_mixture_batch(mixture, n_fake, &mut data_rng);

        let mut fake_order: Vec<usize> = (0..n_fake).collect();
        let mut real_order: Vec<usize> = (0..n_fake).collect();
        let mut task_converged = false;

        'epochs: for _ in 0..config.epochs_per_task {
            fake_order.shuffle(&mut data_rng);
            real_order.shuffle(&mut data_rng);
            let steps = n_fake / half;
            for step in 0..steps {
                let span = step * half..(step + 1) * half;
                let real_batch = gather(real_train.view(), &real_order[span.clone()]);
                let fake_batch = gather(fake_train, &fake_order[span]);
                let mut points = Array2::<f64>::zeros((config.batch_size, 2));
                points.slice_mut(ndarray::s![..half, ..]).assign(&real_batch);
                points.slice_mut(ndarray::s![half.., ..]).assign(&fake_batch);

                let (_, mut grad) = bce_loss_grad(&disc, points.view(), &batch_labels)?;
                if penalized && memory.has_support() {
                    crate::consolidation::penalty_into(
                        &memory,
                        config.cl.lambda,
                        disc.params().values(),
                        &mut penalty_grad,
                    )?;
                    for (g, p) in grad.values_mut().iter_mut().zip(&penalty_grad) {
                        *g += p;
                    }
                }
                opt.apply_step(disc.params_mut(), &grad, Direction::Descent)?;
            }
            let acc = classification_accuracy(&disc, real_train.view(), fake_train)?;
            if acc >= config.target_train_accuracy {
                task_converged = true;
                break 'epochs;
            }
        }
        converged.push(task_converged);

        // One boundary per finished task: diagonal empirical Fisher over a
        // balanced sample of this task's data.
        if config.cl.method == ClMethod::Ewc {
            let take = FISHER_SAMPLES_PER_CLASS.min(n_fake);
            let mut idx: Vec<usize> = (0..n_fake).collect();
            idx.shuffle(&mut boundary_rng);
            let fake_batch = gather(fake_train, &idx[..take]);
            idx.shuffle(&mut boundary_rng);
            let real_batch = gather(real_train.view(), &idx[..take]);
            let fisher = per_sample_fisher(&disc, real_batch.view(), fake_batch.view())?;
            end_task(&mut memory, &fisher, disc.params().values(), config.cl.gamma)?;
        }

        let mut row = Vec::with_capacity(task + 1);
        for s in 0..=task {
            row.push(fake_detection_accuracy(&disc, snapshots.test_split(s))?);
        }
        entries.push(row);
    }

    Ok(AccuracyMatrix { method: config.cl.method.name().to_string(), entries, converged })
}

/// Default snapshot source: a vanilla run at the standard architecture, long
/// enough for 20 snapshots at interval 50.
pub fn default_snapshot_config(seed: u64) -> GanConfig {
    let mut config = GanConfig::default();
    config.iterations = 1000;
    config.seed = seed;
    config
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LatentSpec;
    use crate::nn::Activation;
    use std::cell::RefCell;

    fn tiny_source_config(seed: u64, iterations: u64) -> GanConfig {
        GanConfig {
            latent: LatentSpec { dimension: 4 },
            generator_layers: vec![
                LayerSpec::new(4, 8, Activation::Relu),
                LayerSpec::new(8, 2, Activation::Identity),
            ],
            discriminator_layers: vec![
                LayerSpec::new(2, 8, Activation::Relu),
                LayerSpec::new(8, 1, Activation::Sigmoid),
            ],
            batch_size: 16,
            iterations,
            seed,
            ..GanConfig::default()
        }
    }

    #[test]
    fn snapshot_counting_and_split_sizes() {
        let config = tiny_source_config(3, 100);
        let set = snapshot_datasets(&config, 50, 2000, 0.9).unwrap();
        assert_eq!(set.datasets.len(), 2);
        assert_eq!(set.datasets[0].iteration, 50);
        assert_eq!(set.datasets[1].iteration, 100);
        for d in &set.datasets {
            assert_eq!(d.train.nrows(), 1800);
            assert_eq!(d.test.nrows(), 200);
        }
    }

    #[test]
    fn snapshots_are_deterministic_and_non_stationary() {
        let config = tiny_source_config(4, 100);
        let a = snapshot_datasets(&config, 50, 500, 0.9).unwrap();
        let b = snapshot_datasets(&config, 50, 500, 0.9).unwrap();
        assert_eq!(a, b);
        // The generator moves between snapshots, so the clouds differ.
        assert_ne!(a.datasets[0].train, a.datasets[1].train);
    }

    #[test]
    fn snapshot_validation() {
        let config = tiny_source_config(5, 100);
        assert!(snapshot_datasets(&config, 0, 100, 0.9).is_err());
        assert!(snapshot_datasets(&config, 50, 1, 0.9).is_err());
        assert!(snapshot_datasets(&config, 50, 100, 1.5).is_err());
        // Only one snapshot fits in 60 iterations at interval 50.
        let short = tiny_source_config(5, 60);
        assert!(snapshot_datasets(&short, 50, 100, 0.9).is_err());
    }

    /// Hand-built snapshot set: each task is a tight cluster at a distinct
    /// location well away from the mixture.
    fn synthetic_snapshots(n_tasks: usize, n_train: usize, n_test: usize) -> SnapshotSet {
        let datasets = (0..n_tasks)
            .map(|k| {
                let cx = -6.0 + 2.5 * k as f64;
                let cy = -6.0;
                let cloud = |n: usize, phase: f64| {
                    Array2::from_shape_fn((n, 2), |(i, j)| {
                        let wiggle = 0.05 * ((i as f64 + phase) * 0.7).sin();
                        if j == 0 {
                            cx + wiggle
                        } else {
                            cy + 0.05 * ((i as f64 + phase) * 1.3).cos()
                        }
                    })
                };
                SnapshotDataset {
                    iteration: (k as u64 + 1) * 50,
                    train: cloud(n_train, 0.0),
                    test: cloud(n_test, 1000.0),
                }
            })
            .collect();
        SnapshotSet { datasets, source_seed: 0, interval: 50 }
    }

    fn small_bench(seed: u64) -> BenchConfig {
        BenchConfig {
            discriminator_layers: vec![
                LayerSpec::new(2, 16, Activation::Relu),
                LayerSpec::new(16, 1, Activation::Sigmoid),
            ],
            weight_init: WeightInit::XavierUniform,
            optimizer: OptimizerSettings::sgd(0.1),
            batch_size: 32,
            epochs_per_task: 10,
            target_train_accuracy: 0.99,
            cl: ClConfig::none(),
            seed,
        }
    }

    #[test]
    fn finetune_learns_each_task_and_is_reproducible() {
        let snaps = synthetic_snapshots(3, 400, 100);
        let mixture = MixtureSpec::eight_gaussians();
        let m1 = sequential_finetune(&snaps, &mixture, &small_bench(1)).unwrap();
        assert_eq!(m1.n_tasks(), 3);
        for (t, row) in m1.entries.iter().enumerate() {
            assert_eq!(row.len(), t + 1);
            assert!(row[t] >= 0.95, "diagonal entry {t} = {}", row[t]);
            for v in row {
                assert!((0.0..=1.0).contains(v));
            }
        }
        let m2 = sequential_finetune(&snaps, &mixture, &small_bench(1)).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn first_task_identical_across_methods() {
        // Before the first boundary the penalty is zero, so both methods
        // share the whole first task bit-for-bit.
        let snaps = synthetic_snapshots(2, 400, 100);
        let mixture = MixtureSpec::eight_gaussians();
        let sgd = small_bench(7);
        let mut ewc = small_bench(7);
        ewc.cl = ClConfig::new(ClMethod::Ewc, 100.0, 1.0, 1).unwrap();
        let a = sequential_finetune(&snaps, &mixture, &sgd).unwrap();
        let b = sequential_finetune(&snaps, &mixture, &ewc).unwrap();
        assert_eq!(a.entries[0], b.entries[0]);
        assert_eq!(a.method, "none");
        assert_eq!(b.method, "ewc");
    }

    #[test]
    fn matrix_accessors_and_csv() {
        let m = AccuracyMatrix {
            method: "none".into(),
            entries: vec![vec![1.0], vec![0.6, 0.9], vec![0.5, 0.7, 1.0]],
            converged: vec![true, true, false],
        };
        assert!((m.diagonal_mean() - (1.0 + 0.9 + 1.0) / 3.0).abs() < 1e-12);
        assert!((m.backward_mean() - (0.6 + 0.5 + 0.7) / 3.0).abs() < 1e-12);
        assert!((m.immediate_drop_mean() - ((1.0 - 0.6) + (0.9 - 0.7)) / 2.0).abs() < 1e-12);
        let csv = m.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "after_task,d0,d1,d2");
        assert_eq!(lines.next().unwrap(), "0,1,,");
        assert_eq!(lines.next().unwrap(), "1,0.6,0.9,");
        assert_eq!(lines.next().unwrap(), "2,0.5,0.7,1");
        let s = ForgettingSummary::from_matrix(&m);
        assert!(!s.all_converged);
    }

    /// Logging wrapper proving task-locality of data access.
    struct LoggedAccess<'a> {
        inner: &'a SnapshotSet,
        train_log: RefCell<Vec<usize>>,
    }

    impl SnapshotAccess for LoggedAccess<'_> {
        fn n_tasks(&self) -> usize {
            self.inner.n_tasks()
        }
        fn iteration_tag(&self, task: usize) -> u64 {
            self.inner.iteration_tag(task)
        }
        fn train_split(&self, task: usize) -> ArrayView2<'_, f64> {
            self.train_log.borrow_mut().push(task);
            self.inner.train_split(task)
        }
        fn test_split(&self, task: usize) -> ArrayView2<'_, f64> {
            self.inner.test_split(task)
        }
    }

    #[test]
    fn training_never_revisits_earlier_train_splits() {
        let snaps = synthetic_snapshots(3, 200, 50);
        let logged = LoggedAccess { inner: &snaps, train_log: RefCell::new(Vec::new()) };
        let mixture = MixtureSpec::eight_gaussians();
        sequential_finetune(&logged, &mixture, &small_bench(2)).unwrap();
        let log = logged.train_log.borrow();
        assert!(!log.is_empty());
        // Train-split accesses must be non-decreasing in task index: once a
        // task is finished its train data is never read again.
        assert!(log.windows(2).all(|w| w[0] <= w[1]), "access order {log:?}");
    }

    #[test]
    fn bench_config_validation() {
        let mut c = small_bench(0);
        c.batch_size = 31;
        assert!(c.validate().is_err());
        let mut c = small_bench(0);
        c.cl = ClConfig::new(ClMethod::Is, 1.0, 0.9, 1).unwrap();
        assert!(c.validate().is_err());
        assert!(BenchConfig::with_ewc(0, 100.0).unwrap().validate().is_ok());
    }
}
