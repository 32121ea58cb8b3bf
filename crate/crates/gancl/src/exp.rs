//! Experiment runner: config ingestion with file/flag layering, seeded
//! parallel execution, and artifact emission for the training and forgetting
//! experiments.
//!
//! Artifact contract: every output directory gets a `run.json` echoing the
//! fully resolved configuration, tool version, and seed list. Trace and
//! sample files contain only seed-determined values, so re-running with the
//! same config yields byte-identical copies. Timing lives in the per-seed
//! summaries and the aggregate only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::consolidation::{ClConfig, ClMethod};
use crate::data::{
    points_csv, points_to_batch, read_points_csv, sample_latent, LatentSpec, MixtureSpec,
};
use crate::error::{Error, Result};
use crate::forgetting::{
    sequential_finetune, snapshot_datasets, AccuracyMatrix, BenchConfig, ForgettingSummary,
    SnapshotSet,
};
use crate::gan::{trace_csv, train, EvalMetrics, Evaluator, GanConfig};
use crate::metrics::{
    default_quality_threshold, inception_score, mode_stats, symmetric_kl, train_mode_classifier,
    GridSpec, MetricsReport, ModeClassifier,
};
use crate::nn::Network;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stream index for the post-training sample dump; training itself owns
/// streams 0 (main), 1 (boundary), and 2 (evaluation).
const SAMPLE_DUMP_STREAM: u64 = 3;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Train,
    Forgetting,
    Eval,
}

/// Mode-classifier settings shared by every metric evaluation in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsSettings {
    pub classifier_seed: u64,
    pub classifier_samples: usize,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        MetricsSettings { classifier_seed: 7777, classifier_samples: 20000 }
    }
}

/// Knobs for the sequential forgetting benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForgettingSettings {
    pub n_tasks: u64,
    pub snapshot_interval: u64,
    pub samples_per_task: usize,
    pub train_fraction: f64,
    pub bench_lambda: f64,
}

impl Default for ForgettingSettings {
    fn default() -> Self {
        ForgettingSettings {
            n_tasks: 20,
            snapshot_interval: 50,
            samples_per_task: 20000,
            train_fraction: crate::forgetting::DEFAULT_TRAIN_FRACTION,
            bench_lambda: 100.0,
        }
    }
}

/// Fully resolved experiment description; serialized verbatim into
/// `run.json` so a run can be replayed bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub gan: GanConfig,
    pub cl: ClConfig,
    pub metrics: MetricsSettings,
    pub forgetting: ForgettingSettings,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub workers: usize,
    /// Input CSV for the eval kind; unused otherwise.
    pub samples_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list must be non-empty".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be ≥ 1".into()));
        }
        self.gan.validate()?;
        if self.kind == ExperimentKind::Eval && self.samples_path.is_none() {
            return Err(Error::Config("eval runs need a samples file".into()));
        }
        Ok(())
    }
}

/// One layer of optional overrides. Layers fold left to right: defaults,
/// then the config file, then command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigPatch {
    pub method: Option<ClMethod>,
    pub alpha: Option<u64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub iters: Option<u64>,
    pub batch_size: Option<usize>,
    pub eval_interval: Option<u64>,
    pub eval_samples: Option<usize>,
    pub seeds: Option<u64>,
    pub seed_base: Option<u64>,
    pub seed_list: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub classifier_seed: Option<u64>,
    pub classifier_samples: Option<usize>,
    pub saturating_loss: Option<bool>,
    pub n_tasks: Option<u64>,
    pub snapshot_interval: Option<u64>,
    pub snapshot_samples: Option<usize>,
    pub bench_lambda: Option<f64>,
    pub samples_path: Option<PathBuf>,
}

impl ConfigPatch {
    /// Overlays `other` on top of `self`; set fields in `other` win.
    fn merged(mut self, other: &ConfigPatch) -> ConfigPatch {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            method, alpha, lambda, gamma, iters, batch_size, eval_interval, eval_samples, seeds,
            seed_base, seed_list, out, workers, classifier_seed, classifier_samples,
            saturating_loss, n_tasks, snapshot_interval, snapshot_samples, bench_lambda,
            samples_path
        );
        self
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value {raw:?} for key {key:?}"),
    })
}

fn parse_finite(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v: f64 = parse_value(line, key, raw)?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("key {key:?} must be finite, got {raw:?}") });
    }
    Ok(v)
}

/// Parses the flat key-value config format.
///
/// Grammar: one `key = value` pair per line; `#` starts a comment; blank
/// lines are ignored; a later duplicate key wins. Keys: method, alpha,
/// lambda, gamma, iters, batch_size, eval_interval, eval_samples, seeds,
/// seed_base, seed_list (comma-separated), out, workers, classifier_seed,
/// classifier_samples, saturating_loss, n_tasks, snapshot_interval,
/// snapshot_samples, bench_lambda, samples_path.
pub fn parse_config_text(text: &str) -> Result<ConfigPatch> {
    let mut patch = ConfigPatch::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `key = value`, got {raw_line:?}"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Parse { line, msg: format!("key {key:?} has an empty value") });
        }
        match key {
            "method" => {
                patch.method = Some(ClMethod::parse(value).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!(
                        "unknown method {value:?}; expected none, l2, histavg, ewc, or is"
                    ),
                })?);
            }
            "alpha" => patch.alpha = Some(parse_value(line, key, value)?),
            "lambda" => patch.lambda = Some(parse_finite(line, key, value)?),
            "gamma" => patch.gamma = Some(parse_finite(line, key, value)?),
            "iters" => patch.iters = Some(parse_value(line, key, value)?),
            "batch_size" => patch.batch_size = Some(parse_value(line, key, value)?),
            "eval_interval" => patch.eval_interval = Some(parse_value(line, key, value)?),
            "eval_samples" => patch.eval_samples = Some(parse_value(line, key, value)?),
            "seeds" => patch.seeds = Some(parse_value(line, key, value)?),
            "seed_base" => patch.seed_base = Some(parse_value(line, key, value)?),
            "seed_list" => {
                let list = value
                    .split(',')
                    .map(|s| parse_value(line, key, s.trim()))
                    .collect::<Result<Vec<u64>>>()?;
                if list.is_empty() {
                    return Err(Error::Parse { line, msg: "seed_list must be non-empty".into() });
                }
                patch.seed_list = Some(list);
            }
            "out" => patch.out = Some(PathBuf::from(value)),
            "workers" => patch.workers = Some(parse_value(line, key, value)?),
            "classifier_seed" => patch.classifier_seed = Some(parse_value(line, key, value)?),
            "classifier_samples" => {
                patch.classifier_samples = Some(parse_value(line, key, value)?)
            }
            "saturating_loss" => patch.saturating_loss = Some(parse_value(line, key, value)?),
            "n_tasks" => patch.n_tasks = Some(parse_value(line, key, value)?),
            "snapshot_interval" => patch.snapshot_interval = Some(parse_value(line, key, value)?),
            "snapshot_samples" => patch.snapshot_samples = Some(parse_value(line, key, value)?),
            "bench_lambda" => patch.bench_lambda = Some(parse_finite(line, key, value)?),
            "samples_path" => patch.samples_path = Some(PathBuf::from(value)),
            _ => {
                return Err(Error::Parse { line, msg: format!("unknown config key {key:?}") });
            }
        }
    }
    Ok(patch)
}

pub fn parse_config_file(path: &Path) -> Result<ConfigPatch> {
    let text = fs::read_to_string(path)?;
    parse_config_text(&text)
}

/// Per-method regularizer defaults used when a flag is absent; the vanilla
/// row carries no penalty at all.
fn method_defaults(method: ClMethod) -> (u64, f64, f64) {
    match method {
        ClMethod::None => (1, 0.0, 0.0),
        ClMethod::L2 => (1, 0.01, 0.0),
        ClMethod::HistAvg => (1, 0.01, 0.995),
        ClMethod::Ewc => (10, 10.0, 0.99),
        ClMethod::Is => (10, 100.0, 0.99),
    }
}

fn default_seed_count(kind: ExperimentKind) -> u64 {
    match kind {
        ExperimentKind::Train => 10,
        ExperimentKind::Forgetting => 5,
        ExperimentKind::Eval => 1,
    }
}

fn default_out_dir(kind: ExperimentKind) -> PathBuf {
    match kind {
        ExperimentKind::Train => PathBuf::from("runs/train"),
        ExperimentKind::Forgetting => PathBuf::from("runs/forgetting"),
        ExperimentKind::Eval => PathBuf::from("runs/eval"),
    }
}

/// Folds defaults and override layers into a ready-to-run config.
pub fn resolve(kind: ExperimentKind, layers: &[&ConfigPatch]) -> Result<ExperimentConfig> {
    let patch = layers
        .iter()
        .fold(ConfigPatch::default(), |acc, layer| acc.merged(layer));

    let mut gan = GanConfig::default();
    if let Some(v) = patch.iters {
        gan.iterations = v;
    }
    if let Some(v) = patch.batch_size {
        gan.batch_size = v;
    }
    if let Some(v) = patch.eval_interval {
        gan.eval_interval = v;
    }
    if let Some(v) = patch.eval_samples {
        gan.eval_samples = v;
    }
    if let Some(v) = patch.saturating_loss {
        gan.saturating_generator_loss = v;
    }

    let method = patch.method.unwrap_or(ClMethod::None);
    let (da, dl, dg) = method_defaults(method);
    let cl = ClConfig::new(
        method,
        patch.lambda.unwrap_or(dl),
        patch.gamma.unwrap_or(dg),
        patch.alpha.unwrap_or(da),
    )?;

    let seeds = match patch.seed_list {
        Some(list) => list,
        None => {
            let base = patch.seed_base.unwrap_or(0);
            let count = patch.seeds.unwrap_or_else(|| default_seed_count(kind));
            if count == 0 {
                return Err(Error::Config("seed count must be ≥ 1".into()));
            }
            (base..base + count).collect()
        }
    };

    let mut metrics = MetricsSettings::default();
    if let Some(v) = patch.classifier_seed {
        metrics.classifier_seed = v;
    }
    if let Some(v) = patch.classifier_samples {
        metrics.classifier_samples = v;
    }

    let mut forgetting = ForgettingSettings::default();
    if let Some(v) = patch.n_tasks {
        forgetting.n_tasks = v;
    }
    if let Some(v) = patch.snapshot_interval {
        forgetting.snapshot_interval = v;
    }
    if let Some(v) = patch.snapshot_samples {
        forgetting.samples_per_task = v;
    }
    if let Some(v) = patch.bench_lambda {
        forgetting.bench_lambda = v;
    }

    let config = ExperimentConfig {
        kind,
        gan,
        cl,
        metrics,
        forgetting,
        seeds,
        out_dir: patch.out.unwrap_or_else(|| default_out_dir(kind)),
        workers: patch.workers.unwrap_or(1),
        samples_path: patch.samples_path,
    };
    config.validate()?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// Evaluation plumbing
// ---------------------------------------------------------------------------

/// Evaluator measuring diversity, grid divergence, and mode coverage against
/// the reference mixture with a shared pre-trained classifier.
pub struct StandardEvaluator<'a> {
    classifier: &'a ModeClassifier,
    mixture: MixtureSpec,
    grid: GridSpec,
    latent: LatentSpec,
    eval_samples: usize,
}

impl<'a> StandardEvaluator<'a> {
    pub fn new(classifier: &'a ModeClassifier, config: &GanConfig) -> Self {
        StandardEvaluator {
            classifier,
            mixture: config.mixture.clone(),
            grid: GridSpec::default_eval(),
            latent: config.latent,
            eval_samples: config.eval_samples,
        }
    }
}

impl Evaluator for StandardEvaluator<'_> {
    fn evaluate(
        &mut self,
        _iteration: u64,
        gen: &Network,
        rng: &mut ChaCha12Rng,
    ) -> Result<EvalMetrics> {
        let latent = sample_latent(&self.latent, self.eval_samples, rng);
        let points = gen.forward(latent.view())?;
        let icp = inception_score(points.view(), self.classifier)?;
        let sym_kl = symmetric_kl(points.view(), &self.mixture, &self.grid)?;
        let (coverage, _) =
            mode_stats(points.view(), &self.mixture, default_quality_threshold(&self.mixture))?;
        Ok(EvalMetrics { icp, sym_kl, mode_coverage: coverage as f64 })
    }
}

/// Trains the shared mode classifier from the metric settings.
pub fn build_classifier(
    mixture: &MixtureSpec,
    settings: &MetricsSettings,
) -> Result<ModeClassifier> {
    let mut rng = ChaCha12Rng::seed_from_u64(settings.classifier_seed);
    train_mode_classifier(mixture, settings.classifier_samples, &mut rng)
}

// ---------------------------------------------------------------------------
// Shared artifact helpers
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_manifest(config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&config.out_dir)?;
    write_json(
        &config.out_dir.join("run.json"),
        &RunManifest { version: TOOL_VERSION, config },
    )
}

fn seed_dir(config: &ExperimentConfig, seed: u64) -> PathBuf {
    config.out_dir.join(format!("seed_{seed}"))
}

/// Runs `work` over all seeds with at most `workers` threads, returning
/// outcomes sorted by seed.
fn run_seeds<T, F>(seeds: &[u64], workers: usize, work: F) -> Vec<(u64, Result<T>)>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let workers = workers.clamp(1, seeds.len().max(1));
    let work = &work;
    let mut outcomes = std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(u64, Result<T>)>();
        for offset in 0..workers {
            let tx = tx.clone();
            scope.spawn(move || {
                let mut i = offset;
                while i < seeds.len() {
                    let seed = seeds[i];
                    let _ = tx.send((seed, work(seed)));
                    i += workers;
                }
            });
        }
        drop(tx);
        rx.iter().collect::<Vec<_>>()
    });
    outcomes.sort_by_key(|(seed, _)| *seed);
    outcomes
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

/// Sample statistics: std uses the n−1 divisor, median averages the middle
/// pair for even counts.
pub fn metric_stats(values: &[f64]) -> MetricStats {
    let n = values.len();
    assert!(n > 0, "stats need at least one value");
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    MetricStats { mean, std, median }
}

fn fnv1a64(bytes: impl Iterator<Item = u8>) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn snapshot_checksum(set: &SnapshotSet) -> u64 {
    let bytes = set.datasets.iter().flat_map(|d| {
        d.iteration
            .to_le_bytes()
            .into_iter()
            .chain(d.train.iter().flat_map(|v| v.to_le_bytes()))
            .chain(d.test.iter().flat_map(|v| v.to_le_bytes()))
    });
    fnv1a64(bytes)
}

// ---------------------------------------------------------------------------
// Training experiment
// ---------------------------------------------------------------------------

/// End-of-run record for one seed, stored as `seed_<s>/metrics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub report: MetricsReport,
    pub iters_per_sec: f64,
    pub d_updates: u64,
    pub g_updates: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailedSeed {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainAggregate {
    pub n_seeds: usize,
    pub succeeded: Vec<u64>,
    pub failed: Vec<FailedSeed>,
    pub metrics: BTreeMap<String, MetricStats>,
}

pub struct TrainArtifacts {
    pub out_dir: PathBuf,
    pub per_seed: Vec<SeedMetrics>,
    pub failed: Vec<FailedSeed>,
    pub aggregate: TrainAggregate,
}

pub fn aggregate_from_seeds(seed_metrics: &[SeedMetrics], failed: &[FailedSeed]) -> TrainAggregate {
    let mut metrics = BTreeMap::new();
    if !seed_metrics.is_empty() {
        let col = |f: fn(&SeedMetrics) -> f64| -> Vec<f64> {
            seed_metrics.iter().map(f).collect()
        };
        metrics.insert("icp".to_string(), metric_stats(&col(|m| m.report.icp)));
        metrics.insert("sym_kl".to_string(), metric_stats(&col(|m| m.report.sym_kl)));
        metrics.insert(
            "mode_coverage".to_string(),
            metric_stats(&col(|m| m.report.mode_coverage as f64)),
        );
        metrics.insert(
            "high_quality_fraction".to_string(),
            metric_stats(&col(|m| m.report.high_quality_fraction)),
        );
        metrics.insert("iters_per_sec".to_string(), metric_stats(&col(|m| m.iters_per_sec)));
    }
    TrainAggregate {
        n_seeds: seed_metrics.len() + failed.len(),
        succeeded: seed_metrics.iter().map(|m| m.seed).collect(),
        failed: failed.to_vec(),
        metrics,
    }
}

/// Trains one GAN per seed, in parallel up to the worker count, and writes
/// per-seed traces, sample dumps, metric reports, and a cross-seed aggregate.
/// Individual seed failures are recorded; only total failure is an error.
pub fn run_train_with(config: &ExperimentConfig, classifier: &ModeClassifier) -> Result<TrainArtifacts> {
    config.validate()?;
    write_manifest(config)?;

    let outcomes = run_seeds(&config.seeds, config.workers, |seed| -> Result<SeedMetrics> {
        let mut gan_config = config.gan.clone();
        gan_config.seed = seed;
        let dir = seed_dir(config, seed);
        fs::create_dir_all(&dir)?;

        let mut evaluator = StandardEvaluator::new(classifier, &gan_config);
        let run = train(&gan_config, &config.cl, &mut evaluator)?;

        fs::write(dir.join("trace.csv"), trace_csv(&run.trace))?;

        let mut dump_rng = ChaCha12Rng::seed_from_u64(seed);
        dump_rng.set_stream(SAMPLE_DUMP_STREAM);
        let latent = sample_latent(&gan_config.latent, gan_config.eval_samples, &mut dump_rng);
        let samples = run.generator.forward(latent.view())?;
        fs::write(dir.join("samples.csv"), points_csv(samples.view()))?;

        let report = MetricsReport::measure(
            samples.view(),
            classifier,
            &gan_config.mixture,
            &GridSpec::default_eval(),
        )?;
        let seed_metrics = SeedMetrics {
            seed,
            report,
            iters_per_sec: run.mean_iters_per_sec,
            d_updates: run.d_updates,
            g_updates: run.g_updates,
        };
        write_json(&dir.join("metrics.json"), &seed_metrics)?;
        Ok(seed_metrics)
    });

    let mut per_seed = Vec::new();
    let mut failed = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(m) => per_seed.push(m),
            Err(e) => {
                let dir = seed_dir(config, seed);
                let _ = fs::create_dir_all(&dir);
                let _ = fs::write(dir.join("error.txt"), format!("{e}\n"));
                failed.push(FailedSeed { seed, error: e.to_string() });
            }
        }
    }
    if per_seed.is_empty() {
        return Err(Error::Numerical(format!(
            "all {} seeds failed; first error: {}",
            config.seeds.len(),
            failed.first().map(|f| f.error.as_str()).unwrap_or("none")
        )));
    }

    let aggregate = aggregate_from_seeds(&per_seed, &failed);
    write_json(&config.out_dir.join("aggregate.json"), &aggregate)?;
    Ok(TrainArtifacts { out_dir: config.out_dir.clone(), per_seed, failed, aggregate })
}

pub fn run_train(config: &ExperimentConfig) -> Result<TrainArtifacts> {
    let classifier = build_classifier(&config.gan.mixture, &config.metrics)?;
    run_train_with(config, &classifier)
}

// ---------------------------------------------------------------------------
// Forgetting experiment
// ---------------------------------------------------------------------------

/// Per-seed outcome of the benchmark with both fine-tuning variants on one
/// shared snapshot set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForgettingPair {
    pub seed: u64,
    /// Checksum of the snapshot set both methods consumed.
    pub snapshot_checksum: String,
    pub sgd: ForgettingSummary,
    pub ewc: ForgettingSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForgettingReport {
    pub pairs: Vec<ForgettingPair>,
    pub failed: Vec<FailedSeed>,
    pub sgd_backward_mean: f64,
    pub ewc_backward_mean: f64,
    pub sgd_drop_mean: f64,
    pub ewc_drop_mean: f64,
}

pub struct SeedForgetting {
    pub seed: u64,
    pub snapshot_checksum: u64,
    pub sgd: AccuracyMatrix,
    pub ewc: AccuracyMatrix,
}

pub struct ForgettingArtifacts {
    pub out_dir: PathBuf,
    pub per_seed: Vec<SeedForgetting>,
    pub report: ForgettingReport,
}

/// Runs the benchmark per seed: snapshots a vanilla GAN once, fine-tunes the
/// plain and consolidated discriminators on the identical snapshot set, and
/// writes both accuracy matrices plus a comparison summary.
pub fn run_forgetting(config: &ExperimentConfig) -> Result<ForgettingArtifacts> {
    config.validate()?;
    write_manifest(config)?;
    let fs_cfg = config.forgetting;

    let outcomes = run_seeds(&config.seeds, config.workers, |seed| -> Result<SeedForgetting> {
        let mut source = config.gan.clone();
        source.seed = seed;
        source.iterations = fs_cfg.n_tasks * fs_cfg.snapshot_interval;
        // One snapshot set per source seed, shared by both methods.
        let snapshots = snapshot_datasets(
            &source,
            fs_cfg.snapshot_interval,
            fs_cfg.samples_per_task,
            fs_cfg.train_fraction,
        )?;
        let checksum = snapshot_checksum(&snapshots);

        let sgd_cfg = BenchConfig::sgd_baseline(seed);
        let ewc_cfg = BenchConfig::with_ewc(seed, fs_cfg.bench_lambda)?;
        let sgd = sequential_finetune(&snapshots, &config.gan.mixture, &sgd_cfg)?;
        let ewc = sequential_finetune(&snapshots, &config.gan.mixture, &ewc_cfg)?;

        let dir = seed_dir(config, seed);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("sgd_matrix.csv"), sgd.to_csv())?;
        fs::write(dir.join("ewc_matrix.csv"), ewc.to_csv())?;
        Ok(SeedForgetting { seed, snapshot_checksum: checksum, sgd, ewc })
    });

    let mut per_seed = Vec::new();
    let mut failed = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(r) => per_seed.push(r),
            Err(e) => {
                failed.push(FailedSeed { seed, error: e.to_string() });
            }
        }
    }
    if per_seed.is_empty() {
        return Err(Error::Numerical(format!(
            "all {} benchmark seeds failed; first error: {}",
            config.seeds.len(),
            failed.first().map(|f| f.error.as_str()).unwrap_or("none")
        )));
    }

    let pairs: Vec<ForgettingPair> = per_seed
        .iter()
        .map(|r| ForgettingPair {
            seed: r.seed,
            snapshot_checksum: format!("{:016x}", r.snapshot_checksum),
            sgd: ForgettingSummary::from_matrix(&r.sgd),
            ewc: ForgettingSummary::from_matrix(&r.ewc),
        })
        .collect();
    let mean_of = |f: fn(&ForgettingPair) -> f64| -> f64 {
        pairs.iter().map(f).sum::<f64>() / pairs.len() as f64
    };
    let report = ForgettingReport {
        sgd_backward_mean: mean_of(|p| p.sgd.backward_mean),
        ewc_backward_mean: mean_of(|p| p.ewc.backward_mean),
        sgd_drop_mean: mean_of(|p| p.sgd.immediate_drop_mean),
        ewc_drop_mean: mean_of(|p| p.ewc.immediate_drop_mean),
        pairs,
        failed,
    };
    write_json(&config.out_dir.join("summary.json"), &report)?;
    Ok(ForgettingArtifacts { out_dir: config.out_dir.clone(), per_seed, report })
}

// ---------------------------------------------------------------------------
// Standalone evaluation
// ---------------------------------------------------------------------------

/// Scores an existing `x,y` sample dump against the reference mixture.
/// Writes `eval_report.json` into the output directory when one is set.
pub fn run_eval(config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let path = config.samples_path.as_ref().expect("validated above");
    let samples = points_to_batch(read_points_csv(path)?);
    let classifier = build_classifier(&config.gan.mixture, &config.metrics)?;
    let report = MetricsReport::measure(
        samples.view(),
        &classifier,
        &config.gan.mixture,
        &GridSpec::default_eval(),
    )?;
    write_manifest(config)?;
    write_json(&config.out_dir.join("eval_report.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    #[test]
    fn config_text_round_trip_and_precedence() {
        let file = parse_config_text(
            "# sweep base\nmethod = ewc\nalpha = 10\nlambda= 10\n\ngamma =0.99\niters = 25000\n",
        )
        .unwrap();
        assert_eq!(file.method, Some(ClMethod::Ewc));
        assert_eq!(file.alpha, Some(10));
        assert_eq!(file.iters, Some(25000));

        let cli = ConfigPatch { lambda: Some(2.5), ..ConfigPatch::default() };
        let cfg = resolve(ExperimentKind::Train, &[&file, &cli]).unwrap();
        assert_eq!(cfg.cl.method, ClMethod::Ewc);
        assert_eq!(cfg.cl.lambda, 2.5);
        assert_eq!(cfg.cl.gamma, 0.99);
        assert_eq!(cfg.cl.alpha, 10);
        assert_eq!(cfg.gan.iterations, 25000);
        assert_eq!(cfg.seeds, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn config_parse_errors_carry_line_numbers() {
        let e = parse_config_text("method = ewc\nbogus_key = 3\n").unwrap_err();
        match e {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_config_text("alpha ten\n").is_err());
        assert!(parse_config_text("lambda = nan\n").is_err());
        assert!(parse_config_text("alpha =\n").is_err());
        assert!(parse_config_text("seed_list = 1,,2\n").is_err());
    }

    #[test]
    fn duplicate_keys_last_wins_and_comments_strip() {
        let p = parse_config_text("alpha = 3 # inline note\nalpha = 9\n").unwrap();
        assert_eq!(p.alpha, Some(9));
    }

    #[test]
    fn method_defaults_fill_missing_regularizer_fields() {
        let is = resolve(
            ExperimentKind::Train,
            &[&ConfigPatch { method: Some(ClMethod::Is), ..Default::default() }],
        )
        .unwrap();
        assert_eq!(is.cl.lambda, 100.0);
        assert_eq!(is.cl.gamma, 0.99);
        assert_eq!(is.cl.alpha, 10);

        let vanilla = resolve(ExperimentKind::Train, &[]).unwrap();
        assert_eq!(vanilla.cl.method, ClMethod::None);
        assert_eq!(vanilla.cl.lambda, 0.0);
        assert_eq!(vanilla.gan.iterations, GanConfig::default().iterations);
    }

    #[test]
    fn zero_iterations_rejected() {
        let patch = ConfigPatch { iters: Some(0), ..Default::default() };
        assert!(resolve(ExperimentKind::Train, &[&patch]).is_err());
    }

    #[test]
    fn seed_list_overrides_base_and_count() {
        let patch = ConfigPatch {
            seed_list: Some(vec![5, 9]),
            seeds: Some(30),
            seed_base: Some(100),
            ..Default::default()
        };
        let cfg = resolve(ExperimentKind::Train, &[&patch]).unwrap();
        assert_eq!(cfg.seeds, vec![5, 9]);
        let base_count = ConfigPatch {
            seeds: Some(3),
            seed_base: Some(40),
            ..Default::default()
        };
        let cfg = resolve(ExperimentKind::Forgetting, &[&base_count]).unwrap();
        assert_eq!(cfg.seeds, vec![40, 41, 42]);
    }

    #[test]
    fn stats_match_hand_values() {
        let s = metric_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-12);
        assert!((s.median - 2.5).abs() < 1e-12);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let odd = metric_stats(&[3.0, 1.0, 2.0]);
        assert!((odd.median - 2.0).abs() < 1e-12);
    }

    fn tiny_experiment(out: &Path, seeds: Vec<u64>) -> ExperimentConfig {
        let mut cfg = resolve(ExperimentKind::Train, &[]).unwrap();
        cfg.gan.latent = LatentSpec { dimension: 4 };
        cfg.gan.generator_layers = vec![
            LayerSpec::new(4, 16, Activation::Relu),
            LayerSpec::new(16, 2, Activation::Identity),
        ];
        cfg.gan.discriminator_layers = vec![
            LayerSpec::new(2, 16, Activation::Relu),
            LayerSpec::new(16, 1, Activation::Sigmoid),
        ];
        cfg.gan.batch_size = 32;
        cfg.gan.iterations = 60;
        cfg.gan.eval_interval = 30;
        cfg.gan.eval_samples = 1500;
        cfg.metrics.classifier_samples = 3000;
        cfg.seeds = seeds;
        cfg.out_dir = out.to_path_buf();
        cfg
    }

    #[test]
    fn train_artifacts_written_and_aggregate_consistent() {
        let tmp = tempdir("exp_train");
        let cfg = tiny_experiment(&tmp, vec![1, 2]);
        let classifier = build_classifier(&cfg.gan.mixture, &cfg.metrics).unwrap();
        let arts = run_train_with(&cfg, &classifier).unwrap();
        assert_eq!(arts.per_seed.len(), 2);
        assert!(arts.failed.is_empty());
        for seed in [1u64, 2] {
            let dir = tmp.join(format!("seed_{seed}"));
            for f in ["trace.csv", "samples.csv", "metrics.json"] {
                assert!(dir.join(f).exists(), "missing {f} for seed {seed}");
            }
        }
        assert!(tmp.join("run.json").exists());

        // Recompute the aggregate from the per-seed files on disk.
        let mut reloaded = Vec::new();
        for seed in [1u64, 2] {
            let text = fs::read_to_string(tmp.join(format!("seed_{seed}/metrics.json"))).unwrap();
            reloaded.push(serde_json::from_str::<SeedMetrics>(&text).unwrap());
        }
        let recomputed = aggregate_from_seeds(&reloaded, &[]);
        let on_disk: TrainAggregate = serde_json::from_str(
            &fs::read_to_string(tmp.join("aggregate.json")).unwrap(),
        )
        .unwrap();
        for (key, stats) in &recomputed.metrics {
            let disk = &on_disk.metrics[key];
            assert!((stats.mean - disk.mean).abs() <= 1e-12, "{key} mean");
            assert!((stats.std - disk.std).abs() <= 1e-12, "{key} std");
            assert!((stats.median - disk.median).abs() <= 1e-12, "{key} median");
        }
        let _ = fs::remove_dir_all(&tmp);
    }

    #[test]
    fn rerun_is_byte_identical_for_trace_and_samples() {
        let tmp_a = tempdir("exp_rerun_a");
        let tmp_b = tempdir("exp_rerun_b");
        let cfg_a = tiny_experiment(&tmp_a, vec![3]);
        let cfg_b = tiny_experiment(&tmp_b, vec![3]);
        let classifier = build_classifier(&cfg_a.gan.mixture, &cfg_a.metrics).unwrap();
        run_train_with(&cfg_a, &classifier).unwrap();
        run_train_with(&cfg_b, &classifier).unwrap();
        for f in ["seed_3/trace.csv", "seed_3/samples.csv"] {
            let a = fs::read(tmp_a.join(f)).unwrap();
            let b = fs::read(tmp_b.join(f)).unwrap();
            assert_eq!(a, b, "artifact {f} differs between identical runs");
        }
        let _ = fs::remove_dir_all(&tmp_a);
        let _ = fs::remove_dir_all(&tmp_b);
    }

    #[test]
    fn eval_reports_scores_for_sample_dump() {
        let tmp = tempdir("exp_eval");
        fs::create_dir_all(&tmp).unwrap();
        // Single point repeated: minimum diversity, one covered mode.
        let mut csv = String::from("x,y\n");
        for _ in 0..1200 {
            csv.push_str("2.0,0.0\n");
        }
        let samples_path = tmp.join("dump.csv");
        fs::write(&samples_path, csv).unwrap();

        // Eval without a samples file must be rejected at resolve time.
        assert!(matches!(resolve(ExperimentKind::Eval, &[]), Err(Error::Config(_))));
        let patch = ConfigPatch {
            samples_path: Some(samples_path.clone()),
            out: Some(tmp.join("out")),
            classifier_samples: Some(3000),
            ..Default::default()
        };
        let resolved = resolve(ExperimentKind::Eval, &[&patch]).unwrap();
        let report = run_eval(&resolved).unwrap();
        assert!(report.icp < 1.05, "repeated point must score near 1, got {}", report.icp);
        assert_eq!(report.mode_coverage, 1);
        assert!(tmp.join("out/eval_report.json").exists());
        let _ = fs::remove_dir_all(&tmp);
    }

    #[test]
    fn forgetting_artifacts_share_snapshots_across_methods() {
        let tmp = tempdir("exp_forget");
        let mut cfg = resolve(ExperimentKind::Forgetting, &[]).unwrap();
        cfg.gan.latent = LatentSpec { dimension: 4 };
        cfg.gan.generator_layers = vec![
            LayerSpec::new(4, 16, Activation::Relu),
            LayerSpec::new(16, 2, Activation::Identity),
        ];
        cfg.gan.discriminator_layers = vec![
            LayerSpec::new(2, 16, Activation::Relu),
            LayerSpec::new(16, 1, Activation::Sigmoid),
        ];
        cfg.gan.batch_size = 32;
        cfg.forgetting = ForgettingSettings {
            n_tasks: 2,
            snapshot_interval: 25,
            samples_per_task: 600,
            train_fraction: 0.9,
            bench_lambda: 100.0,
        };
        cfg.seeds = vec![11];
        cfg.out_dir = tmp.clone();
        let arts = run_forgetting(&cfg).unwrap();
        assert_eq!(arts.per_seed.len(), 1);
        let r = &arts.per_seed[0];
        assert_eq!(r.sgd.n_tasks(), r.ewc.n_tasks());
        for t in 0..r.sgd.n_tasks() {
            assert_eq!(r.sgd.entries[t].len(), r.ewc.entries[t].len());
        }
        assert!(tmp.join("seed_11/sgd_matrix.csv").exists());
        assert!(tmp.join("seed_11/ewc_matrix.csv").exists());
        assert!(tmp.join("summary.json").exists());
        let pair = &arts.report.pairs[0];
        assert_eq!(pair.snapshot_checksum.len(), 16);
        assert!(pair.sgd.backward_mean.is_finite());
        assert!(pair.ewc.backward_mean.is_finite());
        let _ = fs::remove_dir_all(&tmp);
    }

    fn tempdir(tag: &str) -> PathBuf {
        std::env::temp_dir().join(format!("gancl_{tag}_{}", std::process::id()))
    }
}
