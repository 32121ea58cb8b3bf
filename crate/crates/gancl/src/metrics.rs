//! Generator-quality metrics: a classifier-based diversity score over the
//! eight mixture modes, a grid-discretized symmetric KL divergence against
//! the known mixture density, and mode-coverage statistics.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{nearest_mode, sample_mixture, MixtureSpec};
use crate::error::{Error, Result};
use crate::nn::{
    Activation, Direction, GradientVector, LayerSpec, Network, OptimizerSettings, OptimizerState,
    WeightInit,
};

/// Floor applied to probabilities before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Additive smoothing mass per grid cell before KL terms.
pub const GRID_SMOOTHING: f64 = 1e-10;

fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Mode classifier
// ---------------------------------------------------------------------------

/// Softmax classifier mapping 2D points to the eight mixture modes. Trained
/// once per experiment and shared across all measurements so that scores are
/// comparable between methods.
#[derive(Debug, Clone)]
pub struct ModeClassifier {
    net: Network,
    holdout_accuracy: f64,
}

impl ModeClassifier {
    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn holdout_accuracy(&self) -> f64 {
        self.holdout_accuracy
    }

    pub fn n_classes(&self) -> usize {
        self.net.output_width()
    }

    /// Per-class probabilities, one row per input point.
    pub fn predict_probs(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let logits = self.net.forward(points)?;
        Ok(softmax_rows(logits.view()))
    }

    /// Most likely mode per input point.
    pub fn predict_modes(&self, points: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let probs = self.predict_probs(points)?;
        Ok(probs
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                    .map(|(i, _)| i)
                    .expect("non-empty row")
            })
            .collect())
    }
}

/// Held-out accuracy and mean cross-entropy in nats.
fn holdout_quality(
    clf: &Network,
    points: ArrayView2<'_, f64>,
    labels: &[usize],
) -> Result<(f64, f64)> {
    let probs = softmax_rows(clf.forward(points)?.view());
    let mut correct = 0usize;
    let mut ce = 0.0;
    for (row, label) in probs.rows().into_iter().zip(labels) {
        let argmax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
            .map(|(i, _)| i)
            .unwrap();
        correct += (argmax == *label) as usize;
        ce -= row[*label].max(PROB_FLOOR).ln();
    }
    let n = labels.len() as f64;
    Ok((correct as f64 / n, ce / n))
}

/// Trains the mode classifier on labeled mixture samples until the held-out
/// accuracy reaches 0.995, with a hard floor of 0.99 after the epoch budget.
/// Deterministic given the RNG state.
pub fn train_mode_classifier<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    n_train: usize,
    rng: &mut R,
) -> Result<ModeClassifier> {
    if n_train < 1000 {
        return Err(Error::Argument(format!(
            "classifier training needs ≥ 1000 samples, got {n_train}"
        )));
    }
    let k = spec.n_modes();
    let holdout_n = n_train / 10;
    let all = sample_mixture(spec, n_train, rng);
    let (train, holdout) = all.split_at(n_train - holdout_n);

    let to_batch = |chunk: &[crate::data::LabeledSample]| {
        let mut pts = Array2::<f64>::zeros((chunk.len(), 2));
        let mut labels = Vec::with_capacity(chunk.len());
        for (i, s) in chunk.iter().enumerate() {
            pts[[i, 0]] = s.point[0];
            pts[[i, 1]] = s.point[1];
            labels.push(s.mode_index);
        }
        (pts, labels)
    };
    let (train_pts, train_labels) = to_batch(train);
    let (holdout_pts, holdout_labels) = to_batch(holdout);

    let specs = vec![
        LayerSpec::new(2, 64, Activation::Relu),
        LayerSpec::new(64, 64, Activation::Relu),
        LayerSpec::new(64, k, Activation::Identity),
    ];
    let mut net = Network::init(specs, WeightInit::XavierUniform, rng)?;
    let mut opt = OptimizerState::new(OptimizerSettings::adam(1e-3, 0.9, 0.999), net.param_len())?;

    const BATCH: usize = 128;
    const MAX_EPOCHS: usize = 600;
    const TARGET_ACCURACY: f64 = 0.995;
    // The diversity score is confidence-sensitive, so accuracy alone is not
    // enough: keep training until held-out cross-entropy is small as well.
    // The mixture's classes are ~10σ apart, so near-zero cross-entropy is the
    // honest optimum, not overfitting.
    const TARGET_CE: f64 = 0.0008;
    const FLOOR: f64 = 0.99;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut acc = 0.0f64;
    for _ in 0..MAX_EPOCHS {
        order.shuffle(rng);
        for chunk in order.chunks(BATCH) {
            let mut pts = Array2::<f64>::zeros((chunk.len(), 2));
            for (row, &idx) in chunk.iter().enumerate() {
                pts[[row, 0]] = train_pts[[idx, 0]];
                pts[[row, 1]] = train_pts[[idx, 1]];
            }
            let trace = net.forward_trace(pts.view())?;
            let probs = softmax_rows(trace.output());
            // Cross-entropy gradient w.r.t. logits: (softmax − one-hot)/m.
            let mut upstream = probs;
            let inv = 1.0 / chunk.len() as f64;
            for (row, &idx) in chunk.iter().enumerate() {
                upstream[[row, train_labels[idx]]] -= 1.0;
            }
            upstream.mapv_inplace(|v| v * inv);
            let grad: GradientVector = net.backward(&trace, upstream.view())?;
            opt.apply_step(net.params_mut(), &grad, Direction::Descent)?;
        }
        let (a, ce) = holdout_quality(&net, holdout_pts.view(), &holdout_labels)?;
        acc = a;
        if acc >= TARGET_ACCURACY && ce <= TARGET_CE {
            break;
        }
    }
    if acc < FLOOR {
        return Err(Error::MetricSetup(format!(
            "mode classifier reached only {acc:.4} held-out accuracy (need ≥ {FLOOR})"
        )));
    }
    Ok(ModeClassifier { net, holdout_accuracy: acc })
}

// ---------------------------------------------------------------------------
// Classifier-based diversity score
// ---------------------------------------------------------------------------

/// `exp(mean_x KL(p(y|x) ‖ p̄))` over a prediction matrix, with `p̄` the mean
/// predictive row. Equals `exp(H(p̄) − mean H(p(y|x)))`, so it always lies in
/// `[1, n_classes]`.
pub fn inception_score_from_probs(probs: ArrayView2<'_, f64>) -> Result<f64> {
    let n = probs.nrows();
    if n < 2 {
        return Err(Error::Argument(format!("diversity score needs ≥ 2 samples, got {n}")));
    }
    let classes = probs.ncols();
    // Floor and renormalize each row, accumulating the mean row on the fly.
    let mut mean = vec![0.0; classes];
    let mut floored = Array2::<f64>::zeros((n, classes));
    for (i, row) in probs.rows().into_iter().enumerate() {
        let mut sum = 0.0;
        for (j, v) in row.iter().enumerate() {
            let f = v.max(PROB_FLOOR);
            floored[[i, j]] = f;
            sum += f;
        }
        for j in 0..classes {
            floored[[i, j]] /= sum;
            mean[j] += floored[[i, j]];
        }
    }
    let inv_n = 1.0 / n as f64;
    for m in mean.iter_mut() {
        *m *= inv_n;
    }
    let log_mean: Vec<f64> = mean.iter().map(|m| m.max(PROB_FLOOR).ln()).collect();

    let mut total = 0.0;
    for row in floored.rows() {
        let mut kl = 0.0;
        for (j, p) in row.iter().enumerate() {
            kl += p * (p.ln() - log_mean[j]);
        }
        total += kl;
    }
    Ok((total * inv_n).exp())
}

/// Diversity score of a 2D sample set under a trained classifier.
pub fn inception_score(samples: ArrayView2<'_, f64>, clf: &ModeClassifier) -> Result<f64> {
    let probs = clf.predict_probs(samples)?;
    inception_score_from_probs(probs.view())
}

// ---------------------------------------------------------------------------
// Symmetric KL on a grid
// ---------------------------------------------------------------------------

/// Square evaluation grid: `resolution × resolution` cells over
/// `[min, max]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub resolution: usize,
}

impl GridSpec {
    pub fn default_eval() -> Self {
        GridSpec { min: -3.0, max: 3.0, resolution: 100 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::Config(format!("bad grid bounds [{}, {}]", self.min, self.max)));
        }
        if self.resolution == 0 {
            return Err(Error::Config("grid resolution must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn cell_width(&self) -> f64 {
        (self.max - self.min) / self.resolution as f64
    }

    /// Flat cell index for a point; out-of-bounds coordinates are clipped to
    /// the nearest edge cell and flagged.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, bool) {
        let mut clipped = false;
        let mut axis = |v: f64| -> usize {
            let raw = ((v - self.min) / self.cell_width()).floor();
            if raw < 0.0 {
                clipped = true;
                0
            } else if raw as usize >= self.resolution {
                if v > self.max {
                    clipped = true;
                }
                self.resolution - 1
            } else {
                raw as usize
            }
        };
        let ix = axis(x);
        let iy = axis(y);
        (iy * self.resolution + ix, clipped)
    }
}

/// Mixture density evaluated at cell centers, normalized to unit mass.
pub fn true_grid_masses(spec: &MixtureSpec, grid: &GridSpec) -> Result<Vec<f64>> {
    grid.validate()?;
    let w = grid.cell_width();
    let mut masses = vec![0.0; grid.n_cells()];
    let mut sum = 0.0;
    for iy in 0..grid.resolution {
        let cy = grid.min + (iy as f64 + 0.5) * w;
        for ix in 0..grid.resolution {
            let cx = grid.min + (ix as f64 + 0.5) * w;
            let d = spec.density([cx, cy]);
            masses[iy * grid.resolution + ix] = d;
            sum += d;
        }
    }
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::Numerical(format!("grid does not capture the density (sum {sum})")));
    }
    for m in masses.iter_mut() {
        *m /= sum;
    }
    Ok(masses)
}

/// Histogram masses of a sample set; returns the count of clipped
/// (out-of-bounds) samples alongside.
pub fn sample_grid_masses(
    samples: ArrayView2<'_, f64>,
    grid: &GridSpec,
) -> Result<(Vec<f64>, usize)> {
    grid.validate()?;
    let n = samples.nrows();
    if n == 0 {
        return Err(Error::Argument("histogram needs at least one sample".into()));
    }
    let mut masses = vec![0.0; grid.n_cells()];
    let mut clipped = 0;
    for row in samples.rows() {
        let (cell, clip) = grid.cell_of(row[0], row[1]);
        masses[cell] += 1.0;
        clipped += clip as usize;
    }
    let inv = 1.0 / n as f64;
    for m in masses.iter_mut() {
        *m *= inv;
    }
    Ok((masses, clipped))
}

/// `KL(p‖q) + KL(q‖p)` in nats between two mass vectors, after adding
/// smoothing mass per cell and renormalizing both sides.
pub fn symmetric_kl_between_masses(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::Argument(format!(
            "mass vectors must be non-empty and equal length, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    let norm = |m: &[f64]| -> Vec<f64> {
        let total: f64 = m.iter().sum::<f64>() + GRID_SMOOTHING * m.len() as f64;
        m.iter().map(|v| (v + GRID_SMOOTHING) / total).collect()
    };
    let ps = norm(p);
    let qs = norm(q);
    let mut kl_pq = 0.0;
    let mut kl_qp = 0.0;
    for (a, b) in ps.iter().zip(&qs) {
        let log_ratio = a.ln() - b.ln();
        kl_pq += a * log_ratio;
        kl_qp -= b * log_ratio;
    }
    Ok(kl_pq + kl_qp)
}

/// Symmetric KL between samples and the analytic mixture, plus the fraction
/// of samples clipped to the grid edge.
#[derive(Debug, Clone, Copy)]
pub struct SymKlOutcome {
    pub value: f64,
    pub clipped_fraction: f64,
}

pub fn symmetric_kl_detailed(
    samples: ArrayView2<'_, f64>,
    spec: &MixtureSpec,
    grid: &GridSpec,
) -> Result<SymKlOutcome> {
    if samples.nrows() < 1000 {
        return Err(Error::Argument(format!(
            "symmetric KL needs ≥ 1000 samples, got {}",
            samples.nrows()
        )));
    }
    let p = true_grid_masses(spec, grid)?;
    let (q, clipped) = sample_grid_masses(samples, grid)?;
    Ok(SymKlOutcome {
        value: symmetric_kl_between_masses(&p, &q)?,
        clipped_fraction: clipped as f64 / samples.nrows() as f64,
    })
}

pub fn symmetric_kl(
    samples: ArrayView2<'_, f64>,
    spec: &MixtureSpec,
    grid: &GridSpec,
) -> Result<f64> {
    Ok(symmetric_kl_detailed(samples, spec, grid)?.value)
}

// ---------------------------------------------------------------------------
// Mode coverage
// ---------------------------------------------------------------------------

/// Default quality radius: three standard deviations of one mixture
/// component.
pub fn default_quality_threshold(spec: &MixtureSpec) -> f64 {
    3.0 * spec.sigma()
}

/// A mode counts as covered when ≥ 1% of samples land within `threshold` of
/// its center (by nearest-center assignment). Also returns the fraction of
/// samples within `threshold` of any center.
pub fn mode_stats(
    samples: ArrayView2<'_, f64>,
    spec: &MixtureSpec,
    threshold: f64,
) -> Result<(usize, f64)> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Argument(format!("threshold must be positive, got {threshold}")));
    }
    let n = samples.nrows();
    if n == 0 {
        return Err(Error::Argument("mode statistics need at least one sample".into()));
    }
    let t2 = threshold * threshold;
    let mut near_counts = vec![0usize; spec.n_modes()];
    let mut near_any = 0usize;
    for row in samples.rows() {
        let (idx, d2) = nearest_mode([row[0], row[1]], spec);
        if d2 <= t2 {
            near_counts[idx] += 1;
            near_any += 1;
        }
    }
    let cutoff = (n as f64 * 0.01).ceil() as usize;
    let coverage = near_counts.iter().filter(|c| **c >= cutoff.max(1)).count();
    Ok((coverage, near_any as f64 / n as f64))
}

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

/// One evaluation of a sample set against the reference mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub icp: f64,
    pub sym_kl: f64,
    pub mode_coverage: usize,
    pub high_quality_fraction: f64,
}

impl MetricsReport {
    pub fn measure(
        samples: ArrayView2<'_, f64>,
        clf: &ModeClassifier,
        spec: &MixtureSpec,
        grid: &GridSpec,
    ) -> Result<Self> {
        let icp = inception_score(samples, clf)?;
        let sym_kl = symmetric_kl(samples, spec, grid)?;
        let (mode_coverage, high_quality_fraction) =
            mode_stats(samples, spec, default_quality_threshold(spec))?;
        Ok(MetricsReport { icp, sym_kl, mode_coverage, high_quality_fraction })
    }
}
