//! Ground-truth 2D Gaussian mixture, latent sampling, and sample dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic Gaussian mixture with uniform component weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    centers: Vec<[f64; 2]>,
    covariance_scale: f64,
}

impl MixtureSpec {
    /// `covariance_scale` is the shared isotropic variance; 0 degenerates to
    /// point masses at the centers.
    pub fn new(centers: Vec<[f64; 2]>, covariance_scale: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Config("mixture needs at least one center".into()));
        }
        if !(covariance_scale.is_finite() && covariance_scale >= 0.0) {
            return Err(Error::Config(format!(
                "covariance scale must be non-negative, got {covariance_scale}"
            )));
        }
        Ok(MixtureSpec { centers, covariance_scale })
    }

    /// Eight components equally spaced on a circle of radius 2, covariance
    /// 0.02·I. Component 0 sits at (2, 0); the rest follow counterclockwise.
    pub fn eight_gaussians() -> Self {
        let centers = (0..8)
            .map(|k| {
                let angle = std::f64::consts::FRAC_PI_4 * k as f64;
                [2.0 * angle.cos(), 2.0 * angle.sin()]
            })
            .collect();
        MixtureSpec { centers, covariance_scale: 0.02 }
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    pub fn n_modes(&self) -> usize {
        self.centers.len()
    }

    pub fn covariance_scale(&self) -> f64 {
        self.covariance_scale
    }

    pub fn sigma(&self) -> f64 {
        self.covariance_scale.sqrt()
    }

    /// Mixture density at a point (uniform weights).
    pub fn density(&self, point: [f64; 2]) -> f64 {
        if self.covariance_scale == 0.0 {
            // Degenerate mixture has no density; callers use samples instead.
            return if self.centers.iter().any(|c| *c == point) { f64::INFINITY } else { 0.0 };
        }
        let norm = 1.0 / (2.0 * std::f64::consts::PI * self.covariance_scale);
        let inv_two_var = 1.0 / (2.0 * self.covariance_scale);
        let sum: f64 = self
            .centers
            .iter()
            .map(|c| {
                let dx = point[0] - c[0];
                let dy = point[1] - c[1];
                norm * (-(dx * dx + dy * dy) * inv_two_var).exp()
            })
            .sum();
        sum / self.centers.len() as f64
    }
}

/// Latent noise specification: i.i.d. standard normal of a given dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentSpec {
    pub dimension: usize,
}

impl LatentSpec {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("latent dimension must be ≥ 1".into()));
        }
        Ok(LatentSpec { dimension })
    }
}

/// A mixture draw tagged with the component that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub point: [f64; 2],
    pub mode_index: usize,
}

/// Draws `n` samples: uniform component choice, then an isotropic Gaussian
/// step. Per sample the stream is consumed as (component, x-noise, y-noise).
pub fn sample_mixture<R: Rng + ?Sized>(spec: &MixtureSpec, n: usize, rng: &mut R) -> Vec<LabeledSample> {
    let sigma = spec.sigma();
    let k = spec.n_modes();
    (0..n)
        .map(|_| {
            let mode_index = rng.random_range(0..k);
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            let c = spec.centers[mode_index];
            LabeledSample { point: [c[0] + sigma * nx, c[1] + sigma * ny], mode_index }
        })
        .collect()
}

/// Like [`sample_mixture`] but returns just the points as an `n × 2` batch.
pub fn sample_mixture_batch<R: Rng + ?Sized>(spec: &MixtureSpec, n: usize, rng: &mut R) -> Array2<f64> {
    let samples = sample_mixture(spec, n, rng);
    points_to_batch(samples.iter().map(|s| s.point))
}

/// Draws `n` latent vectors as an `n × dimension` batch of standard normals.
pub fn sample_latent<R: Rng + ?Sized>(spec: &LatentSpec, n: usize, rng: &mut R) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((n, spec.dimension));
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    out
}

/// Index and squared distance of the closest center; ties go to the lowest
/// index, so the result is total.
pub fn nearest_mode(point: [f64; 2], spec: &MixtureSpec) -> (usize, f64) {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, c) in spec.centers.iter().enumerate() {
        let dx = point[0] - c[0];
        let dy = point[1] - c[1];
        let d2 = dx * dx + dy * dy;
        if d2 < best_d2 {
            best = i;
            best_d2 = d2;
        }
    }
    (best, best_d2)
}

pub fn points_to_batch(points: impl IntoIterator<Item = [f64; 2]>) -> Array2<f64> {
    let flat: Vec<f64> = points.into_iter().flatten().collect();
    let n = flat.len() / 2;
    Array2::from_shape_vec((n, 2), flat).expect("row-major 2-column batch")
}

// ---------------------------------------------------------------------------
// CSV dumps
// ---------------------------------------------------------------------------

/// `x,y,mode` dump of labeled real samples.
pub fn labeled_samples_csv(samples: &[LabeledSample]) -> String {
    let mut out = String::from("x,y,mode\n");
    for s in samples {
        writeln!(out, "{},{},{}", s.point[0], s.point[1], s.mode_index).expect("string write");
    }
    out
}

/// `x,y` dump of bare points (generated samples).
pub fn points_csv(points: ArrayView2<'_, f64>) -> String {
    let mut out = String::from("x,y\n");
    for row in points.rows() {
        writeln!(out, "{},{}", row[0], row[1]).expect("string write");
    }
    out
}

pub fn write_labeled_samples_csv(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    fs::write(path, labeled_samples_csv(samples))?;
    Ok(())
}

pub fn write_points_csv(path: &Path, points: ArrayView2<'_, f64>) -> Result<()> {
    fs::write(path, points_csv(points))?;
    Ok(())
}

/// Parses an `x,y` sample dump; an `x,y,mode` dump is accepted too, with the
/// label column ignored. Errors carry the 1-based line number.
pub fn parse_points_csv(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file, expected an `x,y` header".into() })?;
    let header = header.trim_end_matches('\r');
    let with_mode = match header {
        "x,y" => false,
        "x,y,mode" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `x,y` or `x,y,mode`, got `{other}`"),
            })
        }
    };

    let mut points = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let mut take_f64 = |name: &str| -> Result<f64> {
            let field = fields
                .next()
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("missing `{name}` field") })?;
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: line_no, msg: format!("bad `{name}` value `{field}`") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: line_no, msg: format!("non-finite `{name}` value") });
            }
            Ok(v)
        };
        let x = take_f64("x")?;
        let y = take_f64("y")?;
        if with_mode {
            let field = fields
                .next()
                .ok_or_else(|| Error::Parse { line: line_no, msg: "missing `mode` field".into() })?;
            field.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad `mode` value `{field}`"),
            })?;
        }
        if fields.next().is_some() {
            return Err(Error::Parse { line: line_no, msg: "too many fields".into() });
        }
        points.push([x, y]);
    }
    Ok(points)
}

pub fn read_points_csv(path: &Path) -> Result<Vec<[f64; 2]>> {
    parse_points_csv(&fs::read_to_string(path)?)
}
