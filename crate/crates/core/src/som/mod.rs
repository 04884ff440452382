//! Kohonen self-organizing map with Pearson-correlation best matching and a
//! Mexican-hat (Ricker) neighbourhood.
//!
//! Weights are stored row-major, `dim` values per neuron. Initialization
//! draws from `ChaCha8Rng` stream 0 of the seed; per-cycle shuffling draws
//! from stream 1. Results are bit-identical for a given seed on one
//! platform; other platforms may differ in the last ulp of `exp`.

mod maps;

pub use maps::{component_plane, feature_importance, u_matrix, FeatureRank, UMatrix};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_CYCLES: usize = 500;

/// Variance below this counts as constant.
const MIN_VARIANCE: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub cycles: usize,
    pub alpha_start: f64,
    pub alpha_end: f64,
    /// `None` means `max(rows, cols) / 2`.
    pub sigma_start: Option<f64>,
    pub sigma_end: f64,
    /// Apply the kernel's negative lobe, moving ring neurons away from the
    /// input, with weights clamped to the data range. When false (the
    /// default) the kernel is clipped at zero and every neuron moves
    /// towards the input.
    pub negative_lobe: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            cycles: DEFAULT_CYCLES,
            alpha_start: 0.5,
            alpha_end: 0.01,
            sigma_start: None,
            sigma_end: 1.0,
            negative_lobe: false,
        }
    }
}

/// Learning-rate and radius endpoints actually used, kept with the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub sigma_start: f64,
    pub sigma_end: f64,
}

impl Schedule {
    /// Linear interpolation between the endpoints at cycle `t` of `cycles`.
    pub fn at(&self, t: usize, cycles: usize) -> (f64, f64) {
        let frac = if cycles > 1 {
            t as f64 / (cycles - 1) as f64
        } else {
            0.0
        };
        (
            self.alpha_start + (self.alpha_end - self.alpha_start) * frac,
            self.sigma_start + (self.sigma_end - self.sigma_start) * frac,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomGrid {
    pub format_version: u32,
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub rng_seed: u64,
    pub cycles_trained: usize,
    pub schedule: Option<Schedule>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub id: String,
    pub row: usize,
    pub col: usize,
    pub correlation: f64,
}

/// Ricker wavelet `h(d, sigma) = (1 - d^2/sigma^2) exp(-d^2 / (2 sigma^2))`.
#[inline]
pub fn mexican_hat(d: f64, sigma: f64) -> f64 {
    let q = d * d / (sigma * sigma);
    (1.0 - q) * (-0.5 * q).exp()
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= MIN_VARIANCE || sbb <= MIN_VARIANCE {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Mean-centred, unit-norm copy of `v`, or `None` when `v` is constant.
fn standardize(v: &[f64]) -> Option<Vec<f64>> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let centred: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let ss: f64 = centred.iter().map(|x| x * x).sum();
    if ss <= MIN_VARIANCE {
        return None;
    }
    let inv = 1.0 / ss.sqrt();
    Some(centred.into_iter().map(|x| x * inv).collect())
}

/// Correlation of a standardized vector with one weight vector.
#[inline]
fn correlation_with(vhat: &[f64], w: &[f64]) -> f64 {
    let (mut s, mut ss, mut dot) = (0.0, 0.0, 0.0);
    for (&x, &y) in vhat.iter().zip(w) {
        s += y;
        ss += y * y;
        dot += x * y;
    }
    // sum(vhat) = 0, so the dot product with the uncentred w is the
    // covariance term already.
    let var = ss - s * s / w.len() as f64;
    if var <= MIN_VARIANCE {
        0.0
    } else {
        dot / var.sqrt()
    }
}

impl SomGrid {
    pub fn init(rows: usize, cols: usize, dim: usize, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 || dim == 0 {
            return Err(Error::Parameter(format!(
                "map shape {rows}x{cols} with dim {dim} must be non-empty"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..rows * cols * dim).map(|_| rng.gen::<f64>()).collect();
        Ok(SomGrid {
            format_version: GRID_FORMAT_VERSION,
            rows,
            cols,
            dim,
            rng_seed: seed,
            cycles_trained: 0,
            schedule: None,
            weights,
        })
    }

    pub fn neurons(&self) -> usize {
        self.rows * self.cols
    }

    pub fn weight(&self, row: usize, col: usize) -> &[f64] {
        let n = row * self.cols + col;
        &self.weights[n * self.dim..(n + 1) * self.dim]
    }

    pub fn weight_at(&self, neuron: usize) -> &[f64] {
        &self.weights[neuron * self.dim..(neuron + 1) * self.dim]
    }

    pub fn position(&self, neuron: usize) -> (usize, usize) {
        (neuron / self.cols, neuron % self.cols)
    }

    /// Checks shape consistency after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != GRID_FORMAT_VERSION {
            return Err(Error::Store(format!(
                "grid format version {} is not supported (expected {GRID_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.weights.len() != self.rows * self.cols * self.dim {
            return Err(Error::Dimension {
                expected: self.rows * self.cols * self.dim,
                actual: self.weights.len(),
            });
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Store("grid contains non-finite weights".into()));
        }
        Ok(())
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Correlation of `v` with every neuron, row-major.
    pub fn correlations(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        let vhat = standardize(v).ok_or_else(|| Error::degenerate(None, "constant vector"))?;
        Ok(self.correlations_standardized(&vhat))
    }

    fn correlations_standardized(&self, vhat: &[f64]) -> Vec<f64> {
        self.weights
            .par_chunks(self.dim)
            .map(|w| correlation_with(vhat, w))
            .collect()
    }

    fn argmax(corr: &[f64]) -> usize {
        let mut best = 0;
        for (i, &c) in corr.iter().enumerate().skip(1) {
            if c > corr[best] {
                best = i;
            }
        }
        best
    }

    /// Neuron with the strongest Pearson correlation; ties go to the first
    /// in row-major order.
    pub fn best_match(&self, id: &str, v: &[f64]) -> Result<Placement> {
        self.check_dim(v)?;
        let vhat = standardize(v)
            .ok_or_else(|| Error::degenerate(Some(id), "constant feature vector"))?;
        let corr = self.correlations_standardized(&vhat);
        let n = Self::argmax(&corr);
        let (row, col) = self.position(n);
        Ok(Placement {
            id: id.to_owned(),
            row,
            col,
            correlation: corr[n].clamp(-1.0, 1.0),
        })
    }

    /// Online training: per cycle every vector is presented once in a
    /// shuffled order and all neurons move by `alpha * h * (v - w)`. See
    /// [`TrainConfig::negative_lobe`] for how negative `h` is treated.
    pub fn train(&mut self, data: &[Vec<f64>], cfg: &TrainConfig) -> Result<()> {
        if cfg.cycles == 0 {
            return Err(Error::Parameter("training needs at least one cycle".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput("no training vectors".into()));
        }
        let sigma_start = cfg
            .sigma_start
            .unwrap_or(self.rows.max(self.cols) as f64 / 2.0);
        if !(sigma_start > 0.0 && cfg.sigma_end > 0.0) {
            return Err(Error::Parameter("neighbourhood radius must be positive".into()));
        }
        let mut standardized = Vec::with_capacity(data.len());
        for (i, v) in data.iter().enumerate() {
            self.check_dim(v)?;
            let vhat = standardize(v).ok_or_else(|| {
                Error::degenerate(None, format!("training vector {i} is constant"))
            })?;
            standardized.push(vhat);
        }
        let schedule = Schedule {
            alpha_start: cfg.alpha_start,
            alpha_end: cfg.alpha_end,
            sigma_start,
            sigma_end: cfg.sigma_end,
        };

        // Repulsion compounds geometrically without a bound, so with the
        // negative lobe weights stay inside the per-dimension data range.
        let mut lo = data[0].clone();
        let mut hi = data[0].clone();
        for v in &data[1..] {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let cols = self.cols;
        let dim = self.dim;
        let negative_lobe = cfg.negative_lobe;
        for t in 0..cfg.cycles {
            let (alpha, sigma) = schedule.at(t, cfg.cycles);
            order.shuffle(&mut rng);
            for &k in &order {
                let corr = self.correlations_standardized(&standardized[k]);
                let b = Self::argmax(&corr);
                let (br, bc) = ((b / cols) as f64, (b % cols) as f64);
                let v = &data[k];
                self.weights
                    .par_chunks_mut(dim)
                    .enumerate()
                    .for_each(|(n, w)| {
                        let (r, c) = ((n / cols) as f64, (n % cols) as f64);
                        let d = ((r - br).powi(2) + (c - bc).powi(2)).sqrt();
                        let h = mexican_hat(d, sigma);
                        let g = alpha * if negative_lobe { h } else { h.max(0.0) };
                        if negative_lobe {
                            for (k, (wi, vi)) in w.iter_mut().zip(v).enumerate() {
                                *wi = (*wi + g * (vi - *wi)).clamp(lo[k], hi[k]);
                            }
                        } else {
                            for (wi, vi) in w.iter_mut().zip(v) {
                                *wi += g * (vi - *wi);
                            }
                        }
                    });
            }
        }
        self.cycles_trained += cfg.cycles;
        self.schedule = Some(schedule);
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::degenerate(None, "training diverged to non-finite weights"));
        }
        Ok(())
    }

    /// Places every `(id, vector)` pair.
    pub fn place_all<'a>(
        &self,
        items: impl IntoIterator<Item = (&'a str, &'a [f64])>,
    ) -> Result<Vec<Placement>> {
        items
            .into_iter()
            .map(|(id, v)| self.best_match(id, v))
            .collect()
    }
}
