//! Frame-level f0 estimation and conversion to cents above 27.5 Hz.
//!
//! Each 25 ms window is compared with its lagged copy through the squared
//! difference function `d(tau) = sum_j (x_j - x_{j+tau})^2`, computed from an
//! FFT cross-correlation plus prefix-summed energies. `d` is normalized by its
//! cumulative mean, the first dip under `dip_threshold` (or the global
//! minimum when there is none) is refined by parabolic interpolation of `d`,
//! and the frame counts as voiced when `1 - d'(tau)` reaches `voicing_threshold`.
//! The lag search reads up to `1 / min_hz` seconds past the window start and
//! is cut short near the end of the clip.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Cent origin, the subcontra A.
pub const CENTS_ORIGIN_HZ: f64 = 27.5;
/// Eight octaves above the origin.
pub const CENTS_RANGE: f64 = 9600.0;

pub fn hz_to_cents(f: f64) -> Result<f64> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::Domain(f));
    }
    Ok(1200.0 * (f / CENTS_ORIGIN_HZ).log2())
}

pub fn cents_to_hz(cents: f64) -> f64 {
    CENTS_ORIGIN_HZ * (cents / 1200.0).exp2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PitchConfig {
    pub window_seconds: f64,
    pub hop_seconds: f64,
    pub min_hz: f64,
    pub max_hz: f64,
    /// Minimum `1 - d'` at the chosen lag for a frame to be voiced.
    pub voicing_threshold: f64,
    /// First-dip threshold on `d'` used to pick the lag.
    pub dip_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            window_seconds: 0.025,
            hop_seconds: 0.010,
            min_hz: 40.0,
            max_hz: 2000.0,
            voicing_threshold: 0.45,
            dip_threshold: 0.15,
        }
    }
}

impl PitchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_seconds > 0.0 && self.hop_seconds > 0.0) {
            return Err(Error::Parameter("pitch window and hop must be positive".into()));
        }
        if !(self.min_hz > 0.0 && self.max_hz > self.min_hz) {
            return Err(Error::Parameter(format!(
                "pitch range [{}, {}] Hz is empty",
                self.min_hz, self.max_hz
            )));
        }
        if !(0.0..=1.0).contains(&self.voicing_threshold) {
            return Err(Error::Parameter("voicing threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchFrame {
    pub time: f64,
    /// `None` for unvoiced frames.
    pub cents: Option<f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    pub hop_seconds: f64,
    pub frames: Vec<PitchFrame>,
}

impl PitchTrack {
    /// Track from cent values at a fixed hop, `None` marking unvoiced frames.
    pub fn from_cents(hop_seconds: f64, cents: &[Option<f64>]) -> Self {
        PitchTrack {
            hop_seconds,
            frames: cents
                .iter()
                .enumerate()
                .map(|(i, &c)| PitchFrame {
                    time: i as f64 * hop_seconds,
                    cents: c,
                    confidence: if c.is_some() { 1.0 } else { 0.0 },
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().filter_map(|f| f.cents)
    }
}

/// Lag geometry for a sample rate.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    window: usize,
    hop: usize,
    lag_lo: usize,
    lag_hi: usize,
    fft_len: usize,
}

impl Geometry {
    fn new(sample_rate: u32, c: &PitchConfig) -> Self {
        let sr = sample_rate as f64;
        let window = ((c.window_seconds * sr).round() as usize).max(2);
        let hop = ((c.hop_seconds * sr).round() as usize).max(1);
        let lag_lo = ((sr / c.max_hz).ceil() as usize).max(2);
        let lag_hi = ((sr / c.min_hz).floor() as usize).max(lag_lo + 1);
        // lag_hi + 1 for the interpolation neighbour; no circular wrap as
        // long as the transform spans window + max lag.
        let fft_len = (window + lag_hi + 2).next_power_of_two();
        Geometry {
            window,
            hop,
            lag_lo,
            lag_hi,
            fft_len,
        }
    }

    fn max_lag(&self) -> usize {
        self.lag_hi + 1
    }

    fn frame_count(&self, samples: usize) -> usize {
        if samples < self.window {
            0
        } else {
            (samples - self.window) / self.hop + 1
        }
    }
}

/// Reusable per-thread buffers and plans.
struct Estimator {
    geo: Geometry,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    win_buf: Vec<Complex<f64>>,
    seg_buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    prefix: Vec<f64>,
    diff: Vec<f64>,
}

impl Estimator {
    fn new(geo: Geometry) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(geo.fft_len);
        let inverse = planner.plan_fft_inverse(geo.fft_len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Estimator {
            geo,
            forward,
            inverse,
            win_buf: vec![Complex::default(); geo.fft_len],
            seg_buf: vec![Complex::default(); geo.fft_len],
            scratch: vec![Complex::default(); scratch_len],
            prefix: vec![0.0; geo.window + geo.max_lag() + 1],
            diff: vec![0.0; geo.max_lag() + 1],
        }
    }

    /// Fills `self.diff[tau]` with the squared difference function for
    /// `tau = 0..=max_lag`. Returns the window energy.
    fn difference(&mut self, samples: &[f32], start: usize) -> f64 {
        let g = self.geo;
        let seg_len = g.window + g.max_lag();
        let at = |j: usize| -> f64 { samples.get(start + j).map_or(0.0, |&s| s as f64) };

        self.prefix[0] = 0.0;
        for j in 0..seg_len {
            let x = at(j);
            self.prefix[j + 1] = self.prefix[j] + x * x;
            self.seg_buf[j] = Complex::new(x, 0.0);
            self.win_buf[j] = if j < g.window { Complex::new(x, 0.0) } else { Complex::default() };
        }
        for j in seg_len..g.fft_len {
            self.seg_buf[j] = Complex::default();
            self.win_buf[j] = Complex::default();
        }
        let energy0 = self.prefix[g.window];
        if energy0 == 0.0 {
            return 0.0;
        }
        self.forward.process_with_scratch(&mut self.win_buf, &mut self.scratch);
        self.forward.process_with_scratch(&mut self.seg_buf, &mut self.scratch);
        for (s, w) in self.seg_buf.iter_mut().zip(&self.win_buf) {
            *s *= w.conj();
        }
        self.inverse.process_with_scratch(&mut self.seg_buf, &mut self.scratch);
        let norm = 1.0 / g.fft_len as f64;
        for tau in 0..=g.max_lag() {
            let corr = self.seg_buf[tau].re * norm;
            let energy_tau = self.prefix[tau + g.window] - self.prefix[tau];
            self.diff[tau] = (energy0 + energy_tau - 2.0 * corr).max(0.0);
        }
        energy0
    }

    fn estimate(&mut self, samples: &[f32], start: usize, sr: f64, c: &PitchConfig) -> (Option<f64>, f64) {
        if self.difference(samples, start) == 0.0 {
            return (None, 0.0);
        }
        let g = self.geo;
        // lags that would read past the clip end are not searched
        let avail = samples.len().saturating_sub(start + g.window).min(g.max_lag());
        let diff = &self.diff[..=avail];
        let cmnd = cumulative_mean_normalize(diff);
        let Some((tau, dip)) = pick_lag(&cmnd, g.lag_lo, g.lag_hi, c.dip_threshold) else {
            return (None, 0.0);
        };
        // a truncated search only trusts a genuine dip
        if !dip && avail < g.lag_hi {
            return (None, 0.0);
        }
        let confidence = (1.0 - cmnd[tau]).clamp(0.0, 1.0);
        if confidence < c.voicing_threshold {
            return (None, confidence);
        }
        let refined = parabolic_vertex(diff, tau);
        let f0 = sr / refined;
        if f0 < c.min_hz || f0 > c.max_hz {
            return (None, confidence);
        }
        match hz_to_cents(f0) {
            Ok(cents) if (0.0..CENTS_RANGE).contains(&cents) => (Some(cents), confidence),
            _ => (None, confidence),
        }
    }
}

/// `d'(0) = 1`, `d'(tau) = d(tau) * tau / sum_{k=1..tau} d(k)`.
pub(crate) fn cumulative_mean_normalize(diff: &[f64]) -> Vec<f64> {
    let mut out = vec![1.0; diff.len()];
    let mut running = 0.0;
    for tau in 1..diff.len() {
        running += diff[tau];
        out[tau] = if running > 0.0 {
            diff[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
    out
}

/// First local minimum under `threshold` in `[lo, hi]`, else the global
/// minimum of that range. The flag tells which rule fired.
fn pick_lag(cmnd: &[f64], lo: usize, hi: usize, threshold: f64) -> Option<(usize, bool)> {
    let hi = hi.min(cmnd.len().saturating_sub(1));
    if lo > hi {
        return None;
    }
    let mut tau = lo;
    while tau <= hi {
        if cmnd[tau] < threshold {
            while tau + 1 <= hi && cmnd[tau + 1] < cmnd[tau] {
                tau += 1;
            }
            return Some((tau, true));
        }
        tau += 1;
    }
    (lo..=hi)
        .min_by(|&a, &b| cmnd[a].total_cmp(&cmnd[b]).then(a.cmp(&b)))
        .map(|t| (t, false))
}

fn parabolic_vertex(y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return i as f64;
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom <= 0.0 {
        return i as f64;
    }
    let shift = 0.5 * (a - c) / denom;
    if shift.abs() < 1.0 {
        i as f64 + shift
    } else {
        i as f64
    }
}

/// Tracks f0 over the whole clip at the configured hop.
pub fn track_f0(clip: &AudioClip, config: &PitchConfig) -> PitchTrack {
    let geo = Geometry::new(clip.sample_rate(), config);
    let sr = clip.sample_rate() as f64;
    let samples = clip.samples();
    let hop_seconds = geo.hop as f64 / sr;
    let frames: Vec<PitchFrame> = (0..geo.frame_count(samples.len()))
        .into_par_iter()
        .map_init(
            || Estimator::new(geo),
            |est, k| {
                let (cents, confidence) = est.estimate(samples, k * geo.hop, sr, config);
                PitchFrame {
                    time: k as f64 * hop_seconds,
                    cents,
                    confidence,
                }
            },
        )
        .collect();
    PitchTrack { hop_seconds, frames }
}
