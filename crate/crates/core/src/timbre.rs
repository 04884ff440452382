//! Per-frame psychoacoustic features (spectral centroid, roughness,
//! sharpness, loudness) and their per-piece mean / standard deviation.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::spectral::{clip_spectra, FrameSpectrum, SpectrumConfig};

/// Beat frequency of maximal roughness between two sinusoids.
pub const ROUGHNESS_PEAK_HZ: f64 = 33.0;

pub const BARK_BANDS: usize = 24;

/// Critical-band edges in Hz; band `B` (1-based) spans
/// `[BARK_EDGES_HZ[B-1], BARK_EDGES_HZ[B])`.
pub const BARK_EDGES_HZ: [f64; BARK_BANDS + 1] = [
    20.0, 100.0, 200.0, 300.0, 400.0, 510.0, 630.0, 770.0, 920.0, 1080.0, 1270.0, 1480.0, 1720.0,
    2000.0, 2320.0, 2700.0, 3150.0, 3700.0, 4400.0, 5300.0, 6400.0, 7700.0, 9500.0, 12000.0,
    15500.0,
];

pub const SHARPNESS_SCALE: f64 = 0.11;
pub const LOUDNESS_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimbreConfig {
    pub roughness_peak_hz: f64,
    /// Partials are spectral local maxima at or above this fraction of the
    /// frame's peak magnitude.
    pub partial_threshold: f64,
    pub reference_amplitude: f64,
}

impl Default for TimbreConfig {
    fn default() -> Self {
        TimbreConfig {
            roughness_peak_hz: ROUGHNESS_PEAK_HZ,
            partial_threshold: 1e-3,
            reference_amplitude: 1.0,
        }
    }
}

/// Spectral centroid in Hz; `None` for an all-zero spectrum.
pub fn spectral_centroid(spec: &FrameSpectrum) -> Option<f64> {
    let (mut weighted, mut total) = (0.0, 0.0);
    for (i, &a) in spec.magnitudes.iter().enumerate() {
        weighted += spec.frequency(i) * a;
        total += a;
    }
    (total > 0.0).then(|| weighted / total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partial {
    pub frequency: f64,
    pub amplitude: f64,
}

/// Local maxima of the magnitude spectrum at or above `rel_threshold` of the
/// frame peak. A plateau yields its first bin.
pub fn pick_partials(spec: &FrameSpectrum, rel_threshold: f64) -> Vec<Partial> {
    let a = &spec.magnitudes;
    let peak = a.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let floor = peak * rel_threshold;
    let last = a.len() - 1;
    (0..a.len())
        .filter(|&i| {
            let v = a[i];
            v > 0.0
                && v >= floor
                && (i == 0 || v > a[i - 1])
                && (i == last || v >= a[i + 1])
        })
        .map(|i| Partial {
            frequency: spec.frequency(i),
            amplitude: a[i],
        })
        .collect()
}

/// Roughness contribution of one sinusoid pair,
/// `A1 A2 (|df| / (f_r e^-1)) e^(-|df| / f_r)`.
#[inline]
pub fn pair_roughness(a1: f64, a2: f64, df: f64, peak_hz: f64) -> f64 {
    let x = df.abs() / peak_hz;
    a1 * a2 * x * std::f64::consts::E * (-x).exp()
}

/// Sum of [`pair_roughness`] over all unordered pairs.
pub fn roughness_of_partials(partials: &[Partial], peak_hz: f64) -> f64 {
    let mut total = 0.0;
    for (i, p) in partials.iter().enumerate() {
        for q in &partials[i + 1..] {
            total += pair_roughness(p.amplitude, q.amplitude, q.frequency - p.frequency, peak_hz);
        }
    }
    total
}

pub fn roughness(spec: &FrameSpectrum, config: &TimbreConfig) -> f64 {
    roughness_of_partials(
        &pick_partials(spec, config.partial_threshold),
        config.roughness_peak_hz,
    )
}

/// Energy per critical band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarkBands {
    pub band_loudness: [f64; BARK_BANDS],
}

impl BarkBands {
    /// `[lo, hi)` in Hz for band `b` in `1..=24`.
    pub fn band_edges(b: usize) -> (f64, f64) {
        (BARK_EDGES_HZ[b - 1], BARK_EDGES_HZ[b])
    }

    /// 1-based band containing `freq`; bins at or above the top edge fall in
    /// band 24, bins below 20 Hz in none.
    pub fn band_of(freq: f64) -> Option<usize> {
        if freq < BARK_EDGES_HZ[0] {
            return None;
        }
        let idx = BARK_EDGES_HZ[1..].partition_point(|&hi| hi <= freq);
        Some((idx + 1).min(BARK_BANDS))
    }

    pub fn from_spectrum(spec: &FrameSpectrum) -> Self {
        let mut band_loudness = [0.0; BARK_BANDS];
        for (i, &a) in spec.magnitudes.iter().enumerate() {
            if let Some(b) = Self::band_of(spec.frequency(i)) {
                band_loudness[b - 1] += a * a;
            }
        }
        BarkBands { band_loudness }
    }

    /// Bands directly, mostly for tests. `values[0]` is band 1.
    pub fn from_values(values: [f64; BARK_BANDS]) -> Self {
        BarkBands {
            band_loudness: values,
        }
    }
}

/// Sharpness weighting `g_B`: 1 below band 15, `0.066 e^(0.171 B)` from 15 on.
#[inline]
pub fn sharpness_weight(band: usize) -> f64 {
    if band < 15 {
        1.0
    } else {
        0.066 * (0.171 * band as f64).exp()
    }
}

/// Sharpness in acum; `None` when every band is silent.
pub fn sharpness_from_bands(bands: &BarkBands) -> Option<f64> {
    let (mut weighted, mut total) = (0.0, 0.0);
    for (i, &l) in bands.band_loudness.iter().enumerate() {
        let b = i + 1;
        weighted += l * sharpness_weight(b) * b as f64;
        total += l;
    }
    (total > 0.0).then(|| SHARPNESS_SCALE * weighted / total)
}

pub fn sharpness(spec: &FrameSpectrum) -> Option<f64> {
    sharpness_from_bands(&BarkBands::from_spectrum(spec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loudness {
    pub db: f64,
    pub silent: bool,
}

/// `20 log10((1/N) sqrt(sum A_i^2 / A_ref^2))`, floored at -120 dB for an
/// all-zero spectrum.
pub fn loudness(spec: &FrameSpectrum, reference_amplitude: f64) -> Loudness {
    let n = spec.len() as f64;
    let energy: f64 = spec
        .magnitudes
        .iter()
        .map(|a| (a / reference_amplitude).powi(2))
        .sum();
    if energy == 0.0 {
        return Loudness {
            db: LOUDNESS_FLOOR_DB,
            silent: true,
        };
    }
    Loudness {
        db: 20.0 * (energy.sqrt() / n).log10(),
        silent: false,
    }
}

/// Features of one frame. `centroid`/`sharpness` are `None` on silent frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameFeatures {
    pub centroid: Option<f64>,
    pub roughness: f64,
    pub sharpness: Option<f64>,
    pub loudness_db: f64,
}

impl FrameFeatures {
    /// A frame enters the per-piece aggregate only if every feature is defined.
    pub fn usable(&self) -> Option<[f64; 4]> {
        Some([self.centroid?, self.roughness, self.sharpness?, self.loudness_db])
    }
}

pub fn frame_features(spec: &FrameSpectrum, config: &TimbreConfig) -> FrameFeatures {
    let l = loudness(spec, config.reference_amplitude);
    if l.silent {
        return FrameFeatures {
            centroid: None,
            roughness: 0.0,
            sharpness: None,
            loudness_db: l.db,
        };
    }
    FrameFeatures {
        centroid: spectral_centroid(spec),
        roughness: roughness(spec, config),
        sharpness: sharpness(spec),
        loudness_db: l.db,
    }
}

pub const TIMBRE_DIM: usize = 8;

/// Column order of [`TimbreVector::to_array`].
pub const TIMBRE_FEATURES: [&str; TIMBRE_DIM] = [
    "centroid_mean",
    "centroid_std",
    "roughness_mean",
    "roughness_std",
    "sharpness_mean",
    "sharpness_std",
    "loudness_mean",
    "loudness_std",
];

/// Index of the sharpness standard deviation in [`TIMBRE_FEATURES`].
pub const SHARPNESS_STD: usize = 5;
pub const ROUGHNESS_MEAN: usize = 2;

/// Per-piece timbre summary: mean and population standard deviation of
/// each frame feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimbreVector {
    pub centroid_mean: f64,
    pub centroid_std: f64,
    pub roughness_mean: f64,
    pub roughness_std: f64,
    pub sharpness_mean: f64,
    pub sharpness_std: f64,
    pub loudness_mean: f64,
    pub loudness_std: f64,
}

impl TimbreVector {
    pub fn to_array(&self) -> [f64; TIMBRE_DIM] {
        [
            self.centroid_mean,
            self.centroid_std,
            self.roughness_mean,
            self.roughness_std,
            self.sharpness_mean,
            self.sharpness_std,
            self.loudness_mean,
            self.loudness_std,
        ]
    }

    pub fn from_array(v: [f64; TIMBRE_DIM]) -> Self {
        TimbreVector {
            centroid_mean: v[0],
            centroid_std: v[1],
            roughness_mean: v[2],
            roughness_std: v[3],
            sharpness_mean: v[4],
            sharpness_std: v[5],
            loudness_mean: v[6],
            loudness_std: v[7],
        }
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates usable frames; needs at least two of them.
pub fn aggregate(frames: &[FrameFeatures]) -> Result<TimbreVector> {
    let usable: Vec<[f64; 4]> = frames.iter().filter_map(FrameFeatures::usable).collect();
    if usable.len() < 2 {
        return Err(Error::degenerate(
            None,
            format!(
                "{} usable timbre frames of {}, need at least 2",
                usable.len(),
                frames.len()
            ),
        ));
    }
    let mut out = [0.0; TIMBRE_DIM];
    for k in 0..4 {
        let (m, s) = mean_std(usable.iter().map(|f| f[k]));
        out[2 * k] = m;
        out[2 * k + 1] = s;
    }
    Ok(TimbreVector::from_array(out))
}

#[derive(Debug, Clone)]
pub struct TimbreSummary {
    pub vector: TimbreVector,
    pub frame_count: usize,
    pub usable_frames: usize,
}

/// Full timbre extraction for a clip.
pub fn extract_timbre(
    clip: &AudioClip,
    spectrum: &SpectrumConfig,
    config: &TimbreConfig,
) -> Result<TimbreSummary> {
    let spectra = clip_spectra(clip, spectrum)?;
    let frames: Vec<FrameFeatures> = spectra.iter().map(|s| frame_features(s, config)).collect();
    let usable_frames = frames.iter().filter(|f| f.usable().is_some()).count();
    let vector = aggregate(&frames).map_err(|e| match e {
        Error::Degenerate { reason, .. } => Error::degenerate(Some(clip.id()), reason),
        other => other,
    })?;
    Ok(TimbreSummary {
        vector,
        frame_count: frames.len(),
        usable_frames,
    })
}
