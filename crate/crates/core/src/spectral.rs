//! Non-overlapping framing and magnitude spectra.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

pub const DEFAULT_FRAME_SECONDS: f64 = 0.080;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    pub frame_seconds: f64,
    pub window: Window,
    /// Zero-pad each frame to the next power of two before transforming.
    /// Magnitudes are then reported on the padded bin grid.
    pub pad_to_pow2: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            frame_seconds: DEFAULT_FRAME_SECONDS,
            window: Window::Rectangular,
            pad_to_pow2: false,
        }
    }
}

/// Non-negative-frequency magnitudes `A_i` of one frame, with `f_i = i * bin_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpectrum {
    pub magnitudes: Vec<f64>,
    pub bin_hz: f64,
    pub frame_index: usize,
    pub frame_duration: f64,
}

impl FrameSpectrum {
    /// Builds a spectrum directly from magnitudes; used for synthetic spectra.
    pub fn from_magnitudes(magnitudes: Vec<f64>, bin_hz: f64) -> Self {
        FrameSpectrum {
            magnitudes,
            bin_hz,
            frame_index: 0,
            frame_duration: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    #[inline]
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }

    pub fn is_silent(&self) -> bool {
        self.magnitudes.iter().all(|&a| a == 0.0)
    }

    pub fn scaled(&self, gain: f64) -> Self {
        FrameSpectrum {
            magnitudes: self.magnitudes.iter().map(|a| a * gain).collect(),
            ..self.clone()
        }
    }
}

/// Frame length in samples for a duration, `round(seconds * sample_rate)`.
pub fn frame_length(sample_rate: u32, seconds: f64) -> usize {
    (seconds * sample_rate as f64).round() as usize
}

/// Splits a clip into adjacent non-overlapping frames; the trailing
/// remainder shorter than one frame is dropped.
pub fn frame_clip(clip: &AudioClip, frame_seconds: f64) -> Result<Vec<&[f32]>> {
    let l = frame_length(clip.sample_rate(), frame_seconds);
    if l < 2 {
        return Err(Error::Parameter(format!(
            "frame of {frame_seconds} s is under 2 samples"
        )));
    }
    let samples = clip.samples();
    if samples.len() < l {
        return Err(Error::TooShort {
            samples: samples.len(),
            needed: l,
        });
    }
    Ok(samples.chunks_exact(l).collect())
}

/// Reusable FFT plan for frames of one fixed length.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    frame_len: usize,
    fft_len: usize,
    window: Vec<f64>,
    sample_rate: u32,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl SpectrumAnalyzer {
    pub fn new(frame_len: usize, sample_rate: u32, config: &SpectrumConfig) -> Result<Self> {
        if frame_len < 2 {
            return Err(Error::Parameter(format!(
                "frame length {frame_len} is below 2 samples"
            )));
        }
        let fft_len = if config.pad_to_pow2 {
            frame_len.next_power_of_two()
        } else {
            frame_len
        };
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        let window = match config.window {
            Window::Rectangular => vec![1.0; frame_len],
            Window::Hann => (0..frame_len)
                .map(|n| {
                    let x = std::f64::consts::TAU * n as f64 / frame_len as f64;
                    0.5 - 0.5 * x.cos()
                })
                .collect(),
        };
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Ok(SpectrumAnalyzer {
            fft,
            frame_len,
            fft_len,
            window,
            sample_rate,
            buffer: vec![Complex::default(); fft_len],
            scratch,
        })
    }

    pub fn bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.fft_len as f64
    }

    pub fn analyze<T: Copy + Into<f64>>(&mut self, frame: &[T], frame_index: usize) -> FrameSpectrum {
        assert_eq!(frame.len(), self.frame_len, "frame length mismatch");
        for (slot, (&x, &w)) in self.buffer.iter_mut().zip(frame.iter().zip(&self.window)) {
            *slot = Complex::new(x.into() * w, 0.0);
        }
        for slot in &mut self.buffer[self.frame_len..] {
            *slot = Complex::default();
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let magnitudes = self.buffer[..self.bins()].iter().map(|c| c.norm()).collect();
        FrameSpectrum {
            magnitudes,
            bin_hz: self.bin_hz(),
            frame_index,
            frame_duration: self.frame_len as f64 / self.sample_rate as f64,
        }
    }
}

/// One-shot magnitude spectrum of a single frame.
pub fn magnitude_spectrum<T: Copy + Into<f64>>(
    frame: &[T],
    sample_rate: u32,
    config: &SpectrumConfig,
) -> Result<FrameSpectrum> {
    let mut analyzer = SpectrumAnalyzer::new(frame.len(), sample_rate, config)?;
    Ok(analyzer.analyze(frame, 0))
}

/// Magnitude spectra of every frame of a clip, in frame order.
pub fn clip_spectra(clip: &AudioClip, config: &SpectrumConfig) -> Result<Vec<FrameSpectrum>> {
    let frames = frame_clip(clip, config.frame_seconds)?;
    let mut analyzer = SpectrumAnalyzer::new(frames[0].len(), clip.sample_rate(), config)?;
    Ok(frames
        .iter()
        .enumerate()
        .map(|(i, f)| analyzer.analyze(f, i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clip(n: usize, rate: u32) -> AudioClip {
        AudioClip::new("t", vec![0.1; n], rate).unwrap()
    }

    #[test]
    fn one_second_at_44100_gives_twelve_frames() {
        let c = clip(44100, 44100);
        let frames = frame_clip(&c, 0.080).unwrap();
        assert_eq!(frames.len(), 12);
        assert!(frames.iter().all(|f| f.len() == 3528));
    }

    #[test]
    fn exactly_one_frame_and_too_short() {
        assert_eq!(frame_clip(&clip(3528, 44100), 0.080).unwrap().len(), 1);
        let short = clip(frame_length(44100, 0.079), 44100);
        assert!(matches!(
            frame_clip(&short, 0.080),
            Err(Error::TooShort { needed: 3528, .. })
        ));
    }

    #[test]
    fn dc_frame_puts_all_energy_in_bin_zero() {
        let frame = vec![0.25f64; 400];
        let s = magnitude_spectrum(&frame, 8000, &SpectrumConfig::default()).unwrap();
        assert_eq!(s.len(), 201);
        assert!((s.magnitudes[0] - 0.25 * 400.0).abs() < 1e-9);
        assert!(s.magnitudes[1..].iter().all(|&a| a < 1e-9));
        assert_eq!(s.bin_hz, 20.0);
    }

    #[test]
    fn bin_centered_sine_has_single_peak() {
        let l = 512;
        let k = 37;
        let frame: Vec<f64> = (0..l)
            .map(|n| (std::f64::consts::TAU * k as f64 * n as f64 / l as f64).sin())
            .collect();
        let s = magnitude_spectrum(&frame, 16000, &SpectrumConfig::default()).unwrap();
        let (argmax, _) = s
            .magnitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(argmax, k);
        assert!((s.magnitudes[k] - l as f64 / 2.0).abs() < 1e-8);
        let rest: f64 = s.magnitudes.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, a)| a).sum();
        assert!(rest < 1e-8);
    }

    #[test]
    fn padded_grid_reports_padded_bin_width() {
        let frame = vec![0.0f64; 3528];
        let cfg = SpectrumConfig {
            pad_to_pow2: true,
            ..Default::default()
        };
        let s = magnitude_spectrum(&frame, 44100, &cfg).unwrap();
        assert_eq!(s.len(), 4096 / 2 + 1);
        assert!((s.bin_hz - 44100.0 / 4096.0).abs() < 1e-12);
    }

    #[test]
    fn hann_window_reduces_leakage() {
        let l = 1000;
        let frame: Vec<f64> = (0..l)
            .map(|n| (std::f64::consts::TAU * 10.5 * n as f64 / l as f64).sin())
            .collect();
        let rect = magnitude_spectrum(&frame, 8000, &SpectrumConfig::default()).unwrap();
        let hann = magnitude_spectrum(
            &frame,
            8000,
            &SpectrumConfig {
                window: Window::Hann,
                ..Default::default()
            },
        )
        .unwrap();
        let far = |s: &FrameSpectrum| s.magnitudes[100..].iter().sum::<f64>();
        assert!(far(&hann) < far(&rect) / 10.0);
    }

    /// Parseval on the one-sided spectrum: interior bins stand for two
    /// conjugate bins of the full transform.
    fn parseval_ratio(frame: &[f64]) -> f64 {
        let l = frame.len();
        let s = magnitude_spectrum(frame, 8000, &SpectrumConfig::default()).unwrap();
        let mut energy = 0.0;
        for (i, a) in s.magnitudes.iter().enumerate() {
            let paired = i != 0 && !(l % 2 == 0 && i == l / 2);
            energy += if paired { 2.0 * a * a } else { a * a };
        }
        let time: f64 = frame.iter().map(|x| x * x).sum();
        (energy / l as f64) / time
    }

    proptest! {
        #[test]
        fn parseval_holds(frame in prop::collection::vec(-1.0f64..1.0, 2..700)) {
            prop_assume!(frame.iter().any(|x| x.abs() > 1e-3));
            let r = parseval_ratio(&frame);
            prop_assert!((r - 1.0).abs() < 1e-6, "ratio {}", r);
        }

        #[test]
        fn magnitudes_scale_linearly(frame in prop::collection::vec(-1.0f64..1.0, 2..300), a in 0.0f64..10.0) {
            let cfg = SpectrumConfig::default();
            let s = magnitude_spectrum(&frame, 8000, &cfg).unwrap();
            let scaled: Vec<f64> = frame.iter().map(|x| a * x).collect();
            let t = magnitude_spectrum(&scaled, 8000, &cfg).unwrap();
            for (x, y) in s.magnitudes.iter().zip(&t.magnitudes) {
                prop_assert!((a * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
                prop_assert!(*y >= 0.0);
            }
        }

        #[test]
        fn frame_count_is_floor(n in 3528usize..60000) {
            let c = clip(n, 44100);
            prop_assert_eq!(frame_clip(&c, 0.080).unwrap().len(), n / 3528);
        }
    }
}
