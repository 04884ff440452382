//! Deterministic test signals: sines, harmonic tones, phase-continuous
//! melodies and brightness-modulated tones. Used by the test suites, the
//! benchmarks and the synthetic demo corpus.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioClip;

pub fn sine(hz: f64, seconds: f64, sample_rate: u32, amplitude: f64) -> Vec<f32> {
    let n = (seconds * sample_rate as f64).round() as usize;
    (0..n)
        .map(|i| (amplitude * (TAU * hz * i as f64 / sample_rate as f64).sin()) as f32)
        .collect()
}

pub fn sine_clip(id: &str, hz: f64, seconds: f64, sample_rate: u32, amplitude: f64) -> AudioClip {
    AudioClip::new(id, sine(hz, seconds, sample_rate, amplitude), sample_rate)
        .expect("valid synthetic clip")
}

/// Harmonic tone with the given partial amplitudes (index 0 = fundamental),
/// peak-normalized.
pub fn harmonic_clip(id: &str, f0: f64, seconds: f64, sample_rate: u32, amps: &[f64]) -> AudioClip {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            amps.iter()
                .enumerate()
                .map(|(h, a)| a * (TAU * f0 * (h + 1) as f64 * t).sin())
                .sum()
        })
        .collect();
    AudioClip::from_interleaved(id, &samples, 1, sample_rate).expect("valid synthetic clip")
}

/// One melody segment; `hz = None` is a rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Note {
    pub hz: Option<f64>,
    pub seconds: f64,
}

impl Note {
    pub fn tone(hz: f64, seconds: f64) -> Self {
        Note { hz: Some(hz), seconds }
    }

    pub fn rest(seconds: f64) -> Self {
        Note { hz: None, seconds }
    }
}

#[derive(Debug, Clone)]
pub struct MelodyStyle {
    /// Partial amplitudes, index 0 = fundamental.
    pub harmonics: Vec<f64>,
    /// Sinusoidal vibrato as (depth in cents, rate in Hz).
    pub vibrato: Option<(f64, f64)>,
    /// Linear fade at note onsets and offsets next to rests, in seconds.
    pub ramp_seconds: f64,
}

impl Default for MelodyStyle {
    fn default() -> Self {
        MelodyStyle {
            harmonics: vec![1.0],
            vibrato: None,
            ramp_seconds: 0.005,
        }
    }
}

/// Phase-continuous rendering of a note sequence, peak-normalized.
pub fn melody_clip(id: &str, notes: &[Note], sample_rate: u32, style: &MelodyStyle) -> AudioClip {
    let sr = sample_rate as f64;
    let mut out: Vec<f64> = Vec::new();
    let mut phase = 0.0f64;
    let mut t_global = 0.0f64;
    let ramp = (style.ramp_seconds * sr).round() as usize;
    for (k, note) in notes.iter().enumerate() {
        let n = (note.seconds * sr).round() as usize;
        let Some(hz) = note.hz else {
            out.extend(std::iter::repeat(0.0).take(n));
            t_global += n as f64 / sr;
            phase = 0.0;
            continue;
        };
        let fade_in = k == 0 || notes[k - 1].hz.is_none();
        let fade_out = k + 1 == notes.len() || notes[k + 1].hz.is_none();
        for i in 0..n {
            let t = t_global + i as f64 / sr;
            let inst = match style.vibrato {
                Some((depth, rate)) => hz * (depth * (TAU * rate * t).sin() / 1200.0).exp2(),
                None => hz,
            };
            phase += TAU * inst / sr;
            let mut env = 1.0f64;
            if fade_in && i < ramp {
                env = env.min(i as f64 / ramp as f64);
            }
            if fade_out && n - i <= ramp {
                env = env.min((n - i - 1) as f64 / ramp as f64);
            }
            let v: f64 = style
                .harmonics
                .iter()
                .enumerate()
                .map(|(h, a)| a * ((h + 1) as f64 * phase).sin())
                .sum();
            out.push(env * v);
        }
        phase %= TAU;
        t_global += n as f64 / sr;
    }
    AudioClip::from_interleaved(id, &out, 1, sample_rate).expect("valid synthetic clip")
}

/// Harmonic tone whose spectral tilt oscillates: partial `h` has amplitude
/// `h^-p(t)` with `p(t) = tilt + depth * sin(2 pi rate t)`. Larger `depth`
/// means larger frame-to-frame brightness and sharpness fluctuation.
pub fn tilt_modulated_clip(
    id: &str,
    f0: f64,
    seconds: f64,
    sample_rate: u32,
    partials: usize,
    tilt: f64,
    depth: f64,
    rate_hz: f64,
    seed: u64,
) -> AudioClip {
    let sr = sample_rate as f64;
    let n = (seconds * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..partials).map(|_| rng.gen_range(0.0..TAU)).collect();
    let offset = rng.gen_range(0.0..TAU);
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let p = tilt + depth * (TAU * rate_hz * t + offset).sin();
            (0..partials)
                .map(|h| {
                    let f = f0 * (h + 1) as f64;
                    if f >= sr / 2.0 {
                        return 0.0;
                    }
                    ((h + 1) as f64).powf(-p) * (TAU * f * t + phases[h]).sin()
                })
                .sum()
        })
        .collect();
    AudioClip::from_interleaved(id, &samples, 1, sample_rate).expect("valid synthetic clip")
}

/// Uniform white noise in [-amp, amp].
pub fn noise_clip(id: &str, seconds: f64, sample_rate: u32, amplitude: f64, seed: u64) -> AudioClip {
    let n = (seconds * sample_rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f32> = (0..n)
        .map(|_| rng.gen_range(-amplitude..=amplitude) as f32)
        .collect();
    AudioClip::new(id, samples, sample_rate).expect("valid synthetic clip")
}

/// Scale degrees in cents of the two demo-corpus families.
pub const JUST_SCALE: [f64; 7] = [0.0, 204.0, 386.0, 498.0, 702.0, 884.0, 1088.0];
pub const SHIFTED_SCALE: [f64; 7] = [0.0, 224.0, 406.0, 518.0, 722.0, 904.0, 1108.0];

/// A seeded melody of `notes` tones drawn from `scale` (cents above `f0`),
/// walking by at most two degrees so every interval stays under an octave.
pub fn scale_melody(
    id: &str,
    scale: &[f64],
    f0: f64,
    notes: usize,
    sample_rate: u32,
    style: &MelodyStyle,
    seed: u64,
) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degree = 0usize;
    let mut seq = Vec::with_capacity(notes);
    for i in 0..notes {
        if i > 0 {
            let mut next = degree;
            while next == degree {
                let step: i64 = rng.gen_range(-2..=2);
                next = (degree as i64 + step).clamp(0, scale.len() as i64 - 1) as usize;
            }
            degree = next;
        }
        let hz = f0 * 2f64.powf(scale[degree] / 1200.0);
        seq.push(Note::tone(hz, rng.gen_range(0.18..0.32)));
    }
    melody_clip(id, &seq, sample_rate, style)
}

/// Writes a small two-group WAV corpus and its manifest into `dir`:
/// `per_group` melodies on the just scale with a mellow timbre (group
/// `just`), the same on the shifted scale with a bright timbre (group
/// `shifted`), and one noise piece that yields too few melody notes.
/// Returns the manifest path.
pub fn write_demo_corpus(dir: &std::path::Path, per_group: usize, seed: u64) -> crate::Result<std::path::PathBuf> {
    let sr = 16000;
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut rows = vec!["id,path,group".to_owned()];
    let families = [
        ("just", &JUST_SCALE, vec![1.0, 0.4, 0.15]),
        ("shifted", &SHIFTED_SCALE, vec![1.0, 0.9, 0.8, 0.7, 0.6]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (group, scale, harmonics) in &families {
        for i in 0..per_group {
            let id = format!("{group}{i:02}");
            let f0 = rng.gen_range(180.0..280.0);
            let style = MelodyStyle {
                harmonics: harmonics.clone(),
                ..MelodyStyle::default()
            };
            let clip = scale_melody(&id, *scale, f0, 16, sr, &style, rng.gen());
            let file = format!("{id}.wav");
            crate::audio::write_wav_pcm16(&dir.join(&file), clip.samples(), sr)?;
            rows.push(format!("{id},{file},{group}"));
        }
    }
    let noise = noise_clip("noise", 2.0, sr, 0.5, rng.gen());
    crate::audio::write_wav_pcm16(&dir.join("noise.wav"), noise.samples(), sr)?;
    rows.push("noise,noise.wav,just".to_owned());
    let manifest = dir.join("manifest.csv");
    std::fs::write(&manifest, rows.join("\n") + "\n").map_err(|e| crate::Error::io(&manifest, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notes::{mark_melody_notes, segment_events, NoteConfig};
    use crate::pitch::{track_f0, PitchConfig};

    #[test]
    fn scale_melody_yields_its_notes() {
        let clip = scale_melody("m", &JUST_SCALE, 220.0, 16, 16000, &MelodyStyle::default(), 3);
        let track = track_f0(&clip, &PitchConfig::default());
        let mut ev = segment_events(&track, &NoteConfig::default());
        mark_melody_notes(&mut ev, &NoteConfig::default());
        assert_eq!(ev.iter().filter(|e| e.qualifies_melody).count(), 16);
    }

    #[test]
    fn demo_corpus_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_demo_corpus(dir.path(), 2, 1).unwrap();
        let manifest = crate::audio::load_manifest(&m).unwrap();
        assert_eq!(manifest.len(), 5);
        assert_eq!(manifest.groups().len(), 2);
        assert!(manifest.entries().iter().all(|e| e.path.exists()));
    }
}
