//! Octave-folded 1200-bin pitch histograms ("tonal systems").

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::notes::NoteEvent;
use crate::pitch::CENTS_RANGE;

pub const TONAL_BINS: usize = 1200;

/// Pieces with fewer melody notes than this are left out of tonal analysis.
pub const DEFAULT_MIN_MELODY_NOTES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TonalSystem {
    pub bins: Vec<f64>,
    pub octave_base_cents: f64,
    pub total_frames: usize,
}

impl TonalSystem {
    /// Raw frame counts: every voiced frame of every event adds one to bin
    /// `floor((c - base) mod 1200)`.
    pub fn accumulate(events: &[NoteEvent], base: f64) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::EmptyInput("no melody notes for tonal system".into()));
        }
        let mut bins = vec![0.0; TONAL_BINS];
        let mut total = 0;
        for c in events.iter().flat_map(|e| e.frame_cents.iter()) {
            bins[fold_bin(*c, base)] += 1.0;
            total += 1;
        }
        Ok(TonalSystem {
            bins,
            octave_base_cents: base,
            total_frames: total,
        })
    }

    /// Scales to unit maximum; an all-zero histogram is left as is.
    pub fn normalize(&mut self) {
        let max = self.bins.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            for b in &mut self.bins {
                *b /= max;
            }
        }
    }

    /// `[lo, hi]` (inclusive, circular) bin with the largest value.
    pub fn peak_in(&self, lo: i64, hi: i64) -> usize {
        let n = TONAL_BINS as i64;
        (lo..=hi)
            .map(|b| b.rem_euclid(n) as usize)
            .max_by(|&a, &b| self.bins[a].total_cmp(&self.bins[b]).then(b.cmp(&a)))
            .expect("non-empty range")
    }
}

#[inline]
pub fn fold_bin(cents: f64, base: f64) -> usize {
    let r = (cents - base).rem_euclid(TONAL_BINS as f64);
    (r.floor() as usize).min(TONAL_BINS - 1)
}

/// Strongest 1-cent bin (integer-centred) over `[0, 9600)`, ties toward the
/// lowest bin.
pub fn octave_base(frames: &[f64]) -> Result<f64> {
    let mut counts = vec![0usize; CENTS_RANGE as usize];
    let mut any = false;
    for &c in frames {
        let b = c.round();
        if (0.0..CENTS_RANGE).contains(&b) {
            counts[b as usize] += 1;
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyInput("no voiced frames for octave base".into()));
    }
    let (bin, _) = counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (i, &n)| if n > best.1 { (i, n) } else { best });
    Ok(bin as f64)
}

/// Octave base plus normalized histogram of melody notes.
pub fn build_tonal_system(events: &[NoteEvent], base: f64) -> Result<TonalSystem> {
    let mut ts = TonalSystem::accumulate(events, base)?;
    ts.normalize();
    Ok(ts)
}

/// Octave base from the notes' own frames, then the normalized histogram.
pub fn tonal_system_of(melody: &[NoteEvent]) -> Result<TonalSystem> {
    let frames: Vec<f64> = melody.iter().flat_map(|e| e.frame_cents.iter().copied()).collect();
    let base = octave_base(&frames)?;
    build_tonal_system(melody, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn note(frames: Vec<f64>) -> NoteEvent {
        NoteEvent {
            start: 0.0,
            end: frames.len() as f64 * 0.01,
            pitch_cents: frames[0],
            frame_cents: frames,
            qualifies_melody: true,
        }
    }

    #[test]
    fn base_examples() {
        assert_eq!(octave_base(&[4800.0; 7]).unwrap(), 4800.0);
        let mut f = vec![4800.0; 6];
        f.extend([5502.0; 4]);
        assert_eq!(octave_base(&f).unwrap(), 4800.0);
        let mut f: Vec<f64> = (4800..4810).map(|c| c as f64).collect();
        f.extend([6000.0; 3]);
        assert_eq!(octave_base(&f).unwrap(), 6000.0);
        assert!(octave_base(&[]).is_err());
        // ties go low
        assert_eq!(octave_base(&[5000.0, 4000.0]).unwrap(), 4000.0);
    }

    #[test]
    fn constant_note_at_base() {
        let ts = build_tonal_system(&[note(vec![4800.0; 30])], 4800.0).unwrap();
        assert_eq!(ts.bins[0], 1.0);
        assert_eq!(ts.bins.iter().sum::<f64>(), 1.0);
        assert_eq!(ts.total_frames, 30);
    }

    #[test]
    fn fifth_lands_on_702() {
        let events = [note(vec![3600.0; 20]), note(vec![4302.0; 10])];
        let ts = build_tonal_system(&events, 3600.0).unwrap();
        assert_eq!(ts.bins[702], 0.5);
        assert_eq!(ts.peak_in(650, 750), 702);
    }

    #[test]
    fn counts_sum_to_frames_and_normalize_to_one() {
        let events = [note(vec![100.0, 250.5, 999.9]), note(vec![3000.0, 3001.0])];
        let raw = TonalSystem::accumulate(&events, 57.0).unwrap();
        assert_eq!(raw.bins.iter().sum::<f64>(), raw.total_frames as f64);
        assert_eq!(raw.total_frames, 5);
        let ts = build_tonal_system(&events, 57.0).unwrap();
        assert_eq!(ts.bins.len(), TONAL_BINS);
        assert_eq!(ts.bins.iter().copied().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn vibrato_spreads_mass() {
        let frames: Vec<f64> = (0..200)
            .map(|i| 5000.0 + 40.0 * (i as f64 * 0.37).sin())
            .collect();
        let ts = build_tonal_system(&[note(frames)], 5000.0).unwrap();
        let occupied = ts.bins.iter().filter(|&&b| b > 0.0).count();
        assert!(occupied >= 40, "{occupied}");
    }

    #[test]
    fn folding_and_transposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let base = rng.gen_range(1000..6000) as f64;
            let frames: Vec<f64> = (0..rng.gen_range(5..200))
                .map(|_| base + rng.gen_range(-2400..2400) as f64 + rng.gen_range(0.0..0.99))
                .collect();
            let ts = build_tonal_system(&[note(frames.clone())], base).unwrap();
            let shifted: Vec<f64> = frames.iter().map(|c| c + 1200.0).collect();
            assert_eq!(ts.bins, build_tonal_system(&[note(shifted)], base).unwrap().bins);
            let k = rng.gen_range(-500..500) as f64;
            let moved: Vec<f64> = frames.iter().map(|c| c + k).collect();
            assert_eq!(ts.bins, build_tonal_system(&[note(moved)], base + k).unwrap().bins);
        }
    }
}
