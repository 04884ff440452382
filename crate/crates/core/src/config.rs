//! Run configuration, its provenance hash and the optional TOML/JSON
//! override file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::notes::NoteConfig;
use crate::pitch::PitchConfig;
use crate::som::TrainConfig;
use crate::spectral::SpectrumConfig;
use crate::timbre::TimbreConfig;
use crate::tonal::DEFAULT_MIN_MELODY_NOTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapShape {
    pub rows: usize,
    pub cols: usize,
}

/// Every numeric parameter of every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageParams {
    pub spectrum: SpectrumConfig,
    pub timbre: TimbreConfig,
    pub pitch: PitchConfig,
    pub notes: NoteConfig,
    pub min_melody_notes: usize,
    pub tonal_map: MapShape,
    pub timbre_map: MapShape,
    pub training: TrainConfig,
}

impl Default for StageParams {
    fn default() -> Self {
        StageParams {
            spectrum: SpectrumConfig::default(),
            timbre: TimbreConfig::default(),
            pitch: PitchConfig::default(),
            notes: NoteConfig::default(),
            min_melody_notes: DEFAULT_MIN_MELODY_NOTES,
            tonal_map: MapShape { rows: 26, cols: 26 },
            timbre_map: MapShape { rows: 15, cols: 15 },
            training: TrainConfig::default(),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads for per-piece extraction; `None` uses all cores.
    pub jobs: Option<usize>,
    pub params: StageParams,
}

/// The hashed part of a run: parameters and seed, never paths or thread
/// counts.
#[derive(Serialize)]
struct Hashed<'a> {
    params: &'a StageParams,
    seed: u64,
}

impl RunConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunConfig {
            manifest: None,
            out: out.into(),
            seed: DEFAULT_SEED,
            jobs: None,
            params: StageParams::default(),
        }
    }

    /// Applies a `.toml` or `.json` override file holding any subset of the
    /// stage parameters plus `seed`. Unknown keys are errors.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |e: String| Error::Parameter(format!("{}: {e}", path.display()));
        let mut value: serde_json::Value = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?,
            Some("toml") => {
                let t: toml::Value = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
                serde_json::to_value(t).map_err(|e| bad(e.to_string()))?
            }
            _ => {
                return Err(Error::Parameter(format!(
                    "config file {} must end in .toml or .json",
                    path.display()
                )))
            }
        };
        let obj = value
            .as_object_mut()
            .ok_or_else(|| bad("top level must be a table".into()))?;
        if let Some(seed) = obj.remove("seed") {
            self.seed = seed
                .as_u64()
                .ok_or_else(|| bad("seed must be a non-negative integer".into()))?;
        }
        self.params = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let durations = [
            ("spectrum.frame_seconds", p.spectrum.frame_seconds),
            ("pitch.window_seconds", p.pitch.window_seconds),
            ("pitch.hop_seconds", p.pitch.hop_seconds),
            ("notes.min_event_seconds", p.notes.min_event_seconds),
            ("notes.min_note_seconds", p.notes.min_note_seconds),
        ];
        for (name, v) in durations {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        p.pitch.validate()?;
        for (name, m) in [("tonal_map", p.tonal_map), ("timbre_map", p.timbre_map)] {
            if m.rows < 2 || m.cols < 2 {
                return Err(Error::Parameter(format!(
                    "{name} must be at least 2x2, got {}x{}",
                    m.rows, m.cols
                )));
            }
        }
        if p.training.cycles == 0 {
            return Err(Error::Parameter("training.cycles must be at least 1".into()));
        }
        if p.notes.max_interval_cents < p.notes.min_interval_cents {
            return Err(Error::Parameter("notes interval range is empty".into()));
        }
        if p.min_melody_notes == 0 {
            return Err(Error::Parameter("min_melody_notes must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 over the key-sorted JSON of the stage parameters and seed.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(Hashed {
            params: &self.params,
            seed: self.seed,
        })
        .expect("config serializes");
        // serde_json::Value keeps objects in a BTreeMap, so keys are sorted
        let canonical = serde_json::to_string(&value).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
