pub mod analysis;
pub mod audio;
pub mod config;
pub mod error;
pub mod notes;
pub mod pipeline;
pub mod pitch;
pub mod plot;
pub mod som;
pub mod spectral;
pub mod store;
pub mod synth;
pub mod timbre;
pub mod tonal;

pub use error::{Error, Result};
pub use audio::{AudioClip, CorpusManifest, ManifestEntry};
pub use config::{MapShape, RunConfig, StageParams};
pub use pipeline::MapKind;
pub use som::{Placement, SomGrid};
pub use timbre::TimbreVector;
pub use tonal::TonalSystem;
