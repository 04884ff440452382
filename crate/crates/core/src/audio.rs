//! Audio ingest: decoding WAV/FLAC into normalized mono clips, and the
//! labeled corpus manifest.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Peak level every decoded clip is scaled to.
pub const NORMALIZED_PEAK: f64 = 0.9;
pub const MIN_SAMPLE_RATE: u32 = 8000;

/// Decoded mono signal, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    id: String,
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    /// Wraps already-mono samples. Samples must be finite and within [-1, 1].
    pub fn new(id: impl Into<String>, samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        let id = id.into();
        if samples.is_empty() {
            return Err(Error::EmptyInput(format!("clip {id} has no samples")));
        }
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::SampleRate(sample_rate));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::Parameter(format!(
                "clip {id} has sample {bad} outside [-1, 1]"
            )));
        }
        Ok(AudioClip {
            id,
            samples,
            sample_rate,
        })
    }

    /// Mixes interleaved channels down by arithmetic mean and peak-normalizes
    /// to [`NORMALIZED_PEAK`]. An all-zero signal is left untouched.
    pub fn from_interleaved(
        id: impl Into<String>,
        interleaved: &[f64],
        channels: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        let id = id.into();
        if channels == 0 {
            return Err(Error::Parameter("zero channels".into()));
        }
        let frames = interleaved.len() / channels;
        if frames == 0 {
            return Err(Error::EmptyInput(format!("clip {id} has no samples")));
        }
        let mut mono: Vec<f64> = interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect();
        peak_normalize(&mut mono);
        AudioClip::new(id, mono.into_iter().map(|s| s as f32).collect(), sample_rate)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

fn peak_normalize(samples: &mut [f64]) {
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let gain = NORMALIZED_PEAK / peak;
        for s in samples.iter_mut() {
            *s *= gain;
        }
    }
}

/// Decodes a RIFF WAVE (PCM 8/16/24/32-bit or 32-bit float) or FLAC file.
/// The clip id is the file stem.
pub fn decode(path: &Path) -> Result<AudioClip> {
    let mut magic = [0u8; 4];
    {
        let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
        let n = read_up_to(&mut f, &mut magic).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::EmptyInput(format!("{} is empty", path.display())));
        }
        if n < 4 {
            return Err(Error::UnsupportedCodec {
                path: path.to_owned(),
                codec: "unknown container".into(),
            });
        }
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match &magic {
        b"RIFF" | b"RIFX" => decode_wav(path, id),
        b"fLaC" => decode_flac(path, id),
        other => Err(Error::UnsupportedCodec {
            path: path.to_owned(),
            codec: container_name(other),
        }),
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

fn container_name(magic: &[u8]) -> String {
    match magic {
        [b'I', b'D', b'3', _] | [0xFF, 0xFB, _, _] | [0xFF, 0xF3, _, _] => "MP3".into(),
        b"OggS" => "Ogg".into(),
        [_, _, _, _] if magic.iter().all(|b| b.is_ascii_graphic()) => {
            format!("unknown container '{}'", String::from_utf8_lossy(magic))
        }
        _ => format!("unknown container (magic {})", hex::encode(magic)),
    }
}

fn decode_wav(path: &Path, id: String) -> Result<AudioClip> {
    let reader = match hound::WavReader::open(path) {
        Ok(r) => r,
        Err(hound::Error::Unsupported) => {
            return Err(Error::UnsupportedCodec {
                path: path.to_owned(),
                codec: wav_format_name(path),
            })
        }
        Err(hound::Error::IoError(e)) => return Err(Error::io(path, e)),
        Err(e) => {
            return Err(Error::Decode {
                path: path.to_owned(),
                message: e.to_string(),
            })
        }
    };
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let decode_err = |e: hound::Error| Error::Decode {
        path: path.to_owned(),
        message: e.to_string(),
    };
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(decode_err)?
        }
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedCodec {
                    path: path.to_owned(),
                    codec: format!("{}-bit float WAV", spec.bits_per_sample),
                });
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(|v| v as f64))
                .collect::<std::result::Result<_, _>>()
                .map_err(decode_err)?
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} contains no samples",
            path.display()
        )));
    }
    if spec.sample_rate < MIN_SAMPLE_RATE {
        return Err(Error::SampleRate(spec.sample_rate));
    }
    let clamped: Vec<f64> = interleaved.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
    AudioClip::from_interleaved(id, &clamped, channels, spec.sample_rate)
}

/// Reads the format tag from the `fmt ` chunk to name a codec hound refused.
fn wav_format_name(path: &Path) -> String {
    let Ok(bytes) = std::fs::read(path) else {
        return "unreadable WAV".into();
    };
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32::from_le_bytes([bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]])
            as usize;
        if id == b"fmt " && pos + 10 <= bytes.len() {
            let tag = u16::from_le_bytes([bytes[pos + 8], bytes[pos + 9]]);
            let bits = if pos + 24 <= bytes.len() {
                u16::from_le_bytes([bytes[pos + 22], bytes[pos + 23]])
            } else {
                0
            };
            return match tag {
                0x0001 => format!("{bits}-bit PCM WAV"),
                0x0002 => "MS ADPCM WAV".into(),
                0x0003 => format!("{bits}-bit IEEE float WAV"),
                0x0006 => "A-law WAV".into(),
                0x0007 => "mu-law WAV".into(),
                0x0011 => "IMA ADPCM WAV".into(),
                0x0055 => "MP3-in-WAV".into(),
                0xFFFE => format!("{bits}-bit extensible WAV"),
                t => format!("WAV format tag 0x{t:04X}"),
            };
        }
        pos += 8 + len + (len & 1);
    }
    "WAV without fmt chunk".into()
}

fn decode_flac(path: &Path, id: String) -> Result<AudioClip> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader =
        claxon::FlacReader::new(BufReader::new(file)).map_err(|e| match e {
            claxon::Error::Unsupported(what) => Error::UnsupportedCodec {
                path: path.to_owned(),
                codec: format!("FLAC feature: {what}"),
            },
            other => Error::Decode {
                path: path.to_owned(),
                message: other.to_string(),
            },
        })?;
    let info = reader.streaminfo();
    let scale = (1i64 << (info.bits_per_sample - 1)) as f64;
    let interleaved: Vec<f64> = reader
        .samples()
        .map(|s| s.map(|v| (v as f64 / scale).clamp(-1.0, 1.0)))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Decode {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
    if interleaved.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} contains no samples",
            path.display()
        )));
    }
    if info.sample_rate < MIN_SAMPLE_RATE {
        return Err(Error::SampleRate(info.sample_rate));
    }
    AudioClip::from_interleaved(id, &interleaved, info.channels as usize, info.sample_rate)
}

/// Writes a clip as 16-bit PCM mono WAV. Used by tests and the synthetic
/// corpus generator.
pub fn write_wav_pcm16(path: &Path, samples: &[f32], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let io_err = |e: hound::Error| match e {
        hound::Error::IoError(e) => Error::io(path, e),
        other => Error::Decode {
            path: path.to_owned(),
            message: other.to_string(),
        },
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(io_err)?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) as f64 * 32767.0).round() as i16;
        w.write_sample(v).map_err(io_err)?;
    }
    w.finalize().map_err(io_err)
}

/// One row of the corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub group: String,
    #[serde(default)]
    pub notes: Option<String>,
}

/// Validated list of labeled pieces. Paths are resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for e in &entries {
            *seen.entry(e.id.as_str()).or_default() += 1;
        }
        let mut dups: Vec<&str> = seen
            .iter()
            .filter(|(_, &n)| n > 1)
            .map(|(id, _)| *id)
            .collect();
        if !dups.is_empty() {
            dups.sort_unstable();
            return Err(Error::Manifest(format!("duplicate ids: {}", dups.join(", "))));
        }
        if let Some(e) = entries.iter().find(|e| e.id.trim().is_empty()) {
            return Err(Error::Manifest(format!(
                "empty id for path {}",
                e.path.display()
            )));
        }
        let unlabeled: Vec<&str> = entries
            .iter()
            .filter(|e| e.group.trim().is_empty())
            .map(|e| e.id.as_str())
            .collect();
        if !unlabeled.is_empty() {
            return Err(Error::Manifest(format!(
                "empty group label for: {}",
                unlabeled.join(", ")
            )));
        }
        Ok(CorpusManifest { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn groups(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.group.as_str()).collect()
    }

    /// Comparison runs need at least two distinct groups.
    pub fn require_comparison(&self) -> Result<()> {
        let groups = self.groups();
        if groups.len() < 2 {
            return Err(Error::Manifest(format!(
                "comparison needs at least 2 groups, found {}",
                groups.len()
            )));
        }
        Ok(())
    }
}

/// Reads a `id,path,group,notes` CSV manifest.
pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    for required in ["id", "path", "group"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Manifest(format!("missing column '{required}'")));
        }
    }
    let mut entries = Vec::new();
    for (line, row) in reader.deserialize::<ManifestEntry>().enumerate() {
        let mut entry =
            row.map_err(|e| Error::Manifest(format!("row {}: {e}", line + 2)))?;
        if entry.notes.as_deref() == Some("") {
            entry.notes = None;
        }
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        entries.push(entry);
    }
    CorpusManifest::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pcm16_stereo(path: &Path, left: &[i16], right: &[i16], rate: u32) {
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for (l, r) in left.iter().zip(right) {
            w.write_sample(*l).unwrap();
            w.write_sample(*r).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn stereo_identical_channels_equal_one_channel_at_peak() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        let ch: Vec<i16> = (0..4410)
            .map(|i| ((i as f64 * 0.05).sin() * 12000.0) as i16)
            .collect();
        write_pcm16_stereo(&p, &ch, &ch, 44100);
        let clip = decode(&p).unwrap();
        assert_eq!(clip.samples().len(), ch.len());
        let peak = ch.iter().map(|&v| (v as f64).abs()).fold(0.0, f64::max);
        for (s, &c) in clip.samples().iter().zip(&ch) {
            let expected = c as f64 / peak * 0.9;
            assert!((*s as f64 - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn all_zero_second_is_kept_unnormalized() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("zero.wav");
        write_wav_pcm16(&p, &vec![0.0; 44100], 44100).unwrap();
        let clip = decode(&p).unwrap();
        assert_eq!(clip.samples().len(), 44100);
        assert!(clip.samples().iter().all(|&s| s == 0.0));
        assert_eq!(clip.duration(), 1.0);
    }

    #[test]
    fn full_scale_square_maps_to_point_nine() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sq.wav");
        let sq: Vec<i16> = (0..8000)
            .map(|i| if (i / 50) % 2 == 0 { 32767 } else { -32767 })
            .collect();
        write_pcm16_stereo(&p, &sq, &sq, 16000);
        let clip = decode(&p).unwrap();
        for &s in clip.samples() {
            assert!(s == 0.9 || s == -0.9, "sample {s}");
        }
    }

    #[test]
    fn mixdown_commutes_with_channel_swap() {
        let dir = tempfile::tempdir().unwrap();
        let a: Vec<i16> = (0..2000).map(|i| (i * 7 % 3000) as i16 - 1500).collect();
        let b: Vec<i16> = (0..2000).map(|i| (i * 13 % 900) as i16).collect();
        let p1 = dir.path().join("ab.wav");
        let p2 = dir.path().join("ba.wav");
        write_pcm16_stereo(&p1, &a, &b, 8000);
        write_pcm16_stereo(&p2, &b, &a, 8000);
        assert_eq!(decode(&p1).unwrap().samples(), decode(&p2).unwrap().samples());
    }

    #[test]
    fn float_wav_and_24_bit_decode() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 22050,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for i in 0..100 {
            w.write_sample(if i == 10 { 0.5f32 } else { 0.1 }).unwrap();
        }
        w.finalize().unwrap();
        let clip = decode(&p).unwrap();
        assert!((clip.samples()[10] - 0.9).abs() < 1e-6);
        assert!((clip.samples()[0] - 0.18).abs() < 1e-6);

        let p = dir.path().join("i24.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 24,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for v in [0i32, 4_000_000, -2_000_000] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let clip = decode(&p).unwrap();
        assert!((clip.samples()[1] - 0.9).abs() < 1e-6);
        assert!((clip.samples()[2] + 0.45).abs() < 1e-6);
    }

    #[test]
    fn decode_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.wav");
        let s: Vec<f32> = (0..5000).map(|i| ((i as f32) * 0.01).sin() * 0.3).collect();
        write_wav_pcm16(&p, &s, 16000).unwrap();
        assert_eq!(decode(&p).unwrap(), decode(&p).unwrap());
    }

    #[test]
    fn unsupported_codec_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("alaw.wav");
        // Minimal RIFF/WAVE with an A-law fmt chunk.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&(36u32 + 4).to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&6u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&8000u32.to_le_bytes());
        bytes.extend_from_slice(&8000u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&8u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&[0xD5; 4]);
        std::fs::write(&p, bytes).unwrap();
        match decode(&p) {
            Err(Error::UnsupportedCodec { codec, .. }) => assert!(codec.contains("A-law"), "{codec}"),
            other => panic!("expected codec error, got {other:?}"),
        }

        let p = dir.path().join("song.mp3");
        std::fs::write(&p, b"ID3\x03\x00\x00\x00\x00\x00\x00").unwrap();
        match decode(&p) {
            Err(Error::UnsupportedCodec { codec, .. }) => assert_eq!(codec, "MP3"),
            other => panic!("expected codec error, got {other:?}"),
        }
    }

    #[test]
    fn zero_length_stream_is_empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.wav");
        write_wav_pcm16(&p, &[], 44100).unwrap();
        assert!(matches!(decode(&p), Err(Error::EmptyInput(_))));
        let p = dir.path().join("nothing.wav");
        std::fs::write(&p, b"").unwrap();
        assert!(matches!(decode(&p), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn low_sample_rate_rejected() {
        assert!(matches!(
            AudioClip::new("x", vec![0.0; 10], 4000),
            Err(Error::SampleRate(4000))
        ));
    }

    fn manifest_file(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("manifest.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn manifest_two_groups() {
        let dir = tempfile::tempdir().unwrap();
        let p = manifest_file(
            dir.path(),
            "id,path,group,notes\na,audio/a.wav,A,\nb,/abs/b.wav,B,field recording\n",
        );
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.entries()[0].path, dir.path().join("audio/a.wav"));
        assert_eq!(m.entries()[0].notes, None);
        assert_eq!(m.entries()[1].path, PathBuf::from("/abs/b.wav"));
        assert_eq!(m.entries()[1].notes.as_deref(), Some("field recording"));
        m.require_comparison().unwrap();
    }

    #[test]
    fn manifest_duplicates_listed() {
        let dir = tempfile::tempdir().unwrap();
        let p = manifest_file(
            dir.path(),
            "id,path,group,notes\nx,1.wav,A,\ny,2.wav,B,\nx,3.wav,A,\ny,4.wav,A,\n",
        );
        match load_manifest(&p) {
            Err(Error::Manifest(msg)) => assert!(msg.contains("x, y"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn manifest_empty_group_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = manifest_file(dir.path(), "id,path,group,notes\nx,1.wav,,\n");
        assert!(matches!(load_manifest(&p), Err(Error::Manifest(_))));
    }

    #[test]
    fn manifest_single_group_cannot_compare() {
        let dir = tempfile::tempdir().unwrap();
        let p = manifest_file(dir.path(), "id,path,group,notes\nx,1.wav,A,\ny,2.wav,A,\n");
        let m = load_manifest(&p).unwrap();
        assert!(m.require_comparison().is_err());
    }

    #[test]
    fn manifest_of_paper_corpus_size() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("id,path,group,notes\n");
        for i in 0..69 {
            body.push_str(&format!("kachin_{i},k/{i}.wav,Kachin,\n"));
        }
        for i in 0..63 {
            body.push_str(&format!("uyghur_{i},u/{i}.wav,Uyghur,\n"));
        }
        let m = load_manifest(&manifest_file(dir.path(), &body)).unwrap();
        assert_eq!(m.len(), 132);
        assert_eq!(m.entries().iter().filter(|e| e.group == "Kachin").count(), 69);
        assert_eq!(m.groups().len(), 2);
    }
}
