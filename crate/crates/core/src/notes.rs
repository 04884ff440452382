//! From the pitch track to melody notes: agent-based event segmentation,
//! one representative pitch per event, and melody-note filtering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pitch::PitchTrack;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoteConfig {
    pub min_event_seconds: f64,
    /// A frame joins the open event if it lies within this many cents of the
    /// event's current mode.
    pub max_deviation_cents: f64,
    /// Upper bound on max - min cents within one event.
    pub max_span_cents: f64,
    /// Unvoiced frames tolerated inside an event.
    pub bridge_frames: usize,
    pub min_note_seconds: f64,
    pub min_interval_cents: f64,
    pub max_interval_cents: f64,
}

impl Default for NoteConfig {
    fn default() -> Self {
        NoteConfig {
            min_event_seconds: 0.030,
            max_deviation_cents: 60.0,
            max_span_cents: 120.0,
            bridge_frames: 0,
            min_note_seconds: 0.100,
            min_interval_cents: 0.0,
            max_interval_cents: 1200.0,
        }
    }
}

const DURATION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub start: f64,
    pub end: f64,
    pub frame_cents: Vec<f64>,
    pub pitch_cents: f64,
    pub qualifies_melody: bool,
}

impl NoteEvent {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// 1-cent histogram with bins centred on integer cents.
#[derive(Debug, Default, Clone)]
pub(crate) struct ModeCounter {
    counts: BTreeMap<i64, usize>,
    max_count: usize,
    sum: f64,
    n: usize,
}

impl ModeCounter {
    pub(crate) fn push(&mut self, cents: f64) {
        let n = self.counts.entry(cents.round() as i64).or_default();
        *n += 1;
        self.max_count = self.max_count.max(*n);
        self.sum += cents;
        self.n += 1;
    }

    fn modal_bins(&self) -> impl Iterator<Item = i64> + '_ {
        self.counts
            .iter()
            .filter(move |(_, &n)| n == self.max_count)
            .map(|(&b, _)| b)
    }

    /// Modal bin, ties toward the lowest bin.
    pub(crate) fn lowest_mode(&self) -> Option<i64> {
        self.modal_bins().next()
    }

    /// Modal bin, ties toward the bin nearest the running mean (then lowest).
    pub(crate) fn central_mode(&self) -> Option<i64> {
        let mean = self.sum / self.n as f64;
        self.modal_bins()
            .min_by(|&a, &b| (a as f64 - mean).abs().total_cmp(&(b as f64 - mean).abs()))
    }
}

/// Strongest 1-cent histogram bin of the frames, clamped into their range.
pub fn event_pitch(frame_cents: &[f64]) -> f64 {
    let mut counter = ModeCounter::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &c in frame_cents {
        counter.push(c);
        lo = lo.min(c);
        hi = hi.max(c);
    }
    counter.lowest_mode().map_or(f64::NAN, |m| (m as f64).clamp(lo, hi))
}

struct OpenEvent {
    start: f64,
    last_time: f64,
    frames: Vec<f64>,
    mode: ModeCounter,
    lo: f64,
    hi: f64,
}

impl OpenEvent {
    fn new(time: f64, cents: f64) -> Self {
        let mut mode = ModeCounter::default();
        mode.push(cents);
        OpenEvent {
            start: time,
            last_time: time,
            frames: vec![cents],
            mode,
            lo: cents,
            hi: cents,
        }
    }

    fn accepts(&self, cents: f64, c: &NoteConfig) -> bool {
        let reference = self.mode.central_mode().expect("event has frames") as f64;
        (cents - reference).abs() <= c.max_deviation_cents
            && self.hi.max(cents) - self.lo.min(cents) <= c.max_span_cents
    }

    fn push(&mut self, time: f64, cents: f64) {
        self.frames.push(cents);
        self.mode.push(cents);
        self.lo = self.lo.min(cents);
        self.hi = self.hi.max(cents);
        self.last_time = time;
    }

    fn close(self, hop: f64, c: &NoteConfig) -> Option<NoteEvent> {
        let end = self.last_time + hop;
        if end - self.start + DURATION_EPS < c.min_event_seconds {
            return None;
        }
        Some(NoteEvent {
            start: self.start,
            end,
            pitch_cents: event_pitch(&self.frames),
            frame_cents: self.frames,
            qualifies_melody: false,
        })
    }
}

/// Scans the track in time order, growing one event at a time.
pub fn segment_events(track: &PitchTrack, config: &NoteConfig) -> Vec<NoteEvent> {
    let hop = track.hop_seconds;
    let mut events = Vec::new();
    let mut open: Option<OpenEvent> = None;
    let mut gap = 0usize;
    for frame in &track.frames {
        match frame.cents {
            None => {
                gap += 1;
                if gap > config.bridge_frames {
                    if let Some(ev) = open.take() {
                        events.extend(ev.close(hop, config));
                    }
                }
            }
            Some(cents) => {
                gap = 0;
                match open.as_mut() {
                    Some(ev) if ev.accepts(cents, config) => ev.push(frame.time, cents),
                    _ => {
                        if let Some(ev) = open.take() {
                            events.extend(ev.close(hop, config));
                        }
                        open = Some(OpenEvent::new(frame.time, cents));
                    }
                }
            }
        }
    }
    if let Some(ev) = open {
        events.extend(ev.close(hop, config));
    }
    events
}

/// Flags the events that qualify as melody notes: long enough, and within
/// the interval limits of the previous qualifying note.
pub fn mark_melody_notes(events: &mut [NoteEvent], config: &NoteConfig) {
    let mut last: Option<f64> = None;
    for ev in events.iter_mut() {
        ev.qualifies_melody = false;
        if ev.duration() + DURATION_EPS < config.min_note_seconds {
            continue;
        }
        let ok = match last {
            None => true,
            Some(prev) => {
                let interval = (ev.pitch_cents - prev).abs();
                interval >= config.min_interval_cents && interval <= config.max_interval_cents
            }
        };
        if ok {
            ev.qualifies_melody = true;
            last = Some(ev.pitch_cents);
        }
    }
}

/// The melody-note subsequence of `events`.
pub fn filter_melody_notes(events: &[NoteEvent], config: &NoteConfig) -> Vec<NoteEvent> {
    let mut marked = events.to_vec();
    mark_melody_notes(&mut marked, config);
    marked.retain(|e| e.qualifies_melody);
    marked
}
