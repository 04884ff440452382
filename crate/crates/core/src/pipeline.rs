//! End-to-end driver behind the command-line tool: per-piece extraction,
//! map training, placement, u-matrix, difference profile and reports, all
//! persisted under one output directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    normalize_timbre, orient_split, separation_report, triangular_split_diff, Diagonal, DifferenceProfile,
    MeanSource, SeparationReport, SplitRule,
};
use crate::audio::{decode, load_manifest, AudioClip, ManifestEntry};
use crate::config::{RunConfig, StageParams};
use crate::error::{Error, Result};
use crate::notes::{mark_melody_notes, segment_events, NoteEvent};
use crate::pitch::{track_f0, PitchTrack};
use crate::plot::{heatmap_svg, importance_svg, line_plot_svg, Marker, Series};
use crate::som::{component_plane, feature_importance, u_matrix, SomGrid, UMatrix};
use crate::store::{
    opt_cell, read_csv, read_stamped, write_csv, write_csv_records, write_stamped, Exclusion,
    NormalizationRecord, PlacementRow, TimbreRecord, TonalRecord,
};
use crate::timbre::{extract_timbre, TimbreSummary, TIMBRE_DIM, TIMBRE_FEATURES};
use crate::tonal::{tonal_system_of, TonalSystem, TONAL_BINS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Timbre,
    Tonal,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::Timbre => "timbre",
            MapKind::Tonal => "tonal",
        }
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "timbre" => Ok(MapKind::Timbre),
            "tonal" => Ok(MapKind::Tonal),
            other => Err(Error::Parameter(format!("unknown map kind '{other}' (timbre|tonal)"))),
        }
    }
}

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_config(&self) -> PathBuf {
        self.root.join("run_config.json")
    }

    pub fn timbre_store(&self) -> PathBuf {
        self.root.join("timbre.json")
    }

    pub fn tonal_store(&self) -> PathBuf {
        self.root.join("tonal.json")
    }

    pub fn exclusions(&self) -> PathBuf {
        self.root.join("exclusions.json")
    }

    pub fn normalization(&self) -> PathBuf {
        self.root.join("timbre_normalization.json")
    }

    pub fn grid(&self, kind: MapKind) -> PathBuf {
        self.root.join(format!("{}_grid.json", kind.as_str()))
    }

    pub fn placements(&self, kind: MapKind) -> PathBuf {
        self.root.join(format!("{}_placements.csv", kind.as_str()))
    }

    pub fn umatrix_csv(&self, kind: MapKind) -> PathBuf {
        self.root.join(format!("{}_umatrix.csv", kind.as_str()))
    }

    pub fn umatrix_svg(&self, kind: MapKind) -> PathBuf {
        self.root.join(format!("{}_umatrix.svg", kind.as_str()))
    }

    pub fn planes_csv(&self) -> PathBuf {
        self.root.join("timbre_planes.csv")
    }

    pub fn plane_svg(&self, feature: &str) -> PathBuf {
        self.root.join("planes").join(format!("{feature}.svg"))
    }

    pub fn diff_csv(&self) -> PathBuf {
        self.root.join("diff.csv")
    }

    pub fn diff_svg(&self) -> PathBuf {
        self.root.join("diff.svg")
    }

    pub fn diff_json(&self) -> PathBuf {
        self.root.join("diff.json")
    }

    pub fn report(&self, kind: MapKind) -> PathBuf {
        self.root.join(format!("{}_report.json", kind.as_str()))
    }

    pub fn importance_csv(&self) -> PathBuf {
        self.root.join("timbre_importance.csv")
    }

    pub fn importance_svg(&self, group: &str) -> PathBuf {
        self.root.join("importance").join(format!("{}.svg", file_stem_for(group)))
    }

    pub fn pitch_dump(&self, id: &str) -> PathBuf {
        self.root.join("pitch").join(format!("{}.csv", file_stem_for(id)))
    }

    pub fn notes_dump(&self, id: &str) -> PathBuf {
        self.root.join("notes").join(format!("{}.csv", file_stem_for(id)))
    }
}

/// Everything extracted from one clip.
#[derive(Debug, Clone)]
pub struct PieceAnalysis {
    pub timbre: std::result::Result<TimbreSummary, String>,
    pub track: PitchTrack,
    /// All stage-2 events, melody notes flagged.
    pub events: Vec<NoteEvent>,
    pub melody_notes: usize,
    /// `Err` holds the reason the piece is left out of tonal analysis.
    pub tonal: std::result::Result<TonalSystem, String>,
}

/// Timbre features, pitch track, note events and tonal system of one clip.
pub fn analyze_clip(clip: &AudioClip, p: &StageParams) -> PieceAnalysis {
    let timbre = extract_timbre(clip, &p.spectrum, &p.timbre).map_err(|e| e.to_string());
    let track = track_f0(clip, &p.pitch);
    let mut events = segment_events(&track, &p.notes);
    mark_melody_notes(&mut events, &p.notes);
    let melody: Vec<NoteEvent> = events.iter().filter(|e| e.qualifies_melody).cloned().collect();
    let tonal = if melody.len() < p.min_melody_notes {
        Err(format!(
            "{} melody notes, fewer than the required {}",
            melody.len(),
            p.min_melody_notes
        ))
    } else {
        tonal_system_of(&melody).map_err(|e| e.to_string())
    };
    PieceAnalysis {
        timbre,
        track,
        melody_notes: melody.len(),
        events,
        tonal,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    pub dump_pitch: bool,
    pub dump_notes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub pieces: usize,
    pub timbre_records: usize,
    pub tonal_records: usize,
    pub exclusions: Vec<Exclusion>,
}

#[derive(Serialize)]
struct RunConfigFile<'a> {
    manifest: Option<&'a Path>,
    seed: u64,
    params: &'a StageParams,
}

fn prepare(cfg: &RunConfig) -> Result<Layout> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out);
    std::fs::create_dir_all(layout.root()).map_err(|e| Error::io(layout.root(), e))?;
    Ok(layout)
}

fn write_run_config_file(layout: &Layout, cfg: &RunConfig) -> Result<()> {
    write_stamped(
        &layout.run_config(),
        &cfg.hash(),
        &RunConfigFile {
            manifest: cfg.manifest.as_deref(),
            seed: cfg.seed,
            params: &cfg.params,
        },
    )
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn dump_pitch(path: &Path, hash: &str, track: &PitchTrack) -> Result<()> {
    write_csv_records(
        path,
        hash,
        &["time_s", "f0_cents", "confidence"],
        track
            .frames
            .iter()
            .map(|f| vec![f.time.to_string(), opt_cell(f.cents), f.confidence.to_string()]),
    )
}

fn dump_notes(path: &Path, hash: &str, events: &[NoteEvent]) -> Result<()> {
    write_csv_records(
        path,
        hash,
        &["start_s", "end_s", "pitch_cents", "qualifies_melody"],
        events.iter().map(|e| {
            vec![
                e.start.to_string(),
                e.end.to_string(),
                e.pitch_cents.to_string(),
                e.qualifies_melody.to_string(),
            ]
        }),
    )
}

/// Reads every manifest entry, writes the timbre and tonal stores. Pieces
/// that fail are recorded in the exclusions file and the run continues.
pub fn extract(cfg: &RunConfig, opts: ExtractOptions) -> Result<ExtractSummary> {
    let manifest_path = cfg
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Parameter("extract needs a manifest".into()))?;
    let manifest = load_manifest(manifest_path)?;
    let layout = prepare(cfg)?;
    write_run_config_file(&layout, cfg)?;
    let hash = cfg.hash();
    let params = &cfg.params;

    type Outcome = (ManifestEntry, std::result::Result<PieceAnalysis, String>);
    let outcomes: Vec<Outcome> = with_pool(cfg.jobs, || {
        manifest
            .entries()
            .par_iter()
            .map(|e| {
                let r = decode(&e.path)
                    .map(|clip| clip.with_id(e.id.clone()))
                    .map(|clip| analyze_clip(&clip, params))
                    .map_err(|err| err.to_string());
                (e.clone(), r)
            })
            .collect()
    })?;

    let mut timbre = Vec::new();
    let mut tonal = Vec::new();
    let mut exclusions = Vec::new();
    let mut exclude = |id: &str, stage: &str, reason: String| {
        warn!("{id}: excluded from {stage}: {reason}");
        exclusions.push(Exclusion {
            id: id.to_owned(),
            stage: stage.to_owned(),
            reason,
        });
    };
    for (entry, outcome) in outcomes {
        let analysis = match outcome {
            Ok(a) => a,
            Err(reason) => {
                exclude(&entry.id, "decode", reason);
                continue;
            }
        };
        if opts.dump_pitch {
            dump_pitch(&layout.pitch_dump(&entry.id), &hash, &analysis.track)?;
        }
        if opts.dump_notes {
            dump_notes(&layout.notes_dump(&entry.id), &hash, &analysis.events)?;
        }
        match analysis.timbre {
            Ok(t) => timbre.push(TimbreRecord {
                id: entry.id.clone(),
                group: entry.group.clone(),
                vector: t.vector,
                frame_count: t.frame_count,
                usable_frames: t.usable_frames,
            }),
            Err(reason) => exclude(&entry.id, "timbre", reason),
        }
        match analysis.tonal {
            Ok(ts) => tonal.push(TonalRecord {
                id: entry.id.clone(),
                group: entry.group.clone(),
                octave_base_cents: ts.octave_base_cents,
                total_frames: ts.total_frames,
                melody_notes: analysis.melody_notes,
                bins: ts.bins,
            }),
            Err(reason) => exclude(&entry.id, "tonal", reason),
        }
    }
    write_stamped(&layout.timbre_store(), &hash, &timbre)?;
    write_stamped(&layout.tonal_store(), &hash, &tonal)?;
    write_stamped(&layout.exclusions(), &hash, &exclusions)?;
    info!(
        "extracted {} pieces: {} timbre records, {} tonal records",
        manifest.len(),
        timbre.len(),
        tonal.len()
    );
    if timbre.is_empty() && tonal.is_empty() {
        return Err(Error::EmptyInput("no piece produced any features".into()));
    }
    Ok(ExtractSummary {
        pieces: manifest.len(),
        timbre_records: timbre.len(),
        tonal_records: tonal.len(),
        exclusions,
    })
}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        return Err(Error::Store(format!(
            "missing {what} at {} (run the earlier stage first)",
            path.display()
        )));
    }
    Ok(())
}

/// Training vectors of one map: ids, groups and vectors in store order.
pub struct MapInput {
    pub ids: Vec<String>,
    pub groups: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

fn load_input(layout: &Layout, kind: MapKind, hash: &str) -> Result<MapInput> {
    match kind {
        MapKind::Timbre => {
            require(&layout.timbre_store(), "timbre store")?;
            let recs: Vec<TimbreRecord> = read_stamped(&layout.timbre_store(), hash)?;
            let vectors: Vec<_> = recs.iter().map(|r| r.vector).collect();
            let (vectors, norm) = normalize_timbre(&vectors)?;
            write_stamped(
                &layout.normalization(),
                hash,
                &NormalizationRecord {
                    features: TIMBRE_FEATURES.iter().map(|s| s.to_string()).collect(),
                    normalization: norm,
                },
            )?;
            Ok(MapInput {
                ids: recs.iter().map(|r| r.id.clone()).collect(),
                groups: recs.iter().map(|r| r.group.clone()).collect(),
                vectors,
            })
        }
        MapKind::Tonal => {
            require(&layout.tonal_store(), "tonal store")?;
            let recs: Vec<TonalRecord> = read_stamped(&layout.tonal_store(), hash)?;
            if recs.len() < 2 {
                return Err(Error::EmptyInput(format!(
                    "tonal map needs at least 2 pieces, store has {}",
                    recs.len()
                )));
            }
            Ok(MapInput {
                ids: recs.iter().map(|r| r.id.clone()).collect(),
                groups: recs.iter().map(|r| r.group.clone()).collect(),
                vectors: recs.into_iter().map(|r| r.bins).collect(),
            })
        }
    }
}

fn load_grid(layout: &Layout, kind: MapKind, hash: &str) -> Result<SomGrid> {
    require(&layout.grid(kind), "trained grid")?;
    let grid: SomGrid = read_stamped(&layout.grid(kind), hash)?;
    grid.validate()?;
    Ok(grid)
}

fn load_placements(layout: &Layout, kind: MapKind, hash: &str) -> Result<Vec<PlacementRow>> {
    require(&layout.placements(kind), "placements")?;
    read_csv(&layout.placements(kind), hash)
}

fn place_input(grid: &SomGrid, input: &MapInput) -> Result<Vec<PlacementRow>> {
    input
        .ids
        .iter()
        .zip(&input.groups)
        .zip(&input.vectors)
        .map(|((id, group), v)| {
            let p = grid.best_match(id, v)?;
            Ok(PlacementRow {
                id: p.id,
                group: group.clone(),
                row: p.row,
                col: p.col,
                correlation: p.correlation,
            })
        })
        .collect()
}

fn markers(rows: &[PlacementRow], group: Option<&str>) -> Vec<Marker> {
    rows.iter()
        .filter(|r| group.map_or(true, |g| r.group == g))
        .map(|r| Marker {
            row: r.row,
            col: r.col,
            group: r.group.clone(),
        })
        .collect()
}

fn write_umatrix(layout: &Layout, kind: MapKind, hash: &str, u: &UMatrix, placed: &[PlacementRow]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        row: usize,
        col: usize,
        value: f64,
    }
    write_csv(
        &layout.umatrix_csv(kind),
        hash,
        (0..u.rows).flat_map(|r| (0..u.cols).map(move |c| Row { row: r, col: c, value: u.at(r, c) })),
    )?;
    let svg = heatmap_svg(
        &format!("{} map u-matrix", kind.as_str()),
        u.rows,
        u.cols,
        &u.values,
        &markers(placed, None),
        hash,
    );
    std::fs::write(layout.umatrix_svg(kind), svg).map_err(|e| Error::io(layout.umatrix_svg(kind), e))
}

fn write_planes(layout: &Layout, hash: &str, grid: &SomGrid, placed: &[PlacementRow]) -> Result<()> {
    let planes: Vec<Vec<f64>> = (0..TIMBRE_DIM).map(|k| component_plane(grid, k)).collect::<Result<_>>()?;
    let header = ["row", "col"]
        .into_iter()
        .chain(TIMBRE_FEATURES.iter().copied())
        .collect::<Vec<_>>();
    write_csv_records(
        &layout.planes_csv(),
        hash,
        &header,
        (0..grid.neurons()).map(|n| {
            let (r, c) = grid.position(n);
            [r.to_string(), c.to_string()]
                .into_iter()
                .chain(planes.iter().map(|p| p[n].to_string()))
                .collect()
        }),
    )?;
    for (k, name) in TIMBRE_FEATURES.iter().enumerate() {
        let path = layout.plane_svg(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let svg = heatmap_svg(
            &format!("component plane: {name}"),
            grid.rows,
            grid.cols,
            &planes[k],
            &markers(placed, None),
            hash,
        );
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub grid: SomGrid,
    pub placements: Vec<PlacementRow>,
    pub umatrix: UMatrix,
}

/// Trains one map from its store and writes grid, placements and u-matrix
/// (plus component planes for the timbre map).
pub fn train(cfg: &RunConfig, kind: MapKind) -> Result<TrainSummary> {
    let layout = prepare(cfg)?;
    let hash = cfg.hash();
    let input = load_input(&layout, kind, &hash)?;
    if input.vectors.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "{} map needs at least 2 pieces, got {}",
            kind.as_str(),
            input.vectors.len()
        )));
    }
    for (id, v) in input.ids.iter().zip(&input.vectors) {
        let first = v[0];
        if v.iter().all(|&x| x == first) {
            return Err(Error::degenerate(Some(id), "constant feature vector"));
        }
    }
    let shape = match kind {
        MapKind::Timbre => cfg.params.timbre_map,
        MapKind::Tonal => cfg.params.tonal_map,
    };
    let dim = match kind {
        MapKind::Timbre => TIMBRE_DIM,
        MapKind::Tonal => TONAL_BINS,
    };
    let mut grid = SomGrid::init(shape.rows, shape.cols, dim, cfg.seed)?;
    info!(
        "training {} map {}x{} on {} pieces for {} cycles",
        kind.as_str(),
        shape.rows,
        shape.cols,
        input.vectors.len(),
        cfg.params.training.cycles
    );
    grid.train(&input.vectors, &cfg.params.training)?;
    write_stamped(&layout.grid(kind), &hash, &grid)?;
    let placements = place_input(&grid, &input)?;
    write_csv(&layout.placements(kind), &hash, &placements)?;
    let umatrix = u_matrix(&grid);
    write_umatrix(&layout, kind, &hash, &umatrix, &placements)?;
    if kind == MapKind::Timbre {
        write_planes(&layout, &hash, &grid, &placements)?;
    }
    Ok(TrainSummary {
        grid,
        placements,
        umatrix,
    })
}

/// Re-places every stored piece on an existing grid.
pub fn place(cfg: &RunConfig, kind: MapKind) -> Result<Vec<PlacementRow>> {
    let layout = prepare(cfg)?;
    let hash = cfg.hash();
    let grid = load_grid(&layout, kind, &hash)?;
    let input = load_input(&layout, kind, &hash)?;
    let placements = place_input(&grid, &input)?;
    write_csv(&layout.placements(kind), &hash, &placements)?;
    Ok(placements)
}

/// Recomputes the u-matrix CSV and SVG from a stored grid.
pub fn umatrix(cfg: &RunConfig, kind: MapKind) -> Result<UMatrix> {
    let layout = prepare(cfg)?;
    let hash = cfg.hash();
    let grid = load_grid(&layout, kind, &hash)?;
    let placed = if layout.placements(kind).exists() {
        load_placements(&layout, kind, &hash)?
    } else {
        Vec::new()
    };
    let u = u_matrix(&grid);
    write_umatrix(&layout, kind, &hash, &u, &placed)?;
    Ok(u)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffOptions {
    pub include_fundamental: bool,
    /// Orient the split so this group's pieces fall on the upper side.
    pub upper_group: Option<String>,
    pub diagonal: Diagonal,
    pub swap: bool,
    pub source: MeanSource,
}

/// Triangular-split difference profile of the tonal map.
pub fn diff(cfg: &RunConfig, opts: &DiffOptions) -> Result<DifferenceProfile> {
    let layout = prepare(cfg)?;
    let hash = cfg.hash();
    let grid = load_grid(&layout, MapKind::Tonal, &hash)?;
    let rows = load_placements(&layout, MapKind::Tonal, &hash)?;
    let recs: Vec<TonalRecord> = read_stamped(&layout.tonal_store(), &hash)?;
    let histograms: HashMap<String, Vec<f64>> = recs.into_iter().map(|r| (r.id, r.bins)).collect();
    let placements: Vec<_> = rows.iter().map(PlacementRow::placement).collect();
    let rule = match &opts.upper_group {
        Some(g) => {
            let labels: Vec<String> = rows.iter().map(|r| r.group.clone()).collect();
            let mut r = orient_split(&grid, &placements, &labels, g)?;
            r.swap ^= opts.swap;
            r
        }
        None => SplitRule {
            diagonal: opts.diagonal,
            swap: opts.swap,
        },
    };
    let mut profile = triangular_split_diff(&grid, &placements, &histograms, rule, opts.source)?;
    profile.omit_fundamental = !opts.include_fundamental;
    let first = if opts.include_fundamental { 0 } else { 1 };
    #[derive(Serialize)]
    struct Row {
        cent_bin: usize,
        delta: f64,
        std_upper: f64,
        std_lower: f64,
    }
    write_csv(
        &layout.diff_csv(),
        &hash,
        (first..TONAL_BINS).map(|b| Row {
            cent_bin: b,
            delta: profile.delta[b],
            std_upper: profile.std_upper[b],
            std_lower: profile.std_lower[b],
        }),
    )?;
    let svg = line_plot_svg(
        "mean tonal system, upper-right minus lower-left",
        "cent",
        &[
            Series {
                name: "delta",
                values: &profile.delta,
                color: "#000000",
            },
            Series {
                name: "std upper-right",
                values: &profile.std_upper,
                color: "#d62728",
            },
            Series {
                name: "std lower-left",
                values: &profile.std_lower,
                color: "#1f77b4",
            },
        ],
        first,
        &hash,
    );
    std::fs::write(layout.diff_svg(), svg).map_err(|e| Error::io(layout.diff_svg(), e))?;
    write_stamped(&layout.diff_json(), &hash, &profile)?;
    Ok(profile)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Restrict importance plots to this group.
    pub group: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImportanceRow {
    pub id: String,
    pub group: String,
    pub row: usize,
    pub col: usize,
    pub rank: usize,
    pub dimension: usize,
    pub feature: String,
    pub strength: f64,
    pub importance: f64,
}

/// Separation summary for one map, plus feature-importance exports for the
/// timbre map.
pub fn report(cfg: &RunConfig, kind: MapKind, opts: &ReportOptions) -> Result<SeparationReport> {
    let layout = prepare(cfg)?;
    let hash = cfg.hash();
    let grid = load_grid(&layout, kind, &hash)?;
    let rows = load_placements(&layout, kind, &hash)?;
    let placements: Vec<_> = rows.iter().map(PlacementRow::placement).collect();
    let labels: Vec<String> = rows.iter().map(|r| r.group.clone()).collect();
    let u = u_matrix(&grid);
    let rep = separation_report(&placements, &labels, Some(&u))?;
    write_stamped(&layout.report(kind), &hash, &rep)?;

    if kind == MapKind::Timbre {
        let input = load_input(&layout, kind, &hash)?;
        let vectors: HashMap<&str, &Vec<f64>> = input.ids.iter().map(String::as_str).zip(&input.vectors).collect();
        let mut table = Vec::new();
        let mut panels: std::collections::BTreeMap<&str, Vec<(String, Vec<crate::som::FeatureRank>)>> =
            Default::default();
        for (row, p) in rows.iter().zip(&placements) {
            let v = vectors
                .get(row.id.as_str())
                .ok_or_else(|| Error::Store(format!("placed piece {} missing from timbre store", row.id)))?;
            let ranks = feature_importance(&grid, p, v)?;
            for (rank, f) in ranks.iter().enumerate() {
                table.push(ImportanceRow {
                    id: row.id.clone(),
                    group: row.group.clone(),
                    row: row.row,
                    col: row.col,
                    rank,
                    dimension: f.dimension,
                    feature: TIMBRE_FEATURES[f.dimension].to_owned(),
                    strength: f.strength,
                    importance: f.importance,
                });
            }
            if opts.group.as_deref().map_or(true, |g| g == row.group) {
                panels
                    .entry(row.group.as_str())
                    .or_default()
                    .push((format!("{} ({},{})", row.id, row.row, row.col), ranks));
            }
        }
        write_csv(&layout.importance_csv(), &hash, &table)?;
        if let Some(g) = &opts.group {
            if !panels.contains_key(g.as_str()) {
                warn!("group filter {g} matches no placements");
            }
        }
        for (group, ps) in panels {
            let path = layout.importance_svg(group);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let svg = importance_svg(
                &format!("feature importance, group {group} (rank left to right, strength bottom to top)"),
                &ps,
                &TIMBRE_FEATURES,
                &hash,
            );
            std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        }
    }
    info!(
        "{} map: purity {:.3}, intra {:.3}, inter {:.3}",
        kind.as_str(),
        rep.purity,
        rep.intra_mean_distance,
        rep.inter_mean_distance
    );
    Ok(rep)
}

/// Loads the `run_config.json` written by [`extract`] as the base config
/// for later stages.
pub fn load_run_config(out: &Path) -> Result<Option<RunConfig>> {
    #[derive(serde::Deserialize)]
    struct File {
        manifest: Option<PathBuf>,
        seed: u64,
        params: StageParams,
    }
    let path = Layout::new(out).run_config();
    if !path.exists() {
        return Ok(None);
    }
    let s: crate::store::Stamped<File> = crate::store::read_json(&path)?;
    let cfg = RunConfig {
        manifest: s.data.manifest,
        out: out.to_path_buf(),
        seed: s.data.seed,
        jobs: None,
        params: s.data.params,
    };
    if cfg.hash() != s.config_hash {
        return Err(Error::Store(format!("{} does not match its own hash", path.display())));
    }
    Ok(Some(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{melody_clip, MelodyStyle, Note};

    #[test]
    fn file_stems_are_safe() {
        assert_eq!(file_stem_for("a/b c:d"), "a_b_c_d");
        assert_eq!(file_stem_for("ok-1_2.x"), "ok-1_2.x");
    }

    #[test]
    fn map_kind_parses() {
        assert_eq!("tonal".parse::<MapKind>().unwrap(), MapKind::Tonal);
        assert!("colour".parse::<MapKind>().unwrap_err().is_usage());
    }

    #[test]
    fn analyze_clip_counts_melody_notes() {
        let scale = [220.0, 247.5, 275.0, 293.33, 330.0, 366.67, 412.5];
        let notes: Vec<Note> = scale.iter().cycle().take(14).map(|&f| Note::tone(f, 0.2)).collect();
        let clip = melody_clip("m", &notes, 16000, &MelodyStyle::default());
        let a = analyze_clip(&clip, &StageParams::default());
        assert!(a.timbre.is_ok());
        assert_eq!(a.melody_notes, 14);
        let ts = a.tonal.unwrap();
        assert_eq!(ts.bins.len(), TONAL_BINS);

        let short: Vec<Note> = notes[..5].to_vec();
        let clip = melody_clip("s", &short, 16000, &MelodyStyle::default());
        let a = analyze_clip(&clip, &StageParams::default());
        assert!(a.tonal.unwrap_err().contains("fewer than the required 10"));
    }
}
