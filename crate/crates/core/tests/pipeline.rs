use timbretone::pipeline::{self, DiffOptions, ExtractOptions, Layout, MapKind, ReportOptions};
use timbretone::store::{read_csv, PlacementRow, HASH_COMMENT};
use timbretone::synth::write_demo_corpus;
use timbretone::{Error, RunConfig};

fn small_config(out: &std::path::Path, manifest: std::path::PathBuf) -> RunConfig {
    let mut cfg = RunConfig::new(out);
    cfg.manifest = Some(manifest);
    cfg.params.training.cycles = 40;
    cfg.params.tonal_map.rows = 8;
    cfg.params.tonal_map.cols = 8;
    cfg.params.timbre_map.rows = 6;
    cfg.params.timbre_map.cols = 6;
    cfg
}

#[test]
fn stages_chain_and_stamp_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo_corpus(&dir.path().join("corpus"), 3, 2).unwrap();
    let cfg = small_config(&dir.path().join("out"), manifest);
    let hash = cfg.hash();
    let layout = Layout::new(&cfg.out);

    let s = pipeline::extract(&cfg, ExtractOptions::default()).unwrap();
    assert_eq!((s.pieces, s.timbre_records, s.tonal_records), (7, 7, 6));
    assert_eq!(s.exclusions.len(), 1);
    assert_eq!(s.exclusions[0].id, "noise");

    let t = pipeline::train(&cfg, MapKind::Tonal).unwrap();
    assert_eq!((t.grid.rows, t.grid.cols, t.grid.dim), (8, 8, 1200));
    let stored: Vec<PlacementRow> = read_csv(&layout.placements(MapKind::Tonal), &hash).unwrap();
    assert_eq!(stored, t.placements);
    assert_eq!(pipeline::place(&cfg, MapKind::Tonal).unwrap(), t.placements);
    let u = pipeline::umatrix(&cfg, MapKind::Tonal).unwrap();
    assert_eq!(u, t.umatrix);

    pipeline::train(&cfg, MapKind::Timbre).unwrap();
    let rep = pipeline::report(&cfg, MapKind::Timbre, &ReportOptions::default()).unwrap();
    assert_eq!(rep.groups.len(), 2);

    match pipeline::diff(
        &cfg,
        &DiffOptions {
            upper_group: Some("just".into()),
            ..DiffOptions::default()
        },
    ) {
        Ok(d) => {
            assert_eq!(d.upper_count + d.lower_count, 6);
            assert!(d.delta.iter().any(|x| *x != 0.0));
        }
        Err(e) => assert!(matches!(e, Error::EmptyTriangle(_)), "{e}"),
    }

    for entry in std::fs::read_dir(layout.root()).unwrap() {
        let p = entry.unwrap().path();
        let text = match p.extension().and_then(|e| e.to_str()) {
            Some("json" | "csv" | "svg") => std::fs::read_to_string(&p).unwrap(),
            _ => continue,
        };
        assert!(
            text.contains(&hash),
            "{} lacks the config hash",
            p.display()
        );
        if p.extension().unwrap() == "csv" {
            assert!(text.starts_with(HASH_COMMENT));
        }
    }
}

#[test]
fn stores_from_another_config_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo_corpus(&dir.path().join("corpus"), 2, 4).unwrap();
    let cfg = small_config(&dir.path().join("out"), manifest);
    pipeline::extract(&cfg, ExtractOptions::default()).unwrap();

    let mut other = cfg.clone();
    other.params.training.cycles = 41;
    let err = pipeline::train(&other, MapKind::Tonal).unwrap_err();
    assert!(matches!(err, Error::ConfigMismatch { .. }), "{err}");
    assert!(err.is_usage());

    let loaded = pipeline::load_run_config(&cfg.out).unwrap().unwrap();
    assert_eq!(loaded.hash(), cfg.hash());
    assert_eq!(loaded.manifest, cfg.manifest);
}

#[test]
fn later_stages_need_earlier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(dir.path());
    assert!(matches!(pipeline::train(&cfg, MapKind::Timbre), Err(Error::Store(_))));
    assert!(matches!(pipeline::diff(&cfg, &DiffOptions::default()), Err(Error::Store(_))));
    assert!(matches!(
        pipeline::extract(&cfg, ExtractOptions::default()),
        Err(Error::Parameter(_))
    ));
}
