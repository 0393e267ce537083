use popflow::scenario::{preset_names, read_series, read_snapshot, RunManifest};
use popflow::{parse_config, preset, run_scenario, RunOverrides};

const SMALL: &str = r#"
name = "two-species"
[grid]
points = [16, 16]
[model]
diffusion = [1.0, 0.5]
gamma = [[-1.0, 0.5], [0.5, -1.0]]
kernels = { kind = "cosine", radius = 0.3 }
scheme = "if-rk2"
[ic]
kind = "uniform-noise"
masses = [1.0, 2.0]
amplitude = 0.2
seed = 7
[time]
t_end = 0.04
series_every = 0.01
snapshot_every = 0.02
"#;

#[test]
fn outputs_describe_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(SMALL).unwrap();
    let report = run_scenario(
        &config,
        &RunOverrides {
            out_dir: Some(tmp.path().to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(!report.is_blowup());

    let manifest = RunManifest::read(&tmp.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.config_hash, config.hash());
    assert_eq!(manifest.t_final, 0.04);
    for f in &manifest.files {
        assert!(tmp.path().join(f).is_file(), "{f} listed but missing");
    }

    let written = std::fs::read_to_string(tmp.path().join("config.toml")).unwrap();
    let reparsed = parse_config(&written).unwrap();
    assert_eq!(reparsed, config);
    assert_eq!(reparsed.hash(), manifest.config_hash);

    let rows = read_series(&tmp.path().join("series.csv")).unwrap();
    assert_eq!(rows.len(), 2 * report.records.len());
    assert_eq!(report.records.len(), 5);
    for (pair, rec) in rows.chunks(2).zip(&report.records) {
        for (s, row) in pair.iter().enumerate() {
            assert_eq!(row.species, s + 1);
            assert_eq!(row.t, rec.t);
            assert_eq!(row.mass, rec.mass[s]);
            assert_eq!(row.linf, rec.linf[s]);
        }
    }

    let mut grids: Vec<_> = manifest.files.iter().filter(|f| f.ends_with(".grid")).collect();
    grids.sort();
    assert_eq!(grids.len(), 2 * 3);
    let last_step = report.outcome.state.step_count;
    for (s, field) in report.outcome.state.fields.iter().enumerate() {
        let snap = read_snapshot(&tmp.path().join(format!("u{}_{last_step}.grid", s + 1))).unwrap();
        assert_eq!((snap.nx, snap.ny, snap.species), (16, 16, s + 1));
        assert_eq!(snap.t, 0.04);
        assert_eq!(snap.values, field.values());
    }
}

#[test]
fn canonical_toml_round_trips_for_every_preset() {
    for name in preset_names() {
        let config = preset(name).unwrap();
        let again = parse_config(&config.to_toml()).unwrap();
        assert_eq!(again, config, "{name}");
        assert_eq!(again.hash(), config.hash(), "{name}");
    }
}

#[test]
fn seed_changes_hash_but_not_shape() {
    let config = parse_config(SMALL).unwrap();
    let reseeded = config.clone().with_seed(8);
    assert_ne!(config.hash(), reseeded.hash());
    assert_eq!(config.build_grid().unwrap(), reseeded.build_grid().unwrap());
}
