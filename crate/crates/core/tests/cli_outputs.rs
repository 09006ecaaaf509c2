//! File outputs of the preset runner and the bit-stable CSV schema.

use std::fs;
use std::path::Path;

use sas_mimo::cli_io::{csv_string, parse_config, run_preset, sim_rows, Overrides, CSV_HEADER};
use sas_mimo::montecarlo::run_sweep;

const GOLDEN_CONFIG: &str = "\
# miniature fixed-seed run
model = I
alpha = 1.2
nr = 1
snr_db = 0, 8
receivers = gar, mdr, ml, aor
seed = 2024
min_errors = 200
max_trials = 3000
";

#[test]
fn miniature_run_matches_golden_csv() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mini_sim.csv");
    let csv = csv_string(&sim_rows(&run_sweep(&parse_config(GOLDEN_CONFIG).unwrap()).unwrap()));
    if std::env::var_os("SAS_MIMO_BLESS").is_some() {
        fs::write(&path, &csv).unwrap();
    }
    let golden = fs::read_to_string(&path).expect("golden file present; set SAS_MIMO_BLESS=1 to create it");
    assert_eq!(csv, golden);
}

fn small(seed: Option<u64>, workers: Option<usize>) -> Overrides {
    Overrides { seed, workers, max_trials: Some(20_000), ..Overrides::default() }
}

#[test]
fn preset_writes_csvs_and_complete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_preset("fig1", &small(Some(7), None), dir.path()).unwrap();
    let sim = fs::read_to_string(&out.sim_csv).unwrap();
    let theory = fs::read_to_string(&out.theory_csv).unwrap();
    assert!(sim.starts_with(CSV_HEADER) && theory.starts_with(CSV_HEADER));
    assert_eq!(sim.lines().count(), 1 + 9 * 4);
    assert_eq!(theory.lines().count(), 1 + 9 * 2 * 2);

    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out.manifest).unwrap()).unwrap();
    assert_eq!(m["preset"], "fig1_alamouti_2x1_alpha05");
    assert_eq!(m["overrides"]["seed"], 7);
    assert_eq!(m["overrides"]["max_trials"], 20_000);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    let runs = m["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 1);
    // The embedded configuration reproduces every simulated row.
    let config = parse_config(runs[0]["config"].as_str().unwrap()).unwrap();
    assert_eq!(config.master_seed, 7);
    assert_eq!(csv_string(&sim_rows(&run_sweep(&config).unwrap())), sim);
    for p in runs[0]["points"].as_array().unwrap() {
        let stop = p["stop"].as_str().unwrap();
        let trials = p["trials"].as_u64().unwrap();
        let enough = p["bit_errors"].as_object().unwrap().values().all(|e| e.as_u64().unwrap() >= 200);
        assert!((stop == "min_errors" && enough) || (stop == "max_trials" && trials == 20_000), "{p}");
    }
}

#[test]
fn seed_changes_simulation_but_not_theory() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let x = run_preset("fig1", &small(Some(1), None), a.path()).unwrap();
    let y = run_preset("fig1", &small(Some(2), None), b.path()).unwrap();
    assert_ne!(fs::read(&x.sim_csv).unwrap(), fs::read(&y.sim_csv).unwrap());
    assert_eq!(fs::read(&x.theory_csv).unwrap(), fs::read(&y.theory_csv).unwrap());
}

#[test]
fn worker_count_leaves_csv_bytes_unchanged() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let x = run_preset("fig1", &small(None, Some(1)), a.path()).unwrap();
    let y = run_preset("fig1", &small(None, Some(4)), b.path()).unwrap();
    assert_eq!(fs::read(&x.sim_csv).unwrap(), fs::read(&y.sim_csv).unwrap());
}

#[test]
fn model_comparison_preset_tags_rows_by_model() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides { max_trials: Some(4096), ..Overrides::default() };
    let out = run_preset("fig5", &overrides, dir.path()).unwrap();
    let sim = fs::read_to_string(&out.sim_csv).unwrap();
    for model in ["I", "II"] {
        let rows = sim.lines().filter(|l| l.split(',').nth(2) == Some(model)).count();
        assert_eq!(rows, 7 * 4, "model {model}");
    }
}

#[test]
fn unknown_preset_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_preset("fig7", &Overrides::default(), dir.path()).is_err());
}
