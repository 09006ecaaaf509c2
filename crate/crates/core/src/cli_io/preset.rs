//! Named experiment presets and their file outputs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::config::{serialize_config, ConfigError};
use super::csv::{sim_rows, theory_rows, write_csv};
use crate::codes::{enumerate_codebook, CodeKind, Constellation};
use crate::montecarlo::{BerCurve, SimConfig, SimError, Simulator, StopReason, DEFAULT_MAX_TRIALS};
use crate::receivers::ReceiverKind;
use crate::stable::{build_amplitude_table, AmplitudePdfTable, IsotropicAmplitudeSpec, NoiseModel, StableError, TABLE_MAGIC, TABLE_VERSION};
use crate::theory::{pep_asymptote, theory_curve, TheoryCurve, TheoryError};

pub const DESK_MIN_ERRORS: u64 = 200;
pub const DESK_MAX_TRIALS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum CliIoError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Table(#[from] StableError),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliIoError + '_ {
    move |source| CliIoError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub alias: &'static str,
    pub description: &'static str,
    /// One sweep per noise model or antenna setup shown together.
    pub runs: Vec<SimConfig>,
    /// Receivers with closed-form overlays.
    pub overlays: Vec<ReceiverKind>,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn alamouti(model: NoiseModel, alpha: f64, n_r: usize, snr_grid_db: Vec<f64>) -> SimConfig {
    SimConfig {
        model,
        alpha,
        n_t: 2,
        n_r,
        code: CodeKind::Alamouti,
        constellation: Constellation::Bpsk,
        snr_grid_db,
        receivers: ReceiverKind::ALL.to_vec(),
        master_seed: 1,
        min_errors: DESK_MIN_ERRORS,
        max_trials: DESK_MAX_TRIALS,
        workers: 1,
    }
}

/// The preset catalog: Alamouti BPSK at α = 0.5 and α = 1.43.
pub fn presets() -> Vec<ExperimentPreset> {
    use NoiseModel::{ModelI, ModelII};
    let overlays = vec![ReceiverKind::Gar, ReceiverKind::Mdr];
    let high = grid(10.0, 50.0, 5.0);
    let low = grid(0.0, 30.0, 5.0);
    vec![
        ExperimentPreset {
            name: "fig1_alamouti_2x1_alpha05",
            alias: "fig1",
            description: "Alamouti 2x1, alpha = 0.5, Model I",
            runs: vec![alamouti(ModelI, 0.5, 1, high.clone())],
            overlays: overlays.clone(),
        },
        ExperimentPreset {
            name: "fig2_alamouti_2x2_alpha05",
            alias: "fig2",
            description: "Alamouti 2x2, alpha = 0.5, Model I",
            runs: vec![alamouti(ModelI, 0.5, 2, high.clone())],
            overlays: overlays.clone(),
        },
        ExperimentPreset {
            name: "fig3_alamouti_2x1_alpha143",
            alias: "fig3",
            description: "Alamouti 2x1, alpha = 1.43, Model I",
            runs: vec![alamouti(ModelI, 1.43, 1, low.clone())],
            overlays: overlays.clone(),
        },
        ExperimentPreset {
            name: "fig4_alamouti_2x2_alpha143",
            alias: "fig4",
            description: "Alamouti 2x2, alpha = 1.43, Model I",
            runs: vec![alamouti(ModelI, 1.43, 2, low.clone())],
            overlays: overlays.clone(),
        },
        ExperimentPreset {
            name: "fig5_alamouti_2x2_alpha05_models",
            alias: "fig5",
            description: "Alamouti 2x2, alpha = 0.5, Model I against Model II",
            runs: vec![alamouti(ModelI, 0.5, 2, grid(10.0, 40.0, 5.0)), alamouti(ModelII, 0.5, 2, grid(10.0, 40.0, 5.0))],
            overlays: overlays.clone(),
        },
        ExperimentPreset {
            name: "fig6_alamouti_2x2_alpha143_models",
            alias: "fig6",
            description: "Alamouti 2x2, alpha = 1.43, Model I against Model II",
            runs: vec![alamouti(ModelI, 1.43, 2, low.clone()), alamouti(ModelII, 1.43, 2, low)],
            overlays,
        },
    ]
}

/// Looks a preset up by full name or alias.
pub fn find_preset(name: &str) -> Result<ExperimentPreset, CliIoError> {
    presets()
        .into_iter()
        .find(|p| p.name == name || p.alias == name)
        .ok_or_else(|| CliIoError::UnknownPreset(name.to_string()))
}

/// Command-line adjustments applied on top of a preset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub min_errors: Option<u64>,
    pub max_trials: Option<u64>,
    /// Raises the trial cap from desk scale to the full default.
    pub full: bool,
}

impl Overrides {
    pub fn apply(&self, c: &mut SimConfig) {
        if self.full {
            c.max_trials = DEFAULT_MAX_TRIALS;
        }
        if let Some(s) = self.seed {
            c.master_seed = s;
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        if let Some(m) = self.min_errors {
            c.min_errors = m;
        }
        if let Some(m) = self.max_trials {
            c.max_trials = m;
        }
    }
}

fn overlay_curve(c: &SimConfig, receivers: &[ReceiverKind]) -> Result<TheoryCurve, CliIoError> {
    let book = enumerate_codebook(c.code, c.constellation);
    let mut out = TheoryCurve::default();
    for &r in receivers {
        match pep_asymptote(r, c.model, c.n_t, c.n_r, c.alpha) {
            Err(TheoryError::Unsupported(_)) => continue,
            Err(e) => return Err(e.into()),
            Ok(_) => out.extend(theory_curve(r, c.model, c.n_r, c.alpha, &book, &c.snr_grid_db)?),
        }
    }
    Ok(out)
}

/// Closed-form overlays of a preset; combinations without a closed form are skipped.
pub fn preset_theory(preset: &ExperimentPreset) -> Result<TheoryCurve, CliIoError> {
    let mut out = TheoryCurve::default();
    for c in &preset.runs {
        out.extend(overlay_curve(c, &preset.overlays)?);
    }
    Ok(out)
}

/// Closed-form curves for the receivers of a configuration.
pub fn run_theory(config: &SimConfig) -> Result<TheoryCurve, CliIoError> {
    config.validate().map_err(ConfigError::from)?;
    overlay_curve(config, &config.receivers)
}

/// Builds a unit-scale amplitude table and writes its text form.
pub fn write_table(alpha: f64, dimension: usize, path: &Path) -> Result<AmplitudePdfTable, CliIoError> {
    let table = build_amplitude_table(&IsotropicAmplitudeSpec::new(alpha, 1.0, dimension)?)?;
    fs::write(path, table.to_text()).map_err(io_err(path))?;
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct PresetOutput {
    pub sim_csv: PathBuf,
    pub theory_csv: PathBuf,
    pub manifest: PathBuf,
    pub curves: Vec<BerCurve>,
    pub theory: TheoryCurve,
}

#[derive(Serialize)]
struct ManifestPoint {
    snr_db: f64,
    trials: u64,
    stop: &'static str,
    bit_errors: BTreeMap<String, u64>,
}

#[derive(Serialize)]
struct ManifestRun {
    model: String,
    alpha: f64,
    nt: usize,
    nr: usize,
    seed: u64,
    config: String,
    points: Vec<ManifestPoint>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    preset: &'a str,
    description: &'a str,
    crate_version: &'a str,
    table_format: String,
    overrides: &'a Overrides,
    wall_time_s: f64,
    simulation_csv: String,
    theory_csv: String,
    runs: Vec<ManifestRun>,
}

fn manifest_run(curve: &BerCurve) -> ManifestRun {
    let c = &curve.config;
    ManifestRun {
        model: c.model.to_string(),
        alpha: c.alpha,
        nt: c.n_t,
        nr: c.n_r,
        seed: c.master_seed,
        config: serialize_config(c),
        points: curve
            .points
            .iter()
            .map(|p| ManifestPoint {
                snr_db: p.snr_db,
                trials: p.trials,
                stop: match p.stop {
                    StopReason::MinErrors => "min_errors",
                    StopReason::MaxTrials => "max_trials",
                },
                bit_errors: p.stats.iter().map(|s| (s.receiver.to_string(), s.bit_errors)).collect(),
            })
            .collect(),
    }
}

fn write_rows(path: &Path, rows: &[super::csv::CsvRow]) -> Result<(), CliIoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(io_err(path))
}

/// Runs every sweep of a preset and writes `<name>_sim.csv`,
/// `<name>_theory.csv` and `<name>_manifest.json` into `out_dir`.
pub fn run_preset(name: &str, overrides: &Overrides, out_dir: &Path) -> Result<PresetOutput, CliIoError> {
    let p = find_preset(name)?;
    execute(p.name, p.description, p.runs, &p.overlays, overrides, out_dir)
}

/// Same outputs as [`run_preset`] for a single configuration, named `name`.
pub fn run_config(name: &str, config: SimConfig, overrides: &Overrides, out_dir: &Path) -> Result<PresetOutput, CliIoError> {
    let overlays = config.receivers.clone();
    execute(name, "configuration file", vec![config], &overlays, overrides, out_dir)
}

fn execute(
    name: &str,
    description: &str,
    mut runs: Vec<SimConfig>,
    overlays: &[ReceiverKind],
    overrides: &Overrides,
    out_dir: &Path,
) -> Result<PresetOutput, CliIoError> {
    for c in &mut runs {
        overrides.apply(c);
        c.validate()?;
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let start = Instant::now();
    let mut tables: HashMap<(u64, usize), Arc<AmplitudePdfTable>> = HashMap::new();
    let mut curves = Vec::with_capacity(runs.len());
    let mut theory = TheoryCurve::default();
    for c in &runs {
        let table = if c.receivers.contains(&ReceiverKind::Ml) {
            let spec = c.ml_table_spec()?;
            let key = (spec.alpha().to_bits(), spec.d());
            let t = match tables.get(&key) {
                Some(t) => t.clone(),
                None => {
                    let t = Arc::new(build_amplitude_table(&spec)?);
                    tables.insert(key, t.clone());
                    t
                }
            };
            Some(t)
        } else {
            None
        };
        curves.push(Simulator::with_table(c.clone(), table)?.run()?);
        theory.extend(overlay_curve(c, overlays)?);
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    let sim_csv = out_dir.join(format!("{name}_sim.csv"));
    let theory_csv = out_dir.join(format!("{name}_theory.csv"));
    let manifest = out_dir.join(format!("{name}_manifest.json"));
    let rows: Vec<_> = curves.iter().flat_map(sim_rows).collect();
    write_rows(&sim_csv, &rows)?;
    write_rows(&theory_csv, &theory_rows(&theory))?;
    let file_name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let m = Manifest {
        preset: name,
        description,
        crate_version: env!("CARGO_PKG_VERSION"),
        table_format: format!("{TABLE_MAGIC} v{TABLE_VERSION}"),
        overrides,
        wall_time_s,
        simulation_csv: file_name(&sim_csv),
        theory_csv: file_name(&theory_csv),
        runs: curves.iter().map(manifest_run).collect(),
    };
    fs::write(&manifest, serde_json::to_string_pretty(&m)? + "\n").map_err(io_err(&manifest))?;
    Ok(PresetOutput { sim_csv, theory_csv, manifest, curves, theory })
}
