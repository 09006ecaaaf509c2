//! Configuration files, CSV output and the experiment preset catalog.

mod config;
mod csv;
mod preset;

pub use config::{parse_config, serialize_config, ConfigError, CONFIG_KEYS};
pub use csv::{csv_string, format_row, format_sig9, sim_rows, sort_rows, theory_rows, write_csv, CsvRow, SimFields, CSV_HEADER, SIM_KIND};
pub use preset::{
    find_preset, preset_theory, presets, run_config, run_preset, run_theory, write_table, CliIoError, ExperimentPreset, Overrides, PresetOutput,
    DESK_MAX_TRIALS, DESK_MIN_ERRORS,
};
