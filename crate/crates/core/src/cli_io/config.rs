//! Plain-text `key = value` configuration files.
//!
//! Lines are `key = value`; `#` starts a comment. Lists (`snr_db`,
//! `receivers`) are comma or whitespace separated. Missing keys take the
//! [`SimConfig::default`] values, except `nt`, which follows the code.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::codes::{CodeKind, Constellation};
use crate::montecarlo::{SimConfig, SimError};
use crate::receivers::ReceiverKind;
use crate::stable::NoiseModel;

pub const CONFIG_KEYS: [&str; 12] =
    ["model", "alpha", "nt", "nr", "code", "constellation", "snr_db", "receivers", "seed", "min_errors", "max_trials", "workers"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] SimError),
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, message: message.into() }
}

fn scalar<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| parse_err(line, format!("`{key}`: cannot parse `{value}`: {e}")))
}

fn list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| scalar(line, key, s))
        .collect()
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut c = SimConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut n_t = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let known = CONFIG_KEYS.iter().find(|k| **k == key).ok_or_else(|| parse_err(line, format!("unknown key `{key}`")))?;
        if seen.contains(known) {
            return Err(parse_err(line, format!("duplicate key `{key}`")));
        }
        seen.push(known);
        match key {
            "model" => c.model = scalar::<NoiseModel>(line, key, value)?,
            "alpha" => c.alpha = scalar(line, key, value)?,
            "nt" => n_t = Some(scalar(line, key, value)?),
            "nr" => c.n_r = scalar(line, key, value)?,
            "code" => c.code = scalar(line, key, value)?,
            "constellation" => c.constellation = scalar::<Constellation>(line, key, value)?,
            "snr_db" => c.snr_grid_db = list(line, key, value)?,
            "receivers" => c.receivers = list::<ReceiverKind>(line, key, value)?,
            "seed" => c.master_seed = scalar(line, key, value)?,
            "min_errors" => c.min_errors = scalar(line, key, value)?,
            "max_trials" => c.max_trials = scalar(line, key, value)?,
            "workers" => c.workers = scalar(line, key, value)?,
            _ => unreachable!("key list and match arms agree"),
        }
    }
    c.n_t = n_t.unwrap_or_else(|| CodeKind::n_t(c.code));
    c.validate()?;
    Ok(c)
}

/// Writes every key; floats use the shortest round-trip representation.
pub fn serialize_config(c: &SimConfig) -> String {
    let mut out = String::new();
    let join = |v: Vec<String>| v.join(", ");
    let _ = writeln!(out, "model = {}", c.model);
    let _ = writeln!(out, "alpha = {}", c.alpha);
    let _ = writeln!(out, "nt = {}", c.n_t);
    let _ = writeln!(out, "nr = {}", c.n_r);
    let _ = writeln!(out, "code = {}", c.code);
    let _ = writeln!(out, "constellation = {}", c.constellation);
    let _ = writeln!(out, "snr_db = {}", join(c.snr_grid_db.iter().map(|x| format!("{x}")).collect()));
    let _ = writeln!(out, "receivers = {}", join(c.receivers.iter().map(|r| r.to_string()).collect()));
    let _ = writeln!(out, "seed = {}", c.master_seed);
    let _ = writeln!(out, "min_errors = {}", c.min_errors);
    let _ = writeln!(out, "max_trials = {}", c.max_trials);
    let _ = writeln!(out, "workers = {}", c.workers);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = parse_config("alpha = 0.5\ncode = alamouti # trailing comment\n").unwrap();
        assert_eq!(c, SimConfig { alpha: 0.5, ..SimConfig::default() });
        assert_eq!(parse_config(&serialize_config(&c)).unwrap(), c);
    }

    #[test]
    fn uncoded_default_antenna_count_follows_code() {
        assert_eq!(parse_config("code = uncoded").unwrap().n_t, 1);
    }

    #[test]
    fn errors_carry_line_or_field() {
        match parse_config("# header\n\nalpha = 2.5\n") {
            Err(ConfigError::Invalid(SimError::Config { field, .. })) => assert_eq!(field, "alpha"),
            other => panic!("{other:?}"),
        }
        let line_of = |text: &str| match parse_config(text) {
            Err(ConfigError::Parse { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line_of("alpha = 1\nbogus = 3\n"), 2);
        assert_eq!(line_of("alpha = 1\n\nalpha = 1.2\n"), 3);
        assert_eq!(line_of("receivers = gar, xyz"), 1);
        assert_eq!(line_of("nr"), 1);
        assert_eq!(line_of("model = III"), 1);
    }

    fn arb_config() -> impl Strategy<Value = SimConfig> {
        (
            prop_oneof![Just(NoiseModel::ModelI), Just(NoiseModel::ModelII)],
            0.01f64..=2.0,
            1usize..5,
            prop_oneof![Just(Constellation::Bpsk), Just(Constellation::Qpsk)],
            prop::collection::vec(-20.0f64..5.0, 1..8),
            prop::sample::subsequence(ReceiverKind::ALL.to_vec(), 1..=4),
            any::<u64>(),
            1u64..1_000_000,
            1u64..100_000_000,
            1usize..16,
        )
            .prop_map(|(model, alpha, n_r, constellation, steps, receivers, seed, min_errors, max_trials, workers)| {
                let mut x = 0.0;
                let snr_grid_db = steps.iter().map(|s| { x += s.abs() + 0.1; x }).collect();
                SimConfig {
                    model,
                    alpha,
                    n_t: 2,
                    n_r,
                    code: CodeKind::Alamouti,
                    constellation,
                    snr_grid_db,
                    receivers,
                    master_seed: seed,
                    min_errors,
                    max_trials,
                    workers,
                }
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(c in arb_config()) {
            let text = serialize_config(&c);
            prop_assert_eq!(parse_config(&text).unwrap(), c);
        }
    }
}
