//! Reproducible BER sweeps over an SNR grid.
//!
//! Trial i at SNR point j draws from a ChaCha8 substream fixed by
//! (master seed, j, i): stream j, block offset i·2³². Trials run in fixed-size
//! batches; rounds of batches execute in parallel and the result is the
//! shortest prefix of batches meeting the stopping rule, so counts do not
//! depend on the worker count.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codes::{enumerate_codebook, sample_channel, synthesize_rx, CodeError, CodeKind, Codebook, Constellation, TrialContext};
use crate::receivers::{ml_dimension, Receiver, ReceiverError, ReceiverKind, Residuals};
use crate::stable::{build_amplitude_table, sample_noise_block, AmplitudePdfTable, IsotropicAmplitudeSpec, NoiseModel, StableError};
use crate::theory::db_to_linear;

pub const DEFAULT_MIN_ERRORS: u64 = 200;
pub const DEFAULT_MAX_TRIALS: u64 = 10_000_000;
/// Trials per batch, the unit of parallel work and of the stopping check.
pub const BATCH_TRIALS: u64 = 1024;
const MAX_ROUND_BATCHES: u64 = 64;
/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;
/// Bit errors every point of a slope-fit window must reach.
pub const MIN_SLOPE_ERRORS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error("amplitude table: {0}")]
    Table(#[from] StableError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("receiver {receiver}: {message}")]
    Insufficient { receiver: ReceiverKind, message: String },
    #[error("receiver {receiver} does not cross BER {target:e} inside the grid")]
    NotBracketed { receiver: ReceiverKind, target: f64 },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn config_err(field: &'static str, message: impl Into<String>) -> SimError {
    SimError::Config { field, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: NoiseModel,
    pub alpha: f64,
    pub n_t: usize,
    pub n_r: usize,
    pub code: CodeKind,
    pub constellation: Constellation,
    pub snr_grid_db: Vec<f64>,
    pub receivers: Vec<ReceiverKind>,
    pub master_seed: u64,
    pub min_errors: u64,
    pub max_trials: u64,
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            model: NoiseModel::ModelI,
            alpha: 1.43,
            n_t: 2,
            n_r: 1,
            code: CodeKind::Alamouti,
            constellation: Constellation::Bpsk,
            snr_grid_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            receivers: ReceiverKind::ALL.to_vec(),
            master_seed: 1,
            min_errors: DEFAULT_MIN_ERRORS,
            max_trials: DEFAULT_MAX_TRIALS,
            workers: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(config_err("alpha", format!("{} outside (0, 2]", self.alpha)));
        }
        if self.n_t != self.code.n_t() {
            return Err(config_err("nt", format!("{} code needs nt = {}", self.code, self.code.n_t())));
        }
        if self.n_r == 0 {
            return Err(config_err("nr", "must be at least 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(config_err("snr_db", "grid is empty"));
        }
        if self.snr_grid_db.iter().any(|x| !x.is_finite()) || self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("snr_db", "grid must be finite and strictly increasing"));
        }
        if self.receivers.is_empty() {
            return Err(config_err("receivers", "no receivers"));
        }
        let mut seen = self.receivers.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.receivers.len() {
            return Err(config_err("receivers", "duplicate receiver"));
        }
        if self.min_errors == 0 {
            return Err(config_err("min_errors", "must be positive"));
        }
        if self.max_trials == 0 {
            return Err(config_err("max_trials", "must be positive"));
        }
        if self.workers == 0 {
            return Err(config_err("workers", "must be positive"));
        }
        Ok(())
    }

    /// Spec of the amplitude table the ML receiver needs.
    pub fn ml_table_spec(&self) -> Result<IsotropicAmplitudeSpec, SimError> {
        Ok(IsotropicAmplitudeSpec::new(self.alpha, 1.0, ml_dimension(self.model, self.n_r))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every receiver reached the bit-error target.
    MinErrors,
    /// The trial cap was reached first.
    MaxTrials,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverStats {
    pub receiver: ReceiverKind,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bits: u64,
    pub stop: StopReason,
    pub stats: Vec<ReceiverStats>,
}

impl BerPoint {
    pub fn stats_for(&self, receiver: ReceiverKind) -> Option<&ReceiverStats> {
        self.stats.iter().find(|s| s.receiver == receiver)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub config: SimConfig,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    /// (snr_db, stats) for one receiver across the grid.
    pub fn series(&self, receiver: ReceiverKind) -> Vec<(f64, ReceiverStats)> {
        self.points
            .iter()
            .filter_map(|p| p.stats_for(receiver).map(|s| (p.snr_db, *s)))
            .collect()
    }
}

/// 95% Wilson score interval for `errors` successes in `n` trials.
pub fn wilson_interval(errors: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Generator for trial `trial` of SNR point `point`.
pub fn trial_rng(master_seed: u64, point: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(point as u64);
    rng.set_word_pos((trial as u128) << 32);
    rng
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Tally {
    trials: u64,
    bit_errors: Vec<u64>,
    block_errors: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Self {
        Self { trials: 0, bit_errors: vec![0; n], block_errors: vec![0; n] }
    }

    fn absorb(&mut self, other: &Tally) {
        self.trials += other.trials;
        for (a, b) in self.bit_errors.iter_mut().zip(&other.bit_errors) {
            *a += b;
        }
        for (a, b) in self.block_errors.iter_mut().zip(&other.block_errors) {
            *a += b;
        }
    }
}

/// Fully prepared sweep: codebook, receivers and optional ML table.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    codebook: Codebook,
    receivers: Vec<Receiver>,
}

impl Simulator {
    /// Builds the ML table when needed.
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let table = if config.receivers.contains(&ReceiverKind::Ml) {
            Some(Arc::new(build_amplitude_table(&config.ml_table_spec()?)?))
        } else {
            None
        };
        Self::with_table(config, table)
    }

    /// Uses a prebuilt ML table, which must match the configuration.
    pub fn with_table(config: SimConfig, table: Option<Arc<AmplitudePdfTable>>) -> Result<Self, SimError> {
        config.validate()?;
        let codebook = enumerate_codebook(config.code, config.constellation);
        let receivers = config
            .receivers
            .iter()
            .map(|&kind| match kind {
                ReceiverKind::Ml => {
                    let t = table.clone().ok_or(ReceiverError::TableMissing)?;
                    Receiver::ml(config.model, t, config.alpha, config.n_r)
                }
                k => Receiver::new(k, config.model),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { config, codebook, receivers })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    /// Draws the realisation of trial `trial` at SNR point `point`.
    pub fn trial_context(&self, point: usize, trial: u64) -> Result<TrialContext, SimError> {
        let c = &self.config;
        let mut rng = trial_rng(c.master_seed, point, trial);
        let h = sample_channel(c.n_r, c.n_t, &mut rng);
        let tx_index = rng.random_range(0..self.codebook.len());
        let noise = sample_noise_block(c.model, c.alpha, c.n_r, self.codebook.t_s(), &mut rng)?;
        Ok(TrialContext { h, w: noise.w, genie: noise.genie, rho: db_to_linear(c.snr_grid_db[point]), tx_index })
    }

    /// Decisions of every configured receiver on one realisation.
    pub fn decide(&self, ctx: &TrialContext) -> Result<Vec<usize>, SimError> {
        let y = synthesize_rx(ctx, &self.codebook)?;
        let residuals = Residuals::new(&y, &ctx.h, ctx.rho, &self.codebook)?;
        self.receivers
            .iter()
            .map(|r| r.decide(&residuals, Some(&ctx.genie)).map_err(SimError::from))
            .collect()
    }

    fn run_batch(&self, point: usize, batch: u64) -> Result<Tally, SimError> {
        let start = batch * BATCH_TRIALS;
        let end = (start + BATCH_TRIALS).min(self.config.max_trials);
        let mut tally = Tally::new(self.receivers.len());
        for trial in start..end {
            let ctx = self.trial_context(point, trial)?;
            for (r, d) in self.decide(&ctx)?.into_iter().enumerate() {
                let e = self.codebook.bit_errors(ctx.tx_index, d) as u64;
                tally.bit_errors[r] += e;
                tally.block_errors[r] += u64::from(d != ctx.tx_index);
            }
            tally.trials += 1;
        }
        Ok(tally)
    }

    fn run_point(&self, pool: &rayon::ThreadPool, point: usize) -> Result<BerPoint, SimError> {
        let c = &self.config;
        let total_batches = c.max_trials.div_ceil(BATCH_TRIALS);
        let mut tally = Tally::new(self.receivers.len());
        let mut next = 0u64;
        let mut round = 1u64;
        let stop = 'outer: loop {
            let end = (next + round).min(total_batches);
            let batches: Vec<Result<Tally, SimError>> =
                pool.install(|| (next..end).into_par_iter().map(|b| self.run_batch(point, b)).collect());
            for b in batches {
                tally.absorb(&b?);
                if tally.bit_errors.iter().all(|&e| e >= c.min_errors) {
                    break 'outer StopReason::MinErrors;
                }
                if tally.trials >= c.max_trials {
                    break 'outer StopReason::MaxTrials;
                }
            }
            next = end;
            round = (round * 2).min(MAX_ROUND_BATCHES);
        };
        let bits = tally.trials * self.codebook.bits_per_codeword() as u64;
        let stats = self
            .receivers
            .iter()
            .enumerate()
            .map(|(r, rx)| {
                let e = tally.bit_errors[r];
                let (ci_lo, ci_hi) = wilson_interval(e, bits);
                ReceiverStats {
                    receiver: rx.kind(),
                    bit_errors: e,
                    block_errors: tally.block_errors[r],
                    ber: e as f64 / bits as f64,
                    ci_lo,
                    ci_hi,
                }
            })
            .collect();
        Ok(BerPoint { snr_db: c.snr_grid_db[point], trials: tally.trials, bits, stop, stats })
    }

    pub fn run(&self) -> Result<BerCurve, SimError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        let points = (0..self.config.snr_grid_db.len())
            .map(|j| self.run_point(&pool, j))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BerCurve { config: self.config.clone(), points })
    }
}

pub fn run_sweep(config: &SimConfig) -> Result<BerCurve, SimError> {
    Simulator::new(config.clone())?.run()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// d log10 BER / d log10 ρ.
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

impl SlopeFit {
    pub fn diversity(&self) -> f64 {
        -self.slope
    }
}

fn least_squares(xy: &[(f64, f64)]) -> SlopeFit {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = xy.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = if xy.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    SlopeFit { slope, stderr, points: xy.len() }
}

/// Least-squares slope of log10 BER against log10 ρ over the `window`
/// highest SNR points.
pub fn fit_slope(curve: &BerCurve, receiver: ReceiverKind, window: usize) -> Result<SlopeFit, SimError> {
    let series = curve.series(receiver);
    if window < 3 || series.len() < window {
        return Err(SimError::Insufficient {
            receiver,
            message: format!("window of {window} points needs at least 3 and at most {}", series.len()),
        });
    }
    fit_points(receiver, &series[series.len() - window..])
}

/// Same fit over the points with snr_db in [lo_db, hi_db].
pub fn fit_slope_between(curve: &BerCurve, receiver: ReceiverKind, lo_db: f64, hi_db: f64) -> Result<SlopeFit, SimError> {
    let series: Vec<_> = curve.series(receiver).into_iter().filter(|(x, _)| (lo_db..=hi_db).contains(x)).collect();
    if series.len() < 3 {
        return Err(SimError::Insufficient { receiver, message: format!("{} points in [{lo_db}, {hi_db}] dB", series.len()) });
    }
    fit_points(receiver, &series)
}

fn fit_points(receiver: ReceiverKind, series: &[(f64, ReceiverStats)]) -> Result<SlopeFit, SimError> {
    if let Some((db, s)) = series.iter().find(|(_, s)| s.bit_errors < MIN_SLOPE_ERRORS) {
        return Err(SimError::Insufficient {
            receiver,
            message: format!("{} bit errors at {db} dB, need {MIN_SLOPE_ERRORS}", s.bit_errors),
        });
    }
    let xy: Vec<(f64, f64)> = series.iter().map(|(db, s)| (db / 10.0, s.ber.log10())).collect();
    Ok(least_squares(&xy))
}

/// SNR in dB at which the receiver's curve crosses `target`, by linear
/// interpolation of log10 BER between the bracketing grid points.
pub fn snr_at_ber(curve: &BerCurve, receiver: ReceiverKind, target: f64) -> Result<f64, SimError> {
    let series = curve.series(receiver);
    for w in series.windows(2) {
        let ((x0, a), (x1, b)) = (w[0], w[1]);
        if a.ber >= target && b.ber < target && b.ber > 0.0 {
            let (l0, l1, lt) = (a.ber.log10(), b.ber.log10(), target.log10());
            return Ok(x0 + (x1 - x0) * (l0 - lt) / (l0 - l1));
        }
    }
    Err(SimError::NotBracketed { receiver, target })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverGap {
    pub a: ReceiverKind,
    pub b: ReceiverKind,
    /// SNR of `a` minus SNR of `b` at the target BER.
    pub db: f64,
}

/// Pairwise SNR gaps at `target` between all receivers of the curve.
pub fn compare_receivers_at_ber(curve: &BerCurve, target: f64) -> Result<Vec<ReceiverGap>, SimError> {
    let kinds = &curve.config.receivers;
    let snr = kinds.iter().map(|&k| snr_at_ber(curve, k, target)).collect::<Result<Vec<_>, _>>()?;
    let mut gaps = Vec::new();
    for i in 0..kinds.len() {
        for j in 0..kinds.len() {
            if i != j {
                gaps.push(ReceiverGap { a: kinds[i], b: kinds[j], db: snr[i] - snr[j] });
            }
        }
    }
    Ok(gaps)
}

/// SNR of `a` minus SNR of `b` at `target`, needing only those two curves to cross it.
pub fn gap_at_ber(curve: &BerCurve, a: ReceiverKind, b: ReceiverKind, target: f64) -> Result<f64, SimError> {
    Ok(snr_at_ber(curve, a, target)? - snr_at_ber(curve, b, target)?)
}

/// Gap of `a` relative to `b`, from the output of [`compare_receivers_at_ber`].
pub fn gap_between(gaps: &[ReceiverGap], a: ReceiverKind, b: ReceiverKind) -> Option<f64> {
    gaps.iter().find(|g| g.a == a && g.b == b).map(|g| g.db)
}
