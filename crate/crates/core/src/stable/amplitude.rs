//! Amplitude law of a d-dimensional isotropic SαS vector, evaluated by
//! Hankel-transform quadrature, and a cached log-density lookup table.
//!
//! With the joint characteristic function exp(−σ^α‖t‖^α), the amplitude
//! density is
//! `f(r) = K_d / r · ∫₀^∞ u^{d/2} J_{d/2−1}(u) exp(−(σu/r)^α) du`,
//! `K_d = 2 / (2^{d/2} Γ(d/2))`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use super::StableError;
use crate::quad::{euler_limit, integrate};
use crate::special::{bessel_j, bessel_j_zero, gamma, ln_gamma};

/// Nodes in every lookup table.
pub const TABLE_NODES: usize = 512;
/// Smallest tabulated radius.
pub const TABLE_R_MIN: f64 = 1e-3;

pub const TABLE_VERSION: u32 = 1;
pub const TABLE_MAGIC: &str = "sas-mimo-amplitude-table";

// Integrand is cut where the envelope exp(−(σu/r)^α) drops below e^{−60}.
const ENVELOPE_CUT: f64 = 60.0;
const DIRECT_INTERVALS: usize = 50;
const EULER_INTERVALS: usize = 64;
const PDF_ABS_TOL: f64 = 1e-8;

const TAIL_SEARCH_START: f64 = 2.0;
const TAIL_SEARCH_FACTOR: f64 = 1.5;
const TAIL_SEARCH_CAP: f64 = 1e8;
const TAIL_AGREEMENT: f64 = 0.01;
const TAIL_RUN: usize = 3;

/// Shape of the d-dimensional isotropic law whose amplitude is tabulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicAmplitudeSpec {
    alpha: f64,
    sigma: f64,
    d: usize,
}

impl IsotropicAmplitudeSpec {
    pub fn new(alpha: f64, sigma: f64, d: usize) -> Result<Self, StableError> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(StableError::Alpha(alpha));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(StableError::Sigma(sigma));
        }
        if d == 0 {
            return Err(StableError::Dimension(d));
        }
        Ok(Self { alpha, sigma, d })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn half_d(&self) -> f64 {
        0.5 * self.d as f64
    }

    fn ln_norm(&self) -> f64 {
        let h = self.half_d();
        std::f64::consts::LN_2 * (1.0 - h) - ln_gamma(h)
    }

    /// ln of the surface area 2π^{d/2}/Γ(d/2) of the unit sphere in ℝ^d.
    pub fn ln_sphere_area(&self) -> f64 {
        let h = self.half_d();
        std::f64::consts::LN_2 + h * PI.ln() - ln_gamma(h)
    }
}

/// Prefactor c of the dominant tail term c·r^{−α−1}.
///
/// Equal to α 2^α sin(πα/2)/(πα/2) · Γ(1+α/2) Γ((α+d)/2)/Γ(d/2) · σ^α.
/// Zero in the Gaussian case.
pub fn amplitude_tail_constant(spec: &IsotropicAmplitudeSpec) -> f64 {
    if spec.alpha == 2.0 {
        return 0.0;
    }
    series_coefficient(spec, 1)
}

/// Dominant tail term of the amplitude density.
pub fn amplitude_tail(r: f64, spec: &IsotropicAmplitudeSpec) -> f64 {
    amplitude_tail_constant(spec) * r.powf(-spec.alpha - 1.0)
}

// Coefficient c_k of r^{−kα−1} in the expansion
// f(r) ~ Σ_k c_k r^{−kα−1}, obtained termwise from the Mellin moments of J.
fn series_coefficient(spec: &IsotropicAmplitudeSpec, k: usize) -> f64 {
    let a = spec.alpha;
    let h = spec.half_d();
    let ka = k as f64 * a;
    // 1 / Γ(−kα/2) through the reflection formula.
    let s = (0.5 * PI * ka).sin();
    if s == 0.0 {
        return 0.0;
    }
    let inv_gamma_neg = -s * gamma(1.0 + 0.5 * ka) / PI;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let ln_mag = ka * std::f64::consts::LN_2 + ln_gamma(h + 0.5 * ka) - ln_gamma(k as f64 + 1.0)
        - ln_gamma(h)
        + ka * spec.sigma.ln();
    2.0 * sign * inv_gamma_neg * ln_mag.exp()
}

/// Partial sum of the first `terms` terms of the large-r expansion of the
/// density. Convergent for α < 1, asymptotic otherwise.
pub fn amplitude_tail_series(r: f64, spec: &IsotropicAmplitudeSpec, terms: usize) -> f64 {
    (1..=terms)
        .map(|k| series_coefficient(spec, k) * r.powf(-(k as f64) * spec.alpha - 1.0))
        .sum()
}

/// P(‖x‖ > r) from the same expansion, integrated termwise.
pub fn amplitude_tail_mass(r: f64, spec: &IsotropicAmplitudeSpec, terms: usize) -> f64 {
    (1..=terms)
        .map(|k| {
            let ka = k as f64 * spec.alpha;
            series_coefficient(spec, k) * r.powf(-ka) / ka
        })
        .sum()
}

/// Density of the amplitude ‖x‖ at radius r ≥ 0.
pub fn amplitude_pdf(r: f64, spec: &IsotropicAmplitudeSpec) -> Result<f64, StableError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(StableError::Quadrature { r, error: f64::NAN });
    }
    if r == 0.0 {
        return Ok(if spec.d == 1 {
            2.0 / PI * gamma(1.0 + 1.0 / spec.alpha) / spec.sigma
        } else {
            0.0
        });
    }
    let (integral, error) = hankel_integral(r, spec);
    let scale = spec.ln_norm().exp() / r;
    let (value, error) = (scale * integral, scale * error);
    if error.is_nan() || error > PDF_ABS_TOL {
        return Err(StableError::Quadrature { r, error });
    }
    Ok(value.max(0.0))
}

fn hankel_integral(r: f64, spec: &IsotropicAmplitudeSpec) -> (f64, f64) {
    let nu = spec.half_d() - 1.0;
    let h = spec.half_d();
    let (alpha, ratio) = (spec.alpha, spec.sigma / r);
    let f = move |u: f64| {
        if u == 0.0 {
            return if spec.d == 1 { (2.0 / PI).sqrt() } else { 0.0 };
        }
        u.powf(h) * bessel_j(nu, u) * (-(ratio * u).powf(alpha)).exp()
    };
    let u_cut = ENVELOPE_CUT.powf(1.0 / alpha) / ratio;

    let mut sum = 0.0;
    let mut err = 0.0;
    let mut left = 0.0;
    let mut scale = 0.0f64;
    let mut partial = Vec::with_capacity(EULER_INTERVALS + 1);
    for k in 1..=DIRECT_INTERVALS + EULER_INTERVALS {
        let zero = bessel_j_zero(nu, k);
        let right = zero.min(u_cut);
        let est = integrate(&f, left, right, 1e-15 * scale, 1e-13, 64);
        sum += est.value;
        err += est.error;
        scale = scale.max(est.value.abs());
        if right == u_cut {
            return (sum, err);
        }
        left = right;
        if k >= DIRECT_INTERVALS {
            partial.push(sum);
        }
    }
    let limit = euler_limit(&partial);
    (limit.value, err + limit.error)
}

/// How the table extends beyond its last node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// f(r) = constant · r^{−α−1}.
    PowerLaw { constant: f64 },
    /// Chi-type decay with per-component variance 2σ².
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported table version {0}")]
    Version(u32),
    #[error("invalid spec: {0}")]
    Spec(#[from] StableError),
}

/// Immutable log-density table on a log-spaced grid with monotone cubic
/// interpolation in (ln r, ln f).
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudePdfTable {
    spec: IsotropicAmplitudeSpec,
    grid: Vec<f64>,
    log_values: Vec<f64>,
    slopes: Vec<f64>,
    tail: TailModel,
    ln_r_min: f64,
    step: f64,
}

/// Builds the table, choosing r_max where the tail term and quadrature agree.
pub fn build_amplitude_table(spec: &IsotropicAmplitudeSpec) -> Result<AmplitudePdfTable, StableError> {
    let (r_max, tail) = if spec.alpha == 2.0 {
        // Keeps the last node near f ≈ 1e-9, above the quadrature noise floor.
        let r_max = 2.0 * spec.sigma * (12f64.sqrt() + (spec.d as f64 - 1.0).sqrt());
        (r_max, TailModel::Gaussian { sigma: spec.sigma })
    } else {
        (tail_onset(spec)?, TailModel::PowerLaw { constant: amplitude_tail_constant(spec) })
    };
    let ln_r_min = TABLE_R_MIN.ln();
    let step = (r_max.ln() - ln_r_min) / (TABLE_NODES - 1) as f64;
    let grid = log_grid(ln_r_min, step);
    let log_values = grid
        .iter()
        .map(|&r| amplitude_pdf(r, spec).map(f64::ln))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(i) = log_values.iter().position(|v| !v.is_finite()) {
        return Err(StableError::Quadrature { r: grid[i], error: f64::NAN });
    }
    let slopes = pchip_slopes(&log_values, step);
    Ok(AmplitudePdfTable { spec: *spec, grid, log_values, slopes, tail, ln_r_min, step })
}

fn log_grid(ln_r_min: f64, step: f64) -> Vec<f64> {
    (0..TABLE_NODES).map(|i| (ln_r_min + step * i as f64).exp()).collect()
}

// First radius of a geometric probe sequence that starts a run of
// TAIL_RUN consecutive probes agreeing with the tail term within 1%.
fn tail_onset(spec: &IsotropicAmplitudeSpec) -> Result<f64, StableError> {
    let mut r = TAIL_SEARCH_START * spec.sigma;
    let mut run_start = None;
    let mut run = 0;
    while r <= TAIL_SEARCH_CAP * spec.sigma {
        let ok = match amplitude_pdf(r, spec) {
            Ok(v) => (v / amplitude_tail(r, spec) - 1.0).abs() < TAIL_AGREEMENT,
            Err(_) => false,
        };
        if ok {
            run_start.get_or_insert(r);
            run += 1;
            if run == TAIL_RUN {
                return Ok(run_start.unwrap_or(r));
            }
        } else {
            run = 0;
            run_start = None;
        }
        r *= TAIL_SEARCH_FACTOR;
    }
    Err(StableError::TailBracket(r))
}

// Fritsch–Butland slopes on a uniform grid: harmonic mean of neighbouring
// secants, zero at local extrema.
fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        m[i] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
    }
    m
}

impl AmplitudePdfTable {
    pub fn spec(&self) -> &IsotropicAmplitudeSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    /// Prefactor of the r^{−α−1} extrapolation (zero for α = 2).
    pub fn tail_constant(&self) -> f64 {
        match self.tail {
            TailModel::PowerLaw { constant } => constant,
            TailModel::Gaussian { .. } => 0.0,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// ln f(r) of the amplitude density.
    ///
    /// Below the grid the density is continued as c·r^{d−1}, its small-r
    /// behaviour; beyond the grid the tail model applies.
    pub fn log_amplitude(&self, r: f64) -> f64 {
        let d1 = self.spec.d as f64 - 1.0;
        let n = self.grid.len();
        if r <= 0.0 {
            return if self.spec.d == 1 { self.log_values[0] } else { f64::NEG_INFINITY };
        }
        let s = r.ln();
        if r < self.grid[0] {
            return self.log_values[0] + d1 * (s - self.ln_r_min);
        }
        if r > self.grid[n - 1] {
            return match self.tail {
                TailModel::PowerLaw { constant } => constant.ln() - (self.spec.alpha + 1.0) * s,
                TailModel::Gaussian { sigma } => {
                    let rn = self.grid[n - 1];
                    self.log_values[n - 1] + d1 * (s - rn.ln()) - (r * r - rn * rn) / (4.0 * sigma * sigma)
                }
            };
        }
        let x = (s - self.ln_r_min) / self.step;
        let i = (x.floor() as usize).min(n - 2);
        let t = (x - i as f64).clamp(0.0, 1.0);
        let (y0, y1) = (self.log_values[i], self.log_values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    pub fn amplitude(&self, r: f64) -> f64 {
        self.log_amplitude(r).exp()
    }

    /// ln of the joint density of the d-dimensional vector at any point of
    /// norm r: ln f(r) − (d−1) ln r − ln |S^{d−1}|. Finite at r = 0.
    pub fn log_vector_density(&self, r: f64) -> f64 {
        let r = r.max(self.grid[0]);
        self.log_amplitude(r) - (self.spec.d as f64 - 1.0) * r.ln() - self.spec.ln_sphere_area()
    }

    /// Versioned plain-text dump. Floats use shortest round-trip formatting,
    /// so parsing reproduces the table bit for bit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{TABLE_MAGIC} v{TABLE_VERSION}");
        let _ = writeln!(out, "alpha {:?}", self.spec.alpha);
        let _ = writeln!(out, "sigma {:?}", self.spec.sigma);
        let _ = writeln!(out, "d {}", self.spec.d);
        let _ = writeln!(out, "ln_r_min {:?}", self.ln_r_min);
        let _ = writeln!(out, "step {:?}", self.step);
        match self.tail {
            TailModel::PowerLaw { constant } => {
                let _ = writeln!(out, "tail power {constant:?}");
            }
            TailModel::Gaussian { sigma } => {
                let _ = writeln!(out, "tail gaussian {sigma:?}");
            }
        }
        let _ = writeln!(out, "nodes {}", self.grid.len());
        for (v, m) in self.log_values.iter().zip(&self.slopes) {
            let _ = writeln!(out, "{v:?} {m:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TableParseError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| TableParseError::Malformed {
                line: 0,
                message: format!("unexpected end of input, expected {what}"),
            })
        };
        let (ln, header) = next("header")?;
        let version = header
            .strip_prefix(TABLE_MAGIC)
            .and_then(|v| v.trim().strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| malformed(ln, "missing table header"))?;
        if version != TABLE_VERSION {
            return Err(TableParseError::Version(version));
        }
        let alpha: f64 = keyed(next("alpha")?, "alpha")?;
        let sigma: f64 = keyed(next("sigma")?, "sigma")?;
        let d: usize = keyed(next("d")?, "d")?;
        let ln_r_min: f64 = keyed(next("ln_r_min")?, "ln_r_min")?;
        let step: f64 = keyed(next("step")?, "step")?;
        let (ln, tail_line) = next("tail")?;
        let tail = match tail_line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["tail", "power", c] => TailModel::PowerLaw { constant: parse_num(ln, c)? },
            ["tail", "gaussian", s] => TailModel::Gaussian { sigma: parse_num(ln, s)? },
            _ => return Err(malformed(ln, "bad tail line")),
        };
        let nodes: usize = keyed(next("nodes")?, "nodes")?;
        if nodes < 2 {
            return Err(malformed(ln, "need at least two nodes"));
        }
        let mut log_values = Vec::with_capacity(nodes);
        let mut slopes = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            let (ln, row) = next("node row")?;
            let mut parts = row.split_whitespace();
            let (Some(v), Some(m), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(malformed(ln, "node row needs two values"));
            };
            let v: f64 = parse_num(ln, v)?;
            if !v.is_finite() {
                return Err(malformed(ln, "log value not finite"));
            }
            log_values.push(v);
            slopes.push(parse_num(ln, m)?);
        }
        let spec = IsotropicAmplitudeSpec::new(alpha, sigma, d)?;
        let mut grid: Vec<f64> = (0..nodes).map(|i| (ln_r_min + step * i as f64).exp()).collect();
        grid.dedup();
        if grid.len() != nodes || step.is_nan() || step <= 0.0 {
            return Err(malformed(0, "grid not strictly increasing"));
        }
        Ok(Self { spec, grid, log_values, slopes, tail, ln_r_min, step })
    }
}

fn malformed(line: usize, message: &str) -> TableParseError {
    TableParseError::Malformed { line, message: message.to_string() }
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, TableParseError> {
    s.parse().map_err(|_| malformed(line, &format!("cannot parse `{s}`")))
}

fn keyed<T: std::str::FromStr>((line, text): (usize, &str), key: &str) -> Result<T, TableParseError> {
    let value = text
        .strip_prefix(key)
        .filter(|rest| rest.starts_with(' '))
        .ok_or_else(|| malformed(line, &format!("expected `{key}`")))?;
    parse_num(line, value.trim())
}
