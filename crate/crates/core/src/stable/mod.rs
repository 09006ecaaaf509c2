//! α-stable laws: parameters, samplers, characteristic function and the
//! dominant tail terms of the density and CCDF.
//!
//! Parametrisation follows the characteristic function
//! `φ(t) = exp{ iμt − |σt|^α (1 − iβ sign(t) ω(t, α)) }` with
//! `ω = tan(πα/2)` for α ≠ 1 and `ω = −(2/π) log|t|` for α = 1.

mod amplitude;
mod noise;

pub use amplitude::{
    amplitude_pdf, amplitude_tail, amplitude_tail_constant, amplitude_tail_mass, amplitude_tail_series, build_amplitude_table,
    AmplitudePdfTable, IsotropicAmplitudeSpec, TableParseError, TailModel, TABLE_MAGIC, TABLE_NODES,
    TABLE_R_MIN, TABLE_VERSION,
};
pub use noise::{sample_noise_block, GenieRecord, NoiseBlock, NoiseModel, NOISE_COMPONENT_VARIANCE};

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use thiserror::Error;

use crate::special::gamma;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StableError {
    #[error("characteristic exponent alpha = {0} outside (0, 2]")]
    Alpha(f64),
    #[error("subordinator exponent alpha = {0} outside (0, 2)")]
    SubordinatorAlpha(f64),
    #[error("scale sigma = {0} must be positive")]
    Sigma(f64),
    #[error("skew beta = {0} outside [-1, 1]")]
    Beta(f64),
    #[error("dimension d = {0} must be at least 1")]
    Dimension(usize),
    #[error("quadrature did not converge at r = {r}: error estimate {error:e}")]
    Quadrature { r: f64, error: f64 },
    #[error("tail formula never agreed with quadrature up to r = {0}")]
    TailBracket(f64),
    #[error("shift mu = {0} must be finite")]
    Mu(f64),
}

/// Parameter bundle of one real stable law S_α(σ, β, μ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    sigma: f64,
    beta: f64,
    mu: f64,
}

impl StableParams {
    pub fn new(alpha: f64, sigma: f64, beta: f64, mu: f64) -> Result<Self, StableError> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(StableError::Alpha(alpha));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(StableError::Sigma(sigma));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(StableError::Beta(beta));
        }
        if !mu.is_finite() {
            return Err(StableError::Mu(mu));
        }
        Ok(Self { alpha, sigma, beta, mu })
    }

    /// Symmetric law S_α(σ, 0, 0).
    pub fn symmetric(alpha: f64, sigma: f64) -> Result<Self, StableError> {
        Self::new(alpha, sigma, 0.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }
}

/// C_α = Γ(α) sin(πα/2) / π.
pub fn stable_constant(alpha: f64) -> f64 {
    gamma(alpha) * (FRAC_PI_2 * alpha).sin() / PI
}

// Chambers–Mallows–Stuck transform of a uniform angle and a unit exponential
// into a standard (σ = 1, μ = 0) variate.
fn cms_standard(alpha: f64, beta: f64, v: f64, w: f64) -> f64 {
    if alpha == 1.0 {
        let bv = FRAC_PI_2 + beta * v;
        (bv * v.tan() - beta * ((FRAC_PI_2 * w * v.cos()) / bv).ln()) / FRAC_PI_2
    } else {
        let t = beta * (FRAC_PI_2 * alpha).tan();
        let b = t.atan() / alpha;
        let s = (1.0 + t * t).powf(0.5 / alpha);
        let arg = alpha * (v + b);
        s * arg.sin() / v.cos().powf(1.0 / alpha)
            * ((v - arg).cos() / w).powf((1.0 - alpha) / alpha)
    }
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Open interval (−π/2, π/2).
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return PI * (u - 0.5);
        }
    }
}

impl Distribution<f64> for StableParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_gaussian() {
            let g: f64 = rng.sample(StandardNormal);
            return self.mu + std::f64::consts::SQRT_2 * self.sigma * g;
        }
        let v = uniform_angle(rng);
        let w: f64 = rng.sample(Exp1);
        let x = cms_standard(self.alpha, self.beta, v, w);
        if self.alpha == 1.0 {
            self.sigma * x + 2.0 / PI * self.beta * self.sigma * self.sigma.ln() + self.mu
        } else {
            self.sigma * x + self.mu
        }
    }
}

/// One variate of S_α(σ, β, μ).
pub fn sample_stable<R: Rng + ?Sized>(params: &StableParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

/// The positive subordinator A ~ S_{α/2}([cos(πα/4)]^{2/α}, 1, 0) of the
/// compound-Gaussian representation; its Laplace transform is exp(−s^{α/2}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subordinator {
    alpha: f64,
}

impl Subordinator {
    pub fn new(alpha: f64) -> Result<Self, StableError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(StableError::SubordinatorAlpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Distribution<f64> for Subordinator {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // With β = 1 and this scale the CMS prefactor collapses to 1.
        let a = 0.5 * self.alpha;
        loop {
            let v = uniform_angle(rng);
            let w: f64 = rng.sample(Exp1);
            let arg = a * (v + FRAC_PI_2);
            let x = arg.sin() / v.cos().powf(1.0 / a) * ((v - arg).cos() / w).powf((1.0 - a) / a);
            if x > 0.0 && x.is_finite() {
                return x;
            }
        }
    }
}

pub fn sample_subordinator<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64, StableError> {
    Ok(Subordinator::new(alpha)?.sample(rng))
}

/// Dominant tail term α(1+β) C_α σ^α w^{−α−1} of the density as w → ∞.
/// The neglected remainder is O(w^{−2α−1}).
pub fn tail_pdf(w: f64, params: &StableParams) -> f64 {
    let a = params.alpha;
    a * (1.0 + params.beta) * stable_constant(a) * params.sigma.powf(a) * w.powf(-a - 1.0)
}

/// Dominant term C_α σ^α (1+β) λ^{−α} of P(w > λ).
pub fn tail_ccdf(lambda: f64, params: &StableParams) -> f64 {
    let a = params.alpha;
    stable_constant(a) * params.sigma.powf(a) * (1.0 + params.beta) * lambda.powf(-a)
}

/// Characteristic function φ(t).
pub fn char_fn(t: f64, params: &StableParams) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let a = params.alpha;
    let omega = if a == 1.0 {
        -2.0 / PI * t.abs().ln()
    } else {
        (FRAC_PI_2 * a).tan()
    };
    let magnitude = (params.sigma * t).abs().powf(a);
    let exponent = Complex64::new(0.0, params.mu * t)
        - magnitude * Complex64::new(1.0, -params.beta * t.signum() * omega);
    exponent.exp()
}
