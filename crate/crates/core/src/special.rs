//! Special functions: gamma family, Gaussian tail, Bessel functions of the
//! first kind and their zeros.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub use statrs::function::gamma::digamma;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Bessel function of the first kind J_ν(x) for ν > −1 and x ≥ 0.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    bessel_j_pair(nu, x).0
}

/// (J_ν(x), J_{ν+1}(x)).
pub fn bessel_j_pair(nu: f64, x: f64) -> (f64, f64) {
    debug_assert!(nu > -1.0 && x >= 0.0);
    if x == 0.0 {
        let j0 = if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        return (j0, 0.0);
    }
    if (nu + 0.5).abs() < f64::EPSILON {
        let s = (2.0 / (PI * x)).sqrt();
        return (s * x.cos(), s * x.sin());
    }
    if x >= hankel_threshold(nu + 1.0) {
        (hankel(nu, x), hankel(nu + 1.0, x))
    } else {
        miller(nu, x)
    }
}

fn hankel_threshold(nu: f64) -> f64 {
    30f64.max(nu * nu)
}

// Large-argument Hankel expansion; used only where the series terms fall
// below machine precision before they start to grow.
fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let eight_x = 8.0 * x;
    for k in 1..60 {
        let m = (2 * k - 1) as f64;
        let next = term * (mu - m * m) / (k as f64 * eight_x);
        if next.abs() > term.abs() && k > 2 {
            break;
        }
        term = next;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

// Miller backward recurrence from a high order, normalised with the
// Neumann identity (x/2)^ν = Σ_k (ν+2k) Γ(ν+k)/k! J_{ν+2k}(x).
fn miller(nu: f64, x: f64) -> (f64, f64) {
    let top = (x + 40.0 + 4.0 * x.sqrt()).ceil() as usize;
    let top = top + (top % 2);
    // weights[k] = (ν+2k) Γ(ν+k) / (k! Γ(ν+1)), with weights[0] = 1.
    let mut weights = Vec::with_capacity(top / 2 + 1);
    weights.push(1.0);
    let mut ratio = 1.0; // Γ(ν+k) / (k! Γ(ν+1)) at k = 1
    for k in 1..=top / 2 {
        let kf = k as f64;
        if k > 1 {
            ratio *= (nu + kf - 1.0) / kf;
        }
        weights.push((nu + 2.0 * kf) * ratio);
    }

    let mut upper = 0.0; // order m + 1
    let mut current = 1e-300; // order m
    let mut sum = if top.is_multiple_of(2) { weights[top / 2] * current } else { 0.0 };
    for m in (1..=top).rev() {
        let lower = 2.0 * (nu + m as f64) / x * current - upper;
        upper = current;
        current = lower;
        let idx = m - 1;
        if idx % 2 == 0 {
            sum += weights[idx / 2] * current;
        }
        if current.abs() > 1e250 {
            current *= 1e-250;
            upper *= 1e-250;
            sum *= 1e-250;
        }
    }
    let scale = (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp() / sum;
    (current * scale, upper * scale)
}

/// k-th positive zero (k ≥ 1) of J_ν: McMahon's expansion refined by Newton.
pub fn bessel_j_zero(nu: f64, k: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let b8 = 8.0 * beta;
    let mut z = beta
        - (mu - 1.0) / b8
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3))
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * b8.powi(5));
    for _ in 0..12 {
        let (j, j1) = bessel_j_pair(nu, z);
        let deriv = nu / z * j - j1;
        if deriv == 0.0 {
            break;
        }
        let step = j / deriv;
        if !step.is_finite() || step.abs() > 1.0 {
            break;
        }
        z -= step;
        if step.abs() < 1e-15 * z {
            break;
        }
    }
    z
}
