//! Asymptotic pairwise-error analysis: coding gains, diversity orders,
//! log-gain derivatives, the α thresholds of the minimum-distance rule, and
//! conditional PEPs for numeric cross-checks.
//!
//! Closed forms assume a unit-scale difference matrix and the noise scaling
//! under which the conditional PEP reads Q(√(ρ‖H(S−S′)A‖²/2)). With the
//! noise generated in [`crate::stable`] (component variance 2) that
//! normalization is met by differences with (S−S′)(S−S′)ᴴ = 4·I, see
//! [`UNIT_DIFFERENCE_SCALE`].

use std::f64::consts::PI;

use thiserror::Error;

use crate::codes::Codebook;
use crate::linalg::CMat;
use crate::quad::integrate;
use crate::receivers::ReceiverKind;
use crate::special::{digamma, ln_gamma, q_function};
use crate::stable::{GenieRecord, NoiseModel, NOISE_COMPONENT_VARIANCE};

/// Scale c of a scaled-unitary difference (S−S′)(S−S′)ᴴ = c·I at which the
/// conditional PEP under the simulated noise equals the closed-form
/// normalization. A pair with scale c behaves as the closed form at ρ·c/4.
pub const UNIT_DIFFERENCE_SCALE: f64 = 2.0 * NOISE_COMPONENT_VARIANCE;

/// Smallest and largest transmit-antenna counts probed when locating the α
/// thresholds.
pub const THRESHOLD_PROBE_NT: (usize, usize) = (2, 10);

const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("{name} = {value} outside the domain of the closed form")]
    Domain { name: &'static str, value: f64 },
    #[error("no closed form for {0}")]
    Unsupported(String),
    #[error("threshold root not bracketed on [{lo}, {hi}] for n_r = {n_r}")]
    Bracket { lo: f64, hi: f64, n_r: usize },
    #[error("codeword difference ({0}, {1}) is not scaled unitary")]
    NotScaledUnitary(usize, usize),
}

fn check_domain(n_t: f64, n_r: f64, alpha: f64) -> Result<(), TheoryError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(TheoryError::Domain { name: "alpha", value: alpha });
    }
    if !(n_t > 0.0 && n_t.is_finite()) {
        return Err(TheoryError::Domain { name: "n_t", value: n_t });
    }
    if !(n_r - 0.5 * alpha > 0.0 && n_r.is_finite()) {
        return Err(TheoryError::Domain { name: "n_r", value: n_r });
    }
    Ok(())
}

const LN_2_SQRT_PI: f64 = 1.265_512_123_484_645_4; // ln(2√π)
const LN_4: f64 = 2.0 * std::f64::consts::LN_2;

/// ln G_GAR for real-valued antenna counts (continuous extension).
pub fn ln_coding_gain_gar(n_t: f64, n_r: f64, alpha: f64) -> Result<f64, TheoryError> {
    check_domain(n_t, n_r, alpha)?;
    let an = alpha * n_t;
    let first = ln_gamma(0.5 * (an + 1.0)) - ln_gamma(0.5 * an + 1.0) - LN_2_SQRT_PI;
    let second = ln_gamma(1.0 + 0.5 * alpha) + ln_gamma(n_r - 0.5 * alpha)
        - ln_gamma(1.0 - 0.5 * alpha)
        - ln_gamma(n_r)
        + 0.5 * alpha * LN_4;
    Ok(-2.0 / an * first - 2.0 / alpha * second)
}

/// ln G_MDR for real-valued antenna counts; Model II carries an extra
/// factor N_r^{−2/α}.
pub fn ln_coding_gain_mdr(n_t: f64, n_r: f64, alpha: f64, model: NoiseModel) -> Result<f64, TheoryError> {
    check_domain(n_t, n_r, alpha)?;
    let n = n_r * n_t;
    let inner = n_t.ln() - LN_2_SQRT_PI + ln_gamma(0.5 * (1.0 + alpha)) + ln_gamma(n - 0.5 * alpha)
        - ln_gamma(1.0 - 0.5 * alpha)
        - ln_gamma(n)
        + 0.5 * alpha * LN_4;
    let base = -2.0 / alpha * inner;
    Ok(match model {
        NoiseModel::ModelI => base,
        NoiseModel::ModelII => base - 2.0 / alpha * n_r.ln(),
    })
}

pub fn coding_gain_gar(n_t: usize, n_r: usize, alpha: f64) -> Result<f64, TheoryError> {
    ln_coding_gain_gar(n_t as f64, n_r as f64, alpha).map(f64::exp)
}

pub fn coding_gain_mdr(n_t: usize, n_r: usize, alpha: f64, model: NoiseModel) -> Result<f64, TheoryError> {
    ln_coding_gain_mdr(n_t as f64, n_r as f64, alpha, model).map(f64::exp)
}

/// PEP ≈ (G_c·ρ)^{−G_d}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepAsymptote {
    pub coding_gain: f64,
    pub diversity_order: f64,
    pub receiver: ReceiverKind,
    pub model: NoiseModel,
}

impl PepAsymptote {
    pub fn evaluate(&self, rho: f64) -> f64 {
        (self.coding_gain * rho).powf(-self.diversity_order)
    }
}

pub fn pep_asymptote(
    receiver: ReceiverKind,
    model: NoiseModel,
    n_t: usize,
    n_r: usize,
    alpha: f64,
) -> Result<PepAsymptote, TheoryError> {
    let (coding_gain, diversity_order) = match (receiver, model) {
        (ReceiverKind::Gar, NoiseModel::ModelI) => (coding_gain_gar(n_t, n_r, alpha)?, 0.5 * alpha * n_t as f64),
        (ReceiverKind::Mdr, _) => (coding_gain_mdr(n_t, n_r, alpha, model)?, 0.5 * alpha),
        (r, m) => return Err(TheoryError::Unsupported(format!("{r} under Model {m}"))),
    };
    Ok(PepAsymptote { coding_gain, diversity_order, receiver, model })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    Nr,
    Nt,
}

/// Closed-form ∂/∂N log G for GAR w.r.t. N_r and MDR (Model I) w.r.t.
/// N_r or N_t.
pub fn dlog_gain(receiver: ReceiverKind, wrt: Wrt, n_t: f64, n_r: f64, alpha: f64) -> Result<f64, TheoryError> {
    check_domain(n_t, n_r, alpha)?;
    let k = -2.0 / alpha;
    match (receiver, wrt) {
        (ReceiverKind::Gar, Wrt::Nr) => Ok(k * (digamma(n_r - 0.5 * alpha) - digamma(n_r))),
        (ReceiverKind::Mdr, Wrt::Nr) => {
            let n = n_r * n_t;
            Ok(k * n_t * (digamma(n - 0.5 * alpha) - digamma(n)))
        }
        (ReceiverKind::Mdr, Wrt::Nt) => {
            let n = n_r * n_t;
            Ok(k * (1.0 / n_t + n_r * (digamma(n - 0.5 * alpha) - digamma(n))))
        }
        (r, w) => Err(TheoryError::Unsupported(format!("closed-form derivative of {r} gain w.r.t. {w:?}"))),
    }
}

/// Central finite difference of the log coding gain, available for every
/// (receiver, variable) pair including GAR w.r.t. N_t.
pub fn dlog_gain_numeric(
    receiver: ReceiverKind,
    model: NoiseModel,
    wrt: Wrt,
    n_t: f64,
    n_r: f64,
    alpha: f64,
    step: f64,
) -> Result<f64, TheoryError> {
    let g = |nt: f64, nr: f64| match receiver {
        ReceiverKind::Gar => ln_coding_gain_gar(nt, nr, alpha),
        ReceiverKind::Mdr => ln_coding_gain_mdr(nt, nr, alpha, model),
        r => Err(TheoryError::Unsupported(format!("coding gain of {r}"))),
    };
    let (hi, lo) = match wrt {
        Wrt::Nr => (g(n_t, n_r + step)?, g(n_t, n_r - step)?),
        Wrt::Nt => (g(n_t + step, n_r)?, g(n_t - step, n_r)?),
    };
    Ok((hi - lo) / (2.0 * step))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaThresholds {
    pub n_r: usize,
    pub alpha0: f64,
    pub alpha1: f64,
}

// ln G_MDR(N+1) − ln G_MDR(N), Model I.
fn mdr_gain_step(n_t: usize, n_r: usize, alpha: f64) -> f64 {
    let a = ln_coding_gain_mdr(n_t as f64 + 1.0, n_r as f64, alpha, NoiseModel::ModelI);
    let b = ln_coding_gain_mdr(n_t as f64, n_r as f64, alpha, NoiseModel::ModelI);
    a.and_then(|a| b.map(|b| a - b)).unwrap_or(f64::NAN)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, n_r: usize) -> Result<f64, TheoryError> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(TheoryError::Bracket { lo, hi, n_r });
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// α₀ and α₁ bounding the regimes in which G_MDR is monotone in N_t.
///
/// Below α₀ every probed step G(N+1)/G(N) with N, N+1 inside
/// [`THRESHOLD_PROBE_NT`] is below 1; above α₁ every such step is above 1.
pub fn find_alpha_thresholds(n_r: usize) -> Result<AlphaThresholds, TheoryError> {
    if n_r == 0 {
        return Err(TheoryError::Domain { name: "n_r", value: 0.0 });
    }
    let probes: Vec<usize> = (THRESHOLD_PROBE_NT.0..THRESHOLD_PROBE_NT.1).collect();
    let max_step = |a: f64| probes.iter().map(|&n| mdr_gain_step(n, n_r, a)).fold(f64::NEG_INFINITY, f64::max);
    let min_step = |a: f64| probes.iter().map(|&n| mdr_gain_step(n, n_r, a)).fold(f64::INFINITY, f64::min);
    let (lo, hi) = (1e-3, 2.0 - 1e-9);
    let alpha0 = bisect(max_step, lo, hi, n_r)?;
    let alpha1 = bisect(min_step, lo, hi, n_r)?;
    Ok(AlphaThresholds { n_r, alpha0, alpha1 })
}

/// Craig's form (1/π)∫₀^{π/2} exp(−x²/(2 sin²θ)) dθ of Q(x), x ≥ 0.
pub fn craig_q(x: f64) -> f64 {
    let f = |t: f64| {
        let s = t.sin();
        if s == 0.0 { 0.0 } else { (-x * x / (2.0 * s * s)).exp() }
    };
    integrate(&f, 0.0, 0.5 * PI, 1e-15, 1e-13, 200).value / PI
}

// ‖H(S−S′)‖² weighted entrywise by 1/A.
fn weighted_distance(h: &CMat, genie: &GenieRecord, s: &CMat, s_prime: &CMat) -> f64 {
    let e = h.mul(&s.sub(s_prime));
    let mut sum = 0.0;
    for k in 0..e.cols() {
        for j in 0..e.rows() {
            sum += e[(j, k)].norm_sqr() / genie.value(j, k);
        }
    }
    sum
}

const PEP_DENOM: f64 = 4.0 * NOISE_COMPONENT_VARIANCE;

/// P(S → S′ | H, A) of the genie-aided rule.
pub fn conditional_pep_gar(h: &CMat, genie: &GenieRecord, rho: f64, s: &CMat, s_prime: &CMat) -> f64 {
    q_function((rho * weighted_distance(h, genie, s, s_prime) / PEP_DENOM).sqrt())
}

/// Same quantity through Craig's integral.
pub fn conditional_pep_gar_craig(h: &CMat, genie: &GenieRecord, rho: f64, s: &CMat, s_prime: &CMat) -> f64 {
    craig_q((rho * weighted_distance(h, genie, s, s_prime) / PEP_DENOM).sqrt())
}

/// Exact P(S → S′ | H, A) of the minimum-distance rule.
pub fn conditional_pep_mdr(h: &CMat, genie: &GenieRecord, rho: f64, s: &CMat, s_prime: &CMat) -> f64 {
    let e = h.mul(&s.sub(s_prime));
    let energy = e.norm_sqr();
    if energy == 0.0 {
        return 0.5;
    }
    let mut spread = 0.0;
    for k in 0..e.cols() {
        for j in 0..e.rows() {
            spread += genie.value(j, k) * e[(j, k)].norm_sqr();
        }
    }
    q_function((rho * energy * energy / (PEP_DENOM * spread)).sqrt())
}

/// Upper bound on the minimum-distance conditional PEP that replaces every
/// subordinator by A_max.
pub fn conditional_pep_mdr_bound(h: &CMat, genie: &GenieRecord, rho: f64, s: &CMat, s_prime: &CMat) -> f64 {
    let energy = h.mul(&s.sub(s_prime)).norm_sqr();
    q_function((rho * energy / (PEP_DENOM * genie.max())).sqrt())
}

/// Union bound on the BER,
/// (1/|𝒮|) Σ_S Σ_{S′≠S} PEP(S→S′)·d_H(S,S′)/bits, with each PEP taken from
/// the asymptote at ρ·c/[`UNIT_DIFFERENCE_SCALE`]. Capped at 1/2.
pub fn ber_union_bound(codebook: &Codebook, asymptote: &PepAsymptote, rho: f64) -> Result<f64, TheoryError> {
    let scales = pair_scales(codebook)?;
    let bits = codebook.bits_per_codeword() as f64;
    let total: f64 = scales
        .iter()
        .map(|&(i, j, c)| asymptote.evaluate(rho * c / UNIT_DIFFERENCE_SCALE) * codebook.bit_errors(i, j) as f64)
        .sum();
    Ok((total / (codebook.len() as f64 * bits)).min(0.5))
}

fn pair_scales(codebook: &Codebook) -> Result<Vec<(usize, usize, f64)>, TheoryError> {
    let mut out = Vec::new();
    for i in 0..codebook.len() {
        for j in 0..codebook.len() {
            if i == j {
                continue;
            }
            let d = codebook.codeword(i).sub(codebook.codeword(j));
            let c = d.scaled_unitary_factor(1e-12).ok_or(TheoryError::NotScaledUnitary(i, j))?;
            out.push((i, j, c));
        }
    }
    Ok(out)
}

/// Row kind of a theory curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoryKind {
    /// (G_c·ρ)^{−G_d}.
    Asymptote,
    /// BER union bound built from the asymptote.
    Union,
}

impl TheoryKind {
    pub fn label(self) -> &'static str {
        match self {
            TheoryKind::Asymptote => "theory",
            TheoryKind::Union => "union",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub kind: TheoryKind,
    pub receiver: ReceiverKind,
    pub model: NoiseModel,
    pub alpha: f64,
    pub n_t: usize,
    pub n_r: usize,
    pub snr_db: f64,
    pub ber: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TheoryCurve {
    pub points: Vec<TheoryPoint>,
}

impl TheoryCurve {
    pub fn extend(&mut self, other: TheoryCurve) {
        self.points.extend(other.points);
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Asymptote and union-bound rows for one receiver over an SNR grid.
pub fn theory_curve(
    receiver: ReceiverKind,
    model: NoiseModel,
    n_r: usize,
    alpha: f64,
    codebook: &Codebook,
    snr_db: &[f64],
) -> Result<TheoryCurve, TheoryError> {
    let asym = pep_asymptote(receiver, model, codebook.n_t(), n_r, alpha)?;
    let mut points = Vec::with_capacity(2 * snr_db.len());
    for &db in snr_db {
        let rho = db_to_linear(db);
        let base = TheoryPoint {
            kind: TheoryKind::Asymptote,
            receiver,
            model,
            alpha,
            n_t: codebook.n_t(),
            n_r,
            snr_db: db,
            ber: asym.evaluate(rho),
        };
        points.push(base);
        points.push(TheoryPoint { kind: TheoryKind::Union, ber: ber_union_bound(codebook, &asym, rho)?, ..base });
    }
    Ok(TheoryCurve { points })
}
