//! Impulsive noise blocks for the two dependence structures of the receive
//! array.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{StableError, Subordinator};
use crate::linalg::CMat;

/// Variance of each real Gaussian component before modulation by √A.
/// Equal to 2σ² with σ = 1, so that every real and imaginary part of an
/// entry is S_α(1, 0, 0) and the isotropic column law has unit scale.
pub const NOISE_COMPONENT_VARIANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseModel {
    /// One subordinator per time slot, shared by all receive antennas.
    ModelI,
    /// Independent subordinator per matrix entry.
    ModelII,
}

impl NoiseModel {
    pub fn label(self) -> &'static str {
        match self {
            NoiseModel::ModelI => "I",
            NoiseModel::ModelII => "II",
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for NoiseModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" | "model1" | "modeli" => Ok(NoiseModel::ModelI),
            "ii" | "2" | "model2" | "modelii" => Ok(NoiseModel::ModelII),
            other => Err(format!("unknown noise model `{other}` (expected I or II)")),
        }
    }
}

/// Realised subordinator values, the side information of the genie-aided
/// receiver.
#[derive(Debug, Clone, PartialEq)]
pub enum GenieRecord {
    /// A_k for each time slot k.
    PerColumn(Vec<f64>),
    /// A_{j,k} stored column-major with `n_r` rows.
    PerEntry { n_r: usize, values: Vec<f64> },
}

impl GenieRecord {
    /// Subordinator acting on entry (j, k).
    pub fn value(&self, j: usize, k: usize) -> f64 {
        match self {
            GenieRecord::PerColumn(a) => a[k],
            GenieRecord::PerEntry { n_r, values } => values[k * n_r + j],
        }
    }

    pub fn max(&self) -> f64 {
        let values = match self {
            GenieRecord::PerColumn(a) => a.as_slice(),
            GenieRecord::PerEntry { values, .. } => values.as_slice(),
        };
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn model(&self) -> NoiseModel {
        match self {
            GenieRecord::PerColumn(_) => NoiseModel::ModelI,
            GenieRecord::PerEntry { .. } => NoiseModel::ModelII,
        }
    }

    pub fn columns(&self) -> usize {
        match self {
            GenieRecord::PerColumn(a) => a.len(),
            GenieRecord::PerEntry { n_r, values } => values.len() / n_r.max(&1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBlock {
    pub w: CMat,
    pub genie: GenieRecord,
}

/// N_r × T_s block of complex isotropic SαS noise with unit scale.
///
/// For α = 2 the subordinator degenerates to 1 and the block is Gaussian.
pub fn sample_noise_block<R: Rng + ?Sized>(
    model: NoiseModel,
    alpha: f64,
    n_r: usize,
    t_s: usize,
    rng: &mut R,
) -> Result<NoiseBlock, StableError> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(StableError::Alpha(alpha));
    }
    let subordinator = if alpha < 2.0 { Some(Subordinator::new(alpha)?) } else { None };
    let draw_a = |rng: &mut R| subordinator.map_or(1.0, |s| s.sample(rng));
    let sd = NOISE_COMPONENT_VARIANCE.sqrt();
    let gauss = |rng: &mut R| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * sd
    };

    let mut w = CMat::zeros(n_r, t_s);
    let genie = match model {
        NoiseModel::ModelI => {
            let mut a = Vec::with_capacity(t_s);
            for k in 0..t_s {
                let ak = draw_a(rng);
                let scale = ak.sqrt();
                for j in 0..n_r {
                    w[(j, k)] = gauss(rng) * scale;
                }
                a.push(ak);
            }
            GenieRecord::PerColumn(a)
        }
        NoiseModel::ModelII => {
            let mut values = Vec::with_capacity(n_r * t_s);
            for k in 0..t_s {
                for j in 0..n_r {
                    let ajk = draw_a(rng);
                    w[(j, k)] = gauss(rng) * ajk.sqrt();
                    values.push(ajk);
                }
            }
            GenieRecord::PerEntry { n_r, values }
        }
    };
    Ok(NoiseBlock { w, genie })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // O(n²) Kendall tau; fine for the sample sizes used here.
    fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let mut s = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let p = (x[i] - x[j]) * (y[i] - y[j]);
                s += p.signum() as i64;
            }
        }
        2.0 * s as f64 / (n as f64 * (n as f64 - 1.0))
    }

    fn amplitude_pairs(model: NoiseModel, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let block = sample_noise_block(model, 0.5, 2, 2, &mut rng).unwrap();
            a.push(block.w[(0, 0)].norm());
            b.push(block.w[(1, 0)].norm());
        }
        (a, b)
    }

    #[test]
    fn genie_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b1 = sample_noise_block(NoiseModel::ModelI, 1.2, 3, 2, &mut rng).unwrap();
        assert_eq!(b1.w.shape(), (3, 2));
        assert!(matches!(&b1.genie, GenieRecord::PerColumn(a) if a.len() == 2));
        let b2 = sample_noise_block(NoiseModel::ModelII, 1.2, 3, 2, &mut rng).unwrap();
        assert!(matches!(&b2.genie, GenieRecord::PerEntry { n_r: 3, values } if values.len() == 6));
        assert!(b2.genie.max() >= b2.genie.value(2, 1));
        assert!(sample_noise_block(NoiseModel::ModelI, 2.1, 1, 1, &mut rng).is_err());
    }

    #[test]
    fn model_one_amplitudes_are_dependent() {
        let (a, b) = amplitude_pairs(NoiseModel::ModelI, 6000, 2);
        let tau = kendall_tau(&a, &b);
        assert!(tau > 0.1, "tau = {tau}");
    }

    #[test]
    fn model_two_amplitudes_are_independent() {
        // Null standard deviation of tau at n = 6000 is about 0.0086.
        let (a, b) = amplitude_pairs(NoiseModel::ModelII, 6000, 3);
        let tau = kendall_tau(&a, &b);
        assert!(tau.abs() < 0.03, "tau = {tau}");
    }

    #[test]
    fn gaussian_limit_has_component_variance_two() {
        for model in [NoiseModel::ModelI, NoiseModel::ModelII] {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let n = 50_000;
            let (mut re2, mut im2) = (0.0, 0.0);
            for _ in 0..n {
                let block = sample_noise_block(model, 2.0, 2, 2, &mut rng).unwrap();
                assert!(block.genie.max() == 1.0);
                for z in block.w.as_slice() {
                    re2 += z.re * z.re;
                    im2 += z.im * z.im;
                }
            }
            let m = (4 * n) as f64;
            assert!((re2 / m - 2.0).abs() < 0.05, "{model}: {}", re2 / m);
            assert!((im2 / m - 2.0).abs() < 0.05, "{model}: {}", im2 / m);
        }
    }
}
