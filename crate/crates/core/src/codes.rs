//! Channel model Y = √ρ·H·S + W: constellations, space-time codebooks,
//! Rayleigh channel draws and received-block synthesis.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::CMat;
use crate::stable::GenieRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("codeword index {index} out of range for a codebook of {size}")]
    Index { index: usize, size: usize },
    #[error("SNR scale rho must be finite and nonnegative")]
    Rho,
    #[error("unknown code `{0}` (expected alamouti or uncoded)")]
    UnknownCode(String),
    #[error("unknown constellation `{0}` (expected bpsk or qpsk)")]
    UnknownConstellation(String),
}

/// Unit-average-energy symbol alphabet with Gray labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constellation {
    Bpsk,
    Qpsk,
}

impl Constellation {
    pub fn size(self) -> usize {
        match self {
            Constellation::Bpsk => 2,
            Constellation::Qpsk => 4,
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        self.size().trailing_zeros()
    }

    /// Symbol carrying bit label `label` (bit 0 is the most significant).
    pub fn symbol(self, label: usize) -> Complex64 {
        match self {
            Constellation::Bpsk => Complex64::new(if label & 1 == 0 { 1.0 } else { -1.0 }, 0.0),
            Constellation::Qpsk => {
                let re = if label & 2 == 0 { 1.0 } else { -1.0 };
                let im = if label & 1 == 0 { 1.0 } else { -1.0 };
                Complex64::new(re, im) * FRAC_1_SQRT_2
            }
        }
    }

    pub fn symbols(self) -> Vec<Complex64> {
        (0..self.size()).map(|i| self.symbol(i)).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Constellation::Bpsk => "bpsk",
            Constellation::Qpsk => "qpsk",
        }
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Constellation {
    type Err = CodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Constellation::Bpsk),
            "qpsk" => Ok(Constellation::Qpsk),
            other => Err(CodeError::UnknownConstellation(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeKind {
    /// 2 × 2 orthogonal space-time block code.
    Alamouti,
    /// One antenna, one symbol per block.
    Uncoded,
}

impl CodeKind {
    pub fn name(self) -> &'static str {
        match self {
            CodeKind::Alamouti => "alamouti",
            CodeKind::Uncoded => "uncoded",
        }
    }

    pub fn n_t(self) -> usize {
        match self {
            CodeKind::Alamouti => 2,
            CodeKind::Uncoded => 1,
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodeKind {
    type Err = CodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alamouti" => Ok(CodeKind::Alamouti),
            "uncoded" => Ok(CodeKind::Uncoded),
            other => Err(CodeError::UnknownCode(other.to_string())),
        }
    }
}

/// [[s1, −s2*], [s2, s1*]]: rows are antennas, columns are time slots.
pub fn alamouti_encode(s1: Complex64, s2: Complex64) -> CMat {
    CMat::from_rows(&[vec![s1, -s2.conj()], vec![s2, s1.conj()]])
}

/// Complete, immutable codeword list with bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    kind: CodeKind,
    constellation: Constellation,
    n_t: usize,
    t_s: usize,
    codewords: Vec<CMat>,
    labels: Vec<u32>,
    bits_per_codeword: u32,
}

pub fn enumerate_codebook(kind: CodeKind, constellation: Constellation) -> Codebook {
    let m = constellation.size();
    let b = constellation.bits_per_symbol();
    let (n_t, t_s, codewords, labels) = match kind {
        CodeKind::Alamouti => {
            let mut words = Vec::with_capacity(m * m);
            let mut labels = Vec::with_capacity(m * m);
            for i1 in 0..m {
                for i2 in 0..m {
                    words.push(alamouti_encode(constellation.symbol(i1), constellation.symbol(i2)));
                    labels.push(((i1 as u32) << b) | i2 as u32);
                }
            }
            (2, 2, words, labels)
        }
        CodeKind::Uncoded => {
            let words = (0..m).map(|i| CMat::from_rows(&[vec![constellation.symbol(i)]])).collect();
            (1, 1, words, (0..m as u32).collect())
        }
    };
    let bits_per_codeword = (codewords.len() as u32).trailing_zeros();
    Codebook { kind, constellation, n_t, t_s, codewords, labels, bits_per_codeword }
}

impl Codebook {
    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn constellation(&self) -> Constellation {
        self.constellation
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn t_s(&self) -> usize {
        self.t_s
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[CMat] {
        &self.codewords
    }

    pub fn codeword(&self, i: usize) -> &CMat {
        &self.codewords[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn bits_per_codeword(&self) -> u32 {
        self.bits_per_codeword
    }

    /// Hamming distance between the labels of codewords i and j.
    pub fn bit_errors(&self, i: usize, j: usize) -> u32 {
        (self.labels[i] ^ self.labels[j]).count_ones()
    }

    /// Scale c of every difference with (S−S′)(S−S′)ᴴ = c·I, or None if some
    /// difference is not scaled unitary.
    pub fn difference_scales(&self) -> Option<Vec<(usize, usize, f64)>> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i != j {
                    let d = self.codewords[i].sub(&self.codewords[j]);
                    out.push((i, j, d.scaled_unitary_factor(1e-12)?));
                }
            }
        }
        Some(out)
    }

    /// Smallest scaled-unitary difference factor c_min.
    pub fn min_difference_scale(&self) -> Option<f64> {
        self.difference_scales()
            .map(|v| v.iter().map(|&(_, _, c)| c).fold(f64::INFINITY, f64::min))
    }
}

/// N_r × N_t matrix of i.i.d. CN(0, 1) entries.
pub fn sample_channel<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> CMat {
    let mut h = CMat::zeros(n_r, n_t);
    for c in 0..n_t {
        for r in 0..n_r {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            h[(r, c)] = Complex64::new(re, im) * FRAC_1_SQRT_2;
        }
    }
    h
}

/// Everything drawn for one transmitted block.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialContext {
    pub h: CMat,
    pub w: CMat,
    pub genie: GenieRecord,
    pub rho: f64,
    pub tx_index: usize,
}

pub fn synthesize_rx(ctx: &TrialContext, codebook: &Codebook) -> Result<CMat, CodeError> {
    if !(ctx.rho >= 0.0 && ctx.rho.is_finite()) {
        return Err(CodeError::Rho);
    }
    if ctx.tx_index >= codebook.len() {
        return Err(CodeError::Index { index: ctx.tx_index, size: codebook.len() });
    }
    let s = codebook.codeword(ctx.tx_index);
    if ctx.h.cols() != s.rows() {
        return Err(CodeError::Dimension(format!(
            "H has {} columns but codewords have {} rows",
            ctx.h.cols(),
            s.rows()
        )));
    }
    if ctx.w.shape() != (ctx.h.rows(), s.cols()) {
        return Err(CodeError::Dimension(format!(
            "W is {:?}, expected {:?}",
            ctx.w.shape(),
            (ctx.h.rows(), s.cols())
        )));
    }
    Ok(ctx.h.mul(s).scaled(ctx.rho.sqrt()).add(&ctx.w))
}
