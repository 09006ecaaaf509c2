//! Decision rules mapping a received block to a codeword index: genie-aided
//! (GAR), minimum distance (MDR), maximum likelihood (ML) and the
//! asymptotically optimal rule (AOR).
//!
//! Every rule scans the codebook in order and keeps the first strict
//! improvement, so exact ties go to the lowest index.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::codes::Codebook;
use crate::linalg::CMat;
use crate::stable::{AmplitudePdfTable, GenieRecord, NoiseModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReceiverError {
    #[error("genie-aided receiver needs the subordinator record")]
    GenieMissing,
    #[error("genie record covers {got} columns, block has {expected}")]
    GenieShape { expected: usize, got: usize },
    #[error("ML receiver needs an amplitude table")]
    TableMissing,
    #[error("amplitude table has d = {got_d}, sigma = {got_sigma}; model needs d = {expected_d}, sigma = 1")]
    TableMismatch { expected_d: usize, got_d: usize, got_sigma: f64 },
    #[error("amplitude table alpha = {got} does not match noise alpha = {expected}")]
    TableAlpha { expected: f64, got: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown receiver `{0}` (expected gar, mdr, ml or aor)")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceiverKind {
    Gar,
    Mdr,
    Ml,
    Aor,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 4] = [ReceiverKind::Gar, ReceiverKind::Mdr, ReceiverKind::Ml, ReceiverKind::Aor];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Gar => "GAR",
            ReceiverKind::Mdr => "MDR",
            ReceiverKind::Ml => "ML",
            ReceiverKind::Aor => "AOR",
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = ReceiverError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gar" => Ok(ReceiverKind::Gar),
            "mdr" => Ok(ReceiverKind::Mdr),
            "ml" => Ok(ReceiverKind::Ml),
            "aor" => Ok(ReceiverKind::Aor),
            other => Err(ReceiverError::Unknown(other.to_string())),
        }
    }
}

/// Dimension of the isotropic vectors the ML metric works with.
pub fn ml_dimension(model: NoiseModel, n_r: usize) -> usize {
    match model {
        NoiseModel::ModelI => 2 * n_r,
        NoiseModel::ModelII => 2,
    }
}

/// A configured decision rule.
#[derive(Debug, Clone)]
pub struct Receiver {
    kind: ReceiverKind,
    model: NoiseModel,
    table: Option<Arc<AmplitudePdfTable>>,
}

impl Receiver {
    pub fn new(kind: ReceiverKind, model: NoiseModel) -> Result<Self, ReceiverError> {
        if kind == ReceiverKind::Ml {
            return Err(ReceiverError::TableMissing);
        }
        Ok(Self { kind, model, table: None })
    }

    /// ML receiver for noise of exponent `alpha` on `n_r` receive antennas.
    pub fn ml(
        model: NoiseModel,
        table: Arc<AmplitudePdfTable>,
        alpha: f64,
        n_r: usize,
    ) -> Result<Self, ReceiverError> {
        check_table(&table, model, n_r)?;
        if table.spec().alpha() != alpha {
            return Err(ReceiverError::TableAlpha { expected: alpha, got: table.spec().alpha() });
        }
        Ok(Self { kind: ReceiverKind::Ml, model, table: Some(table) })
    }

    pub fn kind(&self) -> ReceiverKind {
        self.kind
    }

    pub fn model(&self) -> NoiseModel {
        self.model
    }

    pub fn table(&self) -> Option<&AmplitudePdfTable> {
        self.table.as_deref()
    }

    pub fn decode(
        &self,
        y: &CMat,
        h: &CMat,
        genie: Option<&GenieRecord>,
        rho: f64,
        codebook: &Codebook,
    ) -> Result<usize, ReceiverError> {
        let residuals = Residuals::new(y, h, rho, codebook)?;
        self.decide(&residuals, genie)
    }

    /// Decision from precomputed residuals, so several receivers can share
    /// one pass over the codebook.
    pub fn decide(&self, residuals: &Residuals, genie: Option<&GenieRecord>) -> Result<usize, ReceiverError> {
        match self.kind {
            ReceiverKind::Gar => gar_from_residuals(residuals, genie.ok_or(ReceiverError::GenieMissing)?),
            ReceiverKind::Mdr => Ok(mdr_from_residuals(residuals)),
            ReceiverKind::Aor => Ok(aor_from_residuals(residuals, self.model)),
            ReceiverKind::Ml => {
                let table = self.table.as_deref().ok_or(ReceiverError::TableMissing)?;
                Ok(ml_from_residuals(residuals, self.model, table))
            }
        }
    }
}

fn check_table(table: &AmplitudePdfTable, model: NoiseModel, n_r: usize) -> Result<(), ReceiverError> {
    let expected_d = ml_dimension(model, n_r);
    let spec = table.spec();
    if spec.d() != expected_d || spec.sigma() != 1.0 {
        return Err(ReceiverError::TableMismatch { expected_d, got_d: spec.d(), got_sigma: spec.sigma() });
    }
    Ok(())
}

/// R_c = Y − √ρ·H·S_c for every codeword c.
#[derive(Debug, Clone)]
pub struct Residuals {
    blocks: Vec<CMat>,
}

impl Residuals {
    pub fn new(y: &CMat, h: &CMat, rho: f64, codebook: &Codebook) -> Result<Self, ReceiverError> {
        if h.cols() != codebook.n_t() || y.shape() != (h.rows(), codebook.t_s()) {
            return Err(ReceiverError::Dimension(format!(
                "Y {:?}, H {:?}, codewords {}×{}",
                y.shape(),
                h.shape(),
                codebook.n_t(),
                codebook.t_s()
            )));
        }
        let sr = rho.sqrt();
        let blocks = codebook.codewords().iter().map(|s| y.sub(&h.mul(s).scaled(sr))).collect();
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }
}

fn argmin(metrics: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, m) in metrics.enumerate() {
        if m < best.1 {
            best = (i, m);
        }
    }
    best.0
}

fn gar_from_residuals(res: &Residuals, genie: &GenieRecord) -> Result<usize, ReceiverError> {
    let cols = res.blocks[0].cols();
    let rows = res.blocks[0].rows();
    let shape_ok = match genie {
        GenieRecord::PerColumn(a) => a.len() == cols,
        GenieRecord::PerEntry { n_r, values } => *n_r == rows && values.len() == rows * cols,
    };
    if !shape_ok {
        return Err(ReceiverError::GenieShape { expected: cols, got: genie.columns() });
    }
    Ok(argmin(res.blocks.iter().map(|r| {
        let mut m = 0.0;
        for k in 0..cols {
            for j in 0..rows {
                m += r[(j, k)].norm_sqr() / genie.value(j, k);
            }
        }
        m
    })))
}

fn mdr_from_residuals(res: &Residuals) -> usize {
    argmin(res.blocks.iter().map(CMat::norm_sqr))
}

// Sum of log norms over the isotropic units of the model: columns for
// Model I, entries for Model II. A zero norm wins outright.
fn aor_from_residuals(res: &Residuals, model: NoiseModel) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, r) in res.blocks.iter().enumerate() {
        let mut m = 0.0;
        for_each_unit_norm(r, model, |n| m += n.ln());
        if m == f64::NEG_INFINITY {
            return i;
        }
        if m < best.1 {
            best = (i, m);
        }
    }
    best.0
}

fn ml_from_residuals(res: &Residuals, model: NoiseModel, table: &AmplitudePdfTable) -> usize {
    argmin(res.blocks.iter().map(|r| {
        let mut m = 0.0;
        for_each_unit_norm(r, model, |n| m -= table.log_vector_density(n));
        m
    }))
}

fn for_each_unit_norm(r: &CMat, model: NoiseModel, mut f: impl FnMut(f64)) {
    match model {
        NoiseModel::ModelI => {
            for k in 0..r.cols() {
                f(r.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
            }
        }
        NoiseModel::ModelII => r.as_slice().iter().for_each(|z| f(z.norm())),
    }
}

/// argmin Σ_{j,k} |r_jk|² / A_jk, the Euclidean rule after whitening by the
/// genie record (per column for Model I, Hadamard per entry for Model II).
pub fn gar_decode(
    y: &CMat,
    h: &CMat,
    genie: Option<&GenieRecord>,
    rho: f64,
    codebook: &Codebook,
) -> Result<usize, ReceiverError> {
    let genie = genie.ok_or(ReceiverError::GenieMissing)?;
    gar_from_residuals(&Residuals::new(y, h, rho, codebook)?, genie)
}

/// argmin ‖Y − √ρ·H·S‖².
pub fn mdr_decode(y: &CMat, h: &CMat, rho: f64, codebook: &Codebook) -> Result<usize, ReceiverError> {
    Ok(mdr_from_residuals(&Residuals::new(y, h, rho, codebook)?))
}

/// argmax of summed log densities of the residual units under the
/// isotropic stable law described by `table`.
pub fn ml_decode(
    y: &CMat,
    h: &CMat,
    rho: f64,
    codebook: &Codebook,
    model: NoiseModel,
    table: &AmplitudePdfTable,
) -> Result<usize, ReceiverError> {
    check_table(table, model, h.rows())?;
    Ok(ml_from_residuals(&Residuals::new(y, h, rho, codebook)?, model, table))
}

/// argmin of summed log residual norms; needs no noise parameters.
pub fn aor_decode(y: &CMat, h: &CMat, rho: f64, codebook: &Codebook, model: NoiseModel) -> Result<usize, ReceiverError> {
    Ok(aor_from_residuals(&Residuals::new(y, h, rho, codebook)?, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{alamouti_encode, enumerate_codebook, sample_channel, CodeKind, Constellation};
    use crate::stable::{build_amplitude_table, sample_noise_block, IsotropicAmplitudeSpec};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn book() -> Codebook {
        enumerate_codebook(CodeKind::Alamouti, Constellation::Bpsk)
    }

    fn cauchy_table(d: usize) -> AmplitudePdfTable {
        build_amplitude_table(&IsotropicAmplitudeSpec::new(1.0, 1.0, d).unwrap()).unwrap()
    }

    #[test]
    fn noiseless_blocks_decode_to_truth() {
        let book = enumerate_codebook(CodeKind::Alamouti, Constellation::Qpsk);
        let t1 = cauchy_table(4);
        let t2 = cauchy_table(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tx in 0..book.len() {
            let h = sample_channel(2, 2, &mut rng);
            let y = h.mul(book.codeword(tx)).scaled(3.0);
            let genie = GenieRecord::PerColumn(vec![0.3, 7.0]);
            assert_eq!(gar_decode(&y, &h, Some(&genie), 9.0, &book).unwrap(), tx);
            assert_eq!(mdr_decode(&y, &h, 9.0, &book).unwrap(), tx);
            assert_eq!(ml_decode(&y, &h, 9.0, &book, NoiseModel::ModelI, &t1).unwrap(), tx);
            assert_eq!(ml_decode(&y, &h, 9.0, &book, NoiseModel::ModelII, &t2).unwrap(), tx);
            for model in [NoiseModel::ModelI, NoiseModel::ModelII] {
                assert_eq!(aor_decode(&y, &h, 9.0, &book, model).unwrap(), tx);
            }
        }
    }

    #[test]
    fn equal_genie_values_reduce_gar_to_mdr() {
        let book = book();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let h = sample_channel(2, 2, &mut rng);
            let block = sample_noise_block(NoiseModel::ModelI, 1.0, 2, 2, &mut rng).unwrap();
            let y = h.mul(book.codeword(1)).add(&block.w);
            let genie = GenieRecord::PerColumn(vec![2.5, 2.5]);
            assert_eq!(gar_decode(&y, &h, Some(&genie), 1.0, &book), mdr_decode(&y, &h, 1.0, &book));
        }
    }

    // Independent evaluation of the weighted metric via explicit whitening.
    #[test]
    fn gar_matches_brute_force() {
        let book = book();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let h = sample_channel(2, 2, &mut rng);
            let block = sample_noise_block(NoiseModel::ModelI, 0.8, 2, 2, &mut rng).unwrap();
            let rho: f64 = 4.0;
            let y = h.mul(book.codeword(3)).scaled(2.0).add(&block.w);
            let GenieRecord::PerColumn(a) = &block.genie else { unreachable!() };
            let whiten = CMat::from_rows(&[vec![c(1.0 / a[0].sqrt()), c(0.0)], vec![c(0.0), c(1.0 / a[1].sqrt())]]);
            let mut best = (0, f64::INFINITY);
            for (i, s) in book.codewords().iter().enumerate() {
                let m = y.mul(&whiten).sub(&h.mul(s).mul(&whiten).scaled(rho.sqrt())).norm_sqr();
                if m < best.1 {
                    best = (i, m);
                }
            }
            assert_eq!(gar_decode(&y, &h, Some(&block.genie), rho, &book).unwrap(), best.0);
        }
    }

    #[test]
    fn gar_requires_genie() {
        let book = book();
        let y = CMat::zeros(2, 2);
        assert_eq!(gar_decode(&y, &CMat::identity(2), None, 1.0, &book), Err(ReceiverError::GenieMissing));
        let short = GenieRecord::PerColumn(vec![1.0]);
        assert!(matches!(
            gar_decode(&y, &CMat::identity(2), Some(&short), 1.0, &book),
            Err(ReceiverError::GenieShape { .. })
        ));
    }

    #[test]
    fn single_impulse_defeats_mdr_but_not_gar() {
        let book = book();
        let h = CMat::from_rows(&[vec![c(1.0), c(0.5)]]);
        let s = alamouti_encode(c(1.0), c(1.0));
        let tx = book.codewords().iter().position(|x| *x == s).unwrap();
        let w = CMat::from_rows(&[vec![c(-3.0), c(0.1)]]);
        let y = h.mul(&s).add(&w);
        let genie = GenieRecord::PerColumn(vec![1e4, 1.0]);
        let mdr = mdr_decode(&y, &h, 1.0, &book).unwrap();
        let gar = gar_decode(&y, &h, Some(&genie), 1.0, &book).unwrap();
        assert_ne!(mdr, tx);
        assert_eq!(book.codeword(mdr), &alamouti_encode(c(-1.0), c(-1.0)));
        assert_eq!(gar, tx);
        // The flip is visible directly in the metric values.
        let truth = y.sub(&h.mul(&s)).norm_sqr();
        let wrong = y.sub(&h.mul(book.codeword(mdr))).norm_sqr();
        assert!(wrong < truth);
    }

    #[test]
    fn aor_with_one_slot_equals_mdr() {
        let book = enumerate_codebook(CodeKind::Uncoded, Constellation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..500 {
            let h = sample_channel(3, 1, &mut rng);
            let block = sample_noise_block(NoiseModel::ModelI, 1.2, 3, 1, &mut rng).unwrap();
            let y = h.mul(book.codeword(2)).add(&block.w);
            assert_eq!(aor_decode(&y, &h, 1.0, &book, NoiseModel::ModelI), mdr_decode(&y, &h, 1.0, &book));
        }
    }

    #[test]
    fn aor_matches_product_of_norms() {
        let book = enumerate_codebook(CodeKind::Alamouti, Constellation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for model in [NoiseModel::ModelI, NoiseModel::ModelII] {
            for _ in 0..300 {
                let h = sample_channel(2, 2, &mut rng);
                let block = sample_noise_block(model, 0.7, 2, 2, &mut rng).unwrap();
                let y = h.mul(book.codeword(5)).scaled(2.0).add(&block.w);
                let mut best = (0, f64::INFINITY);
                for (i, s) in book.codewords().iter().enumerate() {
                    let r = y.sub(&h.mul(s).scaled(2.0));
                    let p: f64 = match model {
                        NoiseModel::ModelI => (0..2)
                            .map(|k| r.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                            .product(),
                        NoiseModel::ModelII => r.as_slice().iter().map(|z| z.norm()).product(),
                    };
                    if p < best.1 {
                        best = (i, p);
                    }
                }
                assert_eq!(aor_decode(&y, &h, 4.0, &book, model).unwrap(), best.0);
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let book = book();
        // H = 0: every residual equals Y.
        let h = CMat::zeros(2, 2);
        let y = CMat::identity(2);
        let genie = GenieRecord::PerColumn(vec![1.0, 1.0]);
        assert_eq!(mdr_decode(&y, &h, 1.0, &book).unwrap(), 0);
        assert_eq!(gar_decode(&y, &h, Some(&genie), 1.0, &book).unwrap(), 0);
        assert_eq!(aor_decode(&y, &h, 1.0, &book, NoiseModel::ModelI).unwrap(), 0);
        assert_eq!(ml_decode(&y, &h, 1.0, &book, NoiseModel::ModelI, &cauchy_table(4)).unwrap(), 0);
    }

    #[test]
    fn ml_rejects_mismatched_tables() {
        let book = book();
        let y = CMat::zeros(2, 2);
        let h = CMat::identity(2);
        let t2 = cauchy_table(2);
        assert!(matches!(
            ml_decode(&y, &h, 1.0, &book, NoiseModel::ModelI, &t2),
            Err(ReceiverError::TableMismatch { expected_d: 4, got_d: 2, .. })
        ));
        assert!(ml_decode(&y, &h, 1.0, &book, NoiseModel::ModelII, &t2).is_ok());
        let scaled = build_amplitude_table(&IsotropicAmplitudeSpec::new(1.0, 2.0, 2).unwrap()).unwrap();
        assert!(ml_decode(&y, &h, 1.0, &book, NoiseModel::ModelII, &scaled).is_err());
        let shared = Arc::new(t2);
        assert!(matches!(
            Receiver::ml(NoiseModel::ModelII, shared.clone(), 1.5, 2),
            Err(ReceiverError::TableAlpha { .. })
        ));
        assert!(Receiver::ml(NoiseModel::ModelII, shared, 1.0, 2).is_ok());
        assert_eq!(Receiver::new(ReceiverKind::Ml, NoiseModel::ModelI).unwrap_err(), ReceiverError::TableMissing);
    }

    #[test]
    fn receiver_wrapper_matches_free_functions() {
        let book = book();
        let table = Arc::new(cauchy_table(4));
        let receivers = [
            Receiver::new(ReceiverKind::Gar, NoiseModel::ModelI).unwrap(),
            Receiver::new(ReceiverKind::Mdr, NoiseModel::ModelI).unwrap(),
            Receiver::ml(NoiseModel::ModelI, table.clone(), 1.0, 2).unwrap(),
            Receiver::new(ReceiverKind::Aor, NoiseModel::ModelI).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..200 {
            let h = sample_channel(2, 2, &mut rng);
            let block = sample_noise_block(NoiseModel::ModelI, 1.0, 2, 2, &mut rng).unwrap();
            let y = h.mul(book.codeword(0)).add(&block.w);
            let g = Some(&block.genie);
            let want = [
                gar_decode(&y, &h, g, 1.0, &book).unwrap(),
                mdr_decode(&y, &h, 1.0, &book).unwrap(),
                ml_decode(&y, &h, 1.0, &book, NoiseModel::ModelI, &table).unwrap(),
                aor_decode(&y, &h, 1.0, &book, NoiseModel::ModelI).unwrap(),
            ];
            for (r, w) in receivers.iter().zip(want) {
                assert_eq!(r.decode(&y, &h, g, 1.0, &book).unwrap(), w);
            }
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("Aor".parse::<ReceiverKind>().unwrap(), ReceiverKind::Aor);
        assert!("zf".parse::<ReceiverKind>().is_err());
    }
}
