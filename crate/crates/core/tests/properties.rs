//! Property tests over the public API.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sas_mimo::cli_io::format_sig9;
use sas_mimo::codes::{enumerate_codebook, sample_channel, synthesize_rx, CodeKind, Constellation, TrialContext};
use sas_mimo::montecarlo::{fit_slope, wilson_interval, BerCurve, BerPoint, ReceiverStats, SimConfig, StopReason};
use sas_mimo::receivers::{aor_decode, gar_decode, mdr_decode, ReceiverKind};
use sas_mimo::stable::{char_fn, sample_noise_block, tail_ccdf, tail_pdf, NoiseModel, StableParams};
use sas_mimo::theory::db_to_linear;

fn model() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![Just(NoiseModel::ModelI), Just(NoiseModel::ModelII)]
}

fn constellation() -> impl Strategy<Value = Constellation> {
    prop_oneof![Just(Constellation::Bpsk), Just(Constellation::Qpsk)]
}

fn context(seed: u64, model: NoiseModel, alpha: f64, n_r: usize, con: Constellation, snr_db: f64) -> (TrialContext, sas_mimo::codes::Codebook) {
    let book = enumerate_codebook(CodeKind::Alamouti, con);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = sample_channel(n_r, 2, &mut rng);
    let tx_index = (seed as usize) % book.len();
    let noise = sample_noise_block(model, alpha, n_r, 2, &mut rng).unwrap();
    (TrialContext { h, w: noise.w, genie: noise.genie, rho: db_to_linear(snr_db), tx_index }, book)
}

proptest! {
    #[test]
    fn char_fn_is_conjugate_symmetric(alpha in 0.1f64..=2.0, beta in -1.0f64..=1.0, sigma in 0.1f64..5.0, t in -20.0f64..20.0) {
        let p = StableParams::new(alpha, sigma, beta, 0.0).unwrap();
        let (a, b) = (char_fn(-t, &p), char_fn(t, &p).conj());
        prop_assert!((a - b).norm() <= 1e-14);
        if beta == 0.0 {
            prop_assert!(char_fn(t, &p).im.abs() <= 1e-15);
        }
    }

    #[test]
    fn tail_pdf_is_minus_derivative_of_tail_ccdf(alpha in 0.1f64..1.99, beta in -1.0f64..=1.0, sigma in 0.1f64..5.0, lambda in 1.0f64..1e4) {
        let p = StableParams::new(alpha, sigma, beta, 0.0).unwrap();
        let pdf = tail_pdf(lambda, &p);
        let symbolic = alpha * tail_ccdf(lambda, &p) / lambda;
        prop_assert!((pdf - symbolic).abs() <= 1e-12 * pdf.abs().max(f64::MIN_POSITIVE));
        let h = lambda * 1e-5;
        let fd = (tail_ccdf(lambda - h, &p) - tail_ccdf(lambda + h, &p)) / (2.0 * h);
        prop_assert!((fd - pdf).abs() <= 1e-6 * pdf.abs() + 1e-300);
    }

    #[test]
    fn decisions_are_in_range_and_deterministic(
        seed in any::<u64>(), m in model(), alpha in 0.3f64..=2.0, n_r in 1usize..4, con in constellation(), snr in -5.0f64..40.0,
    ) {
        let (ctx, book) = context(seed, m, alpha, n_r, con, snr);
        let y = synthesize_rx(&ctx, &book).unwrap();
        let g = gar_decode(&y, &ctx.h, Some(&ctx.genie), ctx.rho, &book).unwrap();
        let d = mdr_decode(&y, &ctx.h, ctx.rho, &book).unwrap();
        let a = aor_decode(&y, &ctx.h, ctx.rho, &book, m).unwrap();
        for i in [g, d, a] {
            prop_assert!(i < book.len());
        }
        prop_assert_eq!(g, gar_decode(&y, &ctx.h, Some(&ctx.genie), ctx.rho, &book).unwrap());
        prop_assert_eq!(d, mdr_decode(&y, &ctx.h, ctx.rho, &book).unwrap());
        prop_assert_eq!(a, aor_decode(&y, &ctx.h, ctx.rho, &book, m).unwrap());
    }

    #[test]
    fn decisions_are_scale_invariant(
        seed in any::<u64>(), m in model(), alpha in 0.3f64..=2.0, n_r in 1usize..4, con in constellation(), snr in -5.0f64..40.0,
        k in -6i32..=6,
    ) {
        // Powers of two scale every residual exactly.
        let c = 2f64.powi(k);
        let (ctx, book) = context(seed, m, alpha, n_r, con, snr);
        let y = synthesize_rx(&ctx, &book).unwrap();
        let (ys, hs) = (y.scaled(c), ctx.h.scaled(c));
        prop_assert_eq!(
            gar_decode(&y, &ctx.h, Some(&ctx.genie), ctx.rho, &book).unwrap(),
            gar_decode(&ys, &hs, Some(&ctx.genie), ctx.rho, &book).unwrap()
        );
        prop_assert_eq!(mdr_decode(&y, &ctx.h, ctx.rho, &book).unwrap(), mdr_decode(&ys, &hs, ctx.rho, &book).unwrap());
        prop_assert_eq!(aor_decode(&y, &ctx.h, ctx.rho, &book, m).unwrap(), aor_decode(&ys, &hs, ctx.rho, &book, m).unwrap());
    }

    #[test]
    fn wilson_interval_contains_estimate(n in 1u64..10_000_000, frac in 0.0f64..=1.0) {
        let e = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(e, n);
        let p = e as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn slope_of_exact_power_law(gain in 0.01f64..100.0, order in 0.05f64..3.0, start in -10.0f64..20.0, k in 3usize..8) {
        let grid: Vec<f64> = (0..k).map(|i| start + 5.0 * i as f64).collect();
        let points = grid
            .iter()
            .map(|&db| {
                let ber = (gain * db_to_linear(db)).powf(-order);
                BerPoint {
                    snr_db: db,
                    trials: 1,
                    bits: 1,
                    stop: StopReason::MinErrors,
                    stats: vec![ReceiverStats { receiver: ReceiverKind::Gar, bit_errors: 1000, block_errors: 1000, ber, ci_lo: ber, ci_hi: ber }],
                }
            })
            .collect();
        let curve = BerCurve { config: SimConfig { receivers: vec![ReceiverKind::Gar], ..SimConfig::default() }, points };
        let fit = fit_slope(&curve, ReceiverKind::Gar, k).unwrap();
        prop_assert!((fit.slope + order).abs() < 1e-9, "{:?}", fit);
        prop_assert!((fit.diversity() - order).abs() < 1e-9);
    }

    #[test]
    fn sig9_keeps_nine_significant_digits(v in prop_oneof![-1e12f64..1e12, 1e-12f64..1e-3, -1e-3f64..-1e-12]) {
        let s = format_sig9(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-9 * v.abs(), "{} -> {}", v, s);
        let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').len() <= 9, "{}", s);
    }
}

#[test]
fn every_alamouti_difference_is_scaled_unitary() {
    for con in [Constellation::Bpsk, Constellation::Qpsk] {
        let book = enumerate_codebook(CodeKind::Alamouti, con);
        for i in 0..book.len() {
            for j in 0..book.len() {
                if i != j {
                    let d = book.codeword(i).sub(book.codeword(j));
                    assert!(d.scaled_unitary_factor(1e-12).is_some(), "{con} pair ({i}, {j})");
                }
            }
        }
    }
}
