//! Built-in oracle checks, run by `fse-sim selftest`.
//!
//! Each check compares the library against an independent computation
//! (direct formulas, Gauss-Jordan elimination, back-to-back chains).

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;

use crate::channel::{complex_gaussian, ChannelProfile, ChannelRealization, NoiseSpec};
use crate::equalizer::{fse_receive, mmse_bin, ppn_single_tap_receive, PerBinReceived};
use crate::error::Result;
use crate::filterbank::{FilterBank, FreqCoeffs, PrototypeFilter, PAIRING_TOLERANCE};
use crate::metrics::{measure_sir, SirReport};
use crate::runner::trial_rng;
use crate::transceiver::{Alphabet, SymbolMatrix, TimePhase, Transceiver};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

/// Ideal-channel, single-antenna SIR per subcarrier.
pub fn back_to_back_sir(
    overlap: usize,
    subcarriers: usize,
    symbols: usize,
    time_phase: TimePhase,
    seed: u64,
) -> Result<SirReport> {
    let trx = Transceiver::new(FilterBank::new(overlap, subcarriers)?, time_phase);
    let mut rng = trial_rng(seed, 0);
    let sent = SymbolMatrix::random(subcarriers, symbols, Alphabet::Pam2, &mut rng);
    let x = trx.synthesize(&sent, 1.0)?;
    let frame = trx.analyze_windows(&x.samples, symbols, 0)?;
    let est = trx.demodulate_frame(&frame)?;
    measure_sir(sent.0.view(), est.0.view(), overlap - 1)
}

/// Solves `A X = B` by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_solve(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Option<Array2<Complex64>> {
    let n = a.nrows();
    let mut aug = ndarray::concatenate(Axis(1), &[a.view(), b.view()]).ok()?;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            aug[[i, col]]
                .norm()
                .partial_cmp(&aug[[j, col]].norm())
                .expect("finite")
        })?;
        if aug[[pivot, col]].norm() == 0.0 {
            return None;
        }
        if pivot != col {
            for c in 0..aug.ncols() {
                aug.swap([pivot, c], [col, c]);
            }
        }
        let p = aug[[col, col]];
        aug.row_mut(col).mapv_inplace(|v| v / p);
        for r in 0..n {
            if r != col {
                let f = aug[[r, col]];
                if f != Complex64::default() {
                    let pivot_row = aug.row(col).to_owned();
                    aug.row_mut(r).zip_mut_with(&pivot_row, |x, y| *x -= f * y);
                }
            }
        }
    }
    Some(aug.slice(ndarray::s![.., n..]).to_owned())
}

fn check_pairing() -> CheckOutcome {
    let worst = (2..=4)
        .map(|k| FreqCoeffs::design(k).map(|c| c.pairing_residual()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    outcome(
        "coefficient pairing c_k^2 + c_(K-k)^2 = 1",
        worst < PAIRING_TOLERANCE,
        format!("worst residual {worst:.2e}"),
    )
}

fn check_nyquist() -> CheckOutcome {
    let c = FreqCoeffs::design(4).expect("K=4");
    let mut worst_q = 0.0_f64;
    let mut worst_imag = 0.0_f64;
    for l in [8, 16, 32, 64] {
        let p = PrototypeFilter::synthesize(&c, l).expect("even L");
        worst_q = worst_q.max(p.nyquist_residual());
        worst_imag = worst_imag.max(p.imag_residual());
    }
    outcome(
        "prototype Nyquist residual and realness (K=4)",
        worst_q < 1e-3 && worst_imag < 1e-10,
        format!("max |q(mL)|/q(0) = {worst_q:.2e}, imag residual {worst_imag:.1e}"),
    )
}

fn check_reconstruction() -> Result<CheckOutcome> {
    let mut worst = f64::INFINITY;
    for l in [8, 16, 32] {
        let r = back_to_back_sir(4, l, 64, TimePhase::Staggered, 17)?;
        worst = r.values_db().iter().map(|v| v.db).fold(worst, f64::min);
    }
    Ok(outcome(
        "back-to-back reconstruction >= 55 dB",
        worst >= 55.0,
        format!("worst subcarrier SIR {worst:.2} dB"),
    ))
}

fn check_mmse() -> CheckOutcome {
    let mut rng = trial_rng(99, 0);
    let mut worst = 0.0_f64;
    for t in 0..100 {
        let nr = 8 + (t * 37) % 121;
        let m = 1 + t % 6;
        let sigma2 = 0.05 + (t % 7) as f64 * 0.2;
        let h = Array2::from_shape_fn((nr, m), |_| complex_gaussian(&mut rng, 1.0));
        let Some(w) = mmse_bin(h.view(), sigma2) else {
            return outcome("MMSE weights vs Gauss-Jordan", false, format!("bin {t} singular"));
        };
        let hh = h.t().mapv(|v| v.conj());
        let mut gram = hh.dot(&h);
        for d in 0..m {
            gram[[d, d]] += sigma2;
        }
        let Some(x) = gauss_jordan_solve(&gram, &hh) else {
            return outcome("MMSE weights vs Gauss-Jordan", false, format!("oracle failed at {t}"));
        };
        let oracle = x.t().mapv(|v| v.conj());
        let diff: f64 = (&w - &oracle).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = oracle.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    outcome(
        "MMSE weights vs Gauss-Jordan (100 bins)",
        worst < 1e-9,
        format!("worst relative residual {worst:.2e}"),
    )
}

fn check_flat_equivalence() -> Result<CheckOutcome> {
    let trx = Transceiver::new(FilterBank::new(4, 16)?, TimePhase::Staggered);
    let mut rng = trial_rng(5, 0);
    let ch = ChannelRealization::draw(&ChannelProfile::flat(), 2, 8, 1.0, trx.fft_len(), &mut rng)?;
    let signals = (0..2)
        .map(|_| {
            let s = SymbolMatrix::random(16, 24, Alphabet::Pam2, &mut rng);
            trx.synthesize(&s, 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let noise = NoiseSpec::from_snr_db(10.0);
    let frames = ch
        .apply(&signals, noise, &mut rng)?
        .iter()
        .map(|rx| trx.analyze_windows(&rx.samples, 24, 0))
        .collect::<Result<Vec<_>>>()?;
    let r = PerBinReceived::from_frames(&frames)?;
    let a = fse_receive(r.0.view(), ch.freq().view(), noise.variance, &trx)?;
    let b = ppn_single_tap_receive(r.0.view(), ch.freq().view(), noise.variance, &trx)?;
    let worst = (&a.0 - &b.0).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(outcome(
        "flat channel: FSE == single-tap",
        worst < 1e-9,
        format!("max difference {worst:.2e}"),
    ))
}

fn check_complex_identity() -> CheckOutcome {
    let mut rng = trial_rng(3, 0);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let w: Vec<Complex64> = (0..16).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let h: Vec<Complex64> = (0..16).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let inner: Complex64 = w.iter().zip(&h).map(|(a, b)| a.conj() * b).sum();
        let re: f64 = w.iter().zip(&h).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        let im: f64 = w.iter().zip(&h).map(|(a, b)| a.re * b.im - a.im * b.re).sum();
        worst = worst.max((inner.re - re).abs()).max((inner.im - im).abs());
    }
    outcome(
        "real/imaginary decomposition equals Re/Im of w^H h",
        worst < 1e-12,
        format!("max deviation {worst:.2e}"),
    )
}

fn check_zero_forcing() -> Result<CheckOutcome> {
    // synthetic per-bin model r = H s with no noise, recovered exactly
    let trx = Transceiver::new(FilterBank::new(4, 8)?, TimePhase::Staggered);
    let (n, nr, m, ns) = (trx.fft_len(), 6, 3, 12);
    let mut rng = trial_rng(8, 0);
    let h = Array3::from_shape_fn((n, nr, m), |_| complex_gaussian(&mut rng, 1.0));
    let sent: Vec<SymbolMatrix> = (0..m)
        .map(|_| SymbolMatrix::random(8, ns, Alphabet::Pam2, &mut rng))
        .collect();
    let mut ideal = Array3::<Complex64>::zeros((n, m, ns));
    let mut references = Vec::with_capacity(m);
    for (u, s) in sent.iter().enumerate() {
        let x = trx.synthesize(s, 1.0)?;
        let f = trx.analyze_windows(&x.samples, ns, 0)?;
        ideal.index_axis_mut(Axis(1), u).assign(&f.bins);
        // single-antenna ideal demodulation of the same user
        references.push(trx.demodulate_frame(&f)?);
    }
    let mut r = Array3::<Complex64>::zeros((n, nr, ns));
    for i in 0..n {
        r.index_axis_mut(Axis(0), i)
            .assign(&h.index_axis(Axis(0), i).dot(&ideal.index_axis(Axis(0), i)));
    }
    let est = fse_receive(r.view(), h.view(), 0.0, &trx)?;
    let worst = references
        .iter()
        .enumerate()
        .flat_map(|(u, reference)| {
            (&est.user(u) - &reference.0)
                .into_iter()
                .map(f64::abs)
                .collect::<Vec<_>>()
        })
        .fold(0.0_f64, f64::max);
    Ok(outcome(
        "per-bin model without noise: exact recovery",
        worst < 1e-9,
        format!("max deviation {worst:.2e}"),
    ))
}

/// Runs every check.
pub fn run_all() -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_pairing(),
        check_nyquist(),
        check_reconstruction()?,
        check_mmse(),
        check_flat_equivalence()?,
        check_zero_forcing()?,
        check_complex_identity(),
    ])
}
