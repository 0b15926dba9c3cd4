//! Multi-antenna receivers.
//!
//! The frequency-spreading equalizer combines the antennas separately on
//! every DFT bin with MMSE weights and despreads afterwards. The single-tap
//! baseline despreads every antenna first and combines per subcarrier with
//! the MMSE vector of the subcarrier's center bin, which is what a
//! polyphase receiver with one complex tap per subcarrier can do.

use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transceiver::{BinFrame, Transceiver};

/// Relative pivot threshold below which the MMSE Gram matrix is singular.
const SINGULAR_PIVOT: f64 = 1e-12;

/// DFT outputs of all antennas: bins × antennas × symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct PerBinReceived(pub Array3<Complex64>);

impl PerBinReceived {
    /// Stacks per-antenna frames (antenna order preserved).
    pub fn from_frames(frames: &[BinFrame]) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("antenna frames"))?;
        let (bins, symbols) = first.bins.dim();
        let mut r = Array3::zeros((bins, frames.len(), symbols));
        for (a, f) in frames.iter().enumerate() {
            if f.bins.dim() != (bins, symbols) {
                return Err(Error::dim("antenna frame bins", bins * symbols, f.bins.len()));
            }
            r.index_axis_mut(Axis(1), a).assign(&f.bins);
        }
        Ok(PerBinReceived(r))
    }

    pub fn antennas(&self) -> usize {
        self.0.shape()[1]
    }

    /// View restricted to the first `n` antennas.
    pub fn first_antennas(&self, n: usize) -> ArrayView3<'_, Complex64> {
        self.0.slice(s![.., ..n, ..])
    }
}

/// MMSE combining weights: bins × antennas × users.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerBank(pub Array3<Complex64>);

impl EqualizerBank {
    pub fn bin(&self, i: usize) -> ArrayView2<'_, Complex64> {
        self.0.index_axis(Axis(0), i)
    }
}

/// Real symbol estimates: subcarriers × users × symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates(pub Array3<f64>);

impl Estimates {
    /// `L×M` estimate matrix of symbol `n`.
    pub fn symbol(&self, n: usize) -> ArrayView2<'_, f64> {
        self.0.index_axis(Axis(2), n)
    }

    /// `L×Ns` estimates of one user.
    pub fn user(&self, u: usize) -> ArrayView2<'_, f64> {
        self.0.index_axis(Axis(1), u)
    }
}

/// `W = H (Hᴴ H + σ² I)⁻¹` for one bin, `H` antennas × users.
///
/// Solved as the Hermitian system `(Hᴴ H + σ² I) Wᴴ = Hᴴ` by Cholesky.
/// Returns `None` when the system is numerically singular.
pub fn mmse_bin(h: ArrayView2<'_, Complex64>, noise_variance: f64) -> Option<Array2<Complex64>> {
    let (nr, m) = h.dim();
    let hh = h.t().mapv(|v| v.conj());
    let mut gram = hh.dot(&h);
    for d in 0..m {
        gram[[d, d]] += noise_variance;
    }
    let chol = cholesky(&gram)?;
    let mut x = hh;
    // forward: L y = b, then back: Lᴴ x = y, column by column of b
    for col in 0..nr {
        for r in 0..m {
            let mut acc = x[[r, col]];
            for k in 0..r {
                acc -= chol[[r, k]] * x[[k, col]];
            }
            x[[r, col]] = acc / chol[[r, r]].re;
        }
        for r in (0..m).rev() {
            let mut acc = x[[r, col]];
            for k in r + 1..m {
                acc -= chol[[k, r]].conj() * x[[k, col]];
            }
            x[[r, col]] = acc / chol[[r, r]].re;
        }
    }
    Some(x.t().mapv(|v| v.conj()))
}

fn cholesky(a: &Array2<Complex64>) -> Option<Array2<Complex64>> {
    let m = a.nrows();
    let scale = (0..m).map(|i| a[[i, i]].re).fold(0.0, f64::max);
    if scale <= 0.0 || !scale.is_finite() {
        return None;
    }
    let mut l = Array2::<Complex64>::zeros((m, m));
    for j in 0..m {
        let mut d = a[[j, j]].re;
        for k in 0..j {
            d -= l[[j, k]].norm_sqr();
        }
        if d <= SINGULAR_PIVOT * scale {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = Complex64::new(d, 0.0);
        for i in j + 1..m {
            let mut acc = a[[i, j]];
            for k in 0..j {
                acc -= l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = acc / d;
        }
    }
    Some(l)
}

/// Per-bin MMSE weights for responses `H` (bins × antennas × users).
pub fn mmse_weights(h: ArrayView3<'_, Complex64>, noise_variance: f64) -> Result<EqualizerBank> {
    let (bins, nr, m) = h.dim();
    let mut w = Array3::zeros((bins, nr, m));
    for i in 0..bins {
        let wi = mmse_bin(h.index_axis(Axis(0), i), noise_variance).ok_or(Error::SingularBin {
            bin: i,
            noise_variance,
        })?;
        w.index_axis_mut(Axis(0), i).assign(&wi);
    }
    Ok(EqualizerBank(w))
}

/// `r̂_i = W_iᴴ r̃_i` for every bin and symbol; output bins × users × symbols.
pub fn equalize_bins(
    received: ArrayView3<'_, Complex64>,
    weights: &EqualizerBank,
) -> Result<Array3<Complex64>> {
    let (bins, nr, ns) = received.dim();
    let (wb, wnr, m) = weights.0.dim();
    if wb != bins {
        return Err(Error::dim("equalizer bins", wb, bins));
    }
    if wnr != nr {
        return Err(Error::dim("equalizer antennas", wnr, nr));
    }
    let mut out = Array3::zeros((bins, m, ns));
    for i in 0..bins {
        let wh = weights.bin(i).t().mapv(|v| v.conj());
        out.index_axis_mut(Axis(0), i)
            .assign(&wh.dot(&received.index_axis(Axis(0), i)));
    }
    Ok(out)
}

/// Per-user despreading of equalized bins (bins × users × symbols).
pub fn despread_users(equalized: &Array3<Complex64>, trx: &Transceiver) -> Result<Estimates> {
    let (bins, m, ns) = equalized.dim();
    if bins != trx.fft_len() {
        return Err(Error::dim("despread bins", trx.fft_len(), bins));
    }
    let l = trx.subcarriers();
    let mut out = Array3::zeros((l, m, ns));
    let mut col = vec![Complex64::default(); bins];
    for u in 0..m {
        for n in 0..ns {
            for (i, c) in col.iter_mut().enumerate() {
                *c = equalized[[i, u, n]];
            }
            for (sub, v) in trx.demodulate(&col, n)?.into_iter().enumerate() {
                out[[sub, u, n]] = v;
            }
        }
    }
    Ok(Estimates(out))
}

/// Frequency-spreading equalizer: per-bin MMSE then despreading.
pub fn fse_receive(
    received: ArrayView3<'_, Complex64>,
    h: ArrayView3<'_, Complex64>,
    noise_variance: f64,
    trx: &Transceiver,
) -> Result<Estimates> {
    let w = mmse_weights(h, noise_variance)?;
    despread_users(&equalize_bins(received, &w)?, trx)
}

/// Single-tap-per-subcarrier baseline: despread every antenna, combine each
/// subcarrier with the MMSE vector of its center bin, then take the real
/// part.
pub fn ppn_single_tap_receive(
    received: ArrayView3<'_, Complex64>,
    h: ArrayView3<'_, Complex64>,
    noise_variance: f64,
    trx: &Transceiver,
) -> Result<Estimates> {
    let (bins, nr, ns) = received.dim();
    let (hb, hnr, m) = h.dim();
    if bins != trx.fft_len() || hb != bins {
        return Err(Error::dim("single-tap bins", trx.fft_len(), bins.min(hb)));
    }
    if hnr != nr {
        return Err(Error::dim("single-tap antennas", hnr, nr));
    }
    let l = trx.subcarriers();
    // per-subcarrier outputs before combining: subcarriers × antennas × symbols
    let mut z = Array3::<Complex64>::zeros((l, nr, ns));
    let mut col = vec![Complex64::default(); bins];
    for a in 0..nr {
        for n in 0..ns {
            for (i, c) in col.iter_mut().enumerate() {
                *c = received[[i, a, n]];
            }
            for (sub, v) in trx.despread_complex(&col, n)?.into_iter().enumerate() {
                z[[sub, a, n]] = v;
            }
        }
    }
    let mut out = Array3::zeros((l, m, ns));
    for sub in 0..l {
        let center = trx.bank().spreading.center_bin(sub);
        let w = mmse_bin(h.index_axis(Axis(0), center), noise_variance).ok_or(
            Error::SingularBin {
                bin: center,
                noise_variance,
            },
        )?;
        let combined = w.t().mapv(|v| v.conj()).dot(&z.index_axis(Axis(0), sub));
        out.index_axis_mut(Axis(0), sub)
            .assign(&combined.mapv(|v| v.re));
    }
    Ok(Estimates(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::filterbank::FilterBank;
    use crate::transceiver::TimePhase;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_h(nr: usize, m: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((nr, m), |_| complex_gaussian(&mut rng, 1.0))
    }

    #[test]
    fn single_user_zero_noise_is_zero_forcing() {
        let h = random_h(6, 1, 1);
        let w = mmse_bin(h.view(), 0.0).unwrap();
        let norm2: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        for a in 0..6 {
            assert!((w[[a, 0]] - h[[a, 0]] / norm2).norm() < 1e-14);
        }
        let gain: Complex64 = (0..6).map(|a| w[[a, 0]].conj() * h[[a, 0]]).sum();
        assert_abs_diff_eq!(gain.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gain.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn large_noise_tends_to_scaled_matched_filter() {
        let h = random_h(4, 1, 2);
        let sigma2 = 1e8;
        let w = mmse_bin(h.view(), sigma2).unwrap();
        for a in 0..4 {
            let mf = h[[a, 0]] / sigma2;
            assert!((w[[a, 0]] - mf).norm() / mf.norm() < 1e-6);
        }
    }

    #[test]
    fn singular_bin_is_named() {
        let mut h = Array3::zeros((3, 2, 2));
        for i in 0..3 {
            h[[i, 0, 0]] = Complex64::new(1.0, 0.0);
            h[[i, 1, 1]] = Complex64::new(1.0, 0.0);
        }
        // bin 2: both users share the same column
        h[[2, 1, 1]] = Complex64::new(0.0, 0.0);
        h[[2, 0, 1]] = Complex64::new(1.0, 0.0);
        match mmse_weights(h.view(), 0.0) {
            Err(Error::SingularBin { bin, .. }) => assert_eq!(bin, 2),
            other => panic!("{other:?}"),
        }
        assert!(mmse_weights(h.view(), 0.1).is_ok());
    }

    #[test]
    fn equalize_single_user_unit_value() {
        let h = random_h(5, 1, 3);
        let mut hb = Array3::zeros((1, 5, 1));
        hb.index_axis_mut(Axis(0), 0).assign(&h);
        let w = mmse_weights(hb.view(), 0.0).unwrap();
        let r = hb.clone();
        let out = equalize_bins(r.view(), &w).unwrap();
        assert!((out[[0, 0, 0]] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        let zero = equalize_bins(Array3::zeros((1, 5, 3)).view(), &w).unwrap();
        assert!(zero.iter().all(|v| v.norm() == 0.0));
        assert!(equalize_bins(Array3::zeros((1, 4, 3)).view(), &w).is_err());
    }

    #[test]
    fn swapping_users_swaps_estimates() {
        let trx = Transceiver::new(FilterBank::new(4, 8).unwrap(), TimePhase::Staggered);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rhat = Array3::from_shape_fn((32, 2, 3), |_| complex_gaussian(&mut rng, 1.0));
        let mut swapped = rhat.clone();
        swapped.index_axis_mut(Axis(1), 0).assign(&rhat.index_axis(Axis(1), 1));
        swapped.index_axis_mut(Axis(1), 1).assign(&rhat.index_axis(Axis(1), 0));
        let a = despread_users(&rhat, &trx).unwrap();
        let b = despread_users(&swapped, &trx).unwrap();
        assert_eq!(a.user(0), b.user(1));
        assert_eq!(a.user(1), b.user(0));
        // single-user reduction equals demodulate on that column
        for n in 0..3 {
            let col: Vec<Complex64> = rhat.slice(s![.., 0, n]).to_vec();
            let direct = Array1::from(trx.demodulate(&col, n).unwrap());
            assert_eq!(a.0.slice(s![.., 0, n]), direct);
        }
    }

    #[test]
    fn ppn_of_silence_is_zero() {
        let trx = Transceiver::new(FilterBank::new(4, 8).unwrap(), TimePhase::Staggered);
        let h = Array3::from_elem((32, 3, 1), Complex64::new(1.0, 0.0));
        let out = ppn_single_tap_receive(Array3::zeros((32, 3, 4)).view(), h.view(), 0.1, &trx).unwrap();
        assert!(out.0.iter().all(|v| *v == 0.0));
    }
}
