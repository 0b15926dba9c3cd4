//! Frequency-sampled prototype filter and the spreading / phase-adjustment
//! operators shared by the transmitter and every receiver.
//!
//! The prototype is described by `2K-1` real gains `c_k` placed on DFT bins
//! spaced `1/N` apart (`N = K·L`). Subcarrier `m` is centered on bin `mK`, so
//! the spreading operator `A` (N×L) has `2K-1` nonzeros per column, and
//! columns are circular shifts of each other by `K` rows.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `c_k² + c_{K-k}² = 1` for the tabulated designs.
pub const PAIRING_TOLERANCE: f64 = 1e-6;

/// Frequency-domain gains of a root-Nyquist prototype.
///
/// Only `c_0 … c_{K-1}` are stored; `c_{-k} = c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqCoeffs {
    half: Vec<f64>,
}

impl FreqCoeffs {
    /// Frequency-sampling design for overlapping factor `K ∈ {2, 3, 4}`.
    ///
    /// The tables are checked against the root-Nyquist pairing condition
    /// before being returned.
    pub fn design(overlap: usize) -> Result<Self> {
        let half = match overlap {
            2 => vec![1.0, std::f64::consts::FRAC_1_SQRT_2],
            3 => vec![1.0, 0.911_438, 0.411_438],
            4 => vec![1.0, 0.971_960, std::f64::consts::FRAC_1_SQRT_2, 0.235_147],
            other => return Err(Error::UnsupportedOverlap(other)),
        };
        let coeffs = FreqCoeffs { half };
        assert!(
            coeffs.pairing_residual() < PAIRING_TOLERANCE,
            "tabulated K={overlap} design violates the root-Nyquist pairing"
        );
        Ok(coeffs)
    }

    /// Builds coefficients from `c_0 … c_{K-1}` without any validation.
    pub fn from_half(half: Vec<f64>) -> Result<Self> {
        if half.is_empty() {
            return Err(Error::Empty("coefficient list"));
        }
        Ok(FreqCoeffs { half })
    }

    /// Overlapping factor `K`.
    pub fn overlap(&self) -> usize {
        self.half.len()
    }

    /// `c_k` for `k ∈ -K+1 ..= K-1`, zero outside.
    pub fn get(&self, k: isize) -> f64 {
        self.half.get(k.unsigned_abs()).copied().unwrap_or(0.0)
    }

    /// `(k, c_k)` for `k = -K+1 … K-1`.
    pub fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        let k = self.overlap() as isize;
        (-k + 1..k).map(move |i| (i, self.get(i)))
    }

    /// `Σ_k c_k²` over all `2K-1` taps.
    pub fn energy(&self) -> f64 {
        self.iter().map(|(_, c)| c * c).sum()
    }

    /// `max_k |c_k² + c_{K-k}² - 1|` for `k = 1 … K-1`.
    pub fn pairing_residual(&self) -> f64 {
        let k = self.overlap();
        (1..k)
            .map(|i| (self.half[i].powi(2) + self.half[k - i].powi(2) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Time-domain prototype `p(n) = Σ_k c_k e^{j2πkn/N}`, `n = 0 … N-1`.
///
/// `taps` follow the zero-phase indexing of the synthesis formula: the peak
/// sits at `n = 0` and `p(n) = p(N-n)`. [`PrototypeFilter::centered_taps`]
/// gives the same pulse rotated so its peak lies at `N/2`, which is how it
/// is laid out in time by the transmitter.
#[derive(Debug, Clone)]
pub struct PrototypeFilter {
    coeffs: FreqCoeffs,
    subcarriers: usize,
    taps: Vec<f64>,
    imag_residual: f64,
}

impl PrototypeFilter {
    pub fn synthesize(coeffs: &FreqCoeffs, subcarriers: usize) -> Result<Self> {
        check_subcarriers(subcarriers)?;
        let n_len = coeffs.overlap() * subcarriers;
        let mut taps = Vec::with_capacity(n_len);
        let mut imag_peak = 0.0_f64;
        for n in 0..n_len {
            let v: Complex64 = coeffs
                .iter()
                .map(|(k, c)| {
                    let phase = 2.0 * std::f64::consts::PI * (k * n as isize) as f64 / n_len as f64;
                    Complex64::from_polar(c, phase)
                })
                .sum();
            imag_peak = imag_peak.max(v.im.abs());
            taps.push(v.re);
        }
        let peak = taps.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
        Ok(PrototypeFilter {
            coeffs: coeffs.clone(),
            subcarriers,
            taps,
            imag_residual: imag_peak / peak,
        })
    }

    pub fn coeffs(&self) -> &FreqCoeffs {
        &self.coeffs
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Largest imaginary part of the synthesis relative to the peak tap.
    pub fn imag_residual(&self) -> f64 {
        self.imag_residual
    }

    /// Taps rotated by `N/2` so the pulse is centered in its window.
    pub fn centered_taps(&self) -> Vec<f64> {
        let mut out = self.taps.clone();
        out.rotate_right(self.taps.len() / 2);
        out
    }

    /// `max_{m≠0} |q(mL)| / q(0)` where `q = p ⋆ p*(-·)` is the linear
    /// autocorrelation of the centered pulse.
    pub fn nyquist_residual(&self) -> f64 {
        let p = self.centered_taps();
        let n = p.len();
        let q = |lag: usize| -> f64 { (0..n - lag).map(|t| p[t] * p[t + lag]).sum() };
        let q0 = q(0);
        (1..)
            .map(|m| m * self.subcarriers)
            .take_while(|&lag| lag < n)
            .map(|lag| q(lag).abs() / q0)
            .fold(0.0, f64::max)
    }
}

/// Sparse `N×L` spreading matrix.
#[derive(Debug, Clone)]
pub struct SpreadingMatrix {
    coeffs: FreqCoeffs,
    subcarriers: usize,
}

impl SpreadingMatrix {
    pub fn new(coeffs: &FreqCoeffs, subcarriers: usize) -> Self {
        SpreadingMatrix {
            coeffs: coeffs.clone(),
            subcarriers,
        }
    }

    pub fn rows(&self) -> usize {
        self.coeffs.overlap() * self.subcarriers
    }

    pub fn cols(&self) -> usize {
        self.subcarriers
    }

    /// Center bin of subcarrier `m`.
    pub fn center_bin(&self, m: usize) -> usize {
        m * self.coeffs.overlap()
    }

    /// Nonzero entries `(row, c_k)` of column `m`, ordered by `k`.
    pub fn column(&self, m: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.rows() as isize;
        let center = self.center_bin(m) as isize;
        self.coeffs
            .iter()
            .map(move |(k, c)| ((center + k).rem_euclid(n) as usize, c))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.rows(), self.cols()));
        for m in 0..self.cols() {
            for (row, c) in self.column(m) {
                a[[row, m]] += c;
            }
        }
        a
    }

    /// `A · v` for a length-`L` vector.
    pub fn spread(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols() {
            return Err(Error::dim("spread", self.cols(), v.len()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows()];
        for (m, &x) in v.iter().enumerate() {
            for (row, c) in self.column(m) {
                out[row] += x * c;
            }
        }
        Ok(out)
    }

    /// `Aᵀ · y` for a length-`N` vector.
    pub fn despread(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows() {
            return Err(Error::dim("despread", self.rows(), y.len()));
        }
        Ok((0..self.cols())
            .map(|m| self.column(m).map(|(row, c)| y[row] * c).sum())
            .collect())
    }
}

/// Diagonal phase-adjustment matrix `Φ = diag(j^ℓ)`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseMatrix {
    size: usize,
}

impl PhaseMatrix {
    pub fn new(size: usize) -> Self {
        PhaseMatrix { size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Diagonal entry `e^{jπℓ/2}`.
    pub fn diag(&self, l: usize) -> Complex64 {
        quarter_turn(l)
    }

    pub fn inverse_diag(&self, l: usize) -> Complex64 {
        quarter_turn(l).conj()
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        Array2::from_shape_fn((self.size, self.size), |(r, c)| {
            if r == c {
                self.diag(r)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// `j^n`, exact.
pub fn quarter_turn(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// All filter-bank assets for one `(K, L)` geometry.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub prototype: PrototypeFilter,
    pub spreading: SpreadingMatrix,
    pub phase: PhaseMatrix,
}

impl FilterBank {
    pub fn new(overlap: usize, subcarriers: usize) -> Result<Self> {
        let coeffs = FreqCoeffs::design(overlap)?;
        Self::from_coeffs(&coeffs, subcarriers)
    }

    pub fn from_coeffs(coeffs: &FreqCoeffs, subcarriers: usize) -> Result<Self> {
        let prototype = PrototypeFilter::synthesize(coeffs, subcarriers)?;
        Ok(FilterBank {
            prototype,
            spreading: SpreadingMatrix::new(coeffs, subcarriers),
            phase: PhaseMatrix::new(subcarriers),
        })
    }

    pub fn coeffs(&self) -> &FreqCoeffs {
        self.prototype.coeffs()
    }

    pub fn overlap(&self) -> usize {
        self.coeffs().overlap()
    }

    pub fn subcarriers(&self) -> usize {
        self.prototype.subcarriers()
    }

    /// DFT size `N = K·L`.
    pub fn fft_len(&self) -> usize {
        self.prototype.len()
    }

    /// Symbol advance `L/2` in samples.
    pub fn hop(&self) -> usize {
        self.subcarriers() / 2
    }
}

pub(crate) fn check_subcarriers(l: usize) -> Result<()> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::OddSubcarriers(l));
    }
    Ok(())
}
