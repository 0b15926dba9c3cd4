//! FS-CMT synthesis and analysis.
//!
//! A symbol vector `s(n)` is phase-adjusted, spread onto `N = K·L` bins and
//! brought to time by one inverse DFT. The resulting block is in zero-phase
//! order (pulse peak at index 0); it is rotated by `N/2` so the pulse is
//! centered in its window, then overlap-added with a hop of `L/2` samples.
//! The receiver reverses the rotation on each window before the DFT, so a
//! back-to-back chain maps `A Φ s` to itself bin for bin.
//!
//! DFT convention: forward unnormalized, inverse scaled by `1/N`.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{quarter_turn, FilterBank};

/// Phase convention along the time (symbol) axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimePhase {
    /// `s(n)` is additionally multiplied by `j^n`.
    #[default]
    Staggered,
    /// Only the per-subcarrier `Φ` is applied.
    SubcarrierOnly,
}

impl TimePhase {
    /// Phase applied to every subcarrier of symbol `n`.
    pub fn factor(self, n: usize) -> Complex64 {
        match self {
            TimePhase::Staggered => quarter_turn(n),
            TimePhase::SubcarrierOnly => Complex64::new(1.0, 0.0),
        }
    }
}

impl fmt::Display for TimePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimePhase::Staggered => "staggered",
            TimePhase::SubcarrierOnly => "subcarrier_only",
        })
    }
}

/// Real PAM alphabet, normalized to unit average power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    #[default]
    Pam2,
    Pam4,
}

impl Alphabet {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Alphabet::Pam2 => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Alphabet::Pam4 => {
                let level = [-3.0, -1.0, 1.0, 3.0][rng.random_range(0..4)];
                level / 5f64.sqrt()
            }
        }
    }
}

/// Real symbols, `L` subcarriers × `Ns` symbol times.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix(pub Array2<f64>);

impl SymbolMatrix {
    pub fn random<R: Rng + ?Sized>(
        subcarriers: usize,
        symbols: usize,
        alphabet: Alphabet,
        rng: &mut R,
    ) -> Self {
        let mut s = Array2::zeros((subcarriers, symbols));
        // column-major fill so the draw order is time-major
        for n in 0..symbols {
            for m in 0..subcarriers {
                s[[m, n]] = alphabet.sample(rng);
            }
        }
        SymbolMatrix(s)
    }

    pub fn subcarriers(&self) -> usize {
        self.0.nrows()
    }

    pub fn symbols(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, n: usize) -> Vec<f64> {
        self.0.column(n).to_vec()
    }
}

/// Complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl TimeSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }
}

/// DFT outputs of successive receive windows: `N` bins × `Ns` windows.
#[derive(Debug, Clone, PartialEq)]
pub struct BinFrame {
    pub bins: Array2<Complex64>,
    pub window_offsets: Vec<usize>,
}

impl BinFrame {
    pub fn column(&self, n: usize) -> Vec<Complex64> {
        self.bins.column(n).to_vec()
    }
}

/// Length of an overlap-added frame of `symbols` blocks.
pub fn frame_len(symbols: usize, fft_len: usize, hop: usize) -> usize {
    if symbols == 0 {
        0
    } else {
        (symbols - 1) * hop + fft_len
    }
}

/// Superposes equal-length blocks, block `n` starting at `n·hop`.
pub fn overlap_add(blocks: &[Vec<Complex64>], hop: usize) -> Result<Vec<Complex64>> {
    let first = blocks.first().ok_or(Error::Empty("symbol sequence"))?;
    let n = first.len();
    let mut out = vec![Complex64::new(0.0, 0.0); frame_len(blocks.len(), n, hop)];
    for (i, block) in blocks.iter().enumerate() {
        if block.len() != n {
            return Err(Error::dim("overlap_add block", n, block.len()));
        }
        for (o, b) in out[i * hop..i * hop + n].iter_mut().zip(block) {
            *o += b;
        }
    }
    Ok(out)
}

/// Transmitter and single-antenna analysis for one filter-bank geometry.
#[derive(Clone)]
pub struct Transceiver {
    bank: FilterBank,
    time_phase: TimePhase,
    tx_gain: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Transceiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transceiver")
            .field("overlap", &self.bank.overlap())
            .field("subcarriers", &self.bank.subcarriers())
            .field("time_phase", &self.time_phase)
            .field("tx_gain", &self.tx_gain)
            .finish()
    }
}

impl Transceiver {
    /// Uses the transmit gain that gives unit average sample power for
    /// unit-power symbols: each symbol carries `g²·L·Σc_k²/N` energy and one
    /// arrives every `L/2` samples, so `g = sqrt(L/2)` when `Σc_k² = K`.
    pub fn new(bank: FilterBank, time_phase: TimePhase) -> Self {
        let n = bank.fft_len();
        let per_symbol = bank.subcarriers() as f64 * bank.coeffs().energy() / n as f64;
        let tx_gain = (bank.hop() as f64 / per_symbol).sqrt();
        let mut planner = FftPlanner::new();
        Transceiver {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            bank,
            time_phase,
            tx_gain,
        }
    }

    pub fn with_tx_gain(mut self, gain: f64) -> Self {
        self.tx_gain = gain;
        self
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn time_phase(&self) -> TimePhase {
        self.time_phase
    }

    pub fn tx_gain(&self) -> f64 {
        self.tx_gain
    }

    /// Gain from a transmitted symbol to the despread value before scaling:
    /// `tx_gain · Σ c_k²`.
    pub fn round_trip_gain(&self) -> f64 {
        self.tx_gain * self.bank.coeffs().energy()
    }

    pub fn fft_len(&self) -> usize {
        self.bank.fft_len()
    }

    pub fn subcarriers(&self) -> usize {
        self.bank.subcarriers()
    }

    /// `F_N^H A Φ s` in zero-phase order, without the transmit gain.
    pub fn modulate_symbol(&self, s: &[f64]) -> Result<Vec<Complex64>> {
        let l = self.subcarriers();
        if s.len() != l {
            return Err(Error::dim("modulate_symbol", l, s.len()));
        }
        let phased: Vec<Complex64> = s
            .iter()
            .enumerate()
            .map(|(m, &v)| self.bank.phase.diag(m) * v)
            .collect();
        let mut bins = self.bank.spreading.spread(&phased)?;
        self.inverse.process(&mut bins);
        let scale = 1.0 / self.fft_len() as f64;
        bins.iter_mut().for_each(|v| *v *= scale);
        Ok(bins)
    }

    /// Full transmit chain for a frame of symbols.
    pub fn synthesize(&self, symbols: &SymbolMatrix, sample_rate: f64) -> Result<TimeSignal> {
        if symbols.subcarriers() != self.subcarriers() {
            return Err(Error::dim(
                "synthesize subcarriers",
                self.subcarriers(),
                symbols.subcarriers(),
            ));
        }
        let blocks = (0..symbols.symbols())
            .map(|n| {
                let mut block = self.modulate_symbol(&symbols.column(n))?;
                let g = self.time_phase.factor(n) * self.tx_gain;
                block.iter_mut().for_each(|v| *v *= g);
                block.rotate_right(self.fft_len() / 2);
                Ok(block)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TimeSignal {
            samples: overlap_add(&blocks, self.bank.hop())?,
            sample_rate,
        })
    }

    /// DFTs of `count` windows of `N` samples spaced `L/2` apart, starting at
    /// `first_offset`. Samples past the end of `x` are taken as zero.
    pub fn analyze_windows(
        &self,
        x: &[Complex64],
        count: usize,
        first_offset: i64,
    ) -> Result<BinFrame> {
        if first_offset < 0 {
            return Err(Error::NegativeOffset(first_offset));
        }
        let n = self.fft_len();
        let hop = self.bank.hop();
        let start = first_offset as usize;
        let mut bins = Array2::zeros((n, count));
        let mut offsets = Vec::with_capacity(count);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for w in 0..count {
            let off = start + w * hop;
            offsets.push(off);
            for (t, b) in buf.iter_mut().enumerate() {
                *b = x.get(off + t).copied().unwrap_or_default();
            }
            buf.rotate_left(n / 2);
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            bins.column_mut(w).assign(&ndarray::ArrayView1::from(&buf));
        }
        Ok(BinFrame {
            bins,
            window_offsets: offsets,
        })
    }

    /// `Φ⁻¹ Aᵀ y` with the time phase of symbol `n` removed and the
    /// round-trip gain divided out; the real part is the symbol estimate.
    pub fn despread_complex(&self, bins: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
        let despread = self.bank.spreading.despread(bins)?;
        let undo = self.time_phase.factor(n).conj() / self.round_trip_gain();
        Ok(despread
            .into_iter()
            .enumerate()
            .map(|(m, v)| v * self.bank.phase.inverse_diag(m) * undo)
            .collect())
    }

    /// `Re{Φ⁻¹ Aᵀ y}` scaled back to symbol units.
    pub fn demodulate(&self, bins: &[Complex64], n: usize) -> Result<Vec<f64>> {
        Ok(self
            .despread_complex(bins, n)?
            .into_iter()
            .map(|v| v.re)
            .collect())
    }

    /// Demodulates every window of a frame, window index = symbol index.
    pub fn demodulate_frame(&self, frame: &BinFrame) -> Result<SymbolMatrix> {
        let ns = frame.bins.ncols();
        let mut out = Array2::zeros((self.subcarriers(), ns));
        for n in 0..ns {
            let est = self.demodulate(&frame.column(n), n)?;
            out.column_mut(n).assign(&ndarray::Array1::from(est));
        }
        Ok(SymbolMatrix(out))
    }
}
