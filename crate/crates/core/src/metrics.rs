//! SIR/SINR measurement and the closed-form per-subcarrier SINR.

use std::fmt;

use ndarray::{Array2, ArrayView2, ArrayView3, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equalizer::EqualizerBank;
use crate::error::{Error, Result};
use crate::filterbank::SpreadingMatrix;

/// Reported value when no interference is measured at all.
pub const SIR_CEILING_DB: f64 = 120.0;

/// How per-realization results are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sum signal and error powers, then take the ratio.
    #[default]
    Power,
    /// Average the per-realization dB values.
    Db,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Power => "power",
            Aggregation::Db => "db",
        })
    }
}

/// Accumulated powers for one subcarrier.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SubcarrierStats {
    pub signal: f64,
    pub error: f64,
    pub db_sum: f64,
    pub symbols: u64,
    pub realizations: u64,
}

impl SubcarrierStats {
    fn merge(&mut self, o: &SubcarrierStats) {
        self.signal += o.signal;
        self.error += o.error;
        self.db_sum += o.db_sum;
        self.symbols += o.symbols;
        self.realizations += o.realizations;
    }
}

/// A value in dB, flagged when it was clamped to `±SIR_CEILING_DB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbValue {
    pub db: f64,
    pub clamped: bool,
}

fn ratio_db(signal: f64, error: f64) -> DbValue {
    let db = 10.0 * (signal / error).log10();
    if db.is_nan() || db >= SIR_CEILING_DB {
        DbValue {
            db: SIR_CEILING_DB,
            clamped: true,
        }
    } else if db <= -SIR_CEILING_DB {
        DbValue {
            db: -SIR_CEILING_DB,
            clamped: true,
        }
    } else {
        DbValue { db, clamped: false }
    }
}

/// Per-subcarrier SIR (or SINR) statistics; mergeable across realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SirReport {
    pub per_subcarrier: Vec<SubcarrierStats>,
    pub mode: Aggregation,
}

impl SirReport {
    pub fn empty(subcarriers: usize) -> Self {
        SirReport {
            per_subcarrier: vec![SubcarrierStats::default(); subcarriers],
            mode: Aggregation::default(),
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }

    /// Adds another report in place. Both must cover the same subcarriers.
    pub fn merge(&mut self, other: &SirReport) -> Result<()> {
        if other.subcarriers() != self.subcarriers() {
            return Err(Error::dim("report subcarriers", self.subcarriers(), other.subcarriers()));
        }
        for (a, b) in self.per_subcarrier.iter_mut().zip(&other.per_subcarrier) {
            a.merge(b);
        }
        Ok(())
    }

    pub fn values_db(&self) -> Vec<DbValue> {
        self.per_subcarrier
            .iter()
            .map(|s| match self.mode {
                Aggregation::Power => ratio_db(s.signal, s.error),
                Aggregation::Db => DbValue {
                    db: s.db_sum / s.realizations.max(1) as f64,
                    clamped: false,
                },
            })
            .collect()
    }

    /// Mean of the per-subcarrier dB values.
    pub fn mean_db(&self) -> f64 {
        let v = self.values_db();
        v.iter().map(|d| d.db).sum::<f64>() / v.len().max(1) as f64
    }

    fn single(signal: f64, error: f64, symbols: u64) -> SubcarrierStats {
        SubcarrierStats {
            signal,
            error,
            db_sum: ratio_db(signal, error).db,
            symbols,
            realizations: 1,
        }
    }
}

/// SIR of one realization for one user.
///
/// `sent` and `estimated` are subcarriers × symbols; the first and last
/// `edge` symbols are skipped. Per subcarrier, the estimate is divided by the
/// least-squares gain `a = Σŝs / Σs²` before the error is formed, so a pure
/// scaling does not count as interference.
pub fn measure_sir(
    sent: ArrayView2<'_, f64>,
    estimated: ArrayView2<'_, f64>,
    edge: usize,
) -> Result<SirReport> {
    if sent.dim() != estimated.dim() {
        return Err(Error::dim("measure_sir shape", sent.len(), estimated.len()));
    }
    let (l, ns) = sent.dim();
    if ns <= 2 * edge {
        return Err(Error::dim("measure_sir symbols after edges", 2 * edge + 1, ns));
    }
    let per_subcarrier = (0..l)
        .map(|m| {
            let s = sent.row(m);
            let e = estimated.row(m);
            let range = edge..ns - edge;
            let ss: f64 = range.clone().map(|n| s[n] * s[n]).sum();
            let es: f64 = range.clone().map(|n| e[n] * s[n]).sum();
            let gain = es / ss;
            let err: f64 = range
                .clone()
                .map(|n| (e[n] / gain - s[n]).powi(2))
                .sum();
            SirReport::single(ss, err, range.len() as u64)
        })
        .collect();
    Ok(SirReport {
        per_subcarrier,
        mode: Aggregation::default(),
    })
}

/// Combines reports (e.g. one per realization) under `mode`.
pub fn aggregate(reports: &[SirReport], mode: Aggregation) -> Result<SirReport> {
    let first = reports.first().ok_or(Error::Empty("report list"))?;
    let mut acc = SirReport::empty(first.subcarriers());
    for r in reports {
        acc.merge(r)?;
    }
    acc.mode = mode;
    Ok(acc)
}

/// Closed-form signal and interference-plus-noise powers, users × subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct TheorySinr {
    pub signal: Array2<f64>,
    pub interference: Array2<f64>,
}

impl TheorySinr {
    /// Linear SINR, users × subcarriers.
    pub fn sinr(&self) -> Array2<f64> {
        &self.signal / &self.interference
    }

    /// One user's values as a single-realization report (signal normalized to
    /// one, error `P_I/P_s`) so it aggregates like a measurement.
    pub fn report(&self, user: usize) -> SirReport {
        let per_subcarrier = self
            .signal
            .row(user)
            .iter()
            .zip(self.interference.row(user))
            .map(|(&ps, &pi)| SirReport::single(1.0, pi / ps, 1))
            .collect();
        SirReport {
            per_subcarrier,
            mode: Aggregation::default(),
        }
    }
}

/// Closed-form SINR of the per-bin MMSE receiver.
///
/// For user `ℓ` on subcarrier `m`, summed over the `2K-1` bins `mK + k`
/// with `w = w(ℓ)` the bin's weight vector and real and imaginary parts
/// taken separately:
///
/// * `P_s = Σ_k c_k² (w_Reᵀ h_Re(ℓ) + w_Imᵀ h_Im(ℓ))²`
/// * `P_I = Σ_k c_k² [Σ_{u≠ℓ} (w_Reᵀ h_Re(u) + w_Imᵀ h_Im(u))²
///   + Σ_u (w_Reᵀ h_Im(u) − w_Imᵀ h_Re(u))² + σ² ‖w‖²]`
///
/// `h` is bins × antennas × users and `weights` must come from the same `h`.
pub fn theoretical_sinr(
    h: ArrayView3<'_, Complex64>,
    weights: &EqualizerBank,
    noise_variance: f64,
    spreading: &SpreadingMatrix,
) -> Result<TheorySinr> {
    let (bins, nr, m) = h.dim();
    if weights.0.dim() != (bins, nr, m) {
        return Err(Error::dim("theory weights", h.len(), weights.0.len()));
    }
    if bins != spreading.rows() {
        return Err(Error::dim("theory bins", spreading.rows(), bins));
    }
    let l = spreading.cols();
    // per bin: real/imag cross terms between user ℓ's weights and user u's channel
    let mut re_part = vec![0.0; bins * m * m];
    let mut im_part = vec![0.0; bins * m * m];
    let mut wnorm = vec![0.0; bins * m];
    for i in 0..bins {
        let hb = h.index_axis(Axis(0), i);
        let wb = weights.bin(i);
        for lu in 0..m {
            let w = wb.column(lu);
            wnorm[i * m + lu] = w.iter().map(|v| v.norm_sqr()).sum();
            for u in 0..m {
                let hc = hb.column(u);
                let (mut a, mut b) = (0.0, 0.0);
                for (wv, hv) in w.iter().zip(hc.iter()) {
                    a += wv.re * hv.re + wv.im * hv.im;
                    b += wv.re * hv.im - wv.im * hv.re;
                }
                re_part[(i * m + lu) * m + u] = a;
                im_part[(i * m + lu) * m + u] = b;
            }
        }
    }
    let mut signal = Array2::zeros((m, l));
    let mut interference = Array2::zeros((m, l));
    for sub in 0..l {
        for (bin, c) in spreading.column(sub) {
            let c2 = c * c;
            for lu in 0..m {
                let base = (bin * m + lu) * m;
                signal[[lu, sub]] += c2 * re_part[base + lu].powi(2);
                let mut pi = noise_variance * wnorm[bin * m + lu];
                for u in 0..m {
                    if u != lu {
                        pi += re_part[base + u].powi(2);
                    }
                    pi += im_part[base + u].powi(2);
                }
                interference[[lu, sub]] += c2 * pi;
            }
        }
    }
    Ok(TheorySinr {
        signal,
        interference,
    })
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scenario: String,
    pub user: usize,
    pub subcarrier: usize,
    pub nr: usize,
    pub subcarriers: usize,
    pub overlap: usize,
    pub snr_in_db: Option<f64>,
    pub metric: String,
    pub value_db: f64,
    pub n_trials: usize,
    pub seed: u64,
}

impl CsvRow {
    pub const HEADER: &'static str =
        "scenario,user,subcarrier,nr,l,k,snr_in_db,metric,value_db,n_trials,seed";

    pub fn to_line(&self) -> String {
        let snr = match self.snr_in_db {
            Some(v) => format!("{v}"),
            None => "inf".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{},{}",
            self.scenario,
            self.user,
            self.subcarrier,
            self.nr,
            self.subcarriers,
            self.overlap,
            snr,
            self.metric,
            self.value_db,
            self.n_trials,
            self.seed
        )
    }
}

/// Header plus one line per row, newline-terminated.
pub fn to_csv(rows: &[CsvRow]) -> String {
    let mut out = String::from(CsvRow::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}
