//! Monte Carlo scenario runner.
//!
//! Each realization draws one channel for the largest antenna count and
//! evaluates every smaller `Nr` on the first `Nr` antennas of that draw, so
//! the antenna sweep is a paired comparison. Realization `t` uses a ChaCha8
//! stream derived from `(master_seed, t)`; results are collected in trial
//! order and reduced sequentially, which keeps output independent of the
//! thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::s;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{ChannelProfile, ChannelRealization, NoiseSpec};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::equalizer::{
    despread_users, equalize_bins, mmse_weights, ppn_single_tap_receive, Estimates,
    PerBinReceived,
};
use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::metrics::{measure_sir, theoretical_sinr, to_csv, Aggregation, CsvRow, SirReport};
use crate::transceiver::{Alphabet, SymbolMatrix, TimePhase, Transceiver};

/// Which receivers and metrics a trial evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receivers {
    pub fse: bool,
    pub ppn: bool,
    pub theory: bool,
}

impl Receivers {
    pub fn for_scenario(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::SelfEqSir => Receivers { fse: true, ppn: false, theory: false },
            ScenarioKind::FseVsPpn => Receivers { fse: true, ppn: true, theory: false },
            ScenarioKind::MultiuserTheoryVsSim => Receivers { fse: true, ppn: false, theory: true },
            ScenarioKind::Custom => Receivers { fse: true, ppn: true, theory: true },
        }
    }
}

/// Everything needed to simulate one link geometry.
#[derive(Debug, Clone)]
pub struct LinkParams {
    pub overlap: usize,
    pub subcarriers: usize,
    pub time_phase: TimePhase,
    pub alphabet: Alphabet,
    pub profile: ChannelProfile,
    pub sample_rate: f64,
    pub users: usize,
    pub antennas: Vec<usize>,
    pub noise: NoiseSpec,
    pub symbols: usize,
    pub receivers: Receivers,
}

impl LinkParams {
    pub fn from_config(config: &ScenarioConfig, subcarriers: usize) -> Result<Self> {
        Ok(LinkParams {
            overlap: config.waveform.overlap,
            subcarriers,
            time_phase: config.waveform.time_phase,
            alphabet: config.waveform.alphabet,
            profile: config.channel_profile()?,
            sample_rate: config.waveform.bandwidth_hz,
            users: config.channel.users,
            antennas: config.channel.antennas.clone(),
            noise: config.noise(),
            symbols: config.run.symbols_per_frame,
            receivers: Receivers::for_scenario(config.scenario.name),
        })
    }
}

/// Per-user reports of one receiver at one antenna count.
pub type UserReports = Vec<SirReport>;

/// Results for one antenna count.
#[derive(Debug, Clone, PartialEq)]
pub struct NrResult {
    pub nr: usize,
    pub fse: Option<UserReports>,
    pub ppn: Option<UserReports>,
    pub theory: Option<UserReports>,
}

impl NrResult {
    fn merge(&mut self, other: &NrResult) -> Result<()> {
        for (mine, theirs) in [
            (&mut self.fse, &other.fse),
            (&mut self.ppn, &other.ppn),
            (&mut self.theory, &other.theory),
        ] {
            if let (Some(a), Some(b)) = (mine.as_mut(), theirs.as_ref()) {
                for (x, y) in a.iter_mut().zip(b) {
                    x.merge(y)?;
                }
            }
        }
        Ok(())
    }

    fn set_mode(&mut self, mode: Aggregation) {
        for reports in [&mut self.fse, &mut self.ppn, &mut self.theory]
            .into_iter()
            .flatten()
        {
            for r in reports.iter_mut() {
                r.mode = mode;
            }
        }
    }
}

/// Single-geometry link simulator.
#[derive(Debug, Clone)]
pub struct LinkSimulator {
    params: LinkParams,
    trx: Transceiver,
}

impl LinkSimulator {
    pub fn new(params: LinkParams) -> Result<Self> {
        let bank = FilterBank::new(params.overlap, params.subcarriers)?;
        if params.antennas.is_empty() {
            return Err(Error::Empty("antenna list"));
        }
        Ok(LinkSimulator {
            trx: Transceiver::new(bank, params.time_phase),
            params,
        })
    }

    pub fn transceiver(&self) -> &Transceiver {
        &self.trx
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    fn edge(&self) -> usize {
        self.params.overlap - 1
    }

    /// One realization: channel draw, per-user frames, reception at every
    /// antenna, then every requested receiver at every antenna count.
    pub fn run_trial(&self, rng: &mut ChaCha8Rng) -> Result<Vec<NrResult>> {
        let p = &self.params;
        let max_nr = p.antennas.iter().copied().max().unwrap_or(0);
        let channel = ChannelRealization::draw(
            &p.profile,
            p.users,
            max_nr,
            p.sample_rate,
            self.trx.fft_len(),
            rng,
        )?;
        let sent: Vec<SymbolMatrix> = (0..p.users)
            .map(|_| SymbolMatrix::random(p.subcarriers, p.symbols, p.alphabet, rng))
            .collect();
        let signals = sent
            .iter()
            .map(|s| self.trx.synthesize(s, p.sample_rate))
            .collect::<Result<Vec<_>>>()?;
        let frames = (0..max_nr)
            .map(|a| {
                let rx = channel.receive_antenna(&signals, a, p.noise, rng)?;
                self.trx.analyze_windows(&rx, p.symbols, 0)
            })
            .collect::<Result<Vec<_>>>()?;
        let received = PerBinReceived::from_frames(&frames)?;
        let sigma2 = p.noise.variance;

        p.antennas
            .iter()
            .map(|&nr| {
                let r = received.first_antennas(nr);
                let h = channel.freq().slice(s![.., ..nr, ..]);
                let needs_weights = p.receivers.fse || p.receivers.theory;
                let weights = if needs_weights {
                    Some(mmse_weights(h, sigma2)?)
                } else {
                    None
                };
                let fse = match (&weights, p.receivers.fse) {
                    (Some(w), true) => {
                        let est = despread_users(&equalize_bins(r, w)?, &self.trx)?;
                        Some(self.measure(&sent, &est)?)
                    }
                    _ => None,
                };
                let ppn = if p.receivers.ppn {
                    let est = ppn_single_tap_receive(r, h, sigma2, &self.trx)?;
                    Some(self.measure(&sent, &est)?)
                } else {
                    None
                };
                let theory = match (&weights, p.receivers.theory) {
                    (Some(w), true) => {
                        let t = theoretical_sinr(h, w, sigma2, &self.trx.bank().spreading)?;
                        Some((0..p.users).map(|u| t.report(u)).collect())
                    }
                    _ => None,
                };
                Ok(NrResult {
                    nr,
                    fse,
                    ppn,
                    theory,
                })
            })
            .collect()
    }

    fn measure(&self, sent: &[SymbolMatrix], est: &Estimates) -> Result<UserReports> {
        sent.iter()
            .enumerate()
            .map(|(u, s)| measure_sir(s.0.view(), est.user(u), self.edge()))
            .collect()
    }

    /// Runs `realizations` trials and reduces them in trial order.
    pub fn run(
        &self,
        realizations: usize,
        master_seed: u64,
        threads: usize,
        mode: Aggregation,
    ) -> Result<Vec<NrResult>> {
        let trials = map_trials(realizations, threads, |t| {
            let mut rng = trial_rng(master_seed, t);
            self.run_trial(&mut rng)
        })?;
        let mut iter = trials.into_iter();
        let mut acc = iter.next().ok_or(Error::Empty("realization set"))?;
        for trial in iter {
            for (a, b) in acc.iter_mut().zip(&trial) {
                a.merge(b)?;
            }
        }
        for r in acc.iter_mut() {
            r.set_mode(mode);
        }
        Ok(acc)
    }
}

/// RNG for realization `trial`: stream `trial` of the master seed.
pub fn trial_rng(master_seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial as u64);
    rng
}

#[cfg(feature = "parallel")]
fn map_trials<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("run.threads", e.to_string()))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T, F>(n: usize, _threads: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..n).map(f).collect()
}

/// Mean over subcarriers for one (L, Nr, metric).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub subcarriers: usize,
    pub subcarrier_width_hz: f64,
    pub nr: usize,
    pub metric: String,
    pub mean_db: f64,
}

/// Outcome of one `L` of a scenario.
#[derive(Debug, Clone)]
pub struct GeometryResult {
    pub subcarriers: usize,
    pub round_trip_gain: f64,
    pub per_nr: Vec<NrResult>,
}

/// Outcome of a full scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub geometries: Vec<GeometryResult>,
    pub rows: Vec<CsvRow>,
    pub summaries: Vec<Summary>,
}

impl ScenarioResult {
    pub fn csv(&self) -> String {
        to_csv(&self.rows)
    }

    pub fn summary(&self, subcarriers: usize, nr: usize, metric: &str) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.subcarriers == subcarriers && s.nr == nr && s.metric == metric)
            .map(|s| s.mean_db)
    }
}

/// Metric labels for the FSE, single-tap and closed-form results.
fn metric_names(noise_free: bool) -> (&'static str, &'static str, &'static str) {
    if noise_free {
        ("fse_sir", "ppn_sir", "theory_sir")
    } else {
        ("fse_sinr", "ppn_sinr", "theory_sinr")
    }
}

/// Validates and runs any scenario.
pub fn run_scenario(config: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    config.validate()?;
    let (fse_name, ppn_name, theory_name) = metric_names(config.snr_in_db().is_none());
    let scenario = config.scenario.name.name().to_string();
    let mut geometries = Vec::new();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &l in &config.waveform.subcarriers {
        let sim = LinkSimulator::new(LinkParams::from_config(config, l)?)?;
        let per_nr = sim.run(
            config.run.realizations,
            config.run.master_seed,
            threads,
            config.run.aggregation,
        )?;
        let width = config.waveform.bandwidth_hz / l as f64;
        for res in &per_nr {
            for (name, reports) in [
                (fse_name, &res.fse),
                (ppn_name, &res.ppn),
                (theory_name, &res.theory),
            ] {
                let Some(reports) = reports else { continue };
                let mut user_means = Vec::new();
                for (u, rep) in reports.iter().enumerate() {
                    for (m, v) in rep.values_db().iter().enumerate() {
                        rows.push(CsvRow {
                            scenario: scenario.clone(),
                            user: u,
                            subcarrier: m,
                            nr: res.nr,
                            subcarriers: l,
                            overlap: config.waveform.overlap,
                            snr_in_db: config.snr_in_db(),
                            metric: name.to_string(),
                            value_db: v.db,
                            n_trials: config.run.realizations,
                            seed: config.run.master_seed,
                        });
                    }
                    user_means.push(rep.mean_db());
                }
                summaries.push(Summary {
                    subcarriers: l,
                    subcarrier_width_hz: width,
                    nr: res.nr,
                    metric: name.to_string(),
                    mean_db: user_means.iter().sum::<f64>() / user_means.len() as f64,
                });
            }
        }
        geometries.push(GeometryResult {
            subcarriers: l,
            round_trip_gain: sim.transceiver().round_trip_gain(),
            per_nr,
        });
    }
    // FSE minus single-tap gap per (L, Nr)
    let gaps: Vec<Summary> = summaries
        .iter()
        .filter(|s| s.metric == fse_name)
        .filter_map(|f| {
            summaries
                .iter()
                .find(|p| p.metric == ppn_name && p.subcarriers == f.subcarriers && p.nr == f.nr)
                .map(|p| Summary {
                    metric: "fse_minus_ppn_gap".into(),
                    mean_db: f.mean_db - p.mean_db,
                    ..f.clone()
                })
        })
        .collect();
    summaries.extend(gaps);
    Ok(ScenarioResult {
        config: config.clone(),
        geometries,
        rows,
        summaries,
    })
}

fn run_kind(config: &ScenarioConfig, kind: ScenarioKind, threads: usize) -> Result<ScenarioResult> {
    if config.scenario.name != kind {
        return Err(Error::config(
            "scenario.name",
            format!("expected {kind}, got {}", config.scenario.name),
        ));
    }
    run_scenario(config, threads)
}

/// Single-user noise-free SIR sweep over `L` and `Nr`.
pub fn run_self_eq(config: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    run_kind(config, ScenarioKind::SelfEqSir, threads)
}

/// FSE against the single-tap baseline on identical channels and noise.
pub fn run_fse_vs_ppn(config: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    run_kind(config, ScenarioKind::FseVsPpn, threads)
}

/// Multi-user simulated SINR next to the closed form.
pub fn run_multiuser(config: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    run_kind(config, ScenarioKind::MultiuserTheoryVsSim, threads)
}

#[derive(Serialize)]
struct RunRecord<'a> {
    run: RunMeta<'a>,
    geometry: Vec<GeometryMeta>,
    summary: &'a [Summary],
    config: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    scenario: &'a str,
    version: &'a str,
    csv: String,
    wall_time_s: f64,
    threads: usize,
    time_phase: String,
    aggregation: String,
}

#[derive(Serialize)]
struct GeometryMeta {
    subcarriers: usize,
    subcarrier_width_hz: f64,
    round_trip_gain: f64,
}

/// Paths of the files written for a run.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub csv: PathBuf,
    pub metadata: PathBuf,
}

/// Writes `<scenario>.csv` and the `<scenario>.meta.toml` sidecar.
pub fn write_outputs(
    out_dir: &Path,
    result: &ScenarioResult,
    threads: usize,
    wall_time_s: f64,
) -> Result<RunOutputs> {
    std::fs::create_dir_all(out_dir)?;
    let name = result.config.scenario.name.name();
    let csv = out_dir.join(format!("{name}.csv"));
    let metadata = out_dir.join(format!("{name}.meta.toml"));
    std::fs::write(&csv, result.csv())?;
    let record = RunRecord {
        run: RunMeta {
            scenario: name,
            version: env!("CARGO_PKG_VERSION"),
            csv: csv.display().to_string(),
            wall_time_s,
            threads,
            time_phase: result.config.waveform.time_phase.to_string(),
            aggregation: result.config.run.aggregation.to_string(),
        },
        geometry: result
            .geometries
            .iter()
            .map(|g| GeometryMeta {
                subcarriers: g.subcarriers,
                subcarrier_width_hz: result.config.waveform.bandwidth_hz / g.subcarriers as f64,
                round_trip_gain: g.round_trip_gain,
            })
            .collect(),
        summary: &result.summaries,
        config: &result.config,
    };
    let text = toml::to_string(&record).map_err(|e| Error::config("metadata", e.to_string()))?;
    std::fs::write(&metadata, text)?;
    Ok(RunOutputs { csv, metadata })
}

/// Runs a scenario and writes its outputs, timing the run.
pub fn run_to_dir(config: &ScenarioConfig, threads: usize, out_dir: &Path) -> Result<(ScenarioResult, RunOutputs)> {
    let start = Instant::now();
    let result = run_scenario(config, threads)?;
    let outputs = write_outputs(out_dir, &result, threads, start.elapsed().as_secs_f64())?;
    Ok((result, outputs))
}
