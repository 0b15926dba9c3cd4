//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: the prototype filter's taps and frequency
//! response, the FSE against single-tap comparison, and the multi-user
//! simulated SINR against the closed form. Each has a plain Rust function
//! (used by the native tests) and a thin `#[wasm_bindgen]` wrapper.

use fse_sim::config::{ScenarioConfig, ScenarioKind};
use fse_sim::filterbank::FilterBank;
use fse_sim::metrics::CsvRow;
use fse_sim::runner::run_scenario;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use wasm_bindgen::prelude::*;

/// Zero-padding factor used for the frequency response.
const OVERSAMPLE: usize = 32;

/// Upper bounds that keep a browser tab responsive.
const MAX_ANTENNAS: usize = 128;
const MAX_TRIALS: usize = 500;

fn bank(overlap: usize, subcarriers: usize) -> Result<FilterBank, String> {
    FilterBank::new(overlap, subcarriers).map_err(|e| e.to_string())
}

/// Pulse taps in time order (peak in the middle).
pub fn prototype_taps(overlap: usize, subcarriers: usize) -> Result<Vec<f64>, String> {
    Ok(bank(overlap, subcarriers)?.prototype.centered_taps())
}

/// Magnitude response in dB (peak at 0 dB), sampled evenly over
/// `-span ..= span` subcarrier spacings.
pub fn prototype_response_db(
    overlap: usize,
    subcarriers: usize,
    span: usize,
) -> Result<Vec<f64>, String> {
    let taps = prototype_taps(overlap, subcarriers)?;
    let len = taps.len() * OVERSAMPLE;
    let mut buf: Vec<Complex64> = taps.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    buf.resize(len, Complex64::default());
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // one subcarrier spacing is K·OVERSAMPLE bins of the padded transform
    let per_spacing = (overlap * OVERSAMPLE) as isize;
    let half = span as isize * per_spacing;
    Ok((-half..=half)
        .map(|b| {
            let mag = buf[b.rem_euclid(len as isize) as usize].norm() / peak;
            20.0 * mag.max(1e-12).log10()
        })
        .collect())
}

fn check_sizes(nr: usize, trials: usize) -> Result<(), String> {
    if nr == 0 || nr > MAX_ANTENNAS {
        return Err(format!("antennas must be in 1..={MAX_ANTENNAS}"));
    }
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    Ok(())
}

/// Per-subcarrier value of `metric`, averaged in dB over users.
fn per_subcarrier(rows: &[CsvRow], metric: &str, subcarriers: usize) -> Vec<f64> {
    let mut sum = vec![0.0; subcarriers];
    let mut count = vec![0usize; subcarriers];
    for r in rows.iter().filter(|r| r.metric == metric) {
        sum[r.subcarrier] += r.value_db;
        count[r.subcarrier] += 1;
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect()
}

/// Noise-free SUI-4 link, one user: FSE SIR per subcarrier followed by the
/// single-tap SIR per subcarrier (`2L` values).
pub fn fse_vs_single_tap(
    subcarriers: usize,
    nr: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    check_sizes(nr, trials)?;
    let mut c = ScenarioConfig::preset(ScenarioKind::FseVsPpn);
    c.waveform.subcarriers = vec![subcarriers];
    c.channel.antennas = vec![nr];
    c.run.realizations = trials;
    c.run.master_seed = seed;
    c.validate().map_err(|e| e.to_string())?;
    let r = run_scenario(&c, 1).map_err(|e| e.to_string())?;
    let mut out = per_subcarrier(&r.rows, "fse_sir", subcarriers);
    out.extend(per_subcarrier(&r.rows, "ppn_sir", subcarriers));
    Ok(out)
}

/// Multi-user SUI-4 link: simulated SINR per subcarrier followed by the
/// closed-form SINR per subcarrier (`2L` values, each averaged over users).
pub fn multiuser_sinr(
    subcarriers: usize,
    users: usize,
    nr: usize,
    snr_db: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    check_sizes(nr, trials)?;
    let mut c = ScenarioConfig::preset(ScenarioKind::MultiuserTheoryVsSim);
    c.waveform.subcarriers = vec![subcarriers];
    c.channel.users = users;
    c.channel.antennas = vec![nr];
    c.noise.snr_in_db = Some(snr_db);
    c.run.realizations = trials;
    c.run.master_seed = seed;
    c.validate().map_err(|e| e.to_string())?;
    let r = run_scenario(&c, 1).map_err(|e| e.to_string())?;
    let mut out = per_subcarrier(&r.rows, "fse_sinr", subcarriers);
    out.extend(per_subcarrier(&r.rows, "theory_sinr", subcarriers));
    Ok(out)
}

#[wasm_bindgen(js_name = prototypeTaps)]
pub fn prototype_taps_js(overlap: usize, subcarriers: usize) -> Result<Vec<f64>, JsValue> {
    prototype_taps(overlap, subcarriers).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = prototypeResponseDb)]
pub fn prototype_response_db_js(
    overlap: usize,
    subcarriers: usize,
    span: usize,
) -> Result<Vec<f64>, JsValue> {
    prototype_response_db(overlap, subcarriers, span).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = fseVsSingleTap)]
pub fn fse_vs_single_tap_js(
    subcarriers: usize,
    nr: usize,
    trials: usize,
    seed: u32,
) -> Result<Vec<f64>, JsValue> {
    fse_vs_single_tap(subcarriers, nr, trials, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = multiuserSinr)]
pub fn multiuser_sinr_js(
    subcarriers: usize,
    users: usize,
    nr: usize,
    snr_db: f64,
    trials: usize,
    seed: u32,
) -> Result<Vec<f64>, JsValue> {
    multiuser_sinr(subcarriers, users, nr, snr_db, trials, seed.into())
        .map_err(|e| JsValue::from_str(&e))
}
