//! Native checks of the operations the browser demo calls.

use fse_sim_web::{fse_vs_single_tap, multiuser_sinr, prototype_response_db, prototype_taps};

#[test]
fn taps_are_symmetric_with_central_peak() {
    let taps = prototype_taps(4, 16).unwrap();
    assert_eq!(taps.len(), 64);
    let peak = taps.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(taps[32], peak);
    for i in 1..32 {
        assert!((taps[32 - i] - taps[32 + i]).abs() < 1e-12);
    }
}

#[test]
fn response_peaks_at_zero_and_has_deep_stopband() {
    let span = 4;
    let r = prototype_response_db(4, 16, span).unwrap();
    let per_spacing = 4 * 32;
    assert_eq!(r.len(), 2 * span * per_spacing + 1);
    let center = span * per_spacing;
    assert!(r[center].abs() < 1e-9);
    // two spacings out is well past the transition band
    assert!(r[center + 2 * per_spacing] < -30.0, "{}", r[center + 2 * per_spacing]);
    // half a spacing out is the -3 dB crossover of a root-Nyquist pulse
    assert!((r[center + per_spacing / 2] + 3.01).abs() < 0.1);
}

#[test]
fn fse_beats_single_tap_with_many_antennas() {
    let v = fse_vs_single_tap(16, 32, 4, 1).unwrap();
    assert_eq!(v.len(), 32);
    let fse: f64 = v[..16].iter().sum::<f64>() / 16.0;
    let ppn: f64 = v[16..].iter().sum::<f64>() / 16.0;
    assert!(fse > ppn + 15.0, "{fse} vs {ppn}");
}

#[test]
fn multiuser_sim_tracks_theory() {
    let v = multiuser_sinr(16, 2, 16, 0.0, 4, 2).unwrap();
    assert_eq!(v.len(), 32);
    for m in 0..16 {
        assert!((v[m] - v[16 + m]).abs() < 2.0, "subcarrier {m}: {} vs {}", v[m], v[16 + m]);
    }
}

#[test]
fn bad_parameters_are_reported() {
    assert!(prototype_taps(5, 16).is_err());
    assert!(prototype_taps(4, 15).is_err());
    assert!(fse_vs_single_tap(16, 0, 4, 1).is_err());
    assert!(fse_vs_single_tap(16, 8, 100_000, 1).is_err());
    assert!(multiuser_sinr(16, 0, 4, 0.0, 2, 1).is_err());
}
