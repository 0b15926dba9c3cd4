//! Tapped-delay-line multipath channels and AWGN.
//!
//! Every (user, antenna) link is an independent realization of the same
//! power-delay profile with Rayleigh taps at integer sample delays. Channels
//! are static over a frame. The per-bin responses handed to the receivers are
//! the exact `N`-point DFT of the sampled impulse response.

use ndarray::Array3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transceiver::TimeSignal;

/// Power-delay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub name: String,
    pub delays_us: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl ChannelProfile {
    /// SUI-4: three taps at 0, 1.5 and 4 µs with 0, -4 and -8 dB.
    pub fn sui4() -> Self {
        ChannelProfile {
            name: "sui4".into(),
            delays_us: vec![0.0, 1.5, 4.0],
            powers_db: vec![0.0, -4.0, -8.0],
        }
    }

    /// Single tap at zero delay (frequency-flat).
    pub fn flat() -> Self {
        ChannelProfile {
            name: "flat".into(),
            delays_us: vec![0.0],
            powers_db: vec![0.0],
        }
    }

    pub fn new(name: impl Into<String>, delays_us: Vec<f64>, powers_db: Vec<f64>) -> Result<Self> {
        let p = ChannelProfile {
            name: name.into(),
            delays_us,
            powers_db,
        };
        p.validate()?;
        Ok(p)
    }

    /// Looks up a built-in profile by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "sui4" => Some(Self::sui4()),
            "flat" => Some(Self::flat()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays_us.is_empty() {
            return Err(Error::Profile(format!("{}: no taps", self.name)));
        }
        if self.delays_us.len() != self.powers_db.len() {
            return Err(Error::Profile(format!(
                "{}: {} delays but {} powers",
                self.name,
                self.delays_us.len(),
                self.powers_db.len()
            )));
        }
        if self.delays_us[0] != 0.0 {
            return Err(Error::Profile(format!("{}: first delay must be 0", self.name)));
        }
        if self
            .delays_us
            .iter()
            .chain(&self.powers_db)
            .any(|v| !v.is_finite())
            || self.delays_us.iter().any(|&d| d < 0.0)
        {
            return Err(Error::Profile(format!(
                "{}: delays must be finite and non-negative, powers finite",
                self.name
            )));
        }
        Ok(())
    }

    pub fn tap_count(&self) -> usize {
        self.delays_us.len()
    }

    /// Linear tap powers scaled to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Tap delays rounded to the nearest sample at `sample_rate`.
    pub fn sample_delays(&self, sample_rate: f64) -> Vec<usize> {
        self.delays_us
            .iter()
            .map(|d| (d * 1e-6 * sample_rate).round() as usize)
            .collect()
    }
}

/// Noise variance per complex sample per antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl NoiseSpec {
    pub fn noise_free() -> Self {
        NoiseSpec { variance: 0.0 }
    }

    /// Variance giving the requested per-antenna input SNR for unit received
    /// signal power.
    pub fn from_snr_db(snr_db: f64) -> Self {
        NoiseSpec {
            variance: 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn is_noise_free(&self) -> bool {
        self.variance == 0.0
    }
}

/// Circular complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// One multi-user, multi-antenna channel draw.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Distinct tap delays in samples, ascending.
    delays: Vec<usize>,
    /// Tap gains, users × antennas × delays.
    gains: Array3<Complex64>,
    /// Per-bin responses, bins × antennas × users.
    freq: Array3<Complex64>,
}

impl ChannelRealization {
    /// Draws Rayleigh taps for `users × antennas` independent links.
    pub fn draw<R: Rng + ?Sized>(
        profile: &ChannelProfile,
        users: usize,
        antennas: usize,
        sample_rate: f64,
        fft_len: usize,
        rng: &mut R,
    ) -> Result<Self> {
        profile.validate()?;
        let powers = profile.normalized_powers();
        let quantized = profile.sample_delays(sample_rate);
        let mut delays = quantized.clone();
        delays.sort_unstable();
        delays.dedup();
        let slot: Vec<usize> = quantized
            .iter()
            .map(|d| delays.binary_search(d).expect("delay present"))
            .collect();
        let mut gains = Array3::zeros((users, antennas, delays.len()));
        for u in 0..users {
            for a in 0..antennas {
                for (t, &p) in powers.iter().enumerate() {
                    gains[[u, a, slot[t]]] += complex_gaussian(rng, p);
                }
            }
        }
        Self::from_sparse(delays, gains, fft_len)
    }

    /// Builds a realization from dense impulse responses
    /// (users × antennas × taps).
    pub fn from_impulse_responses(h: Array3<Complex64>, fft_len: usize) -> Result<Self> {
        let delays: Vec<usize> = (0..h.shape()[2]).collect();
        Self::from_sparse(delays, h, fft_len)
    }

    fn from_sparse(delays: Vec<usize>, gains: Array3<Complex64>, fft_len: usize) -> Result<Self> {
        let (users, antennas, taps) = gains.dim();
        if taps != delays.len() {
            return Err(Error::dim("channel taps", delays.len(), taps));
        }
        if users == 0 || antennas == 0 {
            return Err(Error::Empty("user/antenna set"));
        }
        let mut freq = Array3::zeros((fft_len, antennas, users));
        let twiddles: Vec<Vec<Complex64>> = delays
            .iter()
            .map(|&d| {
                (0..fft_len)
                    .map(|i| {
                        let turns = ((i * d) % fft_len) as f64 / fft_len as f64;
                        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * turns)
                    })
                    .collect()
            })
            .collect();
        for u in 0..users {
            for a in 0..antennas {
                for (t, tw) in twiddles.iter().enumerate() {
                    let g = gains[[u, a, t]];
                    for i in 0..fft_len {
                        freq[[i, a, u]] += g * tw[i];
                    }
                }
            }
        }
        Ok(ChannelRealization {
            delays,
            gains,
            freq,
        })
    }

    pub fn users(&self) -> usize {
        self.gains.shape()[0]
    }

    pub fn antennas(&self) -> usize {
        self.gains.shape()[1]
    }

    pub fn fft_len(&self) -> usize {
        self.freq.shape()[0]
    }

    pub fn max_delay(&self) -> usize {
        self.delays.last().copied().unwrap_or(0)
    }

    /// Per-bin responses `H`, bins × antennas × users.
    pub fn freq(&self) -> &Array3<Complex64> {
        &self.freq
    }

    /// Sample-spaced impulse response of one link.
    pub fn impulse_response(&self, user: usize, antenna: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::default(); self.max_delay() + 1];
        for (t, &d) in self.delays.iter().enumerate() {
            h[d] += self.gains[[user, antenna, t]];
        }
        h
    }

    /// Received signal at one antenna: sum over users of linear convolutions
    /// plus AWGN. Output length is input length plus the maximum delay.
    pub fn receive_antenna<R: Rng + ?Sized>(
        &self,
        signals: &[TimeSignal],
        antenna: usize,
        noise: NoiseSpec,
        rng: &mut R,
    ) -> Result<Vec<Complex64>> {
        let len = check_signals(signals, self.users())?;
        let mut out = vec![Complex64::default(); len + self.max_delay()];
        for (u, sig) in signals.iter().enumerate() {
            for (t, &d) in self.delays.iter().enumerate() {
                let g = self.gains[[u, antenna, t]];
                for (o, x) in out[d..d + len].iter_mut().zip(&sig.samples) {
                    *o += g * x;
                }
            }
        }
        if !noise.is_noise_free() {
            for o in out.iter_mut() {
                *o += complex_gaussian(rng, noise.variance);
            }
        }
        Ok(out)
    }

    /// Received signals at every antenna, antenna-major.
    pub fn apply<R: Rng + ?Sized>(
        &self,
        signals: &[TimeSignal],
        noise: NoiseSpec,
        rng: &mut R,
    ) -> Result<Vec<TimeSignal>> {
        let rate = signals.first().map(|s| s.sample_rate).unwrap_or(1.0);
        (0..self.antennas())
            .map(|a| {
                Ok(TimeSignal {
                    samples: self.receive_antenna(signals, a, noise, rng)?,
                    sample_rate: rate,
                })
            })
            .collect()
    }
}

fn check_signals(signals: &[TimeSignal], users: usize) -> Result<usize> {
    if signals.len() != users {
        return Err(Error::dim("user signals", users, signals.len()));
    }
    let first = signals.first().ok_or(Error::Empty("user signals"))?;
    for s in signals {
        if s.len() != first.len() {
            return Err(Error::dim("user signal length", first.len(), s.len()));
        }
        if s.sample_rate != first.sample_rate {
            return Err(Error::Profile("user signals differ in sample rate".into()));
        }
    }
    Ok(first.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sui4_profile_shape() {
        let p = ChannelProfile::sui4();
        assert_eq!(p.tap_count(), 3);
        assert_eq!(p.sample_delays(2.8e6), vec![0, 4, 11]);
        assert_abs_diff_eq!(p.normalized_powers().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_profiles() {
        assert!(ChannelProfile::new("x", vec![0.5], vec![0.0]).is_err());
        assert!(ChannelProfile::new("x", vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(ChannelProfile::new("x", vec![], vec![]).is_err());
        assert!(ChannelProfile::new("x", vec![0.0, -1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn flat_profile_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = ChannelRealization::draw(&ChannelProfile::flat(), 2, 4, 2.8e6, 32, &mut rng).unwrap();
        assert_eq!(ch.freq().dim(), (32, 4, 2));
        for u in 0..2 {
            for a in 0..4 {
                let h0 = ch.freq()[[0, a, u]];
                for i in 1..32 {
                    assert!((ch.freq()[[i, a, u]] - h0).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn tap_power_moments() {
        let p = ChannelProfile::sui4();
        let want = p.normalized_powers();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let ch = ChannelRealization::draw(&p, 1, 100_000, 2.8e6, 16, &mut rng).unwrap();
        for (t, &d) in [0usize, 4, 11].iter().enumerate() {
            let mean: f64 = (0..100_000)
                .map(|a| ch.impulse_response(0, a)[d].norm_sqr())
                .sum::<f64>()
                / 1e5;
            assert!((mean / want[t] - 1.0).abs() < 0.02, "tap {t}: {mean}");
        }
    }

    #[test]
    fn freq_is_dft_of_impulse_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = ChannelRealization::draw(&ChannelProfile::sui4(), 2, 3, 2.8e6, 64, &mut rng).unwrap();
        for u in 0..2 {
            for a in 0..3 {
                let h = ch.impulse_response(u, a);
                for i in 0..64 {
                    let direct: Complex64 = h
                        .iter()
                        .enumerate()
                        .map(|(d, g)| {
                            g * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (i * d) as f64 / 64.0)
                        })
                        .sum();
                    assert!((direct - ch.freq()[[i, a, u]]).norm() < 1e-12);
                }
            }
        }
    }

    fn signal(samples: Vec<Complex64>) -> TimeSignal {
        TimeSignal {
            samples,
            sample_rate: 1.0,
        }
    }

    #[test]
    fn identity_channel_sums_users() {
        let mut h = Array3::zeros((2, 1, 1));
        h[[0, 0, 0]] = Complex64::new(1.0, 0.0);
        h[[1, 0, 0]] = Complex64::new(1.0, 0.0);
        let ch = ChannelRealization::from_impulse_responses(h, 8).unwrap();
        let x0: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let x1: Vec<Complex64> = (0..10).map(|i| Complex64::new(0.0, i as f64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rx = ch
            .apply(&[signal(x0.clone()), signal(x1.clone())], NoiseSpec::noise_free(), &mut rng)
            .unwrap();
        for i in 0..10 {
            assert_eq!(rx[0].samples[i], x0[i] + x1[i]);
        }
    }

    #[test]
    fn delayed_delta_delays() {
        let d = 3;
        let mut h = Array3::zeros((1, 1, d + 1));
        h[[0, 0, d]] = Complex64::new(1.0, 0.0);
        let ch = ChannelRealization::from_impulse_responses(h, 8).unwrap();
        let x: Vec<Complex64> = (0..10).map(|i| Complex64::new(1.0 + i as f64, 0.5)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rx = ch.apply(&[signal(x.clone())], NoiseSpec::noise_free(), &mut rng).unwrap();
        assert_eq!(rx[0].len(), 13);
        assert_eq!(&rx[0].samples[d..d + 10], &x[..]);
        assert!(rx[0].samples[..d].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn noise_variance_moment() {
        let ch = ChannelRealization::from_impulse_responses(Array3::zeros((1, 1, 1)), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rx = ch
            .apply(&[signal(vec![Complex64::default(); 100_000])], NoiseSpec { variance: 1.0 }, &mut rng)
            .unwrap();
        let var: f64 = rx[0].samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / 1e5;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let ch = ChannelRealization::from_impulse_responses(Array3::zeros((2, 1, 1)), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = ch.apply(
            &[signal(vec![Complex64::default(); 4]), signal(vec![Complex64::default(); 5])],
            NoiseSpec::noise_free(),
            &mut rng,
        );
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn snr_conversion() {
        assert_abs_diff_eq!(NoiseSpec::from_snr_db(-1.0).variance, 10f64.powf(0.1), epsilon = 1e-15);
        assert!(NoiseSpec::noise_free().is_noise_free());
    }
}
