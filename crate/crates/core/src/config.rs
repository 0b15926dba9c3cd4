//! Scenario configuration.
//!
//! Configs are TOML files with `[scenario]`, `[waveform]`, `[channel]`,
//! `[noise]` and `[run]` sections. Every field has a default, so an empty
//! file describes the single-user self-equalization sweep.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelProfile, NoiseSpec};
use crate::error::{Error, Result};
use crate::filterbank::FreqCoeffs;
use crate::metrics::Aggregation;
use crate::transceiver::{Alphabet, TimePhase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Single user, noise-free, FSE SIR per subcarrier for each `L` and `Nr`.
    #[default]
    SelfEqSir,
    /// Single user, FSE against the single-tap baseline on paired channels.
    FseVsPpn,
    /// Multi-user simulated SINR against the closed form.
    MultiuserTheoryVsSim,
    /// Every receiver and metric.
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SelfEqSir => "self_eq_sir",
            ScenarioKind::FseVsPpn => "fse_vs_ppn",
            ScenarioKind::MultiuserTheoryVsSim => "multiuser_theory_vs_sim",
            ScenarioKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ScenarioKind::SelfEqSir,
            ScenarioKind::FseVsPpn,
            ScenarioKind::MultiuserTheoryVsSim,
            ScenarioKind::Custom,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| {
            Error::config(
                "scenario.name",
                format!(
                    "unknown scenario {s:?}; expected self_eq_sir, fse_vs_ppn, \
                     multiuser_theory_vs_sim or custom"
                ),
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: ScenarioKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    /// Subcarrier counts `L`; each is run in turn.
    pub subcarriers: Vec<usize>,
    /// Overlapping factor `K`.
    pub overlap: usize,
    /// Total bandwidth, also the complex sample rate.
    pub bandwidth_hz: f64,
    pub time_phase: TimePhase,
    pub alphabet: Alphabet,
}

impl Default for WaveformSection {
    fn default() -> Self {
        WaveformSection {
            subcarriers: vec![16],
            overlap: 4,
            bandwidth_hz: 2.8e6,
            time_phase: TimePhase::Staggered,
            alphabet: Alphabet::Pam2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Built-in profile name (`sui4`, `flat`) or a custom label when
    /// `delays_us`/`powers_db` are given.
    pub profile: String,
    pub delays_us: Option<Vec<f64>>,
    pub powers_db: Option<Vec<f64>>,
    /// Number of users `M`.
    pub users: usize,
    /// Receive antenna counts `Nr` to sweep.
    pub antennas: Vec<usize>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            profile: "sui4".into(),
            delays_us: None,
            powers_db: None,
            users: 1,
            antennas: vec![1, 2, 4, 8, 16, 32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub noise_free: bool,
    /// Per-user per-antenna input SNR; ignored when `noise_free`.
    pub snr_in_db: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            noise_free: true,
            snr_in_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub realizations: usize,
    pub symbols_per_frame: usize,
    pub master_seed: u64,
    pub aggregation: Aggregation,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            realizations: 200,
            symbols_per_frame: 64,
            master_seed: 1,
            aggregation: Aggregation::Power,
            threads: 0,
        }
    }
}

/// Complete description of one scenario run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub waveform: WaveformSection,
    pub channel: ChannelSection,
    pub noise: NoiseSection,
    pub run: RunSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Full-size defaults for each scenario.
    pub fn preset(kind: ScenarioKind) -> Self {
        let mut c = ScenarioConfig::default();
        c.scenario.name = kind;
        match kind {
            ScenarioKind::SelfEqSir => {
                c.waveform.subcarriers = vec![8, 16, 32];
            }
            ScenarioKind::FseVsPpn => {}
            ScenarioKind::MultiuserTheoryVsSim | ScenarioKind::Custom => {
                c.channel.users = 6;
                c.channel.antennas = vec![64, 128];
                c.noise = NoiseSection {
                    noise_free: false,
                    snr_in_db: Some(-1.0),
                };
            }
        }
        c
    }

    pub fn channel_profile(&self) -> Result<ChannelProfile> {
        let ch = &self.channel;
        match (&ch.delays_us, &ch.powers_db) {
            (Some(d), Some(p)) => ChannelProfile::new(ch.profile.clone(), d.clone(), p.clone())
                .map_err(|e| Error::config("channel.delays_us", e.to_string())),
            (None, None) => ChannelProfile::builtin(&ch.profile).ok_or_else(|| {
                Error::config(
                    "channel.profile",
                    format!(
                        "unknown profile {:?}; use sui4, flat, or give delays_us and powers_db",
                        ch.profile
                    ),
                )
            }),
            _ => Err(Error::config(
                "channel.delays_us",
                "delays_us and powers_db must be given together",
            )),
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        match (self.noise.noise_free, self.noise.snr_in_db) {
            (false, Some(snr)) => NoiseSpec::from_snr_db(snr),
            _ => NoiseSpec::noise_free(),
        }
    }

    /// SNR reported in result rows; `None` when noise-free.
    pub fn snr_in_db(&self) -> Option<f64> {
        if self.noise.noise_free {
            None
        } else {
            self.noise.snr_in_db
        }
    }

    pub fn max_antennas(&self) -> usize {
        self.channel.antennas.iter().copied().max().unwrap_or(0)
    }

    /// Edge symbols dropped at each end of a frame.
    pub fn edge_symbols(&self) -> usize {
        self.waveform.overlap.saturating_sub(1)
    }

    /// Checks structural validity and the scenario's preconditions.
    pub fn validate(&self) -> Result<()> {
        let w = &self.waveform;
        if w.subcarriers.is_empty() {
            return Err(Error::config("waveform.subcarriers", "list is empty"));
        }
        for &l in &w.subcarriers {
            if l < 2 || l % 2 != 0 {
                return Err(Error::config(
                    "waveform.subcarriers",
                    format!("L = {l} must be even and at least 2"),
                ));
            }
        }
        FreqCoeffs::design(w.overlap).map_err(|e| Error::config("waveform.overlap", e.to_string()))?;
        if !(w.bandwidth_hz > 0.0 && w.bandwidth_hz.is_finite()) {
            return Err(Error::config("waveform.bandwidth_hz", "must be positive"));
        }
        self.channel_profile()?;
        let ch = &self.channel;
        if ch.users == 0 {
            return Err(Error::config("channel.users", "must be positive"));
        }
        if ch.antennas.is_empty() || ch.antennas.contains(&0) {
            return Err(Error::config("channel.antennas", "must be a non-empty list of positive counts"));
        }
        if !self.noise.noise_free {
            match self.noise.snr_in_db {
                Some(v) if v.is_finite() => {}
                _ => {
                    return Err(Error::config(
                        "noise.snr_in_db",
                        "required (finite) unless noise_free = true",
                    ))
                }
            }
        } else if ch.antennas.iter().any(|&nr| nr < ch.users) {
            return Err(Error::config(
                "channel.antennas",
                "noise-free MMSE needs at least as many antennas as users",
            ));
        }
        let r = &self.run;
        if r.realizations == 0 {
            return Err(Error::config("run.realizations", "must be positive"));
        }
        if r.symbols_per_frame <= 2 * self.edge_symbols() {
            return Err(Error::config(
                "run.symbols_per_frame",
                format!(
                    "must exceed {} so symbols remain after dropping edges",
                    2 * self.edge_symbols()
                ),
            ));
        }
        match self.scenario.name {
            ScenarioKind::SelfEqSir => {
                if ch.users != 1 {
                    return Err(Error::config("channel.users", "self_eq_sir is single-user (users = 1)"));
                }
                if !self.noise.noise_free {
                    return Err(Error::config("noise.noise_free", "self_eq_sir is noise-free"));
                }
            }
            ScenarioKind::FseVsPpn => {
                if ch.users != 1 {
                    return Err(Error::config("channel.users", "fse_vs_ppn is single-user (users = 1)"));
                }
            }
            ScenarioKind::MultiuserTheoryVsSim => {
                if self.noise.noise_free {
                    return Err(Error::config(
                        "noise.noise_free",
                        "multiuser_theory_vs_sim needs snr_in_db",
                    ));
                }
            }
            ScenarioKind::Custom => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn sections_parse() {
        let c = ScenarioConfig::from_toml(
            r#"
            [scenario]
            name = "multiuser_theory_vs_sim"
            [waveform]
            subcarriers = [16]
            overlap = 4
            bandwidth_hz = 2.8e6
            [channel]
            profile = "sui4"
            users = 6
            antennas = [64, 128]
            [noise]
            noise_free = false
            snr_in_db = -1.0
            [run]
            realizations = 10
            master_seed = 9
            aggregation = "db"
            "#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.scenario.name, ScenarioKind::MultiuserTheoryVsSim);
        assert_eq!(c.run.aggregation, Aggregation::Db);
        assert!((c.noise().variance - 10f64.powf(0.1)).abs() < 1e-12);
    }

    #[test]
    fn odd_l_names_the_field() {
        let c = ScenarioConfig::from_toml("[waveform]\nsubcarriers = [15]\n").unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("waveform.subcarriers"), "{msg}");
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ScenarioConfig::from_toml("[waveform]\nsubcarrier = 8\n").is_err());
    }

    #[test]
    fn custom_profile_lists() {
        let c = ScenarioConfig::from_toml(
            "[channel]\nprofile = \"two_tap\"\ndelays_us = [0.0, 1.0]\npowers_db = [0.0, -3.0]\n",
        )
        .unwrap();
        let p = c.channel_profile().unwrap();
        assert_eq!(p.tap_count(), 2);
        let bad = ScenarioConfig::from_toml("[channel]\ndelays_us = [0.0]\n").unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scenario_preconditions() {
        let mut c = ScenarioConfig::preset(ScenarioKind::SelfEqSir);
        c.channel.users = 2;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::preset(ScenarioKind::MultiuserTheoryVsSim);
        c.validate().unwrap();
        c.noise.noise_free = true;
        assert!(c.validate().is_err());
        assert_eq!("fse_vs_ppn".parse::<ScenarioKind>().unwrap(), ScenarioKind::FseVsPpn);
        assert!("nope".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::preset(ScenarioKind::MultiuserTheoryVsSim);
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
