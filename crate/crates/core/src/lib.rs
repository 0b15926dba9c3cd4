//! Frequency-spreading cosine modulated multitone (FS-CMT) over multi-user
//! massive MIMO uplink channels.
//!
//! The crate is organized bottom-up:
//!
//! * [`filterbank`]: prototype filter, spreading and phase operators.
//! * [`transceiver`]: symbol synthesis, overlap-add and windowed analysis.
//! * [`channel`]: tapped-delay-line multipath and AWGN.
//! * [`equalizer`]: per-bin MMSE equalization and the single-tap baseline.
//! * [`metrics`]: SIR/SINR measurement and the closed-form SINR.
//! * [`config`] and [`runner`]: scenario configuration and Monte Carlo runs.

pub mod error;
pub mod filterbank;

pub use error::{Error, Result};
pub mod channel;
pub mod equalizer;
pub mod transceiver;
pub mod metrics;
pub mod config;
pub mod runner;
pub mod selftest;
