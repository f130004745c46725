//! Delay-Doppler radar signal processing built on the sampled Zak transform.
//!
//! The crate synthesizes chirp and Zak-OTFS (pulsone) probes, passes them
//! through multi-target delay-Doppler channels, evaluates cross-ambiguity
//! surfaces either directly in time or through the Zak domain, and turns the
//! surfaces into range/velocity estimates.
//!
//! Module map:
//!
//! - [`dd_core`]: grids, signals, Zak transform pair, twisted convolution
//! - [`waveforms`]: Gaussian pulse shaping, filtered chirps, pulsones
//! - [`channel`]: target scenes, channel application, AWGN
//! - [`ambiguity`]: time-domain and DD-domain cross-ambiguity, closed-form oracles
//! - [`estimator`]: peak picking, chirp line intersection, ghost removal, RMSE
//! - [`experiments`]: reproducible heatmap / Monte Carlo / benchmark drivers

pub mod ambiguity;
pub mod channel;
pub mod dd_core;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod waveforms;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
