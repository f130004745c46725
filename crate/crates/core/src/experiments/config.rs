use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ambiguity::SearchRegion;
use crate::channel::{GainLaw, RadarScene};
use crate::dd_core::DdGrid;
use crate::error::{Error, Result};
use crate::waveforms::{GaussianFilterParams, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// B = 1 MHz, T = 2 ms, tau_p = 50 us, 30 trials.
    Ci,
    /// B = 4 MHz, T = 20 ms, tau_p = 100 us, 100 trials.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSource {
    File { path: PathBuf },
    Inline { targets: RadarScene },
    /// `count` targets in `[0, tau_max] x [-nu_max, nu_max]`.
    Random { tau_max_s: f64, nu_max_hz: f64, count: usize },
}

/// Run configuration; every field has a profile default so a config file
/// only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub waveform: Waveform,
    pub bandwidth_hz: f64,
    pub duration_s: f64,
    pub tau_p_s: f64,
    pub p: usize,
    pub q: usize,
    pub alpha: f64,
    pub beta: f64,
    pub carrier_hz: f64,
    pub scene: SceneSource,
    /// `None` is noise-free.
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub gain_law: GainLaw,
    /// Delay floor of the inverse-delay gain law; `None` is one delay resolution.
    pub min_delay_s: Option<f64>,
    pub rel_threshold: f64,
    /// Ridge threshold for chirp band extraction, relative to the surface maximum.
    pub ridge_threshold: f64,
    /// Probe sparsification for the pulsone DD path; `None` uses the dense path.
    pub sparsity: Option<f64>,
    /// Explicit search region; `None` derives one from the scene.
    pub region: Option<SearchRegion>,
    pub snr_list_db: Vec<f64>,
    pub bench_log2_bt: Vec<u32>,
    pub bench_repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_profile(Profile::Ci)
    }
}

impl ExperimentConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (b, t, tau_p, trials) = match profile {
            Profile::Ci => (1e6, 2e-3, 50e-6, 30),
            Profile::Paper => (4e6, 20e-3, 100e-6, 100),
        };
        let (u_tau, u_nu) = rectangle_units(b, t);
        Self {
            waveform: Waveform::ZakOtfs,
            bandwidth_hz: b,
            duration_s: t,
            tau_p_s: tau_p,
            p: 2,
            q: 2,
            alpha: GaussianFilterParams::DEFAULT_SHAPE,
            beta: GaussianFilterParams::DEFAULT_SHAPE,
            carrier_hz: 1e9,
            scene: SceneSource::Random { tau_max_s: 3.0 * u_tau, nu_max_hz: 3.0 * u_nu, count: 4 },
            snr_db: None,
            trials,
            seed: 0,
            gain_law: GainLaw::Unit,
            min_delay_s: None,
            rel_threshold: 0.5,
            ridge_threshold: 0.25,
            sparsity: Some(1e-4),
            region: None,
            snr_list_db: vec![-40.0, -30.0, -20.0, -10.0, 0.0],
            bench_log2_bt: vec![10, 11, 12, 13, 14],
            bench_repeats: 3,
        }
    }

    /// Profile defaults overlaid with the fields present in a JSON file.
    pub fn load(path: &Path, profile: Profile) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, profile)
    }

    pub fn from_json(text: &str, profile: Profile) -> Result<Self> {
        let mut base = serde_json::to_value(Self::for_profile(profile))?;
        let patch: serde_json::Value = serde_json::from_str(text)?;
        let serde_json::Value::Object(patch) = patch else {
            return Err(Error::config("config must be a JSON object"));
        };
        let obj = base.as_object_mut().expect("config serializes to an object");
        for (k, v) in patch {
            obj.insert(k, v);
        }
        let cfg: Self = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.filter()?;
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::config("carrier frequency must be positive"));
        }
        if !(self.rel_threshold > 0.0 && self.rel_threshold < 1.0) {
            return Err(Error::config("rel_threshold must lie in (0, 1)"));
        }
        if !(self.ridge_threshold > 0.0 && self.ridge_threshold < 1.0) {
            return Err(Error::config("ridge_threshold must lie in (0, 1)"));
        }
        if let Some(s) = self.snr_db {
            if s.is_nan() {
                return Err(Error::config("snr_db is NaN"));
            }
        }
        if let SceneSource::Random { tau_max_s, nu_max_hz, count } = self.scene {
            if count == 0 || !(tau_max_s >= 0.0) || !(nu_max_hz >= 0.0) {
                return Err(Error::config("random scene needs count >= 1 and nonnegative extents"));
            }
        }
        if let Some(r) = &self.region {
            r.validate()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<DdGrid> {
        DdGrid::new(self.bandwidth_hz, self.duration_s, self.tau_p_s, self.p, self.q)
    }

    pub fn filter(&self) -> Result<GaussianFilterParams> {
        GaussianFilterParams::new(self.alpha, self.beta, self.bandwidth_hz, self.duration_s)
    }

    pub fn min_delay(&self) -> f64 {
        self.min_delay_s.unwrap_or(1.0 / self.bandwidth_hz)
    }

    /// `(1/B, 1/T)`.
    pub fn resolution(&self) -> (f64, f64) {
        (1.0 / self.bandwidth_hz, 1.0 / self.duration_s)
    }

    /// Noise level, with `+inf` for the noise-free case.
    pub fn snr(&self) -> f64 {
        self.snr_db.unwrap_or(f64::INFINITY)
    }
}

/// The i-th shrinking target rectangle `[0, (7-i) u_tau] x [-(7-i) u_nu, (7-i) u_nu]`.
///
/// `(u_tau, u_nu) = (4/B, 4/T)`, which is `(1 us, 200 Hz)` at B = 4 MHz,
/// T = 20 ms, so other grids see the same rectangles in resolution cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleSpec {
    pub index: usize,
    pub tau_max_s: f64,
    pub nu_max_hz: f64,
}

impl RectangleSpec {
    pub fn new(index: usize, grid: &DdGrid) -> Result<Self> {
        if !(1..=6).contains(&index) {
            return Err(Error::config("rectangle index must be in 1..=6"));
        }
        let (u_tau, u_nu) = Self::units(grid);
        let s = (7 - index) as f64;
        Ok(Self { index, tau_max_s: s * u_tau, nu_max_hz: s * u_nu })
    }

    pub fn units(grid: &DdGrid) -> (f64, f64) {
        rectangle_units(grid.bandwidth(), grid.duration())
    }

    pub fn all(grid: &DdGrid) -> Result<Vec<Self>> {
        (1..=6).map(|i| Self::new(i, grid)).collect()
    }
}

fn rectangle_units(b: f64, t: f64) -> (f64, f64) {
    (4.0 / b, 4.0 / t)
}
