//! Multi-target delay-Doppler channels and receiver noise.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dd_core::{DdGrid, DdPatch, TimeSignal};
use crate::error::{Error, Result};

/// Point reflector `h delta(tau - tau_s) delta(nu - nu_hz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TargetRecord", into = "TargetRecord")]
pub struct Target {
    pub h: Complex64,
    pub tau_s: f64,
    pub nu_hz: f64,
}

#[derive(Serialize, Deserialize)]
struct TargetRecord {
    h_re: f64,
    h_im: f64,
    tau_s: f64,
    nu_hz: f64,
}

impl From<TargetRecord> for Target {
    fn from(r: TargetRecord) -> Self {
        Target {
            h: Complex64::new(r.h_re, r.h_im),
            tau_s: r.tau_s,
            nu_hz: r.nu_hz,
        }
    }
}

impl From<Target> for TargetRecord {
    fn from(t: Target) -> Self {
        TargetRecord {
            h_re: t.h.re,
            h_im: t.h.im,
            tau_s: t.tau_s,
            nu_hz: t.nu_hz,
        }
    }
}

impl Target {
    pub fn new(h: Complex64, tau_s: f64, nu_hz: f64) -> Self {
        Self { h, tau_s, nu_hz }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_s >= 0.0) || !self.tau_s.is_finite() || !self.nu_hz.is_finite() {
            return Err(Error::config(format!(
                "target delay {} s / Doppler {} Hz invalid (delay must be finite and >= 0)",
                self.tau_s, self.nu_hz
            )));
        }
        if !(self.h.norm() > 0.0) || !self.h.norm().is_finite() {
            return Err(Error::config("target gain must be nonzero and finite"));
        }
        Ok(())
    }
}

/// Set of reflectors; serialized as a bare JSON list of
/// `{h_re, h_im, tau_s, nu_hz}` records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RadarScene {
    pub targets: Vec<Target>,
}

impl RadarScene {
    pub fn new(targets: Vec<Target>) -> Result<Self> {
        let s = Self { targets };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.targets.iter().try_for_each(Target::validate)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    fn spread(&self, f: impl Fn(&Target) -> f64) -> f64 {
        let lo = self.targets.iter().map(&f).fold(f64::INFINITY, f64::min);
        let hi = self.targets.iter().map(&f).fold(f64::NEG_INFINITY, f64::max);
        if self.targets.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn delay_spread(&self) -> f64 {
        self.spread(|t| t.tau_s)
    }

    pub fn doppler_spread(&self) -> f64 {
        self.spread(|t| t.nu_hz)
    }

    pub fn is_underspread(&self) -> bool {
        self.delay_spread() * self.doppler_spread() < 1.0
    }

    /// Targets as discretized DD impulses on the bins of `grid`.
    pub fn as_impulses(&self, grid: &DdGrid) -> Result<DdPatch> {
        let (dt, dn) = (grid.delay_step(), grid.doppler_step());
        let mut bins = Vec::with_capacity(self.targets.len());
        for t in &self.targets {
            bins.push((on_bin(t.tau_s, dt, "delay")?, on_bin(t.nu_hz, dn, "Doppler")?, t.h));
        }
        let k0 = bins.iter().map(|b| b.0).min().unwrap_or(0);
        let k1 = bins.iter().map(|b| b.0).max().unwrap_or(0);
        let l0 = bins.iter().map(|b| b.1).min().unwrap_or(0);
        let l1 = bins.iter().map(|b| b.1).max().unwrap_or(0);
        let mut p = DdPatch::zeros(dt, dn, k0, l0, (k1 - k0 + 1) as usize, (l1 - l0 + 1) as usize);
        for (k, l, h) in bins {
            let v = p.get(k, l) + h / grid.cell_area();
            p.set(k, l, v);
        }
        Ok(p)
    }
}

fn on_bin(v: f64, step: f64, what: &str) -> Result<i64> {
    let x = v / step;
    let r = x.round();
    if (x - r).abs() > 1e-6 {
        return Err(Error::config(format!("{what} {v} is not on the sampling grid")));
    }
    Ok(r as i64)
}

/// True when both the delay and Doppler spreads fit strictly inside one period.
pub fn crystallization_check(scene: &RadarScene, grid: &DdGrid) -> bool {
    scene.delay_spread() < grid.tau_p() && scene.doppler_spread() < grid.nu_p()
}

/// Scene with delays rounded to the nearest sample, plus `snapped - original`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnappedScene {
    pub scene: RadarScene,
    pub residuals: Vec<f64>,
}

pub fn snap_delays(scene: &RadarScene, sample_rate: f64) -> SnappedScene {
    let mut out = scene.clone();
    let residuals = out
        .targets
        .iter_mut()
        .map(|t| {
            let snapped = (t.tau_s * sample_rate).round() / sample_rate;
            let r = snapped - t.tau_s;
            t.tau_s = snapped;
            r
        })
        .collect();
    SnappedScene {
        scene: out,
        residuals,
    }
}

/// `y(t) = sum_i h_i exp(j 2 pi nu_i (t - tau_i)) x(t - tau_i)`, observed on the
/// sample span of `x`.
///
/// Delays must be whole samples (see [`snap_delays`]) and no longer than one
/// delay period, the guard at the end of the Zak window.
pub fn apply_scene(scene: &RadarScene, x: &TimeSignal, grid: &DdGrid) -> Result<TimeSignal> {
    scene.validate()?;
    let fs = x.sample_rate;
    if (fs - grid.sample_rate()).abs() > 1e-9 * fs {
        return Err(Error::config("signal and grid sample rates differ"));
    }
    let mut y = TimeSignal::new(vec![Complex64::new(0.0, 0.0); x.len()], fs, x.start_index);
    for t in &scene.targets {
        if t.tau_s > grid.tau_p() * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "target delay {} s exceeds the {} s guard period",
                t.tau_s,
                grid.tau_p()
            )));
        }
        let d = on_bin(t.tau_s, 1.0 / fs, "delay")?;
        let tau = d as f64 / fs;
        for (local, out) in y.samples.iter_mut().enumerate().skip(d as usize) {
            let i = x.start_index + local as i64;
            let ramp = Complex64::from_polar(1.0, 2.0 * PI * t.nu_hz * (i as f64 / fs - tau));
            *out += t.h * ramp * x.samples[local - d as usize];
        }
    }
    Ok(y)
}

/// Adds circular complex Gaussian noise of per-sample variance
/// `sum |y|^2 / (P M N snr)`; `snr_db = +inf` leaves `y` untouched.
pub fn add_awgn_with<R: Rng + ?Sized>(y: &TimeSignal, grid: &DdGrid, snr_db: f64, rng: &mut R) -> TimeSignal {
    if snr_db == f64::INFINITY {
        return y.clone();
    }
    let power: f64 = y.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / (grid.p() * grid.bt()) as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut out = y.clone();
    for s in &mut out.samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(re, im) * sigma;
    }
    out
}

pub fn add_awgn(y: &TimeSignal, grid: &DdGrid, snr_db: f64, seed: u64) -> TimeSignal {
    add_awgn_with(y, grid, snr_db, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Path-gain model for generated scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainLaw {
    Unit,
    /// `|h| = 1e-7 / max(tau, min_delay)`.
    InverseDelay,
}

impl GainLaw {
    pub fn magnitude(&self, tau_s: f64, min_delay_s: f64) -> f64 {
        match self {
            GainLaw::Unit => 1.0,
            GainLaw::InverseDelay => 1e-7 / tau_s.max(min_delay_s),
        }
    }
}

/// `count` targets drawn uniformly from `[tau_lo, tau_hi] x [-nu_max, nu_max]`
/// with uniformly random gain phase.
pub fn random_scene<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    tau_range: (f64, f64),
    nu_max: f64,
    law: GainLaw,
    min_delay_s: f64,
) -> RadarScene {
    let targets = (0..count)
        .map(|_| {
            let tau = rng.gen_range(tau_range.0..=tau_range.1);
            let nu = rng.gen_range(-nu_max..=nu_max);
            let phase = rng.gen_range(0.0..2.0 * PI);
            Target::new(Complex64::from_polar(law.magnitude(tau, min_delay_s), phase), tau, nu)
        })
        .collect();
    RadarScene { targets }
}
