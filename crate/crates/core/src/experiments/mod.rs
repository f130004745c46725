//! Reproducible drivers: heatmaps, rectangle-shrink and SNR Monte Carlo
//! tables, and the complexity benchmark.

mod bench;
mod config;
mod pipeline;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bench::{run_complexity_bench, BenchReport, BenchRow};
pub use config::{ExperimentConfig, Profile, RectangleSpec, SceneSource};
pub use pipeline::{Pipeline, Processed};

use crate::ambiguity::SearchRegion;
use crate::channel::{random_scene, RadarScene};
use crate::error::{Error, Result};
use crate::estimator::{rms_error, DetectionReport, RmsReport, TargetEstimate};
use crate::waveforms::Waveform;

pub const ALL_WAVEFORMS: [Waveform; 3] = [Waveform::ZakOtfs, Waveform::ChirpTwoPairs, Waveform::ChirpSinglePair];

/// Independent RNG stream for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn noise_stream(point: usize, waveform: usize, trial: usize) -> u64 {
    (1 << 62) | ((point as u64) << 40) | ((waveform as u64) << 32) | trial as u64
}

/// Scene of one trial. Positions are drawn relative to the rectangle, so a
/// trial index gives the same relative layout in every rectangle.
fn trial_scene(cfg: &ExperimentConfig, trial: usize, tau_max_s: f64, nu_max_hz: f64, count: usize) -> RadarScene {
    let mut rng = stream_rng(cfg.seed, trial as u64);
    random_scene(&mut rng, count, (0.0, tau_max_s), nu_max_hz, cfg.gain_law, cfg.min_delay())
}

pub fn resolve_scene(cfg: &ExperimentConfig) -> Result<RadarScene> {
    match &cfg.scene {
        SceneSource::File { path } => RadarScene::load(path),
        SceneSource::Inline { targets } => {
            targets.validate()?;
            Ok(targets.clone())
        }
        SceneSource::Random { tau_max_s, nu_max_hz, count } => {
            Ok(trial_scene(cfg, 0, *tau_max_s, *nu_max_hz, *count))
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapReport {
    pub config: ExperimentConfig,
    pub scene: RadarScene,
    pub region: SearchRegion,
    pub detection: DetectionReport,
    /// Set when a Zak-OTFS scene violates the crystallization condition.
    pub crystallization_warning: bool,
    pub surface_files: Vec<PathBuf>,
}

/// One noise realization of the configured scene; writes one CSV per
/// surface and `heatmap_report.json` into `out_dir`.
pub fn run_heatmap(cfg: &ExperimentConfig, out_dir: &Path) -> Result<HeatmapReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let scene = resolve_scene(cfg)?;
    let pipeline = Pipeline::new(cfg, cfg.waveform)?;
    let region = match cfg.region {
        Some(r) => r,
        None => {
            let tau = scene.targets.iter().map(|t| t.tau_s).fold(0.0, f64::max);
            let nu = scene.targets.iter().map(|t| t.nu_hz.abs()).fold(0.0, f64::max);
            pipeline.region_for(tau, nu)?
        }
    };
    let mut rng = stream_rng(cfg.seed, noise_stream(0, 0, 0));
    let count = scene.targets.len().max(1);
    let out = pipeline.run(&scene, cfg.snr(), &region, count, &mut rng)?;
    let mut files = Vec::new();
    for (name, s) in &out.surfaces {
        let path = out_dir.join(format!("{}_{name}.csv", cfg.waveform.name()));
        s.save_csv(&path)?;
        files.push(path);
    }
    let report = HeatmapReport {
        config: cfg.clone(),
        scene,
        region,
        crystallization_warning: !out.report.crystallized,
        detection: out.report,
        surface_files: files,
    };
    write_json(&out_dir.join("heatmap_report.json"), &report)?;
    Ok(report)
}

/// Mean and standard error of per-trial RMSE for one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsRow {
    /// Rectangle index or SNR in dB, depending on the table.
    pub point: f64,
    pub waveform: Waveform,
    pub range_rmse_m: f64,
    pub range_se_m: f64,
    pub velocity_rmse_mps: f64,
    pub velocity_se_mps: f64,
    pub trials: usize,
    /// Trials with no estimate at all (scored with the centre-guess penalty).
    pub missed_trials: usize,
    pub mean_matched: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmsTable {
    pub config: ExperimentConfig,
    /// `"rectangle"` or `"snr_db"`.
    pub point_kind: String,
    pub rows: Vec<RmsRow>,
}

impl RmsTable {
    pub fn get(&self, point: f64, waveform: Waveform) -> Option<&RmsRow> {
        self.rows.iter().find(|r| r.point == point && r.waveform == waveform)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},waveform,range_rmse_m,range_se_m,velocity_rmse_mps,velocity_se_mps,trials,missed_trials,mean_matched", self.point_kind)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{:e},{},{},{}",
                r.point,
                r.waveform.name(),
                r.range_rmse_m,
                r.range_se_m,
                r.velocity_rmse_mps,
                r.velocity_se_mps,
                r.trials,
                r.missed_trials,
                r.mean_matched
            )?;
        }
        Ok(())
    }

    pub fn save(&self, out_dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let f = std::io::BufWriter::new(std::fs::File::create(out_dir.join(format!("{stem}.csv")))?);
        self.write_csv(f)?;
        write_json(&out_dir.join(format!("{stem}.json")), self)
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// RMSE of one trial; a trial with no estimates is scored as if every
/// target had been placed at the rectangle centre.
fn score(cfg: &ExperimentConfig, est: &[TargetEstimate], truth: &RadarScene, tau_max_s: f64) -> Result<RmsReport> {
    let r = rms_error(est, truth, cfg.carrier_hz, cfg.resolution())?;
    if !r.all_missed {
        return Ok(r);
    }
    let centre = TargetEstimate { tau_s: 0.5 * tau_max_s, nu_hz: 0.0, h: Default::default(), peak_mag: 0.0 };
    let p = rms_error(&[centre], truth, cfg.carrier_hz, cfg.resolution())?;
    Ok(RmsReport { matched: 0, all_missed: true, ..p })
}

/// Monte Carlo over trials for every waveform at one scene rectangle.
fn monte_carlo(
    cfg: &ExperimentConfig,
    pipelines: &[Pipeline],
    point: (usize, f64),
    snr_db: f64,
    tau_max_s: f64,
    nu_max_hz: f64,
    count: usize,
) -> Result<Vec<RmsRow>> {
    let mut rows = Vec::new();
    for (w, p) in pipelines.iter().enumerate() {
        let region = p.region_for(tau_max_s, nu_max_hz)?;
        let reports = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let scene = trial_scene(cfg, trial, tau_max_s, nu_max_hz, count);
                let mut rng = stream_rng(cfg.seed, noise_stream(point.0, w, trial));
                let out = p.run(&scene, snr_db, &region, count, &mut rng)?;
                score(cfg, &out.report.estimates, &scene, tau_max_s)
            })
            .collect::<Result<Vec<_>>>()?;
        let range: Vec<f64> = reports.iter().map(|r| r.range_rmse_m).collect();
        let vel: Vec<f64> = reports.iter().map(|r| r.velocity_rmse_mps).collect();
        let (rm, rse) = mean_se(&range);
        let (vm, vse) = mean_se(&vel);
        rows.push(RmsRow {
            point: point.1,
            waveform: p.waveform,
            range_rmse_m: rm,
            range_se_m: rse,
            velocity_rmse_mps: vm,
            velocity_se_mps: vse,
            trials: cfg.trials,
            missed_trials: reports.iter().filter(|r| r.all_missed).count(),
            mean_matched: reports.iter().map(|r| r.matched as f64).sum::<f64>() / cfg.trials as f64,
        });
    }
    Ok(rows)
}

fn pipelines(cfg: &ExperimentConfig) -> Result<Vec<Pipeline>> {
    ALL_WAVEFORMS.iter().map(|&w| Pipeline::new(cfg, w)).collect()
}

fn random_count(cfg: &ExperimentConfig) -> usize {
    match cfg.scene {
        SceneSource::Random { count, .. } => count,
        _ => 4,
    }
}

/// RMS range/velocity error for targets drawn in the six shrinking rectangles.
pub fn run_rectangles(cfg: &ExperimentConfig) -> Result<RmsTable> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let ps = pipelines(cfg)?;
    let count = random_count(cfg);
    let mut rows = Vec::new();
    for rect in RectangleSpec::all(&grid)? {
        rows.extend(monte_carlo(
            cfg,
            &ps,
            (rect.index, rect.index as f64),
            cfg.snr(),
            rect.tau_max_s,
            rect.nu_max_hz,
            count,
        )?);
    }
    Ok(RmsTable { config: cfg.clone(), point_kind: "rectangle".into(), rows })
}

/// RMS error against SNR for the configured random scene rectangle.
pub fn run_snr_sweep(cfg: &ExperimentConfig, snr_list_db: &[f64]) -> Result<RmsTable> {
    cfg.validate()?;
    let SceneSource::Random { tau_max_s, nu_max_hz, count } = cfg.scene else {
        return Err(Error::config("the SNR sweep needs a random scene source"));
    };
    if snr_list_db.is_empty() || snr_list_db.iter().any(|s| s.is_nan()) {
        return Err(Error::config("the SNR list must be nonempty and free of NaN"));
    }
    let ps = pipelines(cfg)?;
    let mut rows = Vec::new();
    for (i, &snr) in snr_list_db.iter().enumerate() {
        rows.extend(monte_carlo(cfg, &ps, (i, snr), snr, tau_max_s, nu_max_hz, count)?);
    }
    Ok(RmsTable { config: cfg.clone(), point_kind: "snr_db".into(), rows })
}
