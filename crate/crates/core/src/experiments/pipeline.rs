use rand::Rng;

use super::config::ExperimentConfig;
use crate::ambiguity::{cross_ambiguity_dd, AmbiguitySurface, SearchRegion};
use crate::channel::{add_awgn_with, apply_scene, crystallization_check, snap_delays, RadarScene};
use crate::dd_core::{zak_transform, DdGrid, DdSignal, TimeSignal};
use crate::error::Result;
use crate::estimator::{chirp_intersections_with, detect_peaks, ghost_removal, DetectionReport, TargetEstimate};
use crate::waveforms::{
    make_chirp_waveform, pulsone_time_domain, sparsify, ChirpParams, ChirpSchedule, PulsoneParams, Waveform,
};

enum Probe {
    Pulsone { dd: DdSignal },
    Chirp { refs: Vec<(ChirpParams, DdSignal)> },
}

/// A synthesized probe plus the receiver processing that goes with it.
pub struct Pipeline {
    pub waveform: Waveform,
    pub grid: DdGrid,
    pub transmitted: TimeSignal,
    probe: Probe,
    rel_threshold: f64,
    ridge_threshold: f64,
    sparsity: Option<f64>,
}

/// Detection output of one received signal, with the surfaces it came from.
pub struct Processed {
    pub report: DetectionReport,
    pub surfaces: Vec<(String, AmbiguitySurface)>,
}

impl Pipeline {
    pub fn new(cfg: &ExperimentConfig, waveform: Waveform) -> Result<Self> {
        let grid = cfg.grid()?;
        let filter = cfg.filter()?;
        let (transmitted, probe) = match waveform {
            Waveform::ZakOtfs => {
                let x = pulsone_time_domain(&PulsoneParams { tau0_s: 0.0, nu0_hz: 0.0, filter }, &grid)?;
                let dd = zak_transform(&x, &grid)?;
                let dd = match cfg.sparsity {
                    Some(rel) => sparsify(&dd, rel),
                    None => dd,
                };
                (x, Probe::Pulsone { dd })
            }
            _ => {
                let schedule = ChirpSchedule::for_waveform(waveform, cfg.bandwidth_hz, cfg.duration_s)?;
                let wf = make_chirp_waveform(&schedule, &filter, &grid)?;
                let refs = wf
                    .segments
                    .iter()
                    .map(|(p, x)| Ok((*p, zak_transform(x, &grid)?)))
                    .collect::<Result<Vec<_>>>()?;
                (wf.transmitted, Probe::Chirp { refs })
            }
        };
        Ok(Self {
            waveform,
            grid,
            transmitted,
            probe,
            rel_threshold: cfg.rel_threshold,
            ridge_threshold: cfg.ridge_threshold,
            sparsity: cfg.sparsity,
        })
    }

    /// Scene bounding box widened by two resolution cells. For the pulsone
    /// the region is kept inside one delay period and one Doppler period.
    pub fn region_for(&self, tau_max_s: f64, nu_max_hz: f64) -> Result<SearchRegion> {
        let (dt, dn) = (2.0 / self.grid.bandwidth(), 2.0 / self.grid.duration());
        let mut lo = -dt;
        let mut hi = tau_max_s + dt;
        let mut nu = nu_max_hz + dn;
        if self.waveform == Waveform::ZakOtfs {
            let half_nu = 0.5 * self.grid.nu_p() - self.grid.doppler_step();
            nu = nu.min(half_nu);
            lo = lo.max(-0.5 * self.grid.tau_p());
            hi = hi.min(lo + self.grid.tau_p() - self.grid.delay_step());
        }
        SearchRegion::new(lo, hi, nu)
    }

    /// Channel, optional noise and detection of `count` targets.
    pub fn run<R: Rng + ?Sized>(
        &self,
        scene: &RadarScene,
        snr_db: f64,
        region: &SearchRegion,
        count: usize,
        rng: &mut R,
    ) -> Result<Processed> {
        let snapped = snap_delays(scene, self.grid.sample_rate());
        let mut y = apply_scene(&snapped.scene, &self.transmitted, &self.grid)?;
        if snr_db.is_finite() {
            y = add_awgn_with(&y, &self.grid, snr_db, rng);
        }
        let mut out = self.process(&y, region, count)?;
        out.report.crystallized = self.waveform != Waveform::ZakOtfs || crystallization_check(scene, &self.grid);
        Ok(out)
    }

    pub fn process(&self, y: &TimeSignal, region: &SearchRegion, count: usize) -> Result<Processed> {
        let y_dd = zak_transform(y, &self.grid)?;
        match &self.probe {
            Probe::Pulsone { dd } => {
                let s = cross_ambiguity_dd(&y_dd, dd, region, self.sparsity)?;
                let estimates = detect_peaks(&s, count, self.rel_threshold)?;
                Ok(Processed {
                    report: DetectionReport { estimates, ghosts_rejected: 0, crystallized: true },
                    surfaces: vec![("pulsone".into(), s)],
                })
            }
            Probe::Chirp { refs } => {
                let mut surfaces = Vec::with_capacity(refs.len());
                for (i, (p, r)) in refs.iter().enumerate() {
                    let mut s = cross_ambiguity_dd(&y_dd, r, region, None)?;
                    s.doppler_resolution = 1.0 / p.duration_s;
                    surfaces.push((format!("segment{i}"), s));
                }
                let all = count * count;
                let pair = |i: usize| -> Result<Vec<TargetEstimate>> {
                    let slopes = (refs[i].0.slope_hz2, refs[i + 1].0.slope_hz2);
                    chirp_intersections_with(&surfaces[i].1, &surfaces[i + 1].1, slopes, all, self.ridge_threshold)
                };
                let first = pair(0)?;
                let (mut estimates, ghosts_rejected) = if refs.len() >= 4 {
                    let second = pair(2)?;
                    let tol = (1.0 / self.grid.bandwidth(), 1.0 / refs[2].0.duration_s);
                    let mut kept = ghost_removal(&first, &second, tol);
                    let rejected = first.len() - kept.len();
                    let rest: Vec<TargetEstimate> = first.iter().filter(|e| !kept.contains(e)).copied().collect();
                    kept.extend(rest.into_iter().take(count.saturating_sub(kept.len())));
                    (kept, rejected)
                } else {
                    (first, 0)
                };
                estimates.truncate(count);
                Ok(Processed {
                    report: DetectionReport { estimates, ghosts_rejected, crystallized: true },
                    surfaces,
                })
            }
        }
    }
}
