use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::AmbiguitySurface;
use crate::dd_core::{DdGrid, TimeSignal};
use crate::error::{Error, Result};

/// Squared-ambiguity volume `sum |A|^2 dtau dnu` against the probe energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoyalReport {
    pub volume: f64,
    pub energy_sq: f64,
    /// `volume / E_T^2`; Moyal's identity makes this 1 for a surface that
    /// covers all of the self-ambiguity mass.
    pub coverage: f64,
    pub complete: bool,
}

impl MoyalReport {
    fn new(volume: f64, energy: f64) -> Self {
        let energy_sq = energy * energy;
        let coverage = volume / energy_sq;
        Self {
            volume,
            energy_sq,
            coverage,
            complete: coverage >= 0.99,
        }
    }
}

/// Riemann sum of `|A|^2` over the surface's bins.
pub fn moyal_volume(surface: &AmbiguitySurface) -> MoyalReport {
    let vol = surface.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * surface.delay_step * surface.doppler_step;
    MoyalReport::new(vol, surface.probe_energy)
}

/// Volume of `|A_{x,x}|^2` over every delay lag and a full Doppler period of
/// `PQMN` bins, i.e. the sum of the per-cell volumes over the whole plane.
/// Rows are produced by one FFT per lag and never stored.
pub fn self_ambiguity_volume_full_plane(x: &TimeSignal, grid: &DdGrid) -> Result<MoyalReport> {
    let fs = grid.sample_rate();
    if (x.sample_rate - fs).abs() > 1e-9 * fs {
        return Err(Error::config("signal is not sampled at the grid rate"));
    }
    let order = grid.cells();
    if x.len() > order {
        return Err(Error::config("signal longer than one Doppler period of bins"));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(order);
    let len = x.len() as i64;
    let rows: Vec<f64> = ((1 - len)..len)
        .into_par_iter()
        .map(|k| {
            let mut z = vec![Complex64::new(0.0, 0.0); order];
            for i in 0.max(k)..len.min(len + k) {
                let v = x.samples[i as usize] * x.samples[(i - k) as usize].conj();
                let idx = (x.start_index + i - k).rem_euclid(order as i64) as usize;
                z[idx] += v;
            }
            fft.process(&mut z);
            z.iter().map(|v| v.norm_sqr()).sum::<f64>() / (fs * fs)
        })
        .collect();
    let vol = rows.iter().sum::<f64>() * grid.delay_step() * grid.doppler_step();
    Ok(MoyalReport::new(vol, x.energy()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::{cross_ambiguity_td, SearchRegion};
    use crate::waveforms::{make_pulsone, GaussianFilterParams, PulsoneParams};

    fn pulsone(g: &DdGrid) -> TimeSignal {
        let p = PulsoneParams {
            tau0_s: 3.0 * g.delay_step(),
            nu0_hz: 2.0 * g.doppler_step(),
            filter: GaussianFilterParams::standard(g.bandwidth(), g.duration()).unwrap(),
        };
        make_pulsone(&p, g).unwrap().1
    }

    #[test]
    fn full_plane_volume_equals_squared_energy() {
        let g = DdGrid::new(1e6, 1e-3, 100e-6, 2, 2).unwrap();
        let x = pulsone(&g);
        let r = self_ambiguity_volume_full_plane(&x, &g).unwrap();
        assert!((r.volume - 1.0).abs() < 1e-9, "{r:?}");
        assert!(r.complete);
    }

    #[test]
    fn volume_is_quadratic_and_partial_regions_are_flagged() {
        let g = DdGrid::new(1e6, 1e-3, 100e-6, 2, 2).unwrap();
        let x = pulsone(&g);
        let region = SearchRegion::new(-5e-6, 5e-6, 2e3).unwrap();
        let s = cross_ambiguity_td(&x, &x, &g, &region).unwrap();
        let r = moyal_volume(&s);
        assert!(!r.complete && r.coverage < 0.5);
        let mut scaled = s.clone();
        scaled.values.iter_mut().for_each(|v| *v *= 3.0);
        assert!((moyal_volume(&scaled).volume - 9.0 * r.volume).abs() < 1e-12 * r.volume);
    }
}
