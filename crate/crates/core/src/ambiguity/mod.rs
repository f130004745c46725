//! Cross-ambiguity surfaces: direct time-domain evaluation, the Zak-domain
//! fast path, and closed-form oracles.

mod moyal;
mod oracle;

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dd_core::{DdGrid, DdPatch, DdSignal, TimeSignal};
use crate::error::{Error, Result};

pub use moyal::{moyal_volume, self_ambiguity_volume_full_plane, MoyalReport};
pub use oracle::{
    adaptive_simpson, chirp_ambiguity_closed_form, chirp_self_ambiguity_oracle, pulsone_self_ambiguity_oracle,
};

/// Delay window `[tau_min, tau_max]` and symmetric Doppler window `[-nu_max, nu_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub tau_min_s: f64,
    pub tau_max_s: f64,
    pub nu_max_hz: f64,
}

impl SearchRegion {
    pub fn new(tau_min_s: f64, tau_max_s: f64, nu_max_hz: f64) -> Result<Self> {
        let r = Self {
            tau_min_s,
            tau_max_s,
            nu_max_hz,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.tau_min_s.is_finite() && self.tau_max_s.is_finite() && self.nu_max_hz.is_finite();
        if !finite || self.tau_min_s > self.tau_max_s || self.nu_max_hz < 0.0 {
            return Err(Error::config(format!("invalid search region {self:?}")));
        }
        Ok(())
    }

    /// `2 (tau_max - tau_min) nu_max < 1`.
    pub fn is_unambiguous(&self) -> bool {
        2.0 * (self.tau_max_s - self.tau_min_s) * self.nu_max_hz < 1.0
    }

    /// Grid bins `(k0, l0, rows, cols)` inside the region.
    fn bins(&self, grid: &DdGrid) -> Result<(i64, i64, usize, usize)> {
        self.validate()?;
        let dt = grid.delay_step();
        let dn = grid.doppler_step();
        let k0 = (self.tau_min_s / dt - 1e-9).ceil() as i64;
        let k1 = (self.tau_max_s / dt + 1e-9).floor() as i64;
        let lh = (self.nu_max_hz / dn + 1e-9).floor() as i64;
        if k1 < k0 {
            return Err(Error::config("search region contains no delay bins"));
        }
        Ok((k0, -lh, (k1 - k0 + 1) as usize, (2 * lh + 1) as usize))
    }
}

/// Complex ambiguity samples on the region's bins.
///
/// `values[r * cols + c]` is the value at delay `(k0 + r) * delay_step` and
/// Doppler `(l0 + c) * doppler_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySurface {
    pub region: SearchRegion,
    pub delay_step: f64,
    pub doppler_step: f64,
    pub k0: i64,
    pub l0: i64,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
    /// Energy of the probe the surface was correlated against.
    pub probe_energy: f64,
    /// Resolution cell of the probe, `(1/B, 1/T)` unless the caller overrides it.
    pub delay_resolution: f64,
    pub doppler_resolution: f64,
}

impl AmbiguitySurface {
    pub fn zeros(grid: &DdGrid, region: &SearchRegion, probe_energy: f64) -> Result<Self> {
        let (k0, l0, rows, cols) = region.bins(grid)?;
        Ok(Self {
            region: *region,
            delay_step: grid.delay_step(),
            doppler_step: grid.doppler_step(),
            k0,
            l0,
            rows,
            cols,
            values: vec![Complex64::new(0.0, 0.0); rows * cols],
            probe_energy,
            delay_resolution: 1.0 / grid.bandwidth(),
            doppler_resolution: 1.0 / grid.duration(),
        })
    }

    pub fn k_end(&self) -> i64 {
        self.k0 + self.rows as i64
    }

    pub fn l_end(&self) -> i64 {
        self.l0 + self.cols as i64
    }

    pub fn contains(&self, k: i64, l: i64) -> bool {
        k >= self.k0 && k < self.k_end() && l >= self.l0 && l < self.l_end()
    }

    pub fn get(&self, k: i64, l: i64) -> Option<Complex64> {
        self.contains(k, l)
            .then(|| self.values[(k - self.k0) as usize * self.cols + (l - self.l0) as usize])
    }

    pub fn tau(&self, k: i64) -> f64 {
        k as f64 * self.delay_step
    }

    pub fn nu(&self, l: i64) -> f64 {
        l as f64 * self.doppler_step
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Bin of the largest magnitude.
    pub fn argmax(&self) -> (i64, i64) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, v)| if v.norm() > best.1 { (i, v.norm()) } else { best });
        (self.k0 + (i / self.cols) as i64, self.l0 + (i % self.cols) as i64)
    }

    /// The surface as an aperiodic DD patch on the same bins.
    pub fn to_patch(&self) -> DdPatch {
        DdPatch {
            delay_step: self.delay_step,
            doppler_step: self.doppler_step,
            k0: self.k0,
            l0: self.l0,
            rows: self.rows,
            cols: self.cols,
            values: self.values.clone(),
        }
    }

    /// CSV with header `tau_s,nu_hz,re,im,abs`, delay-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "tau_s,nu_hz,re,im,abs")?;
        for r in 0..self.rows {
            let tau = self.tau(self.k0 + r as i64);
            for c in 0..self.cols {
                let v = self.values[r * self.cols + c];
                writeln!(w, "{:e},{:e},{:e},{:e},{:e}", tau, self.nu(self.l0 + c as i64), v.re, v.im, v.norm())?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }
}

fn check_rates(a: f64, b: f64, grid: &DdGrid) -> Result<()> {
    let fs = grid.sample_rate();
    if (a - fs).abs() > 1e-9 * fs || (b - fs).abs() > 1e-9 * fs {
        return Err(Error::config("signals are not sampled at the grid rate P*B"));
    }
    Ok(())
}

/// Riemann sum of `A(tau, nu) = int y(t) x*(t - tau) exp(-j 2 pi nu (t - tau)) dt`
/// at every region bin, evaluated directly (cost grows as the region area
/// times the signal length).
pub fn cross_ambiguity_td(
    y: &TimeSignal,
    x: &TimeSignal,
    grid: &DdGrid,
    region: &SearchRegion,
) -> Result<AmbiguitySurface> {
    check_rates(y.sample_rate, x.sample_rate, grid)?;
    let mut s = AmbiguitySurface::zeros(grid, region, x.energy())?;
    let order = grid.cells() as i64;
    let tw = grid.twiddles();
    let fs = grid.sample_rate();
    let mut prod = Vec::new();
    for r in 0..s.rows {
        let k = s.k0 + r as i64;
        let lo = y.start_index.max(x.start_index + k);
        let hi = y.end_index().min(x.end_index() + k);
        prod.clear();
        prod.extend((lo..hi).map(|i| y.at(i) * x.at(i - k).conj()));
        for c in 0..s.cols {
            let l = s.l0 + c as i64;
            let step = l.rem_euclid(order) as usize;
            let mut idx = (l * (lo - k)).rem_euclid(order) as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in &prod {
                acc += p * tw[idx].conj();
                idx += step;
                if idx >= order as usize {
                    idx -= order as usize;
                }
            }
            s.values[r * s.cols + c] = acc / fs;
        }
    }
    Ok(s)
}

fn dd_energy(x: &DdSignal) -> f64 {
    x.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * x.grid.cell_area()
}

/// Zak-domain cross-ambiguity
/// `A(k, l) = dt dn sum_{d, e} y(k + d, l + e) x*(d, e) exp(-j 2 pi l d dt dn)`
/// over one period of `(d, e)`, with quasi-periodic extension of `y`.
///
/// With `sparsity = Some(rel)` only probe samples with `|x| >= rel * max|x|`
/// enter the sum, which for a localized probe costs a constant per output bin.
/// With `None` every delay row is evaluated at once through a single FFT of
/// length `PQMN`.
pub fn cross_ambiguity_dd(
    y_dd: &DdSignal,
    x_dd: &DdSignal,
    region: &SearchRegion,
    sparsity: Option<f64>,
) -> Result<AmbiguitySurface> {
    if !y_dd.grid.same_as(&x_dd.grid) {
        return Err(Error::config("received and probe DD signals live on different grids"));
    }
    let grid = &x_dd.grid;
    let mut s = AmbiguitySurface::zeros(grid, region, dd_energy(x_dd))?;
    match sparsity {
        Some(rel) => dd_sparse(y_dd, x_dd, rel, &mut s),
        None => dd_dense(y_dd, x_dd, &mut s),
    }
    Ok(s)
}

fn dd_sparse(y: &DdSignal, x: &DdSignal, rel: f64, s: &mut AmbiguitySurface) {
    let grid = &x.grid;
    let pm = grid.delay_bins() as i64;
    let qn = grid.doppler_bins() as i64;
    let order = grid.cells() as i64;
    let tw = grid.twiddles();
    let floor = rel * x.max_abs();
    // probe taps with delay index centred on zero
    let taps: Vec<(i64, i64, Complex64)> = x
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0 && v.norm() >= floor)
        .map(|(i, v)| {
            let (d, e) = (i as i64 / qn, i as i64 % qn);
            if d >= pm / 2 {
                // x(d - PM, e) = exp(-j 2 pi e / QN) x(d, e)
                let r = (-e * pm).rem_euclid(order) as usize;
                (d - pm, e, (v * tw[r]).conj())
            } else {
                (d, e, v.conj())
            }
        })
        .collect();
    let area = grid.cell_area();
    let cols = s.cols;
    let mut acc = vec![Complex64::new(0.0, 0.0); cols];
    for r in 0..s.rows {
        let k = s.k0 + r as i64;
        acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for &(d, e, xc) in &taps {
            let kk = k + d;
            let n = kk.div_euclid(pm);
            let row = &y.values[(kk.rem_euclid(pm) * qn) as usize..][..qn as usize];
            // phase n ((l + e) mod QN) PM - l d is linear in l modulo PQMN
            let step = n * pm - d;
            let mut ph = xc * tw[(n * e * pm + s.l0 * step).rem_euclid(order) as usize];
            let rot = tw[step.rem_euclid(order) as usize];
            let mut lr = (s.l0 + e).rem_euclid(qn) as usize;
            for a in acc.iter_mut() {
                *a += row[lr] * ph;
                ph *= rot;
                lr += 1;
                if lr == qn as usize {
                    lr = 0;
                }
            }
        }
        for (c, a) in acc.iter().enumerate() {
            s.values[r * cols + c] = a * area;
        }
    }
}

fn dd_dense(y: &DdSignal, x: &DdSignal, s: &mut AmbiguitySurface) {
    let grid = &x.grid;
    let pm = grid.delay_bins();
    let qn = grid.doppler_bins();
    let order = grid.cells();
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(qn);
    let fft = planner.plan_fft_forward(order);
    // per-delay-row inverse DFTs: f(k, l) = sum_s F_k(s) exp(-j 2 pi s l / QN)
    let rows_idft = |sig: &DdSignal| {
        let mut out = sig.values.clone();
        for row in out.chunks_mut(qn) {
            ifft.process(row);
            row.iter_mut().for_each(|v| *v /= qn as f64);
        }
        out
    };
    let yt = rows_idft(y);
    let xt = rows_idft(x);
    let scale = grid.cell_area() * qn as f64;
    let cols = s.cols;
    let (k0, l0) = (s.k0, s.l0);
    s.values.par_chunks_mut(cols).enumerate().for_each(|(r, out)| {
        let k = k0 + r as i64;
        let mut z = vec![Complex64::new(0.0, 0.0); order];
        for d in 0..pm {
            let kk = k + d as i64;
            let n = kk.div_euclid(pm as i64);
            let kr = kk.rem_euclid(pm as i64) as usize;
            let yrow = &yt[kr * qn..(kr + 1) * qn];
            let xrow = &xt[d * qn..(d + 1) * qn];
            for (sidx, yv) in yrow.iter().enumerate() {
                let rr = (sidx as i64 - n).rem_euclid(qn as i64) as usize;
                z[rr * pm + d] += yv * xrow[rr].conj();
            }
        }
        fft.process(&mut z);
        for (c, o) in out.iter_mut().enumerate() {
            let l = (l0 + c as i64).rem_euclid(order as i64) as usize;
            *o = z[l] * scale;
        }
    });
}
