use num_complex::Complex64;

use super::grid::DdSignal;
use crate::error::{Error, Result};

/// Aperiodic sampled DD function on a rectangular patch of bins.
///
/// `values[r * cols + c]` is the sample at delay bin `k0 + r` and Doppler
/// bin `l0 + c`, i.e. at `((k0 + r) * delay_step, (l0 + c) * doppler_step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdPatch {
    pub delay_step: f64,
    pub doppler_step: f64,
    pub k0: i64,
    pub l0: i64,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
}

impl DdPatch {
    pub fn zeros(delay_step: f64, doppler_step: f64, k0: i64, l0: i64, rows: usize, cols: usize) -> Self {
        Self {
            delay_step,
            doppler_step,
            k0,
            l0,
            rows,
            cols,
            values: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Discretized Dirac delta `weight * delta(tau - k dt) delta(nu - l dn)`:
    /// a single bin holding `weight / (dt * dn)`.
    pub fn delta(delay_step: f64, doppler_step: f64, k: i64, l: i64, weight: Complex64) -> Self {
        let mut p = Self::zeros(delay_step, doppler_step, k, l, 1, 1);
        p.values[0] = weight / (delay_step * doppler_step);
        p
    }

    pub fn cell_area(&self) -> f64 {
        self.delay_step * self.doppler_step
    }

    pub fn k_end(&self) -> i64 {
        self.k0 + self.rows as i64
    }

    pub fn l_end(&self) -> i64 {
        self.l0 + self.cols as i64
    }

    /// Sample at absolute bin `(k, l)`, zero off the patch.
    pub fn get(&self, k: i64, l: i64) -> Complex64 {
        if k < self.k0 || k >= self.k_end() || l < self.l0 || l >= self.l_end() {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(k - self.k0) as usize * self.cols + (l - self.l0) as usize]
    }

    pub fn set(&mut self, k: i64, l: i64, v: Complex64) {
        assert!(k >= self.k0 && k < self.k_end() && l >= self.l0 && l < self.l_end());
        self.values[(k - self.k0) as usize * self.cols + (l - self.l0) as usize] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Nonzero samples as `(k, l, value)`.
    pub fn taps(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        self.values.iter().enumerate().filter_map(move |(i, v)| {
            if v.norm_sqr() == 0.0 {
                return None;
            }
            let k = self.k0 + (i / self.cols) as i64;
            let l = self.l0 + (i % self.cols) as i64;
            Some((k, l, *v))
        })
    }

    /// `1 / (dt * dn)` as an integer; every twisted-convolution phase is a
    /// root of unity of this order.
    fn phase_order(&self) -> Result<i64> {
        let order = 1.0 / self.cell_area();
        let rounded = order.round();
        if rounded < 1.0 || (order - rounded).abs() > 1e-6 * rounded {
            return Err(Error::config(format!(
                "cell area 1/{order} is not the reciprocal of an integer"
            )));
        }
        Ok(rounded as i64)
    }

    fn check_commensurate(&self, delay_step: f64, doppler_step: f64) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if close(self.delay_step, delay_step) && close(self.doppler_step, doppler_step) {
            Ok(())
        } else {
            Err(Error::config("DD functions are sampled on different bin widths"))
        }
    }
}

/// `exp(j 2 pi r / order)` for an integer `r`.
fn root_of_unity(r: i64, order: i64) -> Complex64 {
    let r = r.rem_euclid(order);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / order as f64)
}

/// Riemann sum of the twisted convolution
/// `(a *s b)(tau, nu) = int a(tau', nu') b(tau - tau', nu - nu') exp(j 2 pi nu' (tau - tau'))`.
///
/// The output patch covers the full linear support of the result.
pub fn twisted_convolve(a: &DdPatch, b: &DdPatch) -> Result<DdPatch> {
    b.check_commensurate(a.delay_step, a.doppler_step)?;
    let order = a.phase_order()?;
    let mut out = DdPatch::zeros(
        a.delay_step,
        a.doppler_step,
        a.k0 + b.k0,
        a.l0 + b.l0,
        a.rows + b.rows - 1,
        a.cols + b.cols - 1,
    );
    let area = a.cell_area();
    let b_taps: Vec<_> = b.taps().collect();
    for (k1, l1, va) in a.taps() {
        for &(k2, l2, vb) in &b_taps {
            let idx = (k1 + k2 - out.k0) as usize * out.cols + (l1 + l2 - out.l0) as usize;
            out.values[idx] += va * vb * root_of_unity(l1 * k2, order) * area;
        }
    }
    Ok(out)
}

/// Single output sample `(a *s b)(k dt, l dn)`.
pub fn twisted_convolve_at(a: &DdPatch, b: &DdPatch, k: i64, l: i64) -> Result<Complex64> {
    b.check_commensurate(a.delay_step, a.doppler_step)?;
    let order = a.phase_order()?;
    let acc: Complex64 = a
        .taps()
        .map(|(k1, l1, va)| va * b.get(k - k1, l - l1) * root_of_unity(l1 * (k - k1), order))
        .sum();
    Ok(acc * a.cell_area())
}

/// Twisted convolution of an aperiodic patch with a quasi-periodic DD signal.
///
/// The result is again quasi-periodic and is returned on the fundamental
/// domain. Cost is proportional to the number of nonzero samples of `a`
/// times that of `b`.
pub fn twisted_convolve_dd(a: &DdPatch, b: &DdSignal) -> Result<DdSignal> {
    let grid = &b.grid;
    a.check_commensurate(grid.delay_step(), grid.doppler_step())?;
    let pm = grid.delay_bins() as i64;
    let qn = grid.doppler_bins() as i64;
    let order = grid.cells() as i64;
    let tw = grid.twiddles();
    let phase = |r: i64| tw[r.rem_euclid(order) as usize];
    let area = grid.cell_area();

    let a_taps: Vec<_> = a.taps().collect();
    let mut out = DdSignal::zeros(*grid);
    for (i, vb) in b.values.iter().enumerate() {
        if vb.norm_sqr() == 0.0 {
            continue;
        }
        let kb = (i as i64) / qn;
        let lb = (i as i64) % qn;
        for &(k1, l1, va) in &a_taps {
            let kk = k1 + kb;
            let n = kk.div_euclid(pm);
            let kr = kk.rem_euclid(pm);
            let lr = (l1 + lb).rem_euclid(qn);
            // twisted phase l1 * kb / (PQMN), then fold back by exp(-j 2 pi n lr / QN)
            let r = l1 * kb - n * lr * pm;
            out.values[(kr * qn + lr) as usize] += va * vb * phase(r) * area;
        }
    }
    Ok(out)
}
