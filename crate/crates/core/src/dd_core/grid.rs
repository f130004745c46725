use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INTEGER_TOL: f64 = 1e-6;

fn as_integer(value: f64, what: &str) -> Result<usize> {
    let rounded = value.round();
    if rounded < 1.0 || (value - rounded).abs() > INTEGER_TOL * rounded.max(1.0) {
        return Err(Error::config(format!(
            "{what} must be a positive integer, got {value}"
        )));
    }
    Ok(rounded as usize)
}

/// Sampling geometry of the discrete delay-Doppler plane.
///
/// The Doppler period is always `1 / tau_p`; it is derived, never stored.
/// `M = B * tau_p` and `N = T / tau_p` must both be integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct DdGrid {
    bandwidth: f64,
    duration: f64,
    tau_p: f64,
    p: usize,
    q: usize,
    m: usize,
    n: usize,
}

/// Plain parameter record used for (de)serializing a [`DdGrid`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub bandwidth_hz: f64,
    pub duration_s: f64,
    pub tau_p_s: f64,
    pub p: usize,
    pub q: usize,
}

impl TryFrom<GridSpec> for DdGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        DdGrid::new(s.bandwidth_hz, s.duration_s, s.tau_p_s, s.p, s.q)
    }
}

impl From<DdGrid> for GridSpec {
    fn from(g: DdGrid) -> Self {
        GridSpec {
            bandwidth_hz: g.bandwidth,
            duration_s: g.duration,
            tau_p_s: g.tau_p,
            p: g.p,
            q: g.q,
        }
    }
}

impl DdGrid {
    pub fn new(bandwidth: f64, duration: f64, tau_p: f64, p: usize, q: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && duration > 0.0 && tau_p > 0.0) {
            return Err(Error::config("bandwidth, duration and tau_p must be positive"));
        }
        if p == 0 || q == 0 {
            return Err(Error::config("oversampling factors must be at least 1"));
        }
        let m = as_integer(bandwidth * tau_p, "M = B * tau_p")?;
        let n = as_integer(duration / tau_p, "N = T / tau_p")?;
        if q * n < n + 1 {
            // The (N + 1)-term Zak sum must fit in a QN-point DFT without wrap.
            return Err(Error::config("Q * N must exceed N; use Q >= 2 or N >= 2"));
        }
        Ok(Self {
            bandwidth,
            duration,
            tau_p,
            p,
            q,
            m,
            n,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
    pub fn duration(&self) -> f64 {
        self.duration
    }
    pub fn tau_p(&self) -> f64 {
        self.tau_p
    }
    pub fn nu_p(&self) -> f64 {
        1.0 / self.tau_p
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// Time-bandwidth product `M * N`.
    pub fn bt(&self) -> usize {
        self.m * self.n
    }

    /// Number of delay bins per period, `P * M`.
    pub fn delay_bins(&self) -> usize {
        self.p * self.m
    }

    /// Number of Doppler bins per period, `Q * N`.
    pub fn doppler_bins(&self) -> usize {
        self.q * self.n
    }

    /// Total number of bins in the fundamental domain, `P * Q * M * N`.
    pub fn cells(&self) -> usize {
        self.delay_bins() * self.doppler_bins()
    }

    pub fn sample_rate(&self) -> f64 {
        self.p as f64 * self.bandwidth
    }

    /// Delay bin width `1 / (P B)`.
    pub fn delay_step(&self) -> f64 {
        1.0 / self.sample_rate()
    }

    /// Doppler bin width `1 / (Q T)`.
    pub fn doppler_step(&self) -> f64 {
        1.0 / (self.q as f64 * self.duration)
    }

    /// Area of one DD bin, `1 / (P Q M N)`.
    pub fn cell_area(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    /// Index of the first period summed by the Zak transform, `-ceil(N / 2)`.
    pub fn first_period(&self) -> i64 {
        -(self.n.div_ceil(2) as i64)
    }

    /// Absolute index of the first sample of the Zak observation window.
    pub fn window_start(&self) -> i64 {
        self.first_period() * self.delay_bins() as i64
    }

    /// Number of samples in the window: `N + 1` delay periods.
    pub fn window_len(&self) -> usize {
        (self.n + 1) * self.delay_bins()
    }

    pub fn same_as(&self, other: &DdGrid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        self.p == other.p
            && self.q == other.q
            && self.m == other.m
            && self.n == other.n
            && close(self.tau_p, other.tau_p)
            && close(self.bandwidth, other.bandwidth)
    }

    /// `exp(j 2 pi r / (PQMN))` lookup table; every phase on the grid is a
    /// power of this root of unity.
    pub fn twiddles(&self) -> Vec<Complex64> {
        let len = self.cells();
        (0..len)
            .map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / len as f64))
            .collect()
    }
}

/// Complex baseband samples `x(t_i)`, `t_i = i / sample_rate`, for consecutive
/// absolute indices `i = start_index, start_index + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub start_index: i64,
}

impl TimeSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, start_index: i64) -> Self {
        Self {
            samples,
            sample_rate,
            start_index,
        }
    }

    /// All-zero signal covering the Zak window of `grid`.
    pub fn zeros_for(grid: &DdGrid) -> Self {
        Self::new(
            vec![Complex64::new(0.0, 0.0); grid.window_len()],
            grid.sample_rate(),
            grid.window_start(),
        )
    }

    /// Samples the function `f(t)` over the Zak window of `grid`.
    pub fn from_fn(grid: &DdGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let fs = grid.sample_rate();
        let start = grid.window_start();
        let samples = (0..grid.window_len())
            .map(|i| f((start + i as i64) as f64 / fs))
            .collect();
        Self::new(samples, fs, start)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.start_index as f64 / self.sample_rate
    }

    pub fn time(&self, local: usize) -> f64 {
        (self.start_index + local as i64) as f64 / self.sample_rate
    }

    /// One past the last absolute sample index.
    pub fn end_index(&self) -> i64 {
        self.start_index + self.samples.len() as i64
    }

    /// Sample at absolute index `i`, zero outside the stored span.
    pub fn at(&self, i: i64) -> Complex64 {
        let local = i - self.start_index;
        if local < 0 || local >= self.samples.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.samples[local as usize]
        }
    }

    /// `sum |x|^2 / sample_rate`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.sample_rate
    }

    /// Riemann sum of `a(t) b*(t)` over the common support.
    pub fn inner(&self, other: &TimeSignal) -> Complex64 {
        let lo = self.start_index.max(other.start_index);
        let hi = self.end_index().min(other.end_index());
        let mut acc = Complex64::new(0.0, 0.0);
        for i in lo..hi {
            acc += self.at(i) * other.at(i).conj();
        }
        acc / self.sample_rate
    }

    pub fn scale(&mut self, factor: f64) {
        for s in &mut self.samples {
            *s *= factor;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Pointwise sum of two signals with identical layout.
    pub fn add(&self, other: &TimeSignal) -> crate::Result<TimeSignal> {
        if self.start_index != other.start_index
            || self.samples.len() != other.samples.len()
            || (self.sample_rate - other.sample_rate).abs() > 1e-9 * self.sample_rate
        {
            return Err(Error::config("signals have different sample layouts"));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(TimeSignal::new(samples, self.sample_rate, self.start_index))
    }
}

/// Quasi-periodic DD-domain samples on the fundamental domain.
///
/// `values[k * QN + l]` holds `x_dd(k / (PB), l / (QT))` for
/// `k < PM`, `l < QN`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdSignal {
    pub grid: DdGrid,
    pub values: Vec<Complex64>,
}

impl DdSignal {
    pub fn zeros(grid: DdGrid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.cells()],
            grid,
        }
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.values[k * self.grid.doppler_bins() + l]
    }

    pub fn set(&mut self, k: usize, l: usize, v: Complex64) {
        let qn = self.grid.doppler_bins();
        self.values[k * qn + l] = v;
    }

    /// Value at any integer bin, extended off the fundamental domain by
    /// `x(tau + n tau_p, nu + m nu_p) = exp(j 2 pi n nu tau_p) x(tau, nu)`.
    pub fn quasi_periodic_value(&self, k: i64, l: i64) -> Complex64 {
        let pm = self.grid.delay_bins() as i64;
        let qn = self.grid.doppler_bins() as i64;
        let n = k.div_euclid(pm);
        let kr = k.rem_euclid(pm);
        let lr = l.rem_euclid(qn);
        let v = self.get(kr as usize, lr as usize);
        if n == 0 {
            return v;
        }
        // nu * tau_p = lr / (QN)
        let r = (n * lr).rem_euclid(qn);
        v * Complex64::from_polar(1.0, 2.0 * PI * r as f64 / qn as f64)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}
