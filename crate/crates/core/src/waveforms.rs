//! Probe synthesis: Gaussian pulse shaping, filtered chirps and pulsones.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd_core::{inverse_zak, twisted_convolve_dd, DdGrid, DdPatch, DdSignal, TimeSignal};
use crate::error::{Error, Result};

/// Number of filter resolutions (1/B in delay, 1/T in Doppler) kept on each side.
pub const FILTER_TRUNCATION: usize = 5;

/// Probe families compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    ZakOtfs,
    ChirpSinglePair,
    ChirpTwoPairs,
}

impl Waveform {
    pub fn name(&self) -> &'static str {
        match self {
            Waveform::ZakOtfs => "zak_otfs",
            Waveform::ChirpSinglePair => "chirp_single_pair",
            Waveform::ChirpTwoPairs => "chirp_two_pairs",
        }
    }
}

/// Separable Gaussian pulse-shaping filter `w(tau, nu) = w1(tau) w2(nu)` with
/// `w1(tau) = (2 alpha B^2 / pi)^(1/4) exp(-alpha B^2 tau^2)` and
/// `w2(nu) = (2 beta T^2 / pi)^(1/4) exp(-beta T^2 nu^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFilterParams {
    pub alpha: f64,
    pub beta: f64,
    pub bandwidth_hz: f64,
    pub duration_s: f64,
}

impl GaussianFilterParams {
    pub const DEFAULT_SHAPE: f64 = 1.584;

    pub fn new(alpha: f64, beta: f64, bandwidth_hz: f64, duration_s: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            bandwidth_hz,
            duration_s,
        };
        p.validate()?;
        Ok(p)
    }

    /// `alpha = beta = 1.584`.
    pub fn standard(bandwidth_hz: f64, duration_s: f64) -> Result<Self> {
        Self::new(Self::DEFAULT_SHAPE, Self::DEFAULT_SHAPE, bandwidth_hz, duration_s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.alpha) && ok(self.beta) && ok(self.bandwidth_hz) && ok(self.duration_s) {
            Ok(())
        } else {
            Err(Error::config(
                "filter alpha, beta, bandwidth and duration must be positive",
            ))
        }
    }

    /// Same shape with the Doppler-side window scaled to `duration_s`.
    pub fn with_duration(self, duration_s: f64) -> Self {
        Self { duration_s, ..self }
    }

    fn a(&self) -> f64 {
        self.alpha * self.bandwidth_hz * self.bandwidth_hz
    }

    fn b(&self) -> f64 {
        self.beta * self.duration_s * self.duration_s
    }

    pub fn w1(&self, tau: f64) -> f64 {
        (2.0 * self.a() / PI).powf(0.25) * (-self.a() * tau * tau).exp()
    }

    pub fn w2(&self, nu: f64) -> f64 {
        (2.0 * self.b() / PI).powf(0.25) * (-self.b() * nu * nu).exp()
    }

    pub fn w(&self, tau: f64, nu: f64) -> f64 {
        self.w1(tau) * self.w2(nu)
    }

    /// Time window `W2(t) = int w2(nu) exp(j 2 pi nu t) dnu`, real and even.
    pub fn big_w2(&self, t: f64) -> f64 {
        let b = self.b();
        (2.0 * b / PI).powf(0.25) * (PI / b).sqrt() * (-PI * PI * t * t / b).exp()
    }
}

/// Samples `w1(k dt) w2(l dn)` for `|k dt| <= truncation / B` and
/// `|l dn| <= truncation / T`.
pub fn gaussian_filter_taps(params: &GaussianFilterParams, grid: &DdGrid, truncation: usize) -> Result<DdPatch> {
    params.validate()?;
    if truncation < 3 {
        return Err(Error::config("filter truncation must be at least 3 resolutions"));
    }
    let dt = grid.delay_step();
    let dn = grid.doppler_step();
    let half = |span: f64, step: f64| ((span / step) - 1e-9).ceil() as i64;
    let kh = half(truncation as f64 / params.bandwidth_hz, dt);
    let lh = half(truncation as f64 / params.duration_s, dn);
    let rows = (2 * kh + 1) as usize;
    let cols = (2 * lh + 1) as usize;
    let mut patch = DdPatch::zeros(dt, dn, -kh, -lh, rows, cols);
    for k in -kh..=kh {
        let w1 = params.w1(k as f64 * dt);
        for l in -lh..=lh {
            patch.set(k, l, Complex64::new(w1 * params.w2(l as f64 * dn), 0.0));
        }
    }
    Ok(patch)
}

/// `w_mf(tau, nu) = w*(-tau, -nu) exp(j 2 pi tau nu)`.
pub fn matched_filter_of(w: &DdPatch) -> DdPatch {
    let mut out = DdPatch::zeros(
        w.delay_step,
        w.doppler_step,
        -(w.k_end() - 1),
        -(w.l_end() - 1),
        w.rows,
        w.cols,
    );
    let area = w.cell_area();
    for k in out.k0..out.k_end() {
        for l in out.l0..out.l_end() {
            let ph = Complex64::from_polar(1.0, 2.0 * PI * (k * l) as f64 * area);
            out.set(k, l, w.get(-k, -l).conj() * ph);
        }
    }
    out
}

/// Linear FM segment `exp(j pi a (t - t_c)^2)` on `[start, start + duration)`,
/// with `t_c` the segment centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    pub slope_hz2: f64,
    pub duration_s: f64,
    pub start_s: f64,
}

impl ChirpParams {
    pub fn center(&self) -> f64 {
        self.start_s + 0.5 * self.duration_s
    }

    pub fn end(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

/// Contiguous chirp segments covering `[-T/2, T/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChirpSchedule {
    segments: Vec<ChirpParams>,
}

impl ChirpSchedule {
    pub fn new(segments: Vec<ChirpParams>) -> Result<Self> {
        if ![1, 2, 4].contains(&segments.len()) {
            return Err(Error::config("a chirp schedule has 1, 2 or 4 segments"));
        }
        let total: f64 = segments.iter().map(|s| s.duration_s).sum();
        let tol = 1e-9 * total;
        if segments.iter().any(|s| !(s.duration_s > 0.0) || s.slope_hz2 == 0.0) {
            return Err(Error::config("chirp segments need positive duration and nonzero slope"));
        }
        if (segments[0].start_s + 0.5 * total).abs() > tol {
            return Err(Error::config("chirp schedule must start at -T/2"));
        }
        if segments.windows(2).any(|w| (w[1].start_s - w[0].end()).abs() > tol) {
            return Err(Error::config("chirp segments must be contiguous"));
        }
        Ok(Self { segments })
    }

    /// Equal-length segments with the given slopes.
    pub fn from_slopes(duration_s: f64, slopes: &[f64]) -> Result<Self> {
        let seg = duration_s / slopes.len() as f64;
        let segments = slopes
            .iter()
            .enumerate()
            .map(|(i, &a)| ChirpParams {
                slope_hz2: a,
                duration_s: seg,
                start_s: -0.5 * duration_s + i as f64 * seg,
            })
            .collect();
        Self::new(segments)
    }

    /// Up-chirp `2B/T` over the first half, down-chirp `-2B/T` over the second.
    pub fn single_pair(bandwidth_hz: f64, duration_s: f64) -> Result<Self> {
        let a = 2.0 * bandwidth_hz / duration_s;
        Self::from_slopes(duration_s, &[a, -a])
    }

    /// Quarter-length segments with slopes `2B/T, -2B/T, 4B/T, -4B/T`.
    pub fn two_pairs(bandwidth_hz: f64, duration_s: f64) -> Result<Self> {
        let a = 2.0 * bandwidth_hz / duration_s;
        Self::from_slopes(duration_s, &[a, -a, 2.0 * a, -2.0 * a])
    }

    pub fn for_waveform(waveform: Waveform, bandwidth_hz: f64, duration_s: f64) -> Result<Self> {
        match waveform {
            Waveform::ChirpSinglePair => Self::single_pair(bandwidth_hz, duration_s),
            Waveform::ChirpTwoPairs => Self::two_pairs(bandwidth_hz, duration_s),
            Waveform::ZakOtfs => Err(Error::config("zak_otfs is not a chirp waveform")),
        }
    }

    pub fn segments(&self) -> &[ChirpParams] {
        &self.segments
    }
}

/// Closed form of `u = w1 * (W2 c)` for `c(t) = exp(j pi a (t - t_c)^2)`, where
/// `W2` is centred at `t_c` and uses `window_s` as its time scale.
///
/// Returns `len` unnormalized samples at absolute indices `start_index..`.
pub fn filtered_chirp_samples(
    filter: &GaussianFilterParams,
    slope_hz2: f64,
    center_s: f64,
    window_s: f64,
    sample_rate: f64,
    start_index: i64,
    len: usize,
) -> Vec<Complex64> {
    let f = filter.with_duration(window_s);
    let a = Complex64::new(f.a(), 0.0);
    let c = Complex64::new(PI * PI / f.b(), -PI * slope_hz2);
    let c1 = (2.0 * f.a() / PI).powf(0.25);
    let d = (2.0 * f.b() / PI).powf(0.25) * (PI / f.b()).sqrt();
    let pref = (Complex64::new(PI, 0.0) / (a + c)).sqrt() * c1 * d;
    let k = a * c / (a + c);
    (0..len)
        .map(|i| {
            let t = (start_index + i as i64) as f64 / sample_rate - center_s;
            pref * (-k * t * t).exp()
        })
        .collect()
}

/// Unit-energy filtered chirp over the Zak window of `grid`. The Doppler-side
/// filter window uses the segment duration as its time scale.
pub fn make_filtered_chirp(params: &ChirpParams, filter: &GaussianFilterParams, grid: &DdGrid) -> Result<TimeSignal> {
    filter.validate()?;
    if !(params.duration_s > 0.0) {
        return Err(Error::config("chirp duration must be positive"));
    }
    let fs = grid.sample_rate();
    if params.slope_hz2.abs() * params.duration_s / 2.0 > fs / 2.0 {
        return Err(Error::config(format!(
            "chirp slope {} Hz^2 sweeps beyond the Nyquist band of {} Hz",
            params.slope_hz2, fs
        )));
    }
    let mut x = TimeSignal::zeros_for(grid);
    x.samples = filtered_chirp_samples(
        filter,
        params.slope_hz2,
        params.center(),
        params.duration_s,
        fs,
        x.start_index,
        x.len(),
    );
    normalize(&mut x)?;
    Ok(x)
}

/// Transmitted chirp probe with its per-segment references.
#[derive(Debug, Clone)]
pub struct ChirpWaveform {
    pub segments: Vec<(ChirpParams, TimeSignal)>,
    pub transmitted: TimeSignal,
}

/// Synthesizes every segment with energy `1 / #segments` and sums them.
pub fn make_chirp_waveform(schedule: &ChirpSchedule, filter: &GaussianFilterParams, grid: &DdGrid) -> Result<ChirpWaveform> {
    let share = (1.0 / schedule.segments().len() as f64).sqrt();
    let mut transmitted = TimeSignal::zeros_for(grid);
    let mut segments = Vec::with_capacity(schedule.segments().len());
    for p in schedule.segments() {
        let mut x = make_filtered_chirp(p, filter, grid)?;
        x.scale(share);
        transmitted = transmitted.add(&x)?;
        segments.push((*p, x));
    }
    Ok(ChirpWaveform {
        segments,
        transmitted,
    })
}

/// Pulsone located at `(tau0, nu0)` inside the fundamental cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsoneParams {
    pub tau0_s: f64,
    pub nu0_hz: f64,
    pub filter: GaussianFilterParams,
}

fn offset_bins(params: &PulsoneParams, grid: &DdGrid) -> Result<(i64, i64)> {
    let on_grid = |v: f64, step: f64, bins: usize, what: &str| -> Result<i64> {
        let x = v / step;
        let r = x.round();
        if (x - r).abs() > 1e-6 || r < 0.0 || r >= bins as f64 {
            return Err(Error::config(format!(
                "pulsone {what} offset {v} is not a grid point of the fundamental domain"
            )));
        }
        Ok(r as i64)
    };
    Ok((
        on_grid(params.tau0_s, grid.delay_step(), grid.delay_bins(), "delay")?,
        on_grid(params.nu0_hz, grid.doppler_step(), grid.doppler_bins(), "Doppler")?,
    ))
}

/// Pulsone built in the DD domain as the filter twisted-convolved with a
/// lattice impulse, together with its inverse Zak transform. Both are scaled
/// so the time signal has unit energy.
pub fn make_pulsone(params: &PulsoneParams, grid: &DdGrid) -> Result<(DdSignal, TimeSignal)> {
    let (k0, l0) = offset_bins(params, grid)?;
    let taps = gaussian_filter_taps(&params.filter, grid, FILTER_TRUNCATION)?;
    let mut impulse = DdSignal::zeros(*grid);
    impulse.set(k0 as usize, l0 as usize, Complex64::new(1.0 / grid.cell_area(), 0.0));
    let mut dd = twisted_convolve_dd(&taps, &impulse)?;
    let mut td = inverse_zak(&dd);
    let e = td.energy();
    if !(e > 0.0) {
        return Err(Error::Numerical("pulsone has no energy in the window".into()));
    }
    let s = 1.0 / e.sqrt();
    td.scale(s);
    dd.scale(s);
    Ok((dd, td))
}

/// Time-domain pulsone `sum_n sqrt(tau_p) exp(j 2 pi nu0 n tau_p) W2(t_n) w1(t - t_n)`
/// with `t_n = tau0 + n tau_p`, sampled over the Zak window and scaled to unit energy.
pub fn pulsone_time_domain(params: &PulsoneParams, grid: &DdGrid) -> Result<TimeSignal> {
    offset_bins(params, grid)?;
    let f = &params.filter;
    f.validate()?;
    let fs = grid.sample_rate();
    let tp = grid.tau_p();
    let mut x = TimeSignal::zeros_for(grid);
    let reach = 8.0 / f.bandwidth_hz;
    let span = (reach * fs).ceil() as i64;
    let t_lo = x.t_start() - reach;
    let t_hi = x.end_index() as f64 / fs + reach;
    let n_lo = ((t_lo - params.tau0_s) / tp).floor() as i64;
    let n_hi = ((t_hi - params.tau0_s) / tp).ceil() as i64;
    for n in n_lo..=n_hi {
        let tn = params.tau0_s + n as f64 * tp;
        let amp = Complex64::from_polar(
            tp.sqrt() * f.big_w2(tn),
            2.0 * PI * params.nu0_hz * n as f64 * tp,
        );
        let centre = (tn * fs).round() as i64;
        for i in (centre - span).max(x.start_index)..(centre + span).min(x.end_index()) {
            let t = i as f64 / fs;
            x.samples[(i - x.start_index) as usize] += amp * f.w1(t - tn);
        }
    }
    normalize(&mut x)?;
    Ok(x)
}

/// Zeroes DD samples below `rel` times the peak magnitude.
pub fn sparsify(x: &DdSignal, rel: f64) -> DdSignal {
    let floor = rel * x.max_abs();
    let mut out = x.clone();
    for v in &mut out.values {
        if v.norm() < floor {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    out
}

fn normalize(x: &mut TimeSignal) -> Result<()> {
    let e = x.energy();
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::Numerical("waveform has no finite energy".into()));
    }
    x.scale(1.0 / e.sqrt());
    Ok(())
}

/// Energy of `x` on `[t0, t1)`.
pub fn energy_between(x: &TimeSignal, t0: f64, t1: f64) -> f64 {
    x.samples
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let t = x.time(*i);
            t >= t0 && t < t1
        })
        .map(|(_, s)| s.norm_sqr())
        .sum::<f64>()
        / x.sample_rate
}
