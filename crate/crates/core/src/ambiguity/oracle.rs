use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dd_core::{twisted_convolve_at, DdGrid, DdPatch};
use crate::error::{Error, Result};
use crate::waveforms::{gaussian_filter_taps, matched_filter_of, ChirpParams, GaussianFilterParams, FILTER_TRUNCATION};

const MAX_DEPTH: u32 = 50;
const MAX_EVALS: usize = 2_000_000;

struct Simpson<F> {
    f: F,
    evals: usize,
    worst: f64,
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut q = Simpson { f, evals: 3, worst: 0.0 };
    let v = q.step(a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    if q.worst > 0.0 || !v.is_finite() {
        return Err(Error::Numerical(format!(
            "adaptive Simpson on [{a:e}, {b:e}] did not converge after {} evaluations: local error {:e} > {tol:e}",
            q.evals, q.worst
        )));
    }
    Ok(v)
}

impl<F: Fn(f64) -> f64> Simpson<F> {
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm), (self.f)(rm));
        self.evals += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        if depth == 0 || self.evals >= MAX_EVALS {
            self.worst = self.worst.max(err.abs() / 15.0);
            return left + right + err / 15.0;
        }
        self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Self-ambiguity of the filtered chirp `w1 * (W2 c)` of `params` as the
/// one-dimensional integral
/// `exp(-pi^2 nu^2 / (2 alpha B^2)) exp(j pi nu tau) int exp(-alpha B^2 (s - tau)^2 / 2)
///  exp(-pi^2 s^2 / (2 beta T^2)) exp(-beta T^2 (a s - nu)^2 / 2) ds`,
/// with `T` the segment duration, evaluated by adaptive quadrature
/// (absolute tolerance 1e-10, +-6 widths around the integrand peak).
///
/// A segment centred at `t_c` picks up the extra phase `exp(-j 2 pi nu t_c)`.
pub fn chirp_self_ambiguity_oracle(
    params: &ChirpParams,
    filter: &GaussianFilterParams,
    tau: f64,
    nu: f64,
) -> Result<Complex64> {
    filter.validate()?;
    let a = params.slope_hz2;
    let big_a = filter.alpha * filter.bandwidth_hz.powi(2);
    let bt2 = filter.beta * params.duration_s.powi(2);
    let a2 = big_a / 2.0 + PI * PI / (2.0 * bt2) + bt2 * a * a / 2.0;
    let mu = (big_a * tau + bt2 * a * nu) / (2.0 * a2);
    let half = 6.0 / a2.sqrt();
    let integrand = |s: f64| {
        (-big_a * (s - tau).powi(2) / 2.0 - PI * PI * s * s / (2.0 * bt2) - bt2 * (a * s - nu).powi(2) / 2.0).exp()
    };
    let integral = adaptive_simpson(integrand, mu - half, mu + half, 1e-10 * (PI / a2).sqrt())?;
    let envelope = (-PI * PI * nu * nu / (2.0 * big_a)).exp();
    let phase = PI * nu * tau - 2.0 * PI * nu * params.center();
    Ok(Complex64::from_polar(envelope * integral, phase))
}

/// Exact ambiguity of the filtered chirp from its complex-Gaussian closed form
/// `u(t) = K exp(-p (t - t_c)^2)`.
pub fn chirp_ambiguity_closed_form(params: &ChirpParams, filter: &GaussianFilterParams, tau: f64, nu: f64) -> Complex64 {
    let f = filter.with_duration(params.duration_s);
    let big_a = Complex64::new(f.alpha * f.bandwidth_hz.powi(2), 0.0);
    let bt2 = f.beta * params.duration_s.powi(2);
    let c = Complex64::new(PI * PI / bt2, -PI * params.slope_hz2);
    let c1 = (2.0 * big_a.re / PI).powf(0.25);
    let d = (2.0 * bt2 / PI).powf(0.25) * (PI / bt2).sqrt();
    let k2 = (c1 * d).powi(2) * (Complex64::new(PI, 0.0) / (big_a + c)).norm();
    let p = big_a * c / (big_a + c);
    let p2 = 2.0 * p.re;
    let bq = 2.0 * p * tau + Complex64::new(0.0, 2.0 * PI * nu);
    let expo = bq * bq / (4.0 * p2) - p * tau * tau - Complex64::new(0.0, 2.0 * PI * nu * params.center());
    k2 * (PI / p2).sqrt() * expo.exp()
}

fn on_bin(v: f64, step: f64) -> Result<i64> {
    let x = v / step;
    if (x - x.round()).abs() > 1e-6 {
        return Err(Error::config(format!("{v} is not on the DD grid")));
    }
    Ok(x.round() as i64)
}

/// Lattice term `(n, m)` of the pulsone self-ambiguity,
/// `w *s (exp(j 2 pi m nu_p tau) w_mf(tau - n tau_p, nu - m nu_p))`, evaluated by
/// discrete twisted convolution of the sampled filter patches at the grid
/// point `(tau, nu)`.
pub fn pulsone_self_ambiguity_oracle(
    filter: &GaussianFilterParams,
    grid: &DdGrid,
    n: i64,
    m: i64,
    tau: f64,
    nu: f64,
) -> Result<Complex64> {
    let k = on_bin(tau, grid.delay_step())?;
    let l = on_bin(nu, grid.doppler_step())?;
    let w = gaussian_filter_taps(filter, grid, FILTER_TRUNCATION)?;
    let wmf = matched_filter_of(&w);
    let pm = grid.delay_bins() as i64;
    let qn = grid.doppler_bins() as i64;
    let mut shifted = DdPatch {
        k0: wmf.k0 + n * pm,
        l0: wmf.l0 + m * qn,
        ..wmf.clone()
    };
    for (i, v) in shifted.values.iter_mut().enumerate() {
        let kk = wmf.k0 + (i / wmf.cols) as i64;
        // nu_p * (kk + n PM) dt = kk / PM (mod 1)
        let r = (m * kk).rem_euclid(pm);
        *v *= Complex64::from_polar(1.0, 2.0 * PI * r as f64 / pm as f64);
    }
    twisted_convolve_at(&w, &shifted, k, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::{cross_ambiguity_td, SearchRegion};
    use crate::dd_core::TimeSignal;
    use crate::waveforms::{filtered_chirp_samples, make_pulsone, PulsoneParams};

    #[test]
    fn simpson_integrates_gaussians_and_polynomials() {
        let v = adaptive_simpson(|x| (-x * x).exp(), -8.0, 8.0, 1e-12).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-10);
        let v = adaptive_simpson(|x| x.powi(3) - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(matches!(
            adaptive_simpson(|x| (1.0 / x).sin(), 1e-300, 1.0, 1e-300),
            Err(Error::Numerical(_))
        ));
    }

    fn chirp() -> (ChirpParams, GaussianFilterParams) {
        let (b, t) = (1e6, 2e-3);
        let p = ChirpParams {
            slope_hz2: 2.0 * b / t,
            duration_s: t / 2.0,
            start_s: -t / 4.0,
        };
        (p, GaussianFilterParams::standard(b, t).unwrap())
    }

    #[test]
    fn quadrature_oracle_matches_closed_form() {
        let (p, f) = chirp();
        let a = p.slope_hz2;
        for &(tau, nu) in &[(0.0, 0.0), (2e-6, a * 2e-6), (-3e-6, -500.0), (1e-6, 3e3), (5e-7, -a * 5e-7 + 800.0)] {
            let q = chirp_self_ambiguity_oracle(&p, &f, tau, nu).unwrap();
            let c = chirp_ambiguity_closed_form(&p, &f, tau, nu);
            let peak = chirp_ambiguity_closed_form(&p, &f, 0.0, 0.0).norm();
            assert!((q - c).norm() < 1e-8 * peak, "({tau},{nu}) {q} vs {c}");
        }
    }

    #[test]
    fn oracle_origin_is_the_chirp_energy_and_band_follows_slope() {
        let (p, f) = chirp();
        let fs = 4e6;
        let half = (1.5e-3 * fs) as i64;
        let u = filtered_chirp_samples(&f, p.slope_hz2, p.center(), p.duration_s, fs, (p.center() * fs).round() as i64 - half, (2 * half) as usize);
        let energy: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() / fs;
        let a0 = chirp_self_ambiguity_oracle(&p, &f, 0.0, 0.0).unwrap();
        assert!(a0.im.abs() < 1e-12 * a0.re);
        assert!((a0.re - energy).abs() < 1e-8 * energy, "{} vs {}", a0.re, energy);
        let tau = 3e-6;
        let on = chirp_self_ambiguity_oracle(&p, &f, tau, p.slope_hz2 * tau).unwrap().norm();
        let off = chirp_self_ambiguity_oracle(&p, &f, tau, p.slope_hz2 * tau + 4.0 / p.duration_s).unwrap().norm();
        assert!(off < 0.1 * on);
    }

    #[test]
    fn closed_form_matches_td_correlation() {
        let (p, f) = chirp();
        let g = DdGrid::new(1e6, 2e-3, 100e-6, 4, 2).unwrap();
        let fs = g.sample_rate();
        let half = (1.6e-3 * fs) as i64;
        let start = (p.center() * fs).round() as i64 - half;
        let u = TimeSignal::new(
            filtered_chirp_samples(&f, p.slope_hz2, p.center(), p.duration_s, fs, start, (2 * half) as usize),
            fs,
            start,
        );
        let region = SearchRegion::new(-6.0 * g.delay_step(), 6.0 * g.delay_step(), 6.0 * g.doppler_step()).unwrap();
        let s = cross_ambiguity_td(&u, &u, &g, &region).unwrap();
        let peak = s.max_abs();
        for k in s.k0..s.k_end() {
            for l in s.l0..s.l_end() {
                let c = chirp_ambiguity_closed_form(&p, &f, s.tau(k), s.nu(l));
                assert!((c - s.get(k, l).unwrap()).norm() < 1e-6 * peak, "({k},{l})");
            }
        }
    }

    #[test]
    fn pulsone_oracle_lattice_values() {
        let g = DdGrid::new(1e6, 2e-3, 100e-6, 2, 2).unwrap();
        let f = GaussianFilterParams::standard(1e6, 2e-3).unwrap();
        let origin = pulsone_self_ambiguity_oracle(&f, &g, 0, 0, 0.0, 0.0).unwrap();
        // Riemann sums of the sampled Gaussians, by Poisson summation
        let alias = |shape: f64, over: f64| 1.0 + 2.0 * (-PI * PI * over * over / (2.0 * shape)).exp();
        let predicted = alias(f.alpha, g.p() as f64) * alias(f.beta, g.q() as f64);
        assert!((origin - Complex64::new(predicted, 0.0)).norm() < 1e-9, "{origin}");
        let mid = pulsone_self_ambiguity_oracle(&f, &g, 0, 0, g.tau_p() / 2.0, 0.0).unwrap();
        assert!(mid.norm() < 1e-6);
        let far = pulsone_self_ambiguity_oracle(&f, &g, 1, -1, g.tau_p(), -g.nu_p()).unwrap();
        // window overlap lost by a one-period shift in each direction
        let overlap = (-PI * PI * (g.tau_p() / g.duration()).powi(2) / (2.0 * f.beta)).exp()
            * (-PI * PI * (g.nu_p() / g.bandwidth()).powi(2) / (2.0 * f.alpha)).exp();
        assert!((far.norm() - overlap).abs() < 1e-4, "{} vs {overlap}", far.norm());
        assert!(pulsone_self_ambiguity_oracle(&f, &g, 0, 0, 0.3 * g.delay_step(), 0.0).is_err());

        let p = PulsoneParams { tau0_s: 0.0, nu0_hz: 0.0, filter: f };
        let (_, x) = make_pulsone(&p, &g).unwrap();
        for (n, m) in [(0i64, 0i64), (1, 0), (0, 1), (-1, 1)] {
            let (tau, nu) = (n as f64 * g.tau_p(), m as f64 * g.nu_p());
            let region = SearchRegion::new(tau - 3.0 * g.delay_step(), tau + 3.0 * g.delay_step(), 0.0).unwrap();
            let numeric = cross_ambiguity_td(&modulate(&x, -nu), &x, &g, &region).unwrap();
            for k in numeric.k0..numeric.k_end() {
                let o = pulsone_self_ambiguity_oracle(&f, &g, n, m, numeric.tau(k), nu).unwrap();
                let v = numeric.get(k, 0).unwrap();
                assert!((o.norm() - v.norm()).abs() < 0.05, "({n},{m}) k={k}: {} vs {}", o.norm(), v.norm());
            }
        }
    }

    /// `x(t) exp(-j 2 pi nu t)`, so that bin `l = 0` of `A_{x', x}` reads `A_{x,x}(., nu)`.
    fn modulate(x: &TimeSignal, nu: f64) -> TimeSignal {
        let mut y = x.clone();
        for (i, v) in y.samples.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, 2.0 * PI * nu * x.time(i));
        }
        y
    }
}
