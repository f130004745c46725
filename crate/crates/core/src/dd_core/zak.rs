use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{DdGrid, DdSignal, TimeSignal};
use crate::error::{Error, Result};

fn check_rate(x: &TimeSignal, grid: &DdGrid) -> Result<()> {
    let fs = grid.sample_rate();
    if (x.sample_rate - fs).abs() > 1e-9 * fs {
        return Err(Error::config(format!(
            "signal sampled at {} Hz but grid expects P*B = {} Hz",
            x.sample_rate, fs
        )));
    }
    Ok(())
}

/// Sampled Zak transform.
///
/// For each delay bin `k` the Doppler column is `sqrt(tau_p)` times the
/// `QN`-point DFT of `x((k + n PM) / (PB))` for
/// `n = -ceil(N/2) ..= N - ceil(N/2)`. Samples of `x` outside that window
/// must be zero.
pub fn zak_transform(x: &TimeSignal, grid: &DdGrid) -> Result<DdSignal> {
    check_rate(x, grid)?;
    let start = grid.window_start();
    let end = start + grid.window_len() as i64;
    let outside = (x.start_index..x.end_index())
        .filter(|&i| i < start || i >= end)
        .any(|i| x.at(i).norm_sqr() > 0.0);
    if outside {
        return Err(Error::config(
            "signal has energy outside the Zak observation window",
        ));
    }

    let pm = grid.delay_bins();
    let qn = grid.doppler_bins();
    let first = grid.first_period();
    let periods = grid.n() as i64 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(qn);
    let scale = grid.tau_p().sqrt();

    let mut out = DdSignal::zeros(*grid);
    let mut column = vec![Complex64::new(0.0, 0.0); qn];
    for k in 0..pm {
        column.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for j in 0..periods {
            let n = first + j;
            let sample = x.at(k as i64 + n * pm as i64);
            column[n.rem_euclid(qn as i64) as usize] = sample;
        }
        fft.process(&mut column);
        let row = &mut out.values[k * qn..(k + 1) * qn];
        for (dst, src) in row.iter_mut().zip(&column) {
            *dst = src * scale;
        }
    }
    Ok(out)
}

/// Inverse Zak transform as a Riemann sum over one Doppler period.
///
/// Returns samples over the observation window; `inverse_zak(zak_transform(x))`
/// reproduces `x` exactly up to rounding.
pub fn inverse_zak(x_dd: &DdSignal) -> TimeSignal {
    let grid = &x_dd.grid;
    let pm = grid.delay_bins();
    let qn = grid.doppler_bins();
    let first = grid.first_period();
    let periods = grid.n() + 1;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(qn);
    // sqrt(tau_p) * (nu_p / QN) * sum_l
    let scale = 1.0 / (grid.tau_p().sqrt() * qn as f64);

    let mut out = TimeSignal::zeros_for(grid);
    let mut column = vec![Complex64::new(0.0, 0.0); qn];
    for k in 0..pm {
        column.copy_from_slice(&x_dd.values[k * qn..(k + 1) * qn]);
        ifft.process(&mut column);
        for j in 0..periods {
            let n = first + j as i64;
            out.samples[j * pm + k] = column[n.rem_euclid(qn as i64) as usize] * scale;
        }
    }
    out
}

/// Riemann sum of `a_dd b_dd*` over the fundamental domain.
pub fn dd_inner_product(a: &DdSignal, b: &DdSignal) -> Result<Complex64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::config("DD signals live on different grids"));
    }
    let acc: Complex64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y.conj())
        .sum();
    Ok(acc * a.grid.cell_area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn small_grid() -> DdGrid {
        DdGrid::new(8.0, 8.0, 1.0, 2, 2).unwrap()
    }

    fn random_signal(grid: &DdGrid, seed: u64) -> TimeSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = TimeSignal::zeros_for(grid);
        for s in &mut x.samples {
            *s = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        x
    }

    #[test]
    fn impulse_maps_to_constant_delay_row() {
        let g = small_grid();
        let fs = g.sample_rate();
        let k0 = 5usize;
        let mut x = TimeSignal::zeros_for(&g);
        // unit-area impulse at t = k0 / (PB)
        let local = (k0 as i64 - x.start_index) as usize;
        x.samples[local] = Complex64::new(fs, 0.0);
        let dd = zak_transform(&x, &g).unwrap();
        for k in 0..g.delay_bins() {
            for l in 0..g.doppler_bins() {
                let v = dd.get(k, l).norm();
                if k == k0 {
                    assert!((v - g.tau_p().sqrt() * fs).abs() < 1e-12);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_signal_gives_zero_dd() {
        let g = small_grid();
        let dd = zak_transform(&TimeSignal::zeros_for(&g), &g).unwrap();
        assert!(dd.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rate_mismatch_is_config_error() {
        let g = small_grid();
        let mut x = TimeSignal::zeros_for(&g);
        x.sample_rate *= 2.0;
        assert!(matches!(zak_transform(&x, &g), Err(Error::Config(_))));
    }

    #[test]
    fn energy_outside_window_is_rejected() {
        let g = small_grid();
        let mut x = TimeSignal::zeros_for(&g);
        x.samples.push(Complex64::new(1.0, 0.0));
        assert!(zak_transform(&x, &g).is_err());
    }

    #[test]
    fn round_trip_recovers_samples() {
        let g = small_grid();
        let x = random_signal(&g, 7);
        let back = inverse_zak(&zak_transform(&x, &g).unwrap());
        let err = x
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12 * x.max_abs());
    }

    #[test]
    fn inner_product_is_preserved() {
        let g = small_grid();
        let a = random_signal(&g, 1);
        let b = random_signal(&g, 2);
        let za = zak_transform(&a, &g).unwrap();
        let zb = zak_transform(&b, &g).unwrap();
        let dd = dd_inner_product(&za, &zb).unwrap();
        let td = a.inner(&b);
        assert!((dd - td).norm() < 1e-12 * (a.energy() * b.energy()).sqrt());
        let e = dd_inner_product(&za, &za).unwrap();
        assert!((e.re - a.energy()).abs() < 1e-12 * a.energy());
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let g = small_grid();
        let mut a = TimeSignal::zeros_for(&g);
        let mut b = TimeSignal::zeros_for(&g);
        a.samples[3] = Complex64::new(1.0, 0.0);
        b.samples[40] = Complex64::new(0.0, 1.0);
        let ip = dd_inner_product(
            &zak_transform(&a, &g).unwrap(),
            &zak_transform(&b, &g).unwrap(),
        )
        .unwrap();
        assert!(ip.norm() < 1e-15);
    }

    #[test]
    fn dd_impulse_inverts_to_modulated_pulse_train() {
        let g = small_grid();
        let fs = g.sample_rate();
        let (k0, l0) = (3usize, 5usize);
        let nu0 = l0 as f64 * g.doppler_step();
        let mut dd = DdSignal::zeros(g);
        dd.set(k0, l0, Complex64::new(1.0 / g.cell_area(), 0.0));
        let x = inverse_zak(&dd);
        let pm = g.delay_bins() as i64;
        for (local, s) in x.samples.iter().enumerate() {
            let i = x.start_index + local as i64;
            if (i - k0 as i64).rem_euclid(pm) == 0 {
                // sqrt(tau_p) exp(j 2 pi nu0 n tau_p) * (1 / dt) discretized Dirac
                let n = (i - k0 as i64).div_euclid(pm) as f64;
                let expected =
                    Complex64::from_polar(g.tau_p().sqrt() * fs, 2.0 * PI * nu0 * n * g.tau_p());
                assert!((s - expected).norm() < 1e-9 * expected.norm(), "i={i}");
            } else {
                assert!(s.norm() < 1e-9);
            }
        }
    }

    /// Zak sum over every stored sample, evaluated at an arbitrary bin.
    fn zak_direct(x: &TimeSignal, g: &DdGrid, k: i64, l: i64) -> Complex64 {
        let pm = g.delay_bins() as i64;
        let qn = g.doppler_bins() as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in -40..=40i64 {
            let s = x.at(k + n * pm);
            acc += s * Complex64::from_polar(1.0, -2.0 * PI * (n * l) as f64 / qn);
        }
        acc * g.tau_p().sqrt()
    }

    #[test]
    fn zak_output_obeys_quasi_periodicity() {
        // Zero in the last period so shifted windows see the whole signal.
        let g = small_grid();
        let mut x = random_signal(&g, 3);
        let pm = g.delay_bins();
        let len = x.samples.len();
        for s in &mut x.samples[len - pm..] {
            *s = Complex64::new(0.0, 0.0);
        }
        let dd = zak_transform(&x, &g).unwrap();
        let (pm, qn) = (pm as i64, g.doppler_bins() as i64);
        for n in -2..=2i64 {
            for m in -2..=2i64 {
                for (k, l) in [(0i64, 0i64), (3, 7), (15, 31)] {
                    let (kk, ll) = (k + n * pm, l + m * qn);
                    let direct = zak_direct(&x, &g, kk, ll);
                    assert!((dd.quasi_periodic_value(kk, ll) - direct).norm() < 1e-12);
                }
            }
        }
    }
}
