use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{cross_ambiguity_dd, cross_ambiguity_td, SearchRegion};
use crate::channel::{apply_scene, RadarScene, Target};
use crate::dd_core::{zak_transform, DdGrid};
use crate::error::{Error, Result};
use crate::waveforms::{make_pulsone, sparsify, GaussianFilterParams, PulsoneParams};

const BENCH_BANDWIDTH: f64 = 1e6;
const BENCH_SPARSITY: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub bt: usize,
    pub m: usize,
    pub n: usize,
    pub region_bins: usize,
    pub dd_seconds: f64,
    pub td_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Log-log least-squares slopes of runtime against BT.
    pub dd_slope: f64,
    pub td_slope: f64,
}

/// Grid with `M N = 2^log2_bt`, M the larger factor, B = 1 MHz, P = Q = 2.
fn bench_grid(log2_bt: u32) -> Result<DdGrid> {
    let m = 1usize << log2_bt.div_ceil(2);
    let n = 1usize << (log2_bt / 2);
    let tau_p = m as f64 / BENCH_BANDWIDTH;
    DdGrid::new(BENCH_BANDWIDTH, n as f64 * tau_p, tau_p, 2, 2)
}

fn fastest<F: FnMut() -> Result<()>>(repeats: usize, mut f: F) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        f()?;
        best = best.min(t0.elapsed().as_secs_f64());
    }
    Ok(best)
}

fn slope(rows: &[BenchRow], pick: impl Fn(&BenchRow) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.bt as f64).ln(), pick(r).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Times the pulsone DD path (Zak transform of the return plus the sparse
/// DD cross-ambiguity against the DD-defined pulsone) and the direct
/// time-domain path on the same region: the first half of the delay period
/// by the central half of the Doppler period, so the region grows in
/// proportion to BT.
pub fn run_complexity_bench(log2_bt: &[u32], repeats: usize) -> Result<BenchReport> {
    if log2_bt.len() < 2 {
        return Err(Error::config("the benchmark needs at least two BT values"));
    }
    let mut rows = Vec::new();
    for &e in log2_bt {
        let grid = bench_grid(e)?;
        let filter = GaussianFilterParams::standard(grid.bandwidth(), grid.duration())?;
        let (x_dd, x) = make_pulsone(&PulsoneParams { tau0_s: 0.0, nu0_hz: 0.0, filter }, &grid)?;
        let x_dd = sparsify(&x_dd, BENCH_SPARSITY);
        let target = Target::new(Complex64::new(1.0, 0.0), 4.0 * grid.delay_step(), 3.0 * grid.doppler_step());
        let y = apply_scene(&RadarScene::new(vec![target])?, &x, &grid)?;
        let region = SearchRegion::new(0.0, 0.5 * grid.tau_p(), 0.25 * grid.nu_p())?;
        let mut bins = 0;
        let dd_seconds = fastest(repeats, || {
            let y_dd = zak_transform(&y, &grid)?;
            let s = cross_ambiguity_dd(&y_dd, &x_dd, &region, Some(BENCH_SPARSITY))?;
            bins = s.values.len();
            Ok(())
        })?;
        let td_seconds = fastest(repeats, || cross_ambiguity_td(&y, &x, &grid, &region).map(|_| ()))?;
        rows.push(BenchRow { bt: grid.bt(), m: grid.m(), n: grid.n(), region_bins: bins, dd_seconds, td_seconds });
    }
    Ok(BenchReport {
        dd_slope: slope(&rows, |r| r.dd_seconds),
        td_slope: slope(&rows, |r| r.td_seconds),
        rows,
    })
}
