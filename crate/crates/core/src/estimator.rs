//! Peak picking, chirp band intersection, ghost rejection and error scoring.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguitySurface;
use crate::channel::RadarScene;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

pub const DEFAULT_REL_THRESHOLD: f64 = 0.5;
/// Assignment in `rms_error` is exhaustive up to this many truth targets.
pub const MAX_ASSIGNMENT_TARGETS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub tau_s: f64,
    pub nu_hz: f64,
    /// Surface value over probe energy.
    pub h: Complex64,
    pub peak_mag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub estimates: Vec<TargetEstimate>,
    pub ghosts_rejected: usize,
    pub crystallized: bool,
}

fn estimate_at(s: &AmbiguitySurface, k: i64, l: i64) -> TargetEstimate {
    let v = s.get(k, l).unwrap_or_default();
    TargetEstimate {
        tau_s: s.tau(k),
        nu_hz: s.nu(l),
        h: v / s.probe_energy,
        peak_mag: v.norm(),
    }
}

fn same_magnitude(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.max(b)
}

/// Grid argmax of `|A|`; ties go to the smaller delay, then the smaller `|nu|`.
pub fn detect_single(surface: &AmbiguitySurface) -> Result<TargetEstimate> {
    let mut best: Option<(i64, i64, f64)> = None;
    for r in 0..surface.rows {
        for c in 0..surface.cols {
            let m = surface.values[r * surface.cols + c].norm();
            let (k, l) = (surface.k0 + r as i64, surface.l0 + c as i64);
            best = match best {
                Some((bk, bl, bm)) if m < bm || (same_magnitude(m, bm) && (k, l.abs()) >= (bk, bl.abs())) => {
                    Some((bk, bl, bm))
                }
                _ => Some((k, l, m)),
            };
        }
    }
    match best {
        Some((k, l, m)) if m > 0.0 => Ok(estimate_at(surface, k, l)),
        _ => Err(Error::NoDetection),
    }
}

fn is_local_max(s: &AmbiguitySurface, mag: &[f64], r: usize, c: usize) -> bool {
    let m = mag[r * s.cols + c];
    for dr in -1i64..=1 {
        for dc in -1i64..=1 {
            let (rr, cc) = (r as i64 + dr, c as i64 + dc);
            if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= s.rows as i64 || cc >= s.cols as i64 {
                continue;
            }
            if mag[rr as usize * s.cols + cc as usize] > m {
                return false;
            }
        }
    }
    true
}

/// Local maxima above `rel_threshold` of the global maximum, accepted in
/// descending order outside a one-resolution-cell exclusion zone around
/// earlier picks.
pub fn detect_peaks(surface: &AmbiguitySurface, max_count: usize, rel_threshold: f64) -> Result<Vec<TargetEstimate>> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::config("rel_threshold must lie in (0, 1)"));
    }
    let mag = surface.magnitude();
    let global = mag.iter().copied().fold(0.0, f64::max);
    if global == 0.0 {
        return Ok(Vec::new());
    }
    let mut cands: Vec<(usize, usize)> = (0..surface.rows)
        .flat_map(|r| (0..surface.cols).map(move |c| (r, c)))
        .filter(|&(r, c)| mag[r * surface.cols + c] >= rel_threshold * global && is_local_max(surface, &mag, r, c))
        .collect();
    cands.sort_by(|a, b| mag[b.0 * surface.cols + b.1].total_cmp(&mag[a.0 * surface.cols + a.1]));
    let ex_k = (surface.delay_resolution / surface.delay_step).round() as i64;
    let ex_l = (surface.doppler_resolution / surface.doppler_step).round() as i64;
    let mut picked: Vec<(i64, i64)> = Vec::new();
    for (r, c) in cands {
        if picked.len() == max_count {
            break;
        }
        let (k, l) = (surface.k0 + r as i64, surface.l0 + c as i64);
        if picked.iter().all(|&(pk, pl)| (pk - k).abs() > ex_k || (pl - l).abs() > ex_l) {
            picked.push((k, l));
        }
    }
    Ok(picked.into_iter().map(|(k, l)| estimate_at(surface, k, l)).collect())
}

/// A fitted band `nu = slope * tau + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpLine {
    pub slope: f64,
    pub intercept: f64,
    pub weight: f64,
}

/// Offset in `(-0.5, 0.5)` bins of the vertex of the parabola through the
/// logarithms of three samples (exact for a Gaussian).
fn log_parabola_vertex(a: f64, b: f64, c: f64) -> f64 {
    if a <= 0.0 || c <= 0.0 {
        return 0.0;
    }
    let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
    let den = la - 2.0 * lb + lc;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (la - lc) / den).clamp(-0.5, 0.5)
}

/// Bands of a chirp surface with known slope. Ridge points are the per
/// Doppler column local maxima along delay above `rel_threshold` of the
/// global maximum, refined to sub-bin delay by a log-parabola fit; their
/// intercepts are clustered (gap of half a Doppler resolution) and each
/// cluster gives the weighted mean intercept.
pub fn fit_chirp_lines(surface: &AmbiguitySurface, slope: f64, rel_threshold: f64) -> Vec<ChirpLine> {
    let mag = surface.magnitude();
    let global = mag.iter().copied().fold(0.0, f64::max);
    if global == 0.0 {
        return Vec::new();
    }
    let at = |r: usize, c: usize| mag[r * surface.cols + c];
    let mut points: Vec<(f64, f64)> = Vec::new();
    for c in 0..surface.cols {
        for r in 0..surface.rows {
            let m = at(r, c);
            let up = r == 0 || at(r - 1, c) <= m;
            let down = r + 1 == surface.rows || at(r + 1, c) < m;
            if m >= rel_threshold * global && up && down {
                let frac = if r > 0 && r + 1 < surface.rows {
                    log_parabola_vertex(at(r - 1, c), m, at(r + 1, c))
                } else {
                    0.0
                };
                let tau = (surface.k0 as f64 + r as f64 + frac) * surface.delay_step;
                let nu = surface.nu(surface.l0 + c as i64);
                points.push((nu - slope * tau, m * m));
            }
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let gap = 0.5 * surface.doppler_resolution;
    let mut lines = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let mut j = i + 1;
        while j < points.len() && points[j].0 - points[j - 1].0 <= gap {
            j += 1;
        }
        if j - i >= 3 {
            let w: f64 = points[i..j].iter().map(|p| p.1).sum();
            let c = points[i..j].iter().map(|p| p.0 * p.1).sum::<f64>() / w;
            lines.push(ChirpLine { slope, intercept: c, weight: w });
        }
        i = j;
    }
    lines
}

/// Every pairwise intersection of the up and down bands that falls inside
/// the search region, snapped to the grid and ranked by the geometric mean
/// of the two surface magnitudes there. Ghosts are included.
pub fn chirp_intersections(
    up: &AmbiguitySurface,
    down: &AmbiguitySurface,
    slopes: (f64, f64),
    max_count: usize,
) -> Result<Vec<TargetEstimate>> {
    chirp_intersections_with(up, down, slopes, max_count, DEFAULT_REL_THRESHOLD)
}

pub fn chirp_intersections_with(
    up: &AmbiguitySurface,
    down: &AmbiguitySurface,
    slopes: (f64, f64),
    max_count: usize,
    rel_threshold: f64,
) -> Result<Vec<TargetEstimate>> {
    let (a, b) = slopes;
    if !(a - b).is_normal() {
        return Err(Error::config("chirp slopes must differ"));
    }
    if up.k0 != down.k0 || up.l0 != down.l0 || up.rows != down.rows || up.cols != down.cols {
        return Err(Error::config("up and down surfaces must share a region"));
    }
    let lu = fit_chirp_lines(up, a, rel_threshold);
    let ld = fit_chirp_lines(down, b, rel_threshold);
    let mut out: Vec<TargetEstimate> = Vec::new();
    for u in &lu {
        for d in &ld {
            let tau = (d.intercept - u.intercept) / (a - b);
            let nu = a * tau + u.intercept;
            let k = (tau / up.delay_step).round() as i64;
            let l = (nu / up.doppler_step).round() as i64;
            if !up.contains(k, l) || out.iter().any(|e| e.tau_s == up.tau(k) && e.nu_hz == up.nu(l)) {
                continue;
            }
            let vu = up.get(k, l).unwrap_or_default();
            let vd = down.get(k, l).unwrap_or_default();
            out.push(TargetEstimate {
                tau_s: up.tau(k),
                nu_hz: up.nu(l),
                h: vu / up.probe_energy,
                peak_mag: (vu.norm() * vd.norm()).sqrt(),
            });
        }
    }
    out.sort_by(|x, y| y.peak_mag.total_cmp(&x.peak_mag));
    out.truncate(max_count);
    Ok(out)
}

/// Candidates of `pair1` that have a distinct partner in `pair2` within the
/// tolerance box, matched greedily in descending `peak_mag` of `pair1`.
pub fn ghost_removal(pair1: &[TargetEstimate], pair2: &[TargetEstimate], match_tol: (f64, f64)) -> Vec<TargetEstimate> {
    let mut order: Vec<usize> = (0..pair1.len()).collect();
    order.sort_by(|&i, &j| pair1[j].peak_mag.total_cmp(&pair1[i].peak_mag));
    let mut used = vec![false; pair2.len()];
    let mut kept = Vec::new();
    for i in order {
        let p = &pair1[i];
        let best = pair2
            .iter()
            .enumerate()
            .filter(|(j, q)| {
                !used[*j] && (q.tau_s - p.tau_s).abs() <= match_tol.0 && (q.nu_hz - p.nu_hz).abs() <= match_tol.1
            })
            .min_by(|(_, q1), (_, q2)| normalized_dist(p, q1, match_tol).total_cmp(&normalized_dist(p, q2, match_tol)));
        if let Some((j, _)) = best {
            used[j] = true;
            kept.push(*p);
        }
    }
    kept
}

fn normalized_dist(a: &TargetEstimate, b: &TargetEstimate, scale: (f64, f64)) -> f64 {
    ((a.tau_s - b.tau_s) / scale.0).powi(2) + ((a.nu_hz - b.nu_hz) / scale.1).powi(2)
}

/// `(c tau / 2, nu lambda / 2)` in metres and metres per second.
pub fn to_range_velocity(est: &TargetEstimate, carrier_hz: f64) -> (f64, f64) {
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    (SPEED_OF_LIGHT * est.tau_s / 2.0, est.nu_hz * lambda / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsReport {
    pub range_rmse_m: f64,
    pub velocity_rmse_mps: f64,
    /// Truth targets paired one-to-one with an estimate.
    pub matched: usize,
    /// No estimates at all; the errors are infinite and callers decide the penalty.
    pub all_missed: bool,
}

struct Assignment {
    cost: Vec<Vec<f64>>,
    nearest: Vec<f64>,
    need: usize,
    best: f64,
    best_map: Vec<Option<usize>>,
    cur: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl Assignment {
    fn search(&mut self, t: usize, matched: usize, acc: f64) {
        if acc >= self.best {
            return;
        }
        let remaining = self.cost.len() - t;
        if matched + remaining < self.need {
            return;
        }
        if t == self.cost.len() {
            self.best = acc;
            self.best_map = self.cur.clone();
            return;
        }
        for e in 0..self.used.len() {
            if !self.used[e] {
                self.used[e] = true;
                self.cur[t] = Some(e);
                let c = self.cost[t][e];
                self.search(t + 1, matched + 1, acc + c);
                self.used[e] = false;
            }
        }
        self.cur[t] = None;
        let c = self.nearest[t];
        self.search(t + 1, matched, acc + c);
    }
}

/// Range and velocity RMSE over the truth targets after an optimal
/// one-to-one assignment in normalized `(dtau B, dnu T)` distance. When there
/// are fewer estimates than targets the leftover targets are scored against
/// their nearest estimate.
pub fn rms_error(
    estimates: &[TargetEstimate],
    truth: &RadarScene,
    carrier_hz: f64,
    resolution: (f64, f64),
) -> Result<RmsReport> {
    let k = truth.targets.len();
    if k == 0 {
        return Err(Error::config("truth scene is empty"));
    }
    if k > MAX_ASSIGNMENT_TARGETS {
        return Err(Error::config(format!("at most {MAX_ASSIGNMENT_TARGETS} truth targets are supported")));
    }
    if estimates.is_empty() {
        return Ok(RmsReport {
            range_rmse_m: f64::INFINITY,
            velocity_rmse_mps: f64::INFINITY,
            matched: 0,
            all_missed: true,
        });
    }
    let truth_est: Vec<TargetEstimate> = truth
        .targets
        .iter()
        .map(|t| TargetEstimate { tau_s: t.tau_s, nu_hz: t.nu_hz, h: t.h, peak_mag: 0.0 })
        .collect();
    let cost: Vec<Vec<f64>> = truth_est
        .iter()
        .map(|t| estimates.iter().map(|e| normalized_dist(t, e, resolution)).collect())
        .collect();
    let nearest: Vec<f64> = cost.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let mut a = Assignment {
        need: k.min(estimates.len()),
        best: f64::INFINITY,
        best_map: vec![None; k],
        cur: vec![None; k],
        used: vec![false; estimates.len()],
        cost,
        nearest,
    };
    a.search(0, 0, 0.0);
    let (mut sr, mut sv, mut matched) = (0.0, 0.0, 0);
    for (t, m) in truth_est.iter().zip(&a.best_map) {
        let e = match m {
            Some(e) => {
                matched += 1;
                &estimates[*e]
            }
            None => estimates
                .iter()
                .min_by(|x, y| normalized_dist(t, x, resolution).total_cmp(&normalized_dist(t, y, resolution)))
                .expect("estimates is nonempty"),
        };
        let (r0, v0) = to_range_velocity(t, carrier_hz);
        let (r1, v1) = to_range_velocity(e, carrier_hz);
        sr += (r1 - r0).powi(2);
        sv += (v1 - v0).powi(2);
    }
    Ok(RmsReport {
        range_rmse_m: (sr / k as f64).sqrt(),
        velocity_rmse_mps: (sv / k as f64).sqrt(),
        matched,
        all_missed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::{cross_ambiguity_dd, SearchRegion};
    use crate::channel::{apply_scene, Target};
    use crate::dd_core::{zak_transform, DdGrid, TimeSignal};
    use crate::waveforms::{filtered_chirp_samples, pulsone_time_domain, GaussianFilterParams, PulsoneParams};
    use proptest::prelude::*;

    fn grid() -> DdGrid {
        DdGrid::new(1e6, 2e-3, 50e-6, 2, 2).unwrap()
    }

    fn pulsone(g: &DdGrid) -> TimeSignal {
        let p = PulsoneParams {
            tau0_s: 0.0,
            nu0_hz: 0.0,
            filter: GaussianFilterParams::standard(g.bandwidth(), g.duration()).unwrap(),
        };
        pulsone_time_domain(&p, g).unwrap()
    }

    fn surface_for(targets: &[(f64, f64)], region: &SearchRegion) -> AmbiguitySurface {
        let g = grid();
        let x = pulsone(&g);
        let scene = RadarScene::new(targets.iter().map(|&(t, n)| Target::new(Complex64::new(1.0, 0.0), t, n)).collect()).unwrap();
        let y = apply_scene(&scene, &x, &g).unwrap();
        cross_ambiguity_dd(&zak_transform(&y, &g).unwrap(), &zak_transform(&x, &g).unwrap(), region, None).unwrap()
    }

    fn blank() -> AmbiguitySurface {
        AmbiguitySurface::zeros(&grid(), &SearchRegion::new(0.0, 10e-6, 2e3).unwrap(), 1.0).unwrap()
    }

    fn put(s: &mut AmbiguitySurface, k: i64, l: i64, v: f64) {
        let i = (k - s.k0) as usize * s.cols + (l - s.l0) as usize;
        s.values[i] = Complex64::new(v, 0.0);
    }

    fn est(tau_s: f64, nu_hz: f64) -> TargetEstimate {
        TargetEstimate { tau_s, nu_hz, h: Complex64::new(1.0, 0.0), peak_mag: 1.0 }
    }

    #[test]
    fn scaled_copy_is_detected_at_origin_with_its_gain() {
        let g = grid();
        let x = pulsone(&g);
        let c = Complex64::new(0.3, -1.2);
        let mut y = x.clone();
        y.samples.iter_mut().for_each(|v| *v *= c);
        let region = SearchRegion::new(-3e-6, 3e-6, 2e3).unwrap();
        let s = cross_ambiguity_dd(&zak_transform(&y, &g).unwrap(), &zak_transform(&x, &g).unwrap(), &region, None).unwrap();
        let e = detect_single(&s).unwrap();
        assert_eq!((e.tau_s, e.nu_hz), (0.0, 0.0));
        assert!((e.h - c).norm() < 1e-9, "{:?}", e.h);
    }

    #[test]
    fn zero_surface_is_no_detection() {
        assert!(matches!(detect_single(&blank()), Err(Error::NoDetection)));
        assert!(detect_peaks(&blank(), 4, 0.5).unwrap().is_empty());
    }

    #[test]
    fn ties_prefer_smaller_delay_then_smaller_doppler() {
        let mut s = blank();
        put(&mut s, 7, 3, 2.0);
        put(&mut s, 5, -4, 2.0);
        put(&mut s, 5, 2, 2.0);
        let e = detect_single(&s).unwrap();
        assert_eq!((e.tau_s, e.nu_hz), (s.tau(5), s.nu(2)));
    }

    #[test]
    fn off_grid_delay_lands_on_the_nearest_bin() {
        let g = grid();
        let filter = GaussianFilterParams::standard(g.bandwidth(), g.duration()).unwrap();
        let mut x = TimeSignal::zeros_for(&g);
        let (fs, start, len) = (g.sample_rate(), x.start_index, x.len());
        let slope = g.bandwidth() / g.duration();
        x.samples = filtered_chirp_samples(&filter, slope, 0.0, g.duration(), fs, start, len);
        let tau = 0.31 / g.bandwidth();
        let mut y = x.clone();
        y.samples = filtered_chirp_samples(&filter, slope, tau, g.duration(), fs, start, len);
        let region = SearchRegion::new(-3e-6, 3e-6, 0.0).unwrap();
        let s = cross_ambiguity_dd(&zak_transform(&y, &g).unwrap(), &zak_transform(&x, &g).unwrap(), &region, None).unwrap();
        let e = detect_single(&s).unwrap();
        assert!((e.tau_s - tau).abs() <= 0.5 * g.delay_step(), "{}", e.tau_s);
        assert_eq!(e.nu_hz, 0.0);
    }

    #[test]
    fn single_impulse_gives_one_peak() {
        let mut s = blank();
        put(&mut s, 4, -1, 3.0);
        let p = detect_peaks(&s, 10, 0.5).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].tau_s, p[0].nu_hz, p[0].peak_mag), (s.tau(4), s.nu(-1), 3.0));
    }

    #[test]
    fn exclusion_zone_threshold_and_count_limit() {
        let mut s = blank();
        put(&mut s, 4, 0, 3.0);
        put(&mut s, 6, 0, 2.5);
        put(&mut s, 10, 0, 2.0);
        put(&mut s, 16, 5, 1.0);
        let p = detect_peaks(&s, 10, 0.5).unwrap();
        assert_eq!(p.iter().map(|e| e.peak_mag).collect::<Vec<_>>(), vec![3.0, 2.0]);
        assert_eq!(detect_peaks(&s, 1, 0.5).unwrap().len(), 1);
        assert_eq!(detect_peaks(&s, 10, 0.3).unwrap().len(), 3);
        assert!(detect_peaks(&s, 10, 1.0).is_err());
    }

    #[test]
    fn two_resolution_cells_apart_resolve() {
        let region = SearchRegion::new(0.0, 12e-6, 3e3).unwrap();
        let s = surface_for(&[(3e-6, 0.0), (5e-6, 0.0)], &region);
        let p = detect_peaks(&s, 10, 0.5).unwrap();
        let mut ks: Vec<i64> = p.iter().map(|e| (e.tau_s / s.delay_step).round() as i64).collect();
        ks.sort();
        assert_eq!(ks, vec![6, 10]);
        let s = surface_for(&[(3e-6, 500.0), (3e-6, -500.0)], &region);
        let mut nus: Vec<f64> = detect_peaks(&s, 10, 0.5).unwrap().iter().map(|e| e.nu_hz).collect();
        nus.sort_by(f64::total_cmp);
        assert_eq!(nus, vec![-500.0, 500.0]);
    }

    #[test]
    fn targets_within_half_a_cell_merge() {
        let region = SearchRegion::new(0.0, 12e-6, 3e3).unwrap();
        let s = surface_for(&[(3e-6, 0.0), (3.5e-6, 0.0)], &region);
        assert_eq!(detect_peaks(&s, 10, 0.5).unwrap().len(), 1);
        let s = surface_for(&[(3e-6, 0.0), (3e-6, 250.0)], &region);
        assert_eq!(detect_peaks(&s, 10, 0.5).unwrap().len(), 1);
    }

    /// Surface that is a sum of Gaussian bands `nu - slope tau = c`.
    fn band_surface(slope: f64, intercepts: &[f64]) -> AmbiguitySurface {
        let mut s = AmbiguitySurface::zeros(&grid(), &SearchRegion::new(0.0, 10e-6, 6e3).unwrap(), 1.0).unwrap();
        let width = 1.0 / grid().duration();
        for r in 0..s.rows {
            for c in 0..s.cols {
                let (tau, nu) = (s.tau(s.k0 + r as i64), s.nu(s.l0 + c as i64));
                s.values[r * s.cols + c] = intercepts
                    .iter()
                    .map(|ic| Complex64::new((-((nu - slope * tau - ic) / width).powi(2)).exp(), 0.0))
                    .sum();
            }
        }
        s
    }

    #[test]
    fn band_lines_intersect_at_the_target() {
        let (b, t) = (grid().bandwidth(), grid().duration());
        let (a_up, a_dn) = (2.0 * b / t, -2.0 * b / t);
        let (tau, nu) = (5e-6, -3500.0);
        let up = band_surface(a_up, &[nu - a_up * tau]);
        let dn = band_surface(a_dn, &[nu - a_dn * tau]);
        let lines = fit_chirp_lines(&up, a_up, 0.5);
        assert_eq!(lines.len(), 1);
        assert!((lines[0].intercept - (nu - a_up * tau)).abs() < 0.5 / t);
        let x = chirp_intersections(&up, &dn, (a_up, a_dn), 16).unwrap();
        assert_eq!(x.len(), 1);
        assert!((x[0].tau_s - tau).abs() <= up.delay_step && (x[0].nu_hz - nu).abs() <= up.doppler_step);
    }

    #[test]
    fn two_targets_give_four_intersections_including_ghosts() {
        let (b, t) = (grid().bandwidth(), grid().duration());
        let (a_up, a_dn) = (2.0 * b / t, -2.0 * b / t);
        let truth = [(3e-6, 1000.0), (6e-6, 2000.0)];
        let up = band_surface(a_up, &truth.map(|(tau, nu)| nu - a_up * tau));
        let dn = band_surface(a_dn, &truth.map(|(tau, nu)| nu - a_dn * tau));
        let x = chirp_intersections(&up, &dn, (a_up, a_dn), 16).unwrap();
        assert_eq!(x.len(), 4);
        for (tau, nu) in truth {
            assert!(x.iter().any(|e| (e.tau_s - tau).abs() <= up.delay_step && (e.nu_hz - nu).abs() <= up.doppler_step));
        }
        assert!(chirp_intersections(&blank(), &blank(), (a_up, a_dn), 16).unwrap().is_empty());
        assert!(chirp_intersections(&up, &dn, (a_up, a_up), 16).is_err());
    }

    #[test]
    fn ghost_removal_matches_within_tolerance() {
        let tol = (1e-6, 2e3);
        let p1 = vec![est(1e-6, 0.0), est(3e-6, 500.0), est(5e-6, -500.0)];
        assert_eq!(ghost_removal(&p1, &p1, tol), p1);
        let far = vec![est(20e-6, 0.0)];
        assert!(ghost_removal(&p1, &far, tol).is_empty());
        let p2 = vec![est(1.5e-6, 1000.0), est(7e-6, -500.0)];
        assert_eq!(ghost_removal(&p1, &p2, tol), vec![p1[0]]);
        let one = vec![est(2e-6, 0.0)];
        assert_eq!(ghost_removal(&p1[..2], &one, (1.5e-6, 1e3)).len(), 1);
    }

    #[test]
    fn range_and_velocity_conversion() {
        let (r, _) = to_range_velocity(&est(1e-6, 0.0), 1e9);
        assert!((r - 149.896229).abs() < 1e-6);
        let (_, v) = to_range_velocity(&est(0.0, -400.0), 1e9);
        assert!((v + 59.9584916).abs() < 1e-6);
        assert_eq!(to_range_velocity(&est(0.0, 0.0), 1e9), (0.0, 0.0));
    }

    fn scene(pts: &[(f64, f64)]) -> RadarScene {
        RadarScene::new(pts.iter().map(|&(t, n)| Target::new(Complex64::new(1.0, 0.0), t, n)).collect()).unwrap()
    }

    const RES: (f64, f64) = (1e-6, 500.0);

    #[test]
    fn rms_of_exact_and_shifted_estimates() {
        let truth = scene(&[(1e-6, 0.0), (2e-6, 100.0)]);
        let exact = vec![est(2e-6, 100.0), est(1e-6, 0.0)];
        let r = rms_error(&exact, &truth, 1e9, RES).unwrap();
        assert_eq!((r.range_rmse_m, r.velocity_rmse_mps, r.matched), (0.0, 0.0, 2));
        let r = rms_error(&[est(1.25e-6, 0.0)], &scene(&[(1e-6, 0.0)]), 1e9, RES).unwrap();
        assert!((r.range_rmse_m - 37.4740573).abs() < 1e-6);
    }

    #[test]
    fn misses_are_scored_against_the_nearest_estimate() {
        let truth = scene(&[(1e-6, 0.0), (1.2e-6, 0.0)]);
        let r = rms_error(&[est(1e-6, 0.0)], &truth, 1e9, RES).unwrap();
        assert_eq!(r.matched, 1);
        let want = (SPEED_OF_LIGHT * 0.2e-6 / 2.0) / 2f64.sqrt();
        assert!((r.range_rmse_m - want).abs() < 1e-9);
        let r = rms_error(&[], &truth, 1e9, RES).unwrap();
        assert!(r.all_missed && r.range_rmse_m.is_infinite());
        assert!(rms_error(&[], &scene(&[]), 1e9, RES).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn argmax_is_invariant_to_complex_scaling(re in -3.0f64..3.0, im in -3.0f64..3.0, seed in 0u64..1000) {
            prop_assume!(re.hypot(im) > 1e-3);
            let mut s = blank();
            let mut v = seed;
            for x in s.values.iter_mut() {
                v = v.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *x = Complex64::new((v >> 11) as f64 / (1u64 << 53) as f64, 0.0);
            }
            let c = Complex64::new(re, im);
            let a = detect_single(&s).unwrap();
            s.values.iter_mut().for_each(|x| *x *= c);
            let b = detect_single(&s).unwrap();
            prop_assert_eq!((a.tau_s, a.nu_hz), (b.tau_s, b.nu_hz));
            prop_assert!((b.h - a.h * c).norm() < 1e-12 * b.h.norm());
        }

        #[test]
        fn rms_is_invariant_to_estimate_order(
            pts in proptest::collection::vec((0.0f64..5e-6, -1e3f64..1e3), 1..5),
            jit in proptest::collection::vec((-3e-7f64..3e-7, -50.0f64..50.0), 5),
            rot in 0usize..5,
        ) {
            let truth = scene(&pts);
            let mut e: Vec<TargetEstimate> = pts.iter().zip(&jit).map(|(&(t, n), &(dt, dn))| est(t + dt, n + dn)).collect();
            let a = rms_error(&e, &truth, 1e9, RES).unwrap();
            let len = e.len();
            e.rotate_left(rot % len);
            e.reverse();
            let b = rms_error(&e, &truth, 1e9, RES).unwrap();
            prop_assert!((a.range_rmse_m - b.range_rmse_m).abs() <= 1e-9 * (1.0 + a.range_rmse_m));
            prop_assert!((a.velocity_rmse_mps - b.velocity_rmse_mps).abs() <= 1e-9 * (1.0 + a.velocity_rmse_mps));
        }
    }
}
