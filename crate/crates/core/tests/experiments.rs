use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zak_radar::ambiguity::{cross_ambiguity_dd, SearchRegion};
use zak_radar::channel::{apply_scene, RadarScene, Target};
use zak_radar::dd_core::zak_transform;
use zak_radar::estimator::detect_peaks;
use zak_radar::experiments::{
    run_heatmap, run_rectangles, run_snr_sweep, ExperimentConfig, Pipeline, Profile, SceneSource, ALL_WAVEFORMS,
};
use zak_radar::waveforms::{pulsone_time_domain, GaussianFilterParams, PulsoneParams, Waveform};
use zak_radar::Complex64;

fn inline(cfg: &mut ExperimentConfig, targets: Vec<Target>) {
    cfg.scene = SceneSource::Inline { targets: RadarScene::new(targets).unwrap() };
}

#[test]
fn single_target_chirp_bands_cross_at_the_target() {
    let mut cfg = ExperimentConfig::for_profile(Profile::Paper);
    cfg.waveform = Waveform::ChirpSinglePair;
    inline(&mut cfg, vec![Target::new(Complex64::new(1.0, 0.0), 1.25e-6, -350.0)]);
    let dir = tempfile::tempdir().unwrap();
    let r = run_heatmap(&cfg, dir.path()).unwrap();
    assert_eq!(r.surface_files.len(), 2);
    assert!(r.surface_files.iter().all(|p| p.exists()));
    let g = cfg.grid().unwrap();
    let e = &r.detection.estimates[0];
    assert!((e.tau_s - 1.25e-6).abs() <= g.delay_step() + 1e-12, "{e:?}");
    assert!((e.nu_hz + 350.0).abs() <= g.doppler_step() + 1e-9, "{e:?}");
}

#[test]
fn empty_scene_leaves_every_surface_at_zero() {
    for w in ALL_WAVEFORMS {
        let mut cfg = ExperimentConfig::for_profile(Profile::Ci);
        cfg.waveform = w;
        inline(&mut cfg, vec![]);
        cfg.region = Some(SearchRegion::new(0.0, 5e-6, 2e3).unwrap());
        let p = Pipeline::new(&cfg, w).unwrap();
        let scene = RadarScene::new(vec![]).unwrap();
        let out = p.run(&scene, f64::INFINITY, &cfg.region.unwrap(), 4, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (name, s) in &out.surfaces {
            assert!(s.max_abs() < 1e-12, "{} {name}: {}", w.name(), s.max_abs());
        }
        assert!(out.report.estimates.is_empty(), "{}", w.name());
    }
}

#[test]
fn heatmap_report_echoes_the_resolved_config() {
    let mut cfg = ExperimentConfig::for_profile(Profile::Ci);
    cfg.seed = 17;
    let dir = tempfile::tempdir().unwrap();
    let r = run_heatmap(&cfg, dir.path()).unwrap();
    assert_eq!(r.config, cfg);
    let text = std::fs::read_to_string(dir.path().join("heatmap_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["gain_law", "ridge_threshold", "rel_threshold", "sparsity", "carrier_hz", "alpha", "beta", "seed"] {
        assert!(v["config"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["config"]["seed"], 17);
}

#[test]
fn one_trial_tables_are_bit_identical() {
    let mut cfg = ExperimentConfig::for_profile(Profile::Ci);
    cfg.trials = 1;
    cfg.seed = 5;
    let csv = |t: &zak_radar::experiments::RmsTable| {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        buf
    };
    let a = run_rectangles(&cfg).unwrap();
    let b = run_rectangles(&cfg).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(a.rows.len(), 6 * ALL_WAVEFORMS.len());
}

#[test]
fn infinite_snr_reproduces_the_noise_free_rectangle() {
    let mut cfg = ExperimentConfig::for_profile(Profile::Ci);
    cfg.trials = 3;
    let sweep = run_snr_sweep(&cfg, &[f64::INFINITY]).unwrap();
    let rect = run_rectangles(&cfg).unwrap();
    // the default random scene is the fourth rectangle
    for w in ALL_WAVEFORMS {
        let s = sweep.get(f64::INFINITY, w).unwrap();
        let r = rect.get(4.0, w).unwrap();
        assert_eq!(s.range_rmse_m, r.range_rmse_m, "{}", w.name());
        assert_eq!(s.velocity_rmse_mps, r.velocity_rmse_mps, "{}", w.name());
    }
}

#[test]
fn finite_snr_draws_differ_from_noise_free() {
    let mut cfg = ExperimentConfig::for_profile(Profile::Ci);
    cfg.trials = 2;
    let t = run_snr_sweep(&cfg, &[-30.0, f64::INFINITY]).unwrap();
    let noisy = t.get(-30.0, Waveform::ZakOtfs).unwrap();
    let clean = t.get(f64::INFINITY, Waveform::ZakOtfs).unwrap();
    assert_ne!(noisy.range_rmse_m, clean.range_rmse_m);
}

#[test]
fn pulsone_peaks_repeat_in_neighbouring_periods() {
    let cfg = ExperimentConfig::for_profile(Profile::Ci);
    let g = cfg.grid().unwrap();
    let filter = GaussianFilterParams::standard(g.bandwidth(), g.duration()).unwrap();
    let x = pulsone_time_domain(&PulsoneParams { tau0_s: 0.0, nu0_hz: 0.0, filter }, &g).unwrap();
    let truth = [(6i64, 3i64, 1.0), (14, -7, 0.8), (25, 12, 0.6)];
    let scene = RadarScene::new(
        truth
            .iter()
            .map(|&(k, l, a)| Target::new(Complex64::new(a, 0.0), k as f64 * g.delay_step(), l as f64 * g.doppler_step()))
            .collect(),
    )
    .unwrap();
    assert!(zak_radar::channel::crystallization_check(&scene, &g));
    let y = apply_scene(&scene, &x, &g).unwrap();
    let kp = (g.tau_p() / g.delay_step()).round() as i64;
    let lp = (g.nu_p() / g.doppler_step()).round() as i64;
    let region = SearchRegion::new(-4.0 * g.delay_step(), g.tau_p() + 30.0 * g.delay_step(), g.nu_p() + 16.0 * g.doppler_step())
        .unwrap();
    let s = cross_ambiguity_dd(&zak_transform(&y, &g).unwrap(), &zak_transform(&x, &g).unwrap(), &region, None).unwrap();
    let peaks = detect_peaks(&s, 30, 0.3).unwrap();
    let bins: Vec<(i64, i64)> = peaks
        .iter()
        .map(|e| ((e.tau_s / g.delay_step()).round() as i64, (e.nu_hz / g.doppler_step()).round() as i64))
        .collect();
    let in_period = |n: i64, m: i64| -> Vec<(i64, i64)> {
        let mut v: Vec<(i64, i64)> = bins
            .iter()
            .map(|&(k, l)| (k - n * kp, l - m * lp))
            .filter(|&(k, l)| (0..kp / 2).contains(&k) && (-lp / 4..lp / 4).contains(&l))
            .collect();
        v.sort();
        v
    };
    let base = in_period(0, 0);
    let expect: Vec<(i64, i64)> = {
        let mut v: Vec<(i64, i64)> = truth.iter().map(|&(k, l, _)| (k, l)).collect();
        v.sort();
        v
    };
    assert_eq!(base, expect);
    for (n, m) in [(1, 0), (0, 1)] {
        let shifted = in_period(n, m);
        assert_eq!(shifted.len(), base.len(), "({n},{m}): {shifted:?}");
        for (a, b) in shifted.iter().zip(&base) {
            assert!((a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1, "({n},{m}): {a:?} vs {b:?}");
        }
    }
}
