use std::fs;

use l1drift::mc_harness::{run_bounds, run_consistency, run_limit_dist, with_threads};
use l1drift::{ConfigMap, ExperimentConfig, ExperimentKind, ExperimentRegistry};

const MODEL: &str = "kernel = fbm:H=0.7\ntheta0 = 1\nx0 = 1\ntheta-lo = 0\ntheta-hi = 2\nn = 64\n";

fn config(kind: ExperimentKind, extra: &str) -> ExperimentConfig {
    let map = ConfigMap::parse(&format!("{MODEL}{extra}")).unwrap();
    ExperimentConfig::from_map(kind, &map).unwrap()
}

#[test]
fn noise_free_consistency_never_exceeds() {
    let cfg = config(
        ExperimentKind::Consistency,
        "eps-list = 0\ndelta = 0.0001\nreplicates = 20",
    );
    let r = run_consistency(&cfg).unwrap();
    assert_eq!(r.rows[0].frequency, 0.0);
    assert!(r.records.iter().all(|rec| (rec.theta_hat - 1.0).abs() < 1e-6));
    assert!(r.log_frequency_slope.is_none());
}

#[test]
fn consistency_report_shapes() {
    let cfg = config(
        ExperimentKind::Consistency,
        "eps-list = 0.3, 0.1\ndelta = 0.1\nreplicates = 40\nseed = 5",
    );
    let r = run_consistency(&cfg).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.records.len(), 80);
    for row in &r.rows {
        assert!((0.0..=1.0).contains(&row.frequency));
        let se = (row.frequency * (1.0 - row.frequency) / 40.0).sqrt();
        assert_eq!(row.se, se);
        assert!(row.bound <= 1.0);
    }
    // Replicate k uses the same driver for every noise level.
    assert_eq!(r.records[0].replicate, r.records[40].replicate);
}

#[test]
fn limit_dist_is_reproducible() {
    let cfg = config(ExperimentKind::LimitDist, "eps = 0.02\nreplicates = 50\nseed = 8");
    let a = run_limit_dist(&cfg).unwrap();
    let b = run_limit_dist(&cfg).unwrap();
    assert_eq!(a.ks, b.ks);
    assert!((0.0..=1.0).contains(&a.ks));
    assert_eq!(a.u_eps.len(), 50);
    assert!(!a.boundary_warning);
}

#[test]
fn tight_interval_raises_boundary_warning() {
    let map = ConfigMap::parse(
        "kernel = fbm:H=0.7\ntheta0 = 1\nx0 = 1\ntheta-lo = 0.999\ntheta-hi = 1.001\nn = 64\neps = 0.1\nreplicates = 50",
    )
    .unwrap();
    let cfg = ExperimentConfig::from_map(ExperimentKind::LimitDist, &map).unwrap();
    let r = run_limit_dist(&cfg).unwrap();
    assert!(r.boundary_fraction > 0.01);
    assert!(r.boundary_warning);
}

#[test]
fn bounds_for_brownian_motion_on_a_fine_grid() {
    let map = ConfigMap::parse("kernel = bm\nn = 2048\nreplicates = 2000\nsampler = circulant\nseed = 4").unwrap();
    let cfg = ExperimentConfig::from_map(ExperimentKind::Bounds, &map).unwrap();
    let r = run_bounds(&cfg).unwrap();
    assert!(r.bm_reflection.is_some());
    assert!(r.tail_checks.iter().all(|c| c.pass));
    assert_eq!(r.gronwall.holds, 2000);
    assert!(r.entropy.unwrap().relative_change.unwrap() < 0.05);
}

#[test]
fn report_files_are_identical_across_thread_counts() {
    let cases = [
        (
            ExperimentKind::Consistency,
            "eps-list = 0.2,0.1\ndelta = 0.1\nreplicates = 30",
        ),
        (ExperimentKind::LimitDist, "eps = 0.05\nreplicates = 30"),
        (ExperimentKind::Bounds, "eps = 0.1\nreplicates = 200"),
    ];
    let reg = ExperimentRegistry::builtin();
    for (kind, extra) in cases {
        let cfg = config(kind, extra);
        let exp = reg.get(kind.name()).unwrap();
        let dirs: Vec<_> = [1, 3]
            .into_iter()
            .map(|threads| {
                let dir = tempfile::tempdir().unwrap();
                let report = with_threads(Some(threads), || exp.run(&cfg)).unwrap().unwrap();
                report.write_to(dir.path()).unwrap();
                dir
            })
            .collect();
        let mut names: Vec<_> = fs::read_dir(dirs[0].path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = fs::read(dirs[0].path().join(&name)).unwrap();
            let b = fs::read(dirs[1].path().join(&name)).unwrap();
            assert!(a == b, "{kind:?} {name:?} differs");
            let text = String::from_utf8(a).unwrap();
            if name.to_string_lossy().ends_with(".csv") {
                assert!(text.starts_with("# "), "{name:?} lacks a config header");
                assert!(text.contains("# seed = 0\n"));
            } else {
                assert!(text.contains("\"config\""));
            }
        }
    }
}

#[test]
fn missing_keys_are_named() {
    let map = ConfigMap::parse(MODEL).unwrap();
    let err = ExperimentConfig::from_map(ExperimentKind::Consistency, &map).unwrap_err();
    assert!(err.is_usage());
    assert!(err.to_string().contains("eps"), "{err}");
}
