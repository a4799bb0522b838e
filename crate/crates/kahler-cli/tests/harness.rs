//! Experiment runs, manifests, the fit and the verification suite's
//! sensitivity to broken inputs.

use std::path::PathBuf;
use std::process::Command;

use kahler::metric::Conventions;
use kahler::{radial_rule, RadialPotential};
use kahler_cli::experiments::partition_sweep;
use kahler_cli::suite::{verify_suite, Status, SuiteOptions};
use kahler_cli::{run_experiment, CliError, ExperimentConfig, ExperimentKind, RunManifest, ToleranceProfile};

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("kahler-harness-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn column(csv: &[u8], name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_reader(csv);
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn fs_bergman_run_reports_exact_density() {
    let out = scratch("bergman");
    let mut cfg = ExperimentConfig::new(ExperimentKind::Bergman);
    cfg.out = Some(out.clone());
    let manifest = run_experiment(&cfg, &[]).unwrap();
    let csv = std::fs::read(out.join("bergman.csv")).unwrap();
    let ks = column(&csv, "k");
    assert_eq!(ks.len(), 50);
    for col in ["scaled_density_min", "scaled_density_max"] {
        for (k, v) in ks.iter().zip(column(&csv, col)) {
            assert!((v - (k + 1.0)).abs() <= 1e-9, "k={k}: {v}");
        }
    }
    manifest.verify(&out).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["bergman.csv"]);
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn reruns_are_byte_identical_and_manifests_complete() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    let mut cfg = ExperimentConfig::new(ExperimentKind::Partition);
    cfg.k_min = Some(40);
    cfg.k_max = Some(120);
    for out in [&a, &b] {
        cfg.out = Some(out.clone());
        let m = run_experiment(&cfg, &[]).unwrap();
        m.verify(out).unwrap();
        let text = std::fs::read(out.join("manifest.json")).unwrap();
        let back: RunManifest = serde_json::from_slice(&text).unwrap();
        assert_eq!(back.files, m.files);
    }
    for f in ["partition.csv", "fit.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // tampering is detected
    std::fs::write(a.join("partition.csv"), b"k\n").unwrap();
    let m: RunManifest = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert!(m.verify(&a).is_err());
    for d in [a, b] {
        std::fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn constant_potential_sweep_fits_to_zero() {
    let rule = std::sync::Arc::new(radial_rule(2 * 120 + 32).unwrap());
    for n in 1..=2 {
        let p = RadialPotential::poly(n, &[0.7]).unwrap();
        // values reach k d_k |c| and their rounding is amplified by k^J in
        // the last coefficient, so a short window keeps it below 1e-9
        let ks: Vec<usize> = (4..=24).step_by(2).collect();
        let (pts, fit) = partition_sweep(&p, &ks, &rule, 3).unwrap();
        for pt in &pts {
            assert!((pt.known + pt.k as f64 * pt.d_k * 0.7 * (2.0 * std::f64::consts::PI).powi(n as i32)).abs() < 1e-9 * pt.known.abs());
        }
        assert!(fit.fit.coefficients.iter().all(|c| c.abs() <= 1e-9), "{:?}", fit.fit.coefficients);
    }
}

#[test]
fn invalid_configs_are_rejected_with_field_paths() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Partition);
    cfg.k_max = Some(400);
    cfg.radial_order = Some(100);
    cfg.out = Some(scratch("invalid"));
    match run_experiment(&cfg, &[]) {
        Err(CliError::Config(errs)) => assert!(errs.iter().any(|e| e.starts_with("radial_order")), "{errs:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn corrupted_a2_weight_breaks_the_route_and_invariant_checks() {
    let mut opts = SuiteOptions::new(ToleranceProfile::Default);
    opts.only = vec![5, 10];
    let good = verify_suite(&opts);
    assert_eq!(good.failures(), 0);
    opts.conventions = Conventions { a2_laplacian: 0.5 };
    let bad = verify_suite(&opts);
    for c in [5, 10] {
        let o = bad.criterion(c).unwrap();
        assert_eq!(o.status, Status::Fail, "{o:#?}");
    }
    let lhs = bad.criterion(10).unwrap().checks.iter().find(|k| k.name == "lhs_minus_rhs").unwrap();
    assert_eq!(lhs.status, Status::Fail);
}

#[test]
fn reduced_quadrature_is_reported_not_hidden() {
    let mut opts = SuiteOptions::new(ToleranceProfile::Default);
    opts.only = vec![1, 2, 6];
    opts.radial_order = Some(40);
    let r = verify_suite(&opts);
    for o in &r.criteria {
        assert_eq!(o.status, Status::Fail);
        assert!(o.checks.iter().any(|k| k.detail.contains("resolution too low")), "{o:#?}");
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kahler"))
}

#[test]
fn command_line_exit_codes() {
    let out = scratch("cli");
    // numerical configuration error
    let st = bin()
        .args(["partition", "--k-min", "10", "--k-max", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    // fit from a samples file
    std::fs::create_dir_all(&out).unwrap();
    let samples = out.join("samples.csv");
    let mut text = String::from("k,value\n");
    for k in 10..30 {
        let k = k as f64;
        text.push_str(&format!("{k},{}\n", 3.0 * k + 5.0 + 7.0 / k));
    }
    std::fs::write(&samples, text).unwrap();
    let run = out.join("fit");
    let st = bin()
        .args(["fit", "--n", "1", "--samples"])
        .arg(&samples)
        .arg("--out")
        .arg(&run)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let fit: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("fit.json")).unwrap()).unwrap();
    let c: Vec<f64> = fit["coefficients"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in c.iter().zip([3.0, 5.0, 7.0, 0.0]) {
        assert!((got - want).abs() < 1e-8, "{c:?}");
    }
    let m: RunManifest = serde_json::from_slice(&std::fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.input_checksums.len(), 1);
    // potential file and functionals run
    let pot = out.join("pot.json");
    std::fs::write(&pot, r#"{"n": 2, "basis": "s-poly", "coeffs": [0.0, 0.05, -0.02]}"#).unwrap();
    let st = bin().arg("functionals").arg("--potential").arg(&pot).arg("--out").arg(out.join("f")).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let csv = std::fs::read(out.join("f/functionals.csv")).unwrap();
    assert_eq!(column(&csv, "value").len(), 9);
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn fit_residuals_decay_at_the_next_order() {
    // max residual of the J = 3 fit on windows [k0, 4 k0]
    for (n, k0s) in [(1usize, [20usize, 30, 40, 60]), (2, [10, 15, 20, 30])] {
        let rule = std::sync::Arc::new(radial_rule(2 * 4 * k0s[3] + 32).unwrap());
        let p = RadialPotential::poly(n, &kahler_cli::suite::SWEEP_POTENTIAL).unwrap();
        let mut worst = vec![];
        for &k0 in &k0s {
            let ks: Vec<usize> = (k0..=4 * k0).step_by(k0 / 5).collect();
            let (_, fit) = partition_sweep(&p, &ks, &rule, 3).unwrap();
            worst.push(fit.fit.max_residual());
        }
        let kf: Vec<f64> = k0s.iter().map(|&k| k as f64).collect();
        let slope = kahler_cli::suite::loglog_slope(&kf, &worst);
        assert!(slope <= n as f64 - 3.0 + 0.5, "n={n}: {slope}");
    }
}
