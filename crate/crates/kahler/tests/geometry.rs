//! Curvature, volume and quadrature invariants on random radial metrics.

use std::f64::consts::PI;
use std::sync::Arc;

use kahler::metric::{exact_coefficient_integral, fs_volume};
use kahler::quadrature::{differentiate, integrate_sphere, sphere_grid, ChebProfile};
use kahler::{build_metric, radial_rule, Profile, RadialKahlerMetric, RadialPotential, RadialQuadrature};
use proptest::prelude::*;

fn rule() -> Arc<RadialQuadrature> {
    Arc::new(radial_rule(64).unwrap())
}

fn metric(n: usize, c: &[f64]) -> RadialKahlerMetric {
    build_metric(&RadialPotential::poly(n, c).unwrap(), &rule()).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.05f64..0.05, 5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn volume_is_cohomological(c in coeffs(), n in 1usize..=3) {
        let m = metric(n, &c);
        prop_assert!((m.volume() - fs_volume(n)).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn integrated_coefficients_are_characteristic_numbers(c in coeffs(), n in 1usize..=3) {
        let m = metric(n, &c);
        for j in 0..=2 {
            let got = m.integrate(&m.bergman_coefficient(j).unwrap()).unwrap();
            prop_assert!((got - exact_coefficient_integral(n, j)).abs() <= 1e-8, "j={} {}", j, got);
            prop_assert!(m.coefficient_average(j).unwrap().discrepancy <= 1e-9);
        }
    }

    #[test]
    fn curvature_variation_matches_differences(c in coeffs(), d in coeffs(), n in 1usize..=3) {
        let p = RadialPotential::poly(n, &c).unwrap();
        let dir = Profile::poly(&d);
        let m = build_metric(&p, &rule()).unwrap();
        let v = m.curvature_variation(&dir);
        let h = 1e-4;
        let plus = build_metric(&p.along(&dir, h), &rule()).unwrap().curvature_invariants();
        let minus = build_metric(&p.along(&dir, -h), &rule()).unwrap().curvature_invariants();
        let check = |a: &[f64], b: &[f64], f: &[f64]| -> f64 {
            a.iter().zip(b).zip(f).map(|((x, y), z)| {
                ((x - y) / (2.0 * h) - z).abs() / (1.0 + z.abs())
            }).fold(0.0, f64::max)
        };
        prop_assert!(check(&plus.scalar.values, &minus.scalar.values, &v.scalar.values) <= 1e-6);
        prop_assert!(check(&plus.lap_scalar.values, &minus.lap_scalar.values, &v.lap_scalar.values) <= 1e-6);
    }

    #[test]
    fn laplacian_is_symmetric_and_integrates_to_zero(c in coeffs(), f in coeffs(), g in coeffs(), n in 1usize..=3) {
        let m = metric(n, &c);
        let (pf, pg) = (Profile::poly(&f), Profile::poly(&g));
        let lf = m.half_laplacian_profile(&pf);
        let lg = m.half_laplacian_profile(&pg);
        let a = m.integrate(&m.field(m.sample(&pf).values.iter().zip(&lg.values).map(|(x, y)| x * y).collect())).unwrap();
        let b = m.integrate(&m.field(m.sample(&pg).values.iter().zip(&lf.values).map(|(x, y)| x * y).collect())).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
        prop_assert!(m.integrate(&lf).unwrap().abs() <= 1e-9);
        // collocation and jet Laplacians agree
        let lc = m.half_laplacian(&m.sample(&pf)).unwrap();
        for (x, y) in lc.values.iter().zip(&lf.values) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn total_scalar_curvature_is_topological(c in coeffs(), d in coeffs()) {
        let m = metric(1, &c);
        let dir = Profile::poly(&d);
        let ds = m.curvature_variation(&dir).scalar;
        let s = m.scalar_curvature();
        let lap = m.half_laplacian_profile(&dir);
        let prod = m.field(s.values.iter().zip(&lap.values).map(|(a, b)| a * b).collect());
        prop_assert!((m.integrate(&ds).unwrap() + m.integrate(&prod).unwrap()).abs() <= 1e-9);
        prop_assert!((m.integrate(&s).unwrap() - 4.0 * PI).abs() <= 1e-9);
    }

    #[test]
    fn radial_and_sphere_rules_agree(c in prop::collection::vec(-1.0f64..1.0, 8)) {
        let p = Profile::poly(&c);
        let r = radial_rule(64).unwrap();
        let radial = 2.0 * PI * r.integrate(|s| p.value(s));
        let grid = sphere_grid(32);
        let sphere = integrate_sphere(&grid, &grid.sample(|s, _| p.value(s))).unwrap();
        prop_assert!((radial - sphere).abs() <= 1e-11);
    }

    #[test]
    fn derivative_integrates_back(c in prop::collection::vec(-1.0f64..1.0, 10)) {
        let p = Profile::poly(&c);
        let cheb = ChebProfile::from_fn(32, |s| p.value(s));
        let d = differentiate(&cheb).unwrap();
        let r = radial_rule(32).unwrap();
        let total = r.integrate(|s| d.eval(s));
        prop_assert!((total - (p.value(1.0) - p.value(0.0))).abs() <= 1e-12);
    }
}

#[test]
fn fubini_study_curvature_constants() {
    let m1 = metric(1, &[]);
    let c1 = m1.curvature_invariants();
    for i in 0..m1.nodes().len() {
        assert!((c1.scalar.values[i] - 2.0).abs() < 1e-12);
        assert!((c1.riem_norm_sq.values[i] - 4.0).abs() < 1e-12);
        assert!((c1.ric_norm_sq.values[i] - 4.0).abs() < 1e-12);
    }
    let m2 = metric(2, &[]);
    let c2 = m2.curvature_invariants();
    let a2 = m2.bergman_coefficient(2).unwrap();
    for i in 0..m2.nodes().len() {
        assert!((c2.ric_norm_sq.values[i] - 18.0).abs() < 1e-10);
        assert!((a2.values[i] - 2.0).abs() < 1e-10);
    }
    for n in 1..=3 {
        let m = metric(n, &[]);
        let c = m.curvature_invariants();
        let nn = n as f64;
        for i in 0..m.nodes().len() {
            let s = c.scalar.values[i];
            assert!((s - nn * (nn + 1.0)).abs() <= 1e-10);
            assert!((c.ric_norm_sq.values[i] - s * s / nn).abs() <= 1e-9);
        }
    }
}

#[test]
fn laplacian_of_s_on_the_round_sphere() {
    let m = metric(1, &[]);
    let l = m.half_laplacian_profile(&Profile::poly(&[0.0, 1.0]));
    for (v, &s) in l.values.iter().zip(m.nodes()) {
        assert!((v - (1.0 - 2.0 * s)).abs() < 1e-13);
    }
    // int s omega = pi by the antipodal symmetry
    assert!((m.integrate(&m.sample(&Profile::poly(&[0.0, 1.0]))).unwrap() - PI).abs() < 1e-13);
}

#[test]
fn mixed_wedge_on_cp2_is_cohomological() {
    let m = metric(2, &[0.0, 0.1, -0.05, 0.02]);
    let fs = metric(2, &[]);
    let one = m.field(vec![1.0; m.nodes().len()]);
    for p in 0..=2 {
        let v = m.integrate_mixed(&fs, p, &one).unwrap();
        assert!((v - fs_volume(2)).abs() < 1e-10);
    }
}

#[test]
fn a_small_perturbation_keeps_the_cp2_a2_average() {
    let m = metric(2, &[0.0, 0.05, 0.03, -0.04]);
    let avg = m.coefficient_average(2).unwrap();
    assert!((avg.volume_average - 2.0).abs() <= 1e-8);
    assert_eq!(metric(1, &[0.0, 0.05]).coefficient_average(2).unwrap().exact, 0.0);
}
