//! Gram data, Bergman densities and partition-function ratios.

use std::f64::consts::PI;
use std::sync::Arc;

use kahler::bergman::*;
use kahler::{build_metric, radial_rule, Profile, RadialKahlerMetric, RadialPotential, RadialQuadrature};
use proptest::prelude::*;

fn rule(order: usize) -> Arc<RadialQuadrature> {
    Arc::new(radial_rule(order).unwrap())
}

fn loglog_slope(k: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = k.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|x| x.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    num / lx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>()
}

#[test]
fn constant_potentials_scale_the_partition_function_exactly() {
    let r = rule(132);
    for n in 1..=2 {
        let zero = RadialPotential::zero(n);
        for c in [0.3, -0.3, 1.7] {
            let p = RadialPotential::poly(n, &[c]).unwrap();
            for k in 1..=50 {
                let got = log_partition_ratio_for(&p, &zero, k, &r).unwrap();
                let want = -(k as f64) * dim_h0(n, k).unwrap() as f64 * c;
                assert!((got - want).abs() <= 1e-10 * want.abs(), "n={n} k={k} c={c}");
            }
        }
    }
}

#[test]
fn fubini_study_density_is_exact() {
    for (n, kmax) in [(1usize, 100usize), (2, 60)] {
        let r = rule(2 * kmax + 32);
        let m = build_metric(&RadialPotential::zero(n), &r).unwrap();
        let scale = (2.0 * PI).powi(n as i32);
        for k in (0..=kmax).step_by(5) {
            let rho = bergman_density(&m, k, &gram(&m, k, &r).unwrap()).unwrap();
            let want = fs_density_scaled(n, k);
            for v in &rho.field.values {
                assert!((scale * v - want).abs() <= 1e-9, "n={n} k={k}");
            }
        }
    }
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.05f64..0.05, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn density_is_positive_and_normalized(c in coeffs(), n in 1usize..=2) {
        let kmax = if n == 1 { 200 } else { 120 };
        let r = rule(2 * kmax + 32);
        let m = build_metric(&RadialPotential::poly(n, &c).unwrap(), &r).unwrap();
        for k in [1, 17, kmax / 2, kmax] {
            let rho = bergman_density(&m, k, &gram(&m, k, &r).unwrap()).unwrap();
            prop_assert!(rho.field.values.iter().all(|&v| v > 0.0));
            let d = dim_h0(n, k).unwrap() as f64;
            prop_assert!((density_integral(&m, &rho).unwrap() - d).abs() <= 1e-9 * d);
        }
    }

    #[test]
    fn donaldson_variation_matches_differences(c in coeffs(), d in coeffs(), n in 1usize..=2, k in 1usize..40) {
        let r = rule(112);
        let m = build_metric(&RadialPotential::poly(n, &c).unwrap(), &r).unwrap();
        let v = donaldson_variation_check(&m, k, &Profile::poly(&d), &r).unwrap();
        prop_assert!(v.relative_defect() <= 1e-6, "{:?}", v);
    }
}

#[test]
fn donaldson_formula_special_directions() {
    let r = rule(96);
    let k = 9;
    let m = build_metric(&RadialPotential::poly(2, &[0.0, 0.04, -0.02]).unwrap(), &r).unwrap();
    let c = 0.7;
    let v = donaldson_variation_check(&m, k, &Profile::constant(c), &r).unwrap();
    let want = -(k as f64) * dim_h0(2, k).unwrap() as f64 * c;
    assert!((v.formula - want).abs() <= 1e-9 * want.abs());
    // mean-zero direction at FS on CP^1: 1 - 2s integrates to zero
    let fs = build_metric(&RadialPotential::zero(1), &r).unwrap();
    let v = donaldson_variation_check(&fs, k, &Profile::poly(&[1.0, -2.0]), &r).unwrap();
    assert!(v.formula.abs() <= 1e-10 && v.fd.abs() <= 1e-8);
}

fn residuals(m: &RadialKahlerMetric, r: &Arc<RadialQuadrature>, ks: &[usize], node: usize, terms: usize) -> Vec<f64> {
    let a1 = m.bergman_coefficient(1).unwrap().values[node];
    let a2 = m.bergman_coefficient(2).unwrap().values[node];
    ks.iter()
        .map(|&k| {
            let rho = bergman_density(m, k, &gram(m, k, r).unwrap()).unwrap();
            let kf = k as f64;
            let mut v = 2.0 * PI * rho.field.values[node] - kf - a1;
            if terms > 2 {
                v -= a2 / kf;
            }
            v
        })
        .collect()
}

#[test]
fn pointwise_expansion_residuals_decay_at_the_next_order() {
    let r = rule(432);
    let m = build_metric(&RadialPotential::poly(1, &[0.0, 0.1, -0.08, 0.05]).unwrap(), &r).unwrap();
    let ks = [20usize, 40, 80, 120, 160, 200];
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    // nodes away from the zero of a_3 near the middle of the rule
    for node in [60, 150, 300, 380] {
        // after a_1 the a_2/k term remains; after a_2 the a_3/k^2 term
        let s1 = loglog_slope(&kf, &residuals(&m, &r, &ks, node, 2));
        let s2 = loglog_slope(&kf, &residuals(&m, &r, &ks, node, 3));
        assert!((-1.2..=-0.8).contains(&s1), "node {node}: {s1}");
        assert!((-2.4..=-1.6).contains(&s2), "node {node}: {s2}");
    }
}

#[test]
fn cp2_degree_one_norms_agree_by_symmetry() {
    let r = rule(64);
    let g = gram_for(&RadialPotential::zero(2), 1, &r).unwrap();
    let a = g.log_norm(&[0, 0]);
    assert!((g.log_norm(&[1, 0]) - a).abs() < 1e-13);
    assert!((g.log_norm(&[0, 1]) - a).abs() < 1e-13);
}
