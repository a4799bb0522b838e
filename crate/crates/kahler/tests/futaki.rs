//! Holomorphic invariants of the rotation field on random radial metrics.

use std::sync::Arc;

use kahler::functionals::s_j;
use kahler::futaki::*;
use kahler::quadrature::ChebProfile;
use kahler::{build_metric, radial_rule, RadialKahlerMetric, RadialPotential, RadialQuadrature};
use proptest::prelude::*;

fn rule() -> Arc<RadialQuadrature> {
    Arc::new(radial_rule(64).unwrap())
}

fn metric(n: usize, c: &[f64], r: &Arc<RadialQuadrature>) -> RadialKahlerMetric {
    build_metric(&RadialPotential::poly(n, c).unwrap(), r).unwrap()
}

fn small_poly() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.04f64..0.04, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn both_sides_agree_and_vanish(c in small_poly(), n in 1usize..=2) {
        let m = metric(n, &c, &rule());
        let d = hamiltonian_potential(&m, FieldSpec::Rotation).unwrap();
        prop_assert!(d.residual <= 1e-10);
        prop_assert!(m.integrate(&d.theta_im).unwrap().abs() <= 1e-10);
        for j in 0..=2 {
            let lhs = invariant_lhs(&m, &d, j).unwrap();
            let rhs = invariant_rhs(&m, &d, j).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-7, "j={} {} {}", j, lhs, rhs);
            prop_assert!(lhs.abs() <= 1e-7);
        }
    }

    #[test]
    fn lu_lemma_holds(c in small_poly(), n in 1usize..=2) {
        let m = metric(n, &c, &rule());
        prop_assert!(lu_lemma_defect(&m, FieldSpec::Rotation) <= 1e-8);
    }
}

#[test]
fn invariants_do_not_depend_on_the_metric() {
    let r = rule();
    let coeffs = [
        vec![0.0, 0.03, -0.02, 0.01],
        vec![0.02, -0.04, 0.03],
        vec![0.0, 0.0, 0.04, -0.03],
        vec![0.1, 0.02, 0.02, 0.02],
        vec![],
    ];
    for (n, j) in [(1, 1), (2, 2), (2, 1), (1, 2)] {
        let ms: Vec<_> = coeffs.iter().map(|c| metric(n, c, &r)).collect();
        let spread = metric_independence(FieldSpec::Rotation, j, &ms).unwrap();
        assert!(spread <= 1e-7, "n={n} j={j}: {spread}");
        assert_eq!(metric_independence(FieldSpec::Rotation, j, &ms[..1]).unwrap(), 0.0);
    }
}

#[test]
fn rhs_pieces_cancel_nontrivially() {
    // at a perturbed metric each piece is far from zero while the sum vanishes
    let m = metric(2, &[0.0, 0.1, -0.05, 0.03], &rule());
    let d = hamiltonian_potential(&m, FieldSpec::Rotation).unwrap();
    let (a, b) = invariant_rhs_parts(&m, &d, 2).unwrap();
    assert!(a.abs() > 1e-5 && b.abs() > 1e-5);
    assert!((a + b).abs() <= 1e-6 * a.abs());
}

#[test]
fn flow_derivative_is_time_independent() {
    let r = rule();
    for (n, c) in [(1, vec![0.0, 0.03, -0.02]), (2, vec![0.0, 0.02, 0.01, -0.02])] {
        let m = metric(n, &c, &r);
        for j in 0..=2 {
            let v = flow_derivatives(&m, j, &[0.0, 0.1, 0.2]).unwrap();
            let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread <= 1e-6, "n={n} j={j}: {v:?}");
        }
        // the derivative of S_j along the flow, by differences
        for j in 1..=2 {
            let t = 0.1;
            let h = 1e-4;
            let at = |t: f64| build_metric(&flow_potential(&m.potential, t), &r).unwrap();
            let fd = (s_j(&at(t + h), &m, j).unwrap().value - s_j(&at(t - h), &m, j).unwrap().value) / (2.0 * h);
            let v = flow_derivatives(&m, j, &[t]).unwrap()[0];
            assert!((fd - v).abs() <= 1e-6, "j={j}: {fd} vs {v}");
        }
    }
}

#[test]
fn grad_x_sectors_are_smooth_up_to_the_endpoints() {
    let p = RadialPotential::poly(2, &[0.0, 0.1, -0.05, 0.03]).unwrap();
    for which in 0..2 {
        let c = ChebProfile::from_fn(64, |s| {
            let v = sector_values_at(&p, s);
            if which == 0 { v.0 } else { v.1 }
        });
        assert!(c.tail() <= 1e-10);
        for s in [0.0, 1.0] {
            let v = sector_values_at(&p, s);
            assert!(v.0.is_finite() && v.1.is_finite());
        }
    }
}
