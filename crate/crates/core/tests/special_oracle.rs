//! Kernels against frozen 50-digit tables.

mod common;

use molmimo::special::{erf, erfc, gamma, lower_incomplete_gamma, regularized_lower_gamma};

#[test]
fn erfc_matches_table() {
    let rows = common::table("erfc.csv");
    assert!(rows.len() > 2000);
    let (err, at) = common::worst(&rows, |r| (erfc(r[0]), r[1]));
    assert!(err < 1e-10, "max error {err:e} at {at:?}");
}

#[test]
fn erfc_is_also_relatively_accurate_in_the_tail() {
    for r in common::table("erfc.csv").iter().filter(|r| r[1] > 1e-300) {
        let rel = (erfc(r[0]) / r[1] - 1.0).abs();
        assert!(rel < 1e-9, "x = {}: rel {rel:e}", r[0]);
    }
}

#[test]
fn erf_is_odd_complement() {
    for i in 0..200 {
        let x = i as f64 * 0.05;
        assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-15);
        assert!((erf(-x) + erf(x)).abs() < 1e-15);
    }
}

#[test]
fn lower_gamma_matches_table() {
    let rows = common::table("lower_gamma.csv");
    let (err, at) = common::worst(&rows, |r| (lower_incomplete_gamma(r[0], r[1]), r[2]));
    assert!(err < 1e-10, "max error {err:e} at {at:?}");
    let (err, at) = common::worst(&rows, |r| (regularized_lower_gamma(r[0], r[1]), r[3]));
    assert!(err < 1e-10, "regularized: max error {err:e} at {at:?}");
}

#[test]
fn lower_gamma_tends_to_complete_gamma() {
    for s in [0.05_f64, 0.3, 1.0, 2.7, 5.0] {
        assert!((lower_incomplete_gamma(s, 200.0) - gamma(s)).abs() < 1e-10 * gamma(s));
        assert!((regularized_lower_gamma(s, 200.0) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn single_precision_kernels_track_double() {
    for i in 0..100 {
        let x = i as f32 * 0.1;
        assert!((erfc(x) as f64 - erfc(x as f64)).abs() < 1e-6);
    }
}
