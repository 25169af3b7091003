//! One test per acceptance criterion. Each prints a single PASS/FAIL line.

use charpoly_core::acceptance::run_criterion;

fn check(id: u8) {
    let outcome = run_criterion(id);
    println!("{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn criterion_01_gue_closed_form_vs_quadrature() {
    check(1);
}

#[test]
fn criterion_02_order_one_macdonald() {
    check(2);
}

#[test]
fn criterion_03_quadrature_vs_pfaffian() {
    check(3);
}

#[test]
fn criterion_04_large_eps_law() {
    check(4);
}

#[test]
fn criterion_05_derivative_limit() {
    check(5);
}

#[test]
fn criterion_06_log_law_constant() {
    check(6);
}

#[test]
fn criterion_07_ratio_universality() {
    check(7);
}

#[test]
fn criterion_08_saddle_point() {
    check(8);
}

#[test]
fn criterion_09_cluster_log_divergence() {
    check(9);
}

#[test]
fn criterion_10_exponent_table() {
    check(10);
}

#[test]
fn criterion_11_sampler_statistics() {
    check(11);
}
