//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with its checks. Run with `--nocapture` to see the lines.

use mixgeo::verify::{find_criterion, run_criterion, VerifyOptions};

fn criterion(id: u32) {
    let c = find_criterion(&id.to_string()).expect("criterion is registered");
    let report = run_criterion(c.as_ref(), &VerifyOptions::default());
    println!("{}", report.summary());
    assert!(report.passed, "criterion {id} ({}) failed", report.name);
}

#[test]
fn criterion_01_asymptotic_constants() {
    criterion(1);
}

#[test]
fn criterion_02_gaussian_limit() {
    criterion(2);
}

#[test]
fn criterion_03_laplace_limit() {
    criterion(3);
}

#[test]
fn criterion_04_fisher_limit() {
    criterion(4);
}

#[test]
fn criterion_05_off_diagonal_bound() {
    criterion(5);
}

#[test]
fn criterion_06_inhomogeneous_example() {
    criterion(6);
}

#[test]
fn criterion_07_wig_identity() {
    criterion(7);
}

#[test]
fn criterion_08_extended_metric() {
    criterion(8);
}

#[test]
fn criterion_09_perturbation_lemma() {
    criterion(9);
}

#[test]
fn criterion_10_flow_conservation() {
    criterion(10);
}

#[test]
fn criterion_11_heat_1d() {
    criterion(11);
}

#[test]
fn criterion_12_heat_2d() {
    criterion(12);
}

#[test]
fn criterion_13_extended_transport() {
    criterion(13);
}
