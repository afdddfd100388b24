//! Acceptance suite: one test per criterion, printing a pass/fail line with
//! the measured quantities.

use steepwell::acceptance;

const SEED: u64 = 7;

fn run(id: usize) {
    let outcome = acceptance::run_criterion(id, SEED);
    println!("{}", outcome.summary_line());
    for d in &outcome.details {
        println!("    {d}");
    }
    assert!(
        outcome.passed,
        "criterion {} failed:\n{}",
        outcome.id,
        outcome.details.join("\n")
    );
}

#[test]
fn criterion_1_eigenvalue_formula_oracle() {
    run(1);
}

#[test]
fn criterion_2_eigen_convergence_along_lambda() {
    run(2);
}

#[test]
fn criterion_3_form_bounds() {
    run(3);
}

#[test]
fn criterion_4_gradient_correctness() {
    run(4);
}

#[test]
fn criterion_5_superlinear_existence() {
    run(5);
}

#[test]
fn criterion_6_asymptotically_linear_existence() {
    run(6);
}

#[test]
fn criterion_7_concentration() {
    run(7);
}

#[test]
fn criterion_8_constants_certification() {
    run(8);
}

#[test]
fn criterion_9_determinism() {
    run(9);
}
