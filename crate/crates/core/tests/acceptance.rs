//! The acceptance suite, one test per criterion. Each prints its pass/fail
//! line; run with `--nocapture` (or `study check`) to see them.

use biharm::study::acceptance::run_criterion;

fn check(id: usize) {
    let outcome = run_criterion(id).unwrap();
    println!("{outcome}");
    if !outcome.passed {
        for d in &outcome.details {
            println!("    {d}");
        }
    }
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn operator_exactness() {
    check(1);
}

#[test]
fn oracle_equivalence() {
    check(2);
}

#[test]
fn norm_equivalence() {
    check(3);
}

#[test]
fn energy_convergence() {
    check(4);
}

#[test]
fn quasi_optimality() {
    check(5);
}

#[test]
fn stabilization_efficiency() {
    check(6);
}

#[test]
fn lower_order_rates() {
    check(7);
}

#[test]
fn structure_checks() {
    check(8);
}

#[test]
fn exact_representability() {
    check(9);
}
