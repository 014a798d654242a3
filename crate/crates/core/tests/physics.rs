mod common;

use hybrid_cnot::device::table1_params;
use hybrid_cnot::experiments::{run_point, Solver, SolverConfig};

#[test]
fn damped_cavity_stays_coherent() {
    let r = common::damped_cavity();
    assert!(r.infidelity < 1e-6, "{}", r.infidelity);
    assert!(r.number_error < 1e-6, "{}", r.number_error);
    assert!(r.trace_drift < 1e-7);
    assert!(r.positive);
}

#[test]
fn pure_dephasing_coherence() {
    let e = common::pure_dephasing_error();
    assert!(e < 1e-6, "{e}");
}

#[test]
fn rk4_is_fourth_order() {
    let ratio = common::rk4_halving_ratio();
    assert!((ratio - 16.0).abs() < 3.0, "{ratio}");
}

#[test]
fn frames_agree_at_cutoff_4() {
    let (lab, rot) = common::frame_equivalence_errors(4);
    assert!(lab < 1e-6, "lab {lab}");
    assert!(rot < 1e-6, "rotating {rot}");
}

#[test]
fn matched_shifts_are_equal() {
    assert!(common::matching_residual() < 1e-12);
}

#[test]
fn full_model_master_run_is_physical() {
    let cfg = SolverConfig {
        solver: Solver::Master,
        cutoff: 3,
        ..SolverConfig::default()
    };
    let r = run_point(&table1_params(), 0.1, 0.0, 45e-6, &cfg).unwrap();
    assert!(r.trace_drift.unwrap() < 1e-7, "{:?}", r.trace_drift);
    assert_eq!(r.positive, Some(true));
    assert!(r.fidelity > 0.0 && r.fidelity <= 1.0);
    assert_eq!(r.stderr, 0.0);
}
