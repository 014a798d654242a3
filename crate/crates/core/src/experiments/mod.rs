//! Fidelity measurements: single points, parameter sweeps and convergence checks.

mod convergence;
mod gate;
mod initial;
mod point;
mod sweep;

pub use convergence::{run_convergence, ConvergencePoint, ConvergenceReport, CONVERGENCE_TOL};
pub use gate::{verify_gate, GateReport, WordCheck, DEFAULT_GATE_THRESHOLD, REFERENCE_CUTOFF};
pub use initial::{nonideal_initial_state, nonideal_normalizer};
pub use point::{
    coherent_fidelity, run_point, PointResult, PointSolver, Solver, SolverConfig,
    DEFAULT_COARSE_STEPS, DEFAULT_CUTOFF, DEFAULT_N_TRAJ, DEFAULT_SEED,
};
pub use sweep::{
    reference_interval, reference_minimum, residual_rotation_angles, run_c_sweep, run_delta_sweep,
    run_sweep, sha256_hex, unix_now, BoundCheck, Manifest, OrderCheck, SweepResult, SweepRow,
    SweepSpec, SweepVariable, DEFAULT_C_GRID, DEFAULT_DELTA_GRID, DEFAULT_KAPPA_INV_US,
    MINIMUM_TOLERANCE,
};
