//! Device parameters, Hamiltonians for every model tier, dissipation channels
//! and validity diagnostics.

mod diagnostics;
mod hamiltonian;
mod operator_sum;
mod params;

pub use diagnostics::{diagnose_conditions, DiagnosticReport, PairMetric, DEFAULT_THRESHOLD};
pub use hamiltonian::{
    collapse_operators, decay_term, excitation_number, h0_diagonal, hamiltonian, rotating_offsets,
    rotating_reference, CollapseOp, Frame, HamiltonianGenerator, ModelOptions, Tier,
};
pub use operator_sum::{OperatorSum, OscTerm};
pub use params::{
    ghz, lambda_and_gate_time, mhz, quality_factors, solve_matched_couplings, table1_params, us,
    CouplingRules, DeviceParams, GateTiming,
};
