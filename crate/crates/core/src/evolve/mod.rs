//! Time evolution: Schrödinger and Lindblad integration, quantum
//! trajectories and frame changes.

mod blocks;
mod config;
mod frame;
mod master;
mod rk4;
mod schrodinger;
mod sectors;
mod trajectories;

pub use blocks::{
    block_exponential, block_partition, BlockOperator, PropagatorLadder, LADDER_ENTRY_GUARD,
};
pub use config::{
    EvolutionConfig, Method, StepRule, TimeGrid, TrajectoryConfig, DEFAULT_RESOLUTION,
};
pub use frame::{frame_transform, frame_transform_density, FrameDirection};
pub use master::{evolve_master, MasterResult, EIGEN_DIM_LIMIT, MASTER_DIM_GUARD, POSITIVITY_TOL};
pub use schrodinger::{evolve_schrodinger, SchrodingerResult, StaticPropagator, EXACT_DIM_GUARD};
pub use trajectories::{
    evolve_trajectories, fidelity_estimate, Observer, TrajectoryEngine, TrajectoryResult,
};
