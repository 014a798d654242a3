//! Truncated Fock-space linear algebra for one qutrit coupled to `n` cavities.

mod simd;
mod space;
mod sparse;
mod state;

pub use space::{HilbertSpec, Level, QUTRIT_DIM};
pub use sparse::SparseOperator;
pub use state::{
    annihilation, cat_logical, cat_normalizer, coherent_state, embed, fidelity, number,
    qutrit_transition, Coherent, DensityMatrix, Ket, QuantumState, StateVector, ALGEBRA_TOL,
    NORM_TOL,
};

pub(crate) use simd::{caxpy, caxpy_hadamard};
pub(crate) use state::norm_sqr;
