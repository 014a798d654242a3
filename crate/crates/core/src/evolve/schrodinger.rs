use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::config::{EvolutionConfig, Method, TimeGrid};
use super::rk4::Rk4;
use crate::device::HamiltonianGenerator;
use crate::error::{Error, Result};
use crate::fock::{norm_sqr, StateVector, NORM_TOL};

/// Largest dimension accepted by the dense spectral propagator.
pub const EXACT_DIM_GUARD: usize = 2048;

const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

#[derive(Clone, Debug)]
pub struct SchrodingerResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Largest `|‖ψ‖ − 1|` seen at any step.
    pub max_norm_drift: f64,
}

impl SchrodingerResult {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("at least one record")
    }
}

/// Integrate `dψ/dt = −i H(t) ψ`.
pub fn evolve_schrodinger(
    gen: &HamiltonianGenerator,
    psi0: &StateVector,
    cfg: &EvolutionConfig,
) -> Result<SchrodingerResult> {
    if psi0.spec() != gen.spec() {
        return Err(Error::SpecMismatch);
    }
    psi0.check_normalized(NORM_TOL)?;
    match cfg.method {
        Method::Rk4Schrodinger => evolve_rk4(gen, psi0, cfg),
        Method::ExactStatic => evolve_exact(gen, psi0, cfg),
        other => Err(Error::InvalidArgument(format!(
            "{other:?} is not a state-vector method"
        ))),
    }
}

fn evolve_rk4(
    gen: &HamiltonianGenerator,
    psi0: &StateVector,
    cfg: &EvolutionConfig,
) -> Result<SchrodingerResult> {
    let grid = TimeGrid::build(cfg, gen.max_frequency())?;
    let sum = gen.sum();
    let mut psi = psi0.amplitudes().to_vec();
    let mut rk = Rk4::new(psi.len());
    let mut states = Vec::with_capacity(grid.record_steps.len());
    let mut next = 0;
    let mut drift = 0.0f64;
    for step in 0..=grid.n_steps {
        while next < grid.record_steps.len() && grid.record_steps[next] == step {
            states.push(StateVector::new(psi0.spec().clone(), psi.clone())?);
            next += 1;
        }
        if step == grid.n_steps {
            break;
        }
        let t = grid.time(step);
        rk.step(
            |t, x, out| sum.apply_scaled(t, MINUS_I, x, out),
            t,
            grid.dt,
            &mut psi,
        );
        let n = norm_sqr(&psi);
        if !n.is_finite() {
            return Err(Error::Instability {
                t,
                reason: "non-finite amplitudes".into(),
            });
        }
        drift = drift.max((n.sqrt() - 1.0).abs());
    }
    Ok(SchrodingerResult {
        times: grid.record_times(),
        states,
        max_norm_drift: drift,
    })
}

/// Spectral propagator `V e^{−iEt} V†` of a static Hermitian generator.
pub struct StaticPropagator {
    vectors: DMatrix<C64>,
    energies: Vec<f64>,
}

impl StaticPropagator {
    pub fn new(gen: &HamiltonianGenerator) -> Result<Self> {
        if !gen.is_static() {
            return Err(Error::Unsupported(
                "exact propagation needs a static Hamiltonian".into(),
            ));
        }
        let dim = gen.spec().dim();
        if dim > EXACT_DIM_GUARD {
            return Err(Error::DimensionGuard {
                dim,
                guard: EXACT_DIM_GUARD,
            });
        }
        let h = gen.operator_at(0.0).to_dense();
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        Ok(Self {
            vectors: eig.eigenvectors,
            energies: eig.eigenvalues.iter().copied().collect(),
        })
    }

    pub fn propagate(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let v = DVector::from_column_slice(psi);
        let mut coeffs = self.vectors.adjoint() * v;
        for (c, e) in coeffs.iter_mut().zip(&self.energies) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        (&self.vectors * coeffs).iter().copied().collect()
    }
}

fn evolve_exact(
    gen: &HamiltonianGenerator,
    psi0: &StateVector,
    cfg: &EvolutionConfig,
) -> Result<SchrodingerResult> {
    let prop = StaticPropagator::new(gen)?;
    let mut states = Vec::with_capacity(cfg.record_times.len());
    let mut drift = 0.0f64;
    for &t in &cfg.record_times {
        let amps = prop.propagate(psi0.amplitudes(), t);
        drift = drift.max((norm_sqr(&amps).sqrt() - 1.0).abs());
        states.push(StateVector::new(psi0.spec().clone(), amps)?);
    }
    Ok(SchrodingerResult {
        times: cfg.record_times.clone(),
        states,
        max_norm_drift: drift,
    })
}
