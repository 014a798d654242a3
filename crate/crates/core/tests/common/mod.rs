#![allow(dead_code)]

use hybrid_cnot::device::{
    h0_diagonal, hamiltonian, lambda_and_gate_time, rotating_offsets, table1_params, CollapseOp,
    Frame, HamiltonianGenerator, ModelOptions, Tier,
};
use hybrid_cnot::evolve::{
    evolve_master, evolve_schrodinger, frame_transform, EvolutionConfig, FrameDirection, Method,
    StepRule,
};
use hybrid_cnot::fock::{
    annihilation, coherent_state, embed, number, qutrit_transition, DensityMatrix, HilbertSpec,
    Ket, Level, SparseOperator, StateVector,
};
use hybrid_cnot::oracle::initial_plus_state;
use num_complex::Complex64 as C64;

pub struct DampedCavity {
    /// `1 − ⟨β(t)|ρ(t)|β(t)⟩` with `β(t) = α e^{−κt/2}`.
    pub infidelity: f64,
    /// `|⟨n⟩ − |α|² e^{−κt}|`.
    pub number_error: f64,
    pub trace_drift: f64,
    pub positive: bool,
}

/// A coherent state in a cavity with decay `κ` stays coherent.
pub fn damped_cavity() -> DampedCavity {
    let (alpha, kappa, t, cutoff) = (1.25, 1.0e6, 1.0e-6, 20);
    let spec = HilbertSpec::uniform(1, cutoff).unwrap();
    let ket = coherent_state(C64::new(alpha, 0.0), cutoff).unwrap().ket;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let psi = StateVector::product(&spec, [one, zero, zero], &[ket]).unwrap();
    let a = embed(&annihilation(cutoff).unwrap(), 1, &spec).unwrap();
    let collapse = [CollapseOp {
        label: "kappa".into(),
        rate: kappa,
        op: a,
    }];
    let cfg = EvolutionConfig::new(Method::Rk4Master, StepRule::Fixed(t / 2000.0), t);
    let res = evolve_master(
        &HamiltonianGenerator::zero(&spec),
        &collapse,
        &DensityMatrix::from_pure(&psi),
        &cfg,
    )
    .unwrap();
    let rho = res.final_state();
    let beta = alpha * (-kappa * t / 2.0).exp();
    let bket = coherent_state(C64::new(beta, 0.0), cutoff).unwrap().ket;
    let target = StateVector::product(&spec, [one, zero, zero], &[bket]).unwrap();
    let n_op = embed(&number(cutoff).unwrap(), 1, &spec).unwrap();
    DampedCavity {
        infidelity: 1.0 - rho.expect_pure(target.amplitudes()),
        number_error: (rho.expectation(&n_op).re - alpha * alpha * (-kappa * t).exp()).abs(),
        trace_drift: res.max_trace_drift,
        positive: res.positive.iter().all(|p| *p),
    }
}

/// Largest deviation of `ρ_ge(t)` from `½ e^{−γt/2}` under `L = √γ |e⟩⟨e|`.
pub fn pure_dephasing_error() -> f64 {
    let (gamma, t) = (5.0e4, 20.0e-6);
    let spec = HilbertSpec::uniform(1, 1).unwrap();
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let psi = StateVector::product(&spec, [h, h, zero], &[Ket::basis(2, 0)]).unwrap();
    let collapse = [CollapseOp {
        label: "phi".into(),
        rate: gamma,
        op: embed(&qutrit_transition(Level::E, Level::E), 0, &spec).unwrap(),
    }];
    let records: Vec<f64> = (1..=4).map(|k| t * k as f64 / 4.0).collect();
    let cfg = EvolutionConfig::new(Method::Rk4Master, StepRule::Fixed(t / 1000.0), t)
        .with_records(records.clone());
    let res = evolve_master(
        &HamiltonianGenerator::zero(&spec),
        &collapse,
        &DensityMatrix::from_pure(&psi),
        &cfg,
    )
    .unwrap();
    let g = spec.flatten(Level::G, &[0]);
    let e = spec.flatten(Level::E, &[0]);
    res.states
        .iter()
        .zip(&records)
        .map(|(rho, &tk)| (rho.get(g, e) - C64::new(0.5 * (-gamma * tk / 2.0).exp(), 0.0)).norm())
        .fold(0.0, f64::max)
}

/// Error ratio of RK4 on a resonant `|g⟩↔|e⟩` Rabi problem when the step is halved.
pub fn rk4_halving_ratio() -> f64 {
    let spec = HilbertSpec::uniform(1, 1).unwrap();
    let omega = 1.0;
    let x = qutrit_transition(Level::G, Level::E)
        .add(&qutrit_transition(Level::E, Level::G))
        .unwrap()
        .scale(C64::new(omega, 0.0));
    let id = SparseOperator::identity(2);
    let gen = HamiltonianGenerator::constant(&spec, x.kron(&id)).unwrap();
    let psi = StateVector::basis(&spec, Level::G, &[0]);
    let t = 3.0;
    let exact_g = C64::new((omega * t).cos(), 0.0);
    let exact_e = C64::new(0.0, -(omega * t).sin());
    let err = |dt: f64| {
        let cfg = EvolutionConfig::new(Method::Rk4Schrodinger, StepRule::Fixed(dt), t);
        let out = evolve_schrodinger(&gen, &psi, &cfg).unwrap();
        let a = out.final_state().amplitudes();
        let g = a[spec.flatten(Level::G, &[0])];
        let e = a[spec.flatten(Level::E, &[0])];
        ((g - exact_g).norm_sqr() + (e - exact_e).norm_sqr()).sqrt()
    };
    err(0.1) / err(0.05)
}

/// Largest amplitude difference between interaction-frame RK4 mapped to the lab frame
/// and exact lab-frame propagation, and between the rotating and interaction frames.
pub fn frame_equivalence_errors(cutoff: usize) -> (f64, f64) {
    let p = table1_params();
    let spec = HilbertSpec::uniform(p.n(), cutoff).unwrap();
    let t = lambda_and_gate_time(&p, None).unwrap().t_gate;
    let psi = initial_plus_state(p.n(), p.alpha, &spec).unwrap();
    let rk4 = EvolutionConfig::new(Method::Rk4Schrodinger, StepRule::Resolution(40.0), t);
    let exact = EvolutionConfig::new(Method::ExactStatic, StepRule::Resolution(40.0), t);

    let full = ModelOptions::default();
    let inter = hamiltonian(&p, &spec, Tier::Full, Frame::Interaction, full).unwrap();
    let lab = hamiltonian(&p, &spec, Tier::Full, Frame::Lab, full).unwrap();
    let a = evolve_schrodinger(&inter, &psi, &rk4).unwrap();
    let a_lab = frame_transform(
        a.final_state(),
        &h0_diagonal(&p, &spec),
        t,
        FrameDirection::ToLab,
    )
    .unwrap();
    let b = evolve_schrodinger(&lab, &psi, &exact).unwrap();
    let lab_err = max_diff(a_lab.amplitudes(), b.final_state().amplitudes());

    let opts = ModelOptions { drop_gprime: true };
    let inter = hamiltonian(&p, &spec, Tier::Full, Frame::Interaction, opts).unwrap();
    let rot = hamiltonian(&p, &spec, Tier::Full, Frame::Rotating, opts).unwrap();
    let a = evolve_schrodinger(&inter, &psi, &rk4).unwrap();
    let b = evolve_schrodinger(&rot, &psi, &exact).unwrap();
    let b_int = frame_transform(
        b.final_state(),
        &rotating_offsets(&p, &spec),
        t,
        FrameDirection::ToInteraction,
    )
    .unwrap();
    let rot_err = max_diff(a.final_state().amplitudes(), b_int.amplitudes());
    (lab_err, rot_err)
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Relative spread of the dispersive shifts for the matched couplings.
pub fn matching_residual() -> f64 {
    lambda_and_gate_time(&table1_params(), None).unwrap().spread
}

/// Smallest fidelity between effective-tier evolution and the closed-form rotation
/// over `count` random states with no `|f⟩` component.
pub fn oracle_equivalence(count: usize, cutoff: usize, seed: u64) -> f64 {
    use hybrid_cnot::oracle::apply_ideal_unitary;
    use rand::{RngExt, SeedableRng};

    let p = table1_params();
    let spec = HilbertSpec::uniform(p.n(), cutoff).unwrap();
    let timing = lambda_and_gate_time(&p, None).unwrap();
    let gen = hamiltonian(
        &p,
        &spec,
        Tier::Effective,
        Frame::Interaction,
        Default::default(),
    )
    .unwrap();
    let steps = (gen.sum().norm_bound() * timing.t_gate / 0.02).ceil();
    let cfg = EvolutionConfig::new(
        Method::Rk4Schrodinger,
        StepRule::Fixed(timing.t_gate / steps),
        timing.t_gate,
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let block = spec.cavity_block();
    let mut worst = 1.0f64;
    for _ in 0..count {
        let mut amps = vec![C64::new(0.0, 0.0); spec.dim()];
        for a in amps.iter_mut().take(2 * block) {
            *a = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let psi = StateVector::new(spec.clone(), amps).unwrap().normalized();
        let numeric = evolve_schrodinger(&gen, &psi, &cfg).unwrap();
        let ideal = apply_ideal_unitary(&psi, timing.lambda, timing.t_gate).unwrap();
        let f = ideal.inner(numeric.final_state()).unwrap().norm_sqr();
        worst = worst.min(f);
    }
    worst
}
