use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::initial::nonideal_initial_state;
use crate::device::{
    collapse_operators, hamiltonian, lambda_and_gate_time, rotating_offsets, CollapseOp,
    DeviceParams, Frame, HamiltonianGenerator, ModelOptions, Tier,
};
use crate::error::{Error, Result};
use crate::evolve::{
    evolve_master, evolve_schrodinger, fidelity_estimate, frame_transform, EvolutionConfig,
    FrameDirection, Method, StepRule, TrajectoryConfig, TrajectoryEngine, DEFAULT_RESOLUTION,
};
use crate::fock::{fidelity, DensityMatrix, HilbertSpec, Level, StateVector};
use crate::oracle::ghz_system_target;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Trajectories,
    Master,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Trajectories => "trajectories",
            Solver::Master => "master",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trajectories" | "traj" => Ok(Solver::Trajectories),
            "master" => Ok(Solver::Master),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

/// Numerical settings shared by every point of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub solver: Solver,
    pub cutoff: usize,
    /// Integration steps per period of the fastest retained frequency.
    pub steps_per_period: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub drop_gprime: bool,
    /// Base steps of the exact block propagator for trajectories; 0 selects RK4.
    pub coarse_steps: usize,
}

pub const DEFAULT_SEED: u64 = 20_190_611;
pub const DEFAULT_N_TRAJ: usize = 2000;
pub const DEFAULT_CUTOFF: usize = 15;
pub const DEFAULT_COARSE_STEPS: usize = 16;

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Trajectories,
            cutoff: DEFAULT_CUTOFF,
            steps_per_period: DEFAULT_RESOLUTION,
            n_traj: DEFAULT_N_TRAJ,
            seed: DEFAULT_SEED,
            drop_gprime: true,
            coarse_steps: DEFAULT_COARSE_STEPS,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 1 {
            return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
        }
        if !(self.steps_per_period >= 4.0) {
            return Err(Error::InvalidArgument(
                "steps_per_period must be at least 4".into(),
            ));
        }
        if self.solver == Solver::Trajectories && self.n_traj == 0 {
            return Err(Error::InvalidArgument("n_traj must be at least 1".into()));
        }
        Ok(())
    }
}

/// One fidelity measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointResult {
    /// `√⟨ψ_id|ρ|ψ_id⟩`.
    pub fidelity: f64,
    /// Monte-Carlo standard error; zero for the master equation.
    pub stderr: f64,
    /// Fidelity after the best phase `e^{iφ|e⟩⟨e|}` on the target.
    pub compensated: f64,
    pub compensated_stderr: f64,
    /// The optimal `φ` (rad).
    pub compensation_phase: f64,
    pub wall_s: f64,
    /// How the no-jump evolution was integrated.
    pub engine: &'static str,
    pub mean_jumps: Option<f64>,
    pub trace_drift: Option<f64>,
    pub positive: Option<bool>,
}

enum Backend {
    Trajectories {
        engine: Box<TrajectoryEngine>,
        /// Diagonal mapping rotating-frame states to the interaction frame; `None` when the engine already runs there.
        offsets: Option<Vec<f64>>,
    },
    Master {
        gen: HamiltonianGenerator,
        collapse: Vec<CollapseOp>,
        cfg: EvolutionConfig,
    },
}

/// Everything that depends on `c` and `κ⁻¹` but not on `δ`.
pub struct PointSolver {
    params: DeviceParams,
    spec: HilbertSpec,
    t_gate: f64,
    cfg: SolverConfig,
    backend: Backend,
    setup_s: f64,
}

impl PointSolver {
    pub fn new(base: &DeviceParams, c: f64, kappa_inv: f64, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let started = Instant::now();
        let params = base.with_mismatch(c)?.with_kappa_inv(kappa_inv)?;
        params.validate()?;
        let spec = HilbertSpec::uniform(params.n(), cfg.cutoff)?;
        let t_gate = lambda_and_gate_time(&params, None)?.t_gate;
        let opts = ModelOptions {
            drop_gprime: cfg.drop_gprime,
        };
        let collapse = collapse_operators(&params, &spec)?;
        let step = StepRule::Resolution(cfg.steps_per_period);
        let backend = match cfg.solver {
            Solver::Master => Backend::Master {
                gen: hamiltonian(&params, &spec, Tier::Full, Frame::Interaction, opts)?,
                collapse,
                cfg: EvolutionConfig::new(Method::Rk4Master, step, t_gate),
            },
            Solver::Trajectories => {
                let ecfg = EvolutionConfig::new(Method::Trajectories, step, t_gate);
                let exact = if cfg.coarse_steps > 0 && cfg.drop_gprime {
                    let gen = hamiltonian(&params, &spec, Tier::Full, Frame::Rotating, opts)?;
                    match TrajectoryEngine::new(&gen, &collapse, &ecfg)?
                        .with_exact_blocks(cfg.coarse_steps)
                    {
                        Ok(engine) => Some(engine),
                        Err(Error::DimensionGuard { .. }) => None,
                        Err(e) => return Err(e),
                    }
                } else {
                    None
                };
                match exact {
                    Some(engine) => Backend::Trajectories {
                        engine: Box::new(engine),
                        offsets: Some(rotating_offsets(&params, &spec)),
                    },
                    None => {
                        let gen =
                            hamiltonian(&params, &spec, Tier::Full, Frame::Interaction, opts)?;
                        Backend::Trajectories {
                            engine: Box::new(TrajectoryEngine::new(&gen, &collapse, &ecfg)?),
                            offsets: None,
                        }
                    }
                }
            }
        };
        Ok(Self {
            params,
            spec,
            t_gate,
            cfg: cfg.clone(),
            backend,
            setup_s: started.elapsed().as_secs_f64(),
        })
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn t_gate(&self) -> f64 {
        self.t_gate
    }

    /// Seconds spent building the propagators.
    pub fn setup_seconds(&self) -> f64 {
        self.setup_s
    }

    pub fn engine_name(&self) -> &'static str {
        match &self.backend {
            Backend::Master { .. } => "rk4-master",
            Backend::Trajectories { engine, .. } if engine.is_exact() => "exact-blocks",
            Backend::Trajectories { .. } => "rk4",
        }
    }

    /// Evolve the state prepared with imbalance `delta` for one gate time.
    pub fn run(&self, delta: f64) -> Result<PointResult> {
        let started = Instant::now();
        let psi0 = nonideal_initial_state(delta, self.params.alpha, &self.spec)?;
        let target = ghz_system_target(self.params.n(), self.params.alpha, &self.spec)?;
        let mut out = match &self.backend {
            Backend::Trajectories { engine, offsets } => {
                self.run_trajectories(engine, offsets.as_deref(), &psi0, &target)?
            }
            Backend::Master { gen, collapse, cfg } => {
                let res = evolve_master(gen, collapse, &DensityMatrix::from_pure(&psi0), cfg)?;
                let rho = res.final_state();
                let (a, b) = branches(&target);
                let aa = sandwich(rho, &a, &a).re;
                let bb = sandwich(rho, &b, &b).re;
                let ab = sandwich(rho, &a, &b);
                let f2 = aa + bb + 2.0 * ab.re;
                let fc2 = aa + bb + 2.0 * ab.norm();
                PointResult {
                    fidelity: f2.clamp(0.0, 1.0).sqrt(),
                    stderr: 0.0,
                    compensated: fc2.clamp(0.0, 1.0).sqrt(),
                    compensated_stderr: 0.0,
                    compensation_phase: -ab.arg(),
                    wall_s: 0.0,
                    engine: self.engine_name(),
                    mean_jumps: None,
                    trace_drift: Some(res.max_trace_drift),
                    positive: Some(res.positive.iter().all(|&p| p)),
                }
            }
        };
        out.wall_s = started.elapsed().as_secs_f64();
        Ok(out)
    }

    fn run_trajectories(
        &self,
        engine: &TrajectoryEngine,
        offsets: Option<&[f64]>,
        psi0: &StateVector,
        target: &StateVector,
    ) -> Result<PointResult> {
        let (a, b) = branches(target);
        let to_frame = |s: StateVector| -> Result<Vec<C64>> {
            Ok(match offsets {
                Some(h) => frame_transform(&s, h, self.t_gate, FrameDirection::ToLab)?,
                None => s,
            }
            .amplitudes()
            .to_vec())
        };
        let (a, b) = (to_frame(a)?, to_frame(b)?);
        let observe = |_: usize, psi: &StateVector| {
            let pa = dot(&a, psi.amplitudes());
            let pb = dot(&b, psi.amplitudes());
            let cross = pa * pb.conj();
            vec![
                (pa + pb).norm_sqr(),
                pa.norm_sqr(),
                pb.norm_sqr(),
                cross.re,
                cross.im,
            ]
        };
        let tcfg = TrajectoryConfig::new(self.cfg.n_traj, self.cfg.seed);
        let res = engine.run(psi0, &tcfg, &observe)?;
        let last = res.times.len() - 1;
        let col = |k: usize| -> Vec<f64> { res.samples.iter().map(|s| s[last][k]).collect() };
        let (f, se) = fidelity_estimate(&col(0))?;
        let m = &res.mean[last];
        let phase = -m[4].atan2(m[3]);
        let (cp, sp) = (phase.cos(), phase.sin());
        let comp: Vec<f64> = res
            .samples
            .iter()
            .map(|s| {
                let v = &s[last];
                v[1] + v[2] + 2.0 * (cp * v[3] - sp * v[4])
            })
            .collect();
        let (fc, sec) = fidelity_estimate(&comp)?;
        Ok(PointResult {
            fidelity: f,
            stderr: se,
            compensated: fc,
            compensated_stderr: sec,
            compensation_phase: phase,
            wall_s: 0.0,
            engine: self.engine_name(),
            mean_jumps: Some(res.mean_jumps()),
            trace_drift: None,
            positive: None,
        })
    }
}

/// Split the target into its `|g⟩` and `|e⟩` branches.
fn branches(target: &StateVector) -> (StateVector, StateVector) {
    let mut a = target.clone();
    let mut b = target.clone();
    let spec = target.spec().clone();
    let block = spec.dim() / 3;
    let g = Level::G.index() * block;
    let e = Level::E.index() * block;
    for (i, (x, y)) in a
        .amplitudes_mut()
        .iter_mut()
        .zip(b.amplitudes_mut())
        .enumerate()
    {
        if !(g..g + block).contains(&i) {
            *x = C64::new(0.0, 0.0);
        }
        if !(e..e + block).contains(&i) {
            *y = C64::new(0.0, 0.0);
        }
    }
    (a, b)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨a|ρ|b⟩`.
fn sandwich(rho: &DensityMatrix, a: &StateVector, b: &StateVector) -> C64 {
    let d = rho.dim();
    let (a, b) = (a.amplitudes(), b.amplitudes());
    rho.data()
        .chunks_exact(d)
        .zip(a)
        .map(|(row, ai)| ai.conj() * dot_plain(row, b))
        .sum()
}

fn dot_plain(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Build a solver for `(c, κ⁻¹)` and measure the fidelity at `delta`.
pub fn run_point(
    params: &DeviceParams,
    delta: f64,
    c: f64,
    kappa_inv: f64,
    cfg: &SolverConfig,
) -> Result<PointResult> {
    let solver = PointSolver::new(params, c, kappa_inv, cfg)?;
    let mut r = solver.run(delta)?;
    r.wall_s += solver.setup_seconds();
    Ok(r)
}

/// Fidelity of lossless evolution from the balanced initial state under one model tier.
pub fn coherent_fidelity(
    params: &DeviceParams,
    tier: Tier,
    cutoff: usize,
    drop_gprime: bool,
    steps_per_period: f64,
) -> Result<f64> {
    let spec = HilbertSpec::uniform(params.n(), cutoff)?;
    let t_gate = lambda_and_gate_time(params, None)?.t_gate;
    let gen = hamiltonian(
        params,
        &spec,
        tier,
        Frame::Interaction,
        ModelOptions { drop_gprime },
    )?;
    let cfg = EvolutionConfig::new(
        Method::Rk4Schrodinger,
        StepRule::Resolution(steps_per_period),
        t_gate,
    );
    let psi0 = nonideal_initial_state(0.0, params.alpha, &spec)?;
    let out = evolve_schrodinger(&gen, &psi0, &cfg)?;
    let target = ghz_system_target(params.n(), params.alpha, &spec)?;
    fidelity(&target, out.final_state())
}
