//! Monte-Carlo wave-function trajectories (waiting-time unraveling).
//!
//! Every trajectory starts from the same state, so all trajectories follow one
//! shared no-jump path until their own threshold is crossed. That path is
//! integrated once; trajectories branch off it individually.

use num_complex::Complex64 as C64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::blocks::PropagatorLadder;
use super::config::{EvolutionConfig, Method, TimeGrid, TrajectoryConfig};
use super::master::MASTER_DIM_GUARD;
use super::rk4::Rk4;
use crate::device::{decay_term, CollapseOp, HamiltonianGenerator, OperatorSum};
use crate::error::{Error, Result};
use crate::fock::{norm_sqr, DensityMatrix, HilbertSpec, SparseOperator, StateVector, NORM_TOL};

const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
/// Branches queued before a parallel batch is run.
const BATCH: usize = 64;
const BISECTION_LIMIT: usize = 200;

/// Observable evaluated on each normalized trajectory state: `(record index, ψ) ↦ values`.
pub type Observer<'a> = dyn Fn(usize, &StateVector) -> Vec<f64> + Sync + 'a;

/// Reusable no-jump propagator and jump set for one generator.
pub struct TrajectoryEngine {
    spec: HilbertSpec,
    heff: OperatorSum,
    jumps: Vec<SparseOperator>,
    grid: TimeGrid,
    ladder: Option<PropagatorLadder>,
}

/// Averages over trajectories at each record time.
#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub times: Vec<f64>,
    /// `[record][observable]`.
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean, `[record][observable]`.
    pub std_error: Vec<Vec<f64>>,
    /// Per-trajectory values, `[trajectory][record][observable]`.
    pub samples: Vec<Vec<Vec<f64>>>,
    /// Averaged density matrix per record, when requested.
    pub density: Option<Vec<DensityMatrix>>,
    pub jump_counts: Vec<usize>,
    /// Trajectories that left the shared no-jump path.
    pub branched: usize,
}

impl TrajectoryResult {
    pub fn mean_jumps(&self) -> f64 {
        self.jump_counts.iter().sum::<usize>() as f64 / self.jump_counts.len() as f64
    }
}

/// `F = √mean(|⟨ψ_id|ψ⟩|²)` with standard error `SE/(2F)`.
pub fn fidelity_estimate(overlaps_sq: &[f64]) -> Result<(f64, f64)> {
    if overlaps_sq.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let (mean, se) = mean_and_error(overlaps_sq);
    let f = mean.clamp(0.0, 1.0).sqrt();
    if f == 0.0 {
        return Ok((0.0, se.sqrt()));
    }
    Ok((f, se / (2.0 * f)))
}

fn mean_and_error(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One trajectory after it has left the shared path.
struct Walker {
    index: usize,
    psi: Vec<C64>,
    t: f64,
    threshold: f64,
    rng: ChaCha8Rng,
    jumps: usize,
    /// Smallest rung still allowed while a crossing is being bracketed.
    cap: usize,
}

struct BranchOutcome {
    /// Values for records `first..`.
    first: usize,
    values: Vec<Vec<f64>>,
    states: Vec<Vec<C64>>,
    jumps: usize,
}

struct Scratch {
    rk: Rk4,
    cand: Vec<C64>,
    start: Vec<C64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            rk: Rk4::new(d),
            cand: vec![ZERO; d],
            start: vec![ZERO; d],
        }
    }
}

impl TrajectoryEngine {
    /// Engine stepping with fixed-step RK4 on the grid of `cfg`.
    pub fn new(
        gen: &HamiltonianGenerator,
        collapse: &[CollapseOp],
        cfg: &EvolutionConfig,
    ) -> Result<Self> {
        if cfg.method != Method::Trajectories {
            return Err(Error::InvalidArgument(format!(
                "{:?} is not a trajectory method",
                cfg.method
            )));
        }
        let spec = gen.spec().clone();
        let heff = gen.sum().with_static(&decay_term(collapse, spec.dim())?)?;
        let grid = TimeGrid::build(cfg, heff.max_frequency())?;
        Ok(Self {
            spec,
            heff,
            jumps: collapse.iter().map(|c| c.scaled()).collect(),
            grid,
            ladder: None,
        })
    }

    /// Replace RK4 stepping by exact block propagators with `coarse_steps`
    /// base steps over `t_final`. Needs a static generator.
    pub fn with_exact_blocks(mut self, coarse_steps: usize) -> Result<Self> {
        if !self.heff.is_static() {
            return Err(Error::Unsupported(
                "exact block propagation needs a static generator".into(),
            ));
        }
        if coarse_steps == 0 {
            return Err(Error::InvalidArgument(
                "coarse_steps must be positive".into(),
            ));
        }
        let t_final = self.grid.time(self.grid.n_steps);
        let base = t_final / coarse_steps as f64;
        self.ladder = Some(PropagatorLadder::new(
            self.heff.static_part(),
            base,
            self.grid.dt,
        )?);
        Ok(self)
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Times at which observables are evaluated.
    pub fn record_times(&self) -> Vec<f64> {
        self.grid.record_times()
    }

    pub fn is_exact(&self) -> bool {
        self.ladder.is_some()
    }

    fn rungs(&self) -> usize {
        self.ladder.as_ref().map_or(1, |l| l.depth() + 1)
    }

    fn rung_len(&self, level: usize) -> f64 {
        match &self.ladder {
            Some(l) => l.step(level),
            None => self.grid.dt,
        }
    }

    fn apply_rung(&self, level: usize, t: f64, x: &[C64], y: &mut [C64], s: &mut Rk4) {
        match &self.ladder {
            Some(l) => l.level(level).apply(x, y),
            None => self.apply_partial(t, self.grid.dt, x, y, s),
        }
    }

    /// One RK4 step of length `h` (no longer than the finest rung).
    fn apply_partial(&self, t: f64, h: f64, x: &[C64], y: &mut [C64], s: &mut Rk4) {
        y.copy_from_slice(x);
        s.step(
            |t, v, out| self.heff.apply_scaled(t, MINUS_I, v, out),
            t,
            h,
            y,
        );
    }

    /// Largest rung at or below `remaining`, starting from `cap`.
    fn pick_rung(&self, cap: usize, remaining: f64) -> Option<usize> {
        (cap..self.rungs()).find(|&j| self.rung_len(j) <= remaining * (1.0 + 1e-12))
    }

    fn jump(&self, w: &mut Walker) -> Result<()> {
        let weights: Vec<f64> = self
            .jumps
            .iter()
            .map(|l| norm_sqr(&l.mul_vec(&w.psi)))
            .collect();
        let total: f64 = weights.iter().sum();
        let norm = norm_sqr(&w.psi).sqrt();
        if total > 0.0 {
            let u = w.rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = weights.len() - 1;
            for (k, wk) in weights.iter().enumerate() {
                acc += wk;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            let next = self.jumps[pick].mul_vec(&w.psi);
            let n = norm_sqr(&next).sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::ZeroNorm {
                    index: w.index,
                    t: w.t,
                });
            }
            w.psi = next.into_iter().map(|v| v / n).collect();
            w.jumps += 1;
        } else if norm > 0.0 {
            // No channel can fire: the decay was integration drift.
            w.psi.iter_mut().for_each(|v| *v /= norm);
        } else {
            return Err(Error::ZeroNorm {
                index: w.index,
                t: w.t,
            });
        }
        w.threshold = w.rng.random::<f64>();
        w.cap = 0;
        Ok(())
    }

    /// Advance a walker to `target`, jumping whenever its norm crosses the threshold.
    fn run_to(&self, w: &mut Walker, target: f64, tol: f64, s: &mut Scratch) -> Result<()> {
        let eps = 1e-12 * self.grid.time(self.grid.n_steps);
        while target - w.t > eps {
            let remaining = target - w.t;
            let (level, h) = match self.pick_rung(w.cap, remaining) {
                Some(j) => (Some(j), self.rung_len(j)),
                None => (None, remaining),
            };
            match level {
                Some(j) => self.apply_rung(j, w.t, &w.psi, &mut s.cand, &mut s.rk),
                None => self.apply_partial(w.t, h, &w.psi, &mut s.cand, &mut s.rk),
            }
            let n = norm_sqr(&s.cand);
            if !n.is_finite() {
                return Err(Error::Instability {
                    t: w.t,
                    reason: format!("non-finite amplitudes in trajectory {}", w.index),
                });
            }
            if n > w.threshold || self.jumps.is_empty() {
                std::mem::swap(&mut w.psi, &mut s.cand);
                w.t += h;
                continue;
            }
            if let Some(j) = level {
                if j + 1 < self.rungs() {
                    w.cap = j + 1;
                    continue;
                }
            }
            // The crossing lies within one finest step: bisect on the norm.
            s.start.copy_from_slice(&w.psi);
            let (mut lo, mut hi) = (0.0, h);
            let mut tau = h;
            for _ in 0..BISECTION_LIMIT {
                let mid = 0.5 * (lo + hi);
                self.apply_partial(w.t, mid, &s.start, &mut s.cand, &mut s.rk);
                let nm = norm_sqr(&s.cand);
                tau = mid;
                if (nm - w.threshold).abs() <= tol || hi - lo <= 1e-15 * h {
                    break;
                }
                if nm > w.threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            std::mem::swap(&mut w.psi, &mut s.cand);
            w.t += tau;
            self.jump(w)?;
        }
        w.t = target;
        Ok(())
    }

    fn run_branch(
        &self,
        mut w: Walker,
        first: usize,
        traj: &TrajectoryConfig,
        observe: &Observer<'_>,
    ) -> Result<BranchOutcome> {
        let mut s = Scratch::new(self.spec.dim());
        let times = self.grid.record_times();
        let mut values = Vec::new();
        let mut states = Vec::new();
        for &t in &times[first..] {
            self.run_to(&mut w, t, traj.jump_tol, &mut s)?;
            let psi = normalized_state(&self.spec, &w.psi, w.index, t)?;
            values.push(observe(values.len() + first, &psi));
            if traj.keep_density {
                states.push(psi.into_amplitudes());
            }
        }
        Ok(BranchOutcome {
            first,
            values,
            states,
            jumps: w.jumps,
        })
    }

    /// Run `traj.n_traj` trajectories from `psi0`.
    pub fn run(
        &self,
        psi0: &StateVector,
        traj: &TrajectoryConfig,
        observe: &Observer<'_>,
    ) -> Result<TrajectoryResult> {
        traj.validate()?;
        if psi0.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        psi0.check_normalized(NORM_TOL)?;
        let d = self.spec.dim();
        if traj.keep_density && d > MASTER_DIM_GUARD {
            return Err(Error::DimensionGuard {
                dim: d,
                guard: MASTER_DIM_GUARD,
            });
        }
        let n = traj.n_traj;
        let times = self.grid.record_times();
        let n_rec = times.len();

        // Thresholds in descending order: the largest crosses first.
        let mut rngs: Vec<Option<ChaCha8Rng>> = Vec::with_capacity(n);
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = rng_for(traj.seed, i);
            order.push((rng.random::<f64>(), i));
            rngs.push(Some(rng));
        }
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut cursor = 0;

        let mut shared_values: Vec<Vec<f64>> = Vec::with_capacity(n_rec);
        let mut shared_states: Vec<Vec<C64>> = Vec::new();
        let mut outcomes: Vec<Option<BranchOutcome>> = (0..n).map(|_| None).collect();
        let mut pending: Vec<(Walker, usize)> = Vec::new();
        let mut s = Scratch::new(d);
        let mut psi = psi0.amplitudes().to_vec();
        let mut t = 0.0;
        let eps = 1e-12 * self.grid.time(self.grid.n_steps);

        let flush = |pending: &mut Vec<(Walker, usize)>,
                     outcomes: &mut Vec<Option<BranchOutcome>>|
         -> Result<()> {
            let batch: Vec<(Walker, usize)> = std::mem::take(pending);
            let done: Vec<Result<(usize, BranchOutcome)>> = batch
                .into_par_iter()
                .map(|(w, first)| {
                    let i = w.index;
                    self.run_branch(w, first, traj, observe).map(|o| (i, o))
                })
                .collect();
            for r in done {
                let (i, o) = r?;
                outcomes[i] = Some(o);
            }
            Ok(())
        };

        for (k, &target) in times.iter().enumerate() {
            while target - t > eps {
                let remaining = target - t;
                let (level, h) = match self.pick_rung(0, remaining) {
                    Some(j) => (Some(j), self.rung_len(j)),
                    None => (None, remaining),
                };
                match level {
                    Some(j) => self.apply_rung(j, t, &psi, &mut s.cand, &mut s.rk),
                    None => self.apply_partial(t, h, &psi, &mut s.cand, &mut s.rk),
                }
                let norm = norm_sqr(&s.cand);
                if !norm.is_finite() {
                    return Err(Error::Instability {
                        t,
                        reason: "non-finite amplitudes on the shared path".into(),
                    });
                }
                if !self.jumps.is_empty() {
                    while cursor < n && order[cursor].0 >= norm {
                        let (r, i) = order[cursor];
                        cursor += 1;
                        pending.push((
                            Walker {
                                index: i,
                                psi: psi.clone(),
                                t,
                                threshold: r,
                                rng: rngs[i].take().expect("stream used once"),
                                jumps: 0,
                                cap: 0,
                            },
                            k,
                        ));
                    }
                    if pending.len() >= BATCH {
                        flush(&mut pending, &mut outcomes)?;
                    }
                }
                std::mem::swap(&mut psi, &mut s.cand);
                t += h;
            }
            t = target;
            let state = normalized_state(&self.spec, &psi, usize::MAX, t)?;
            shared_values.push(observe(k, &state));
            if traj.keep_density {
                shared_states.push(state.into_amplitudes());
            }
        }
        flush(&mut pending, &mut outcomes)?;

        // Assemble in trajectory order.
        let mut samples = Vec::with_capacity(n);
        let mut jump_counts = Vec::with_capacity(n);
        let mut branched = 0;
        let mut density: Option<Vec<Vec<C64>>> =
            traj.keep_density.then(|| vec![vec![ZERO; d * d]; n_rec]);
        let mut shared_weight = vec![0usize; n_rec];
        for (i, o) in outcomes.iter().enumerate() {
            let mut per_record = Vec::with_capacity(n_rec);
            match o {
                None => {
                    per_record.extend(shared_values.iter().cloned());
                    shared_weight.iter_mut().for_each(|w| *w += 1);
                    jump_counts.push(0);
                }
                Some(b) => {
                    branched += 1;
                    per_record.extend(shared_values[..b.first].iter().cloned());
                    per_record.extend(b.values.iter().cloned());
                    shared_weight[..b.first].iter_mut().for_each(|w| *w += 1);
                    if let Some(rho) = density.as_mut() {
                        for (k, st) in b.states.iter().enumerate() {
                            add_projector(&mut rho[b.first + k], st, 1.0);
                        }
                    }
                    jump_counts.push(b.jumps);
                }
            }
            debug_assert_eq!(per_record.len(), n_rec, "trajectory {i}");
            samples.push(per_record);
        }
        let n_obs = shared_values.first().map_or(0, |v| v.len());
        let mut mean = vec![vec![0.0; n_obs]; n_rec];
        let mut std_error = vec![vec![0.0; n_obs]; n_rec];
        let mut column = vec![0.0; n];
        for k in 0..n_rec {
            for o in 0..n_obs {
                for (i, s) in samples.iter().enumerate() {
                    column[i] = *s[k].get(o).ok_or_else(|| {
                        Error::InvalidArgument(
                            "observer returned a varying number of values".into(),
                        )
                    })?;
                }
                let (m, se) = mean_and_error(&column);
                mean[k][o] = m;
                std_error[k][o] = se;
            }
        }
        let density = match density {
            Some(mut rho) => {
                let mut out = Vec::with_capacity(n_rec);
                for (k, r) in rho.iter_mut().enumerate() {
                    add_projector(r, &shared_states[k], shared_weight[k] as f64);
                    let inv = 1.0 / n as f64;
                    r.iter_mut().for_each(|v| *v *= inv);
                    out.push(DensityMatrix::new(self.spec.clone(), std::mem::take(r))?);
                }
                Some(out)
            }
            None => None,
        };
        Ok(TrajectoryResult {
            times,
            mean,
            std_error,
            samples,
            density,
            jump_counts,
            branched,
        })
    }
}

fn normalized_state(spec: &HilbertSpec, psi: &[C64], index: usize, t: f64) -> Result<StateVector> {
    let n = norm_sqr(psi).sqrt();
    if !(n > 0.0) {
        return Err(Error::ZeroNorm { index, t });
    }
    StateVector::new(spec.clone(), psi.iter().map(|v| v / n).collect())
}

fn add_projector(rho: &mut [C64], psi: &[C64], weight: f64) {
    if weight == 0.0 {
        return;
    }
    let d = psi.len();
    for i in 0..d {
        let a = psi[i] * weight;
        if a == ZERO {
            continue;
        }
        let row = &mut rho[i * d..(i + 1) * d];
        for (r, b) in row.iter_mut().zip(psi) {
            *r += a * b.conj();
        }
    }
}

/// Trajectory evolution with RK4 stepping.
pub fn evolve_trajectories(
    gen: &HamiltonianGenerator,
    collapse: &[CollapseOp],
    psi0: &StateVector,
    cfg: &EvolutionConfig,
    traj: &TrajectoryConfig,
    observe: &Observer<'_>,
) -> Result<TrajectoryResult> {
    TrajectoryEngine::new(gen, collapse, cfg)?.run(psi0, traj, observe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::config::StepRule;

    #[test]
    fn estimator_limits() {
        let (f, se) = fidelity_estimate(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((f, se), (1.0, 0.0));
        let (f, se) = fidelity_estimate(&[0.81, 0.49]).unwrap();
        assert!((f - 0.65f64.sqrt()).abs() < 1e-15);
        assert!((se - 0.16 / (2.0 * 0.65f64.sqrt())).abs() < 1e-12);
        assert!(fidelity_estimate(&[]).is_err());
    }

    #[test]
    fn streams_are_distinct_and_repeatable() {
        let a: f64 = rng_for(7, 0).random();
        let b: f64 = rng_for(7, 1).random();
        let c: f64 = rng_for(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn wrong_method_rejected() {
        let spec = HilbertSpec::uniform(1, 1).unwrap();
        let cfg = EvolutionConfig::new(Method::Rk4Master, StepRule::Resolution(20.0), 1.0);
        assert!(TrajectoryEngine::new(&HamiltonianGenerator::zero(&spec), &[], &cfg).is_err());
    }
}
