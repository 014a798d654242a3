use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Default number of integration steps per period of the fastest frequency.
pub const DEFAULT_RESOLUTION: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4Schrodinger,
    Rk4Master,
    Trajectories,
    /// Dense spectral propagation of a static Hamiltonian.
    ExactStatic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// Fixed step (s); shortened so that it divides `t_final`.
    Fixed(f64),
    /// Steps per period of the fastest frequency in the generator.
    Resolution(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub method: Method,
    pub step: StepRule,
    pub t_final: f64,
    /// Snapped to the nearest grid point.
    pub record_times: Vec<f64>,
}

impl EvolutionConfig {
    pub fn new(method: Method, step: StepRule, t_final: f64) -> Self {
        Self {
            method,
            step,
            t_final,
            record_times: vec![t_final],
        }
    }

    pub fn with_records(mut self, times: Vec<f64>) -> Self {
        self.record_times = times;
        self
    }
}

/// Uniform grid with the record points mapped onto step indices.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
    /// Grid index of each record (0 = initial state).
    pub record_steps: Vec<usize>,
}

impl TimeGrid {
    /// Build the grid for a generator whose fastest frequency is `max_freq` (rad/s).
    pub fn build(cfg: &EvolutionConfig, max_freq: f64) -> Result<Self> {
        if !(cfg.t_final > 0.0) || !cfg.t_final.is_finite() {
            return Err(Error::InvalidArgument("t_final must be positive".into()));
        }
        let (dt_max, resolution) = match cfg.step {
            StepRule::Fixed(dt) => {
                if !(dt > 0.0) {
                    return Err(Error::InvalidArgument("step must be positive".into()));
                }
                (dt, DEFAULT_RESOLUTION)
            }
            StepRule::Resolution(r) => {
                if !(r > 0.0) {
                    return Err(Error::InvalidArgument("resolution must be positive".into()));
                }
                let dt = if max_freq > 0.0 {
                    TAU / (r * max_freq)
                } else {
                    cfg.t_final
                };
                (dt, r)
            }
        };
        if max_freq > 0.0 {
            let limit = TAU / (resolution * max_freq);
            if dt_max > limit * (1.0 + 1e-12) {
                return Err(Error::StepTooLarge {
                    step: dt_max,
                    limit,
                });
            }
        }
        let n_steps = ((cfg.t_final / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = cfg.t_final / n_steps as f64;
        let mut record_steps = Vec::with_capacity(cfg.record_times.len());
        for &t in &cfg.record_times {
            if !(0.0..=cfg.t_final * (1.0 + 1e-12)).contains(&t) {
                return Err(Error::InvalidArgument(format!(
                    "record time {t:e} outside [0, t_final]"
                )));
            }
            record_steps.push(((t / dt).round() as usize).min(n_steps));
        }
        if record_steps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("record times must be sorted".into()));
        }
        Ok(Self {
            dt,
            n_steps,
            record_steps,
        })
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn record_times(&self) -> Vec<f64> {
        self.record_steps.iter().map(|&s| self.time(s)).collect()
    }
}

/// Monte-Carlo settings for quantum trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    pub seed: u64,
    /// Absolute tolerance on the squared norm when bisecting a jump time.
    pub jump_tol: f64,
    /// Accumulate the averaged density matrix when the dimension allows.
    pub keep_density: bool,
}

impl TrajectoryConfig {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            seed,
            jump_tol: 1e-9,
            keep_density: false,
        }
    }

    pub fn with_density(mut self) -> Self {
        self.keep_density = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::InvalidArgument("n_traj must be at least 1".into()));
        }
        if !(self.jump_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "jump tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}
