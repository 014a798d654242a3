use serde::Serialize;

use super::point::{run_point, PointResult, SolverConfig};
use crate::device::{us, DeviceParams};
use crate::error::{Error, Result};

/// Largest fidelity change accepted between neighbouring numerical settings.
pub const CONVERGENCE_TOL: f64 = 5e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub cutoff: usize,
    pub steps_per_period: f64,
    pub result: PointResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub delta: f64,
    pub c: f64,
    pub kappa_inv_us: f64,
    /// Cutoff ladder at the base resolution.
    pub cutoffs: Vec<ConvergencePoint>,
    /// Resolution ladder at the base cutoff.
    pub resolutions: Vec<ConvergencePoint>,
}

fn steps(points: &[ConvergencePoint]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[1].result.fidelity - w[0].result.fidelity).abs())
        .collect()
}

impl ConvergenceReport {
    /// `|ΔF|` between consecutive cutoffs.
    pub fn cutoff_steps(&self) -> Vec<f64> {
        steps(&self.cutoffs)
    }

    pub fn resolution_steps(&self) -> Vec<f64> {
        steps(&self.resolutions)
    }

    /// Change between the two largest cutoffs.
    pub fn cutoff_change(&self) -> Option<f64> {
        self.cutoff_steps().last().copied()
    }

    pub fn resolution_change(&self) -> Option<f64> {
        self.resolution_steps().last().copied()
    }

    /// Smallest cutoff whose refinement to the next one changes `F` by less than `tol`.
    pub fn converged_cutoff(&self, tol: f64) -> Option<usize> {
        let steps = self.cutoff_steps();
        steps
            .iter()
            .position(|d| *d < tol)
            .map(|i| self.cutoffs[i].cutoff)
    }

    pub fn converged_resolution(&self, tol: f64) -> Option<f64> {
        let steps = self.resolution_steps();
        steps
            .iter()
            .position(|d| *d < tol)
            .map(|i| self.resolutions[i].steps_per_period)
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.cutoff_change().is_none_or(|d| d < tol)
            && self.resolution_change().is_none_or(|d| d < tol)
    }
}

/// Fidelity at one operating point over a ladder of cutoffs and of time resolutions.
///
/// Cutoffs run at `base.steps_per_period`; resolutions at `base.cutoff`.
pub fn run_convergence(
    params: &DeviceParams,
    delta: f64,
    c: f64,
    kappa_inv_us: f64,
    cutoffs: &[usize],
    resolutions: &[f64],
    base: &SolverConfig,
) -> Result<ConvergenceReport> {
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) || resolutions.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "convergence ladders must be strictly increasing".into(),
        ));
    }
    base.validate()?;
    let mut report = ConvergenceReport {
        delta,
        c,
        kappa_inv_us,
        cutoffs: Vec::new(),
        resolutions: Vec::new(),
    };
    for &n in cutoffs {
        let cfg = SolverConfig {
            cutoff: n,
            ..base.clone()
        };
        let result = run_point(params, delta, c, us(kappa_inv_us), &cfg)?;
        report.cutoffs.push(ConvergencePoint {
            cutoff: n,
            steps_per_period: cfg.steps_per_period,
            result,
        });
    }
    for &r in resolutions {
        let cfg = SolverConfig {
            steps_per_period: r,
            ..base.clone()
        };
        let result = run_point(params, delta, c, us(kappa_inv_us), &cfg)?;
        report.resolutions.push(ConvergencePoint {
            cutoff: cfg.cutoff,
            steps_per_period: r,
            result,
        });
    }
    Ok(report)
}
