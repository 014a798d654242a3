use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::point::{PointResult, PointSolver, Solver, SolverConfig};
use crate::config::DeviceFile;
use crate::device::{us, DeviceParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Delta,
    C,
    KappaInv,
    Cutoff,
    Step,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVariable::Delta => "delta",
            SweepVariable::C => "c",
            SweepVariable::KappaInv => "kappa_inv",
            SweepVariable::Cutoff => "cutoff",
            SweepVariable::Step => "step",
        })
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(SweepVariable::Delta),
            "c" => Ok(SweepVariable::C),
            "kappa_inv" => Ok(SweepVariable::KappaInv),
            "cutoff" => Ok(SweepVariable::Cutoff),
            "step" => Ok(SweepVariable::Step),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep variable '{other}'"
            ))),
        }
    }
}

pub const DEFAULT_DELTA_GRID: [f64; 5] = [-0.10, -0.05, 0.0, 0.05, 0.10];
pub const DEFAULT_C_GRID: [f64; 5] = [-0.05, -0.025, 0.0, 0.025, 0.05];
/// Cavity lifetimes in μs.
pub const DEFAULT_KAPPA_INV_US: [f64; 3] = [45.0, 60.0, 100.0];

/// Allowance below a quoted interval minimum.
pub const MINIMUM_TOLERANCE: f64 = 0.015;

/// Swept interval over which a minimum fidelity is quoted.
pub fn reference_interval(variable: SweepVariable) -> Option<(f64, f64)> {
    match variable {
        SweepVariable::Delta => Some((-0.1, 0.1)),
        SweepVariable::C => Some((-0.05, 0.05)),
        _ => None,
    }
}

/// Quoted minimum fidelity over [`reference_interval`] at one cavity lifetime (μs).
pub fn reference_minimum(variable: SweepVariable, kappa_inv_us: f64) -> Option<f64> {
    let table: &[(f64, f64)] = match variable {
        SweepVariable::Delta => &[(45.0, 0.9156), (60.0, 0.9238), (100.0, 0.9337)],
        SweepVariable::C => &[(45.0, 0.9167), (60.0, 0.9249), (100.0, 0.9348)],
        _ => return None,
    };
    table
        .iter()
        .find(|(k, _)| *k == kappa_inv_us)
        .map(|(_, f)| *f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub kappa_inv_us: f64,
    /// Grid value where the minimum occurs.
    pub at: f64,
    pub minimum: f64,
    pub stderr: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.minimum >= self.bound - MINIMUM_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Values of the swept variable; lifetimes in μs, steps in steps per period.
    pub grid: Vec<f64>,
    /// Cavity lifetimes (μs) crossed with the grid; ignored when sweeping `kappa_inv`.
    pub kappa_inv_us: Vec<f64>,
    pub solver: SolverConfig,
    /// Values held fixed when not swept.
    pub delta: f64,
    pub c: f64,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Vec<f64>, solver: SolverConfig) -> Self {
        Self {
            variable,
            grid,
            kappa_inv_us: DEFAULT_KAPPA_INV_US.to_vec(),
            solver,
            delta: 0.0,
            c: 0.0,
        }
    }

    pub fn delta_default(solver: SolverConfig) -> Self {
        Self::new(SweepVariable::Delta, DEFAULT_DELTA_GRID.to_vec(), solver)
    }

    pub fn c_default(solver: SolverConfig) -> Self {
        Self::new(SweepVariable::C, DEFAULT_C_GRID.to_vec(), solver)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidArgument("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        if self.variable != SweepVariable::KappaInv && self.kappa_inv_us.is_empty() {
            return Err(Error::InvalidArgument("no cavity lifetimes given".into()));
        }
        let bad = |lo: f64, hi: f64, closed: bool| {
            self.grid.iter().any(|v| {
                if closed {
                    *v < lo || *v > hi
                } else {
                    *v <= lo || *v >= hi
                }
            })
        };
        match self.variable {
            SweepVariable::Delta if bad(-1.0, 1.0, true) => {
                return Err(Error::InvalidArgument(
                    "delta grid must lie in [-1, 1]".into(),
                ))
            }
            SweepVariable::C if bad(-1.0, 1.0, false) => {
                return Err(Error::InvalidArgument("c grid must lie in (-1, 1)".into()))
            }
            SweepVariable::KappaInv | SweepVariable::Step
                if self.grid.iter().any(|v| !(*v > 0.0)) =>
            {
                return Err(Error::InvalidArgument(
                    "grid values must be positive".into(),
                ))
            }
            SweepVariable::Cutoff if self.grid.iter().any(|v| !(*v >= 1.0) || v.fract() != 0.0) => {
                return Err(Error::InvalidArgument(
                    "cutoffs must be positive integers".into(),
                ))
            }
            _ => {}
        }
        self.solver.validate()
    }

    /// Lifetimes crossed with the grid, in μs.
    fn lifetimes(&self) -> Vec<Option<f64>> {
        if self.variable == SweepVariable::KappaInv {
            vec![None]
        } else {
            self.kappa_inv_us.iter().map(|&k| Some(k)).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub kappa_inv_us: f64,
    pub fidelity: f64,
    pub stderr: f64,
    pub solver: Solver,
    pub cutoff: usize,
    pub steps_per_period: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub wall_s: f64,
    #[serde(skip)]
    pub detail: PointResult,
}

/// Resolved settings of one grid point.
struct PointPlan {
    value: f64,
    kappa_inv_us: f64,
    delta: f64,
    c: f64,
    cfg: SolverConfig,
}

impl PointPlan {
    fn same_solver(&self, other: &PointPlan) -> bool {
        self.c == other.c && self.kappa_inv_us == other.kappa_inv_us && self.cfg == other.cfg
    }
}

fn plan(spec: &SweepSpec) -> Vec<PointPlan> {
    let mut out = Vec::new();
    for kappa in spec.lifetimes() {
        for &value in &spec.grid {
            let mut p = PointPlan {
                value,
                kappa_inv_us: kappa.unwrap_or(value),
                delta: spec.delta,
                c: spec.c,
                cfg: spec.solver.clone(),
            };
            match spec.variable {
                SweepVariable::Delta => p.delta = value,
                SweepVariable::C => p.c = value,
                SweepVariable::KappaInv => {}
                SweepVariable::Cutoff => p.cfg.cutoff = value as usize,
                SweepVariable::Step => p.cfg.steps_per_period = value,
            }
            out.push(p);
        }
    }
    out
}

/// Evaluate every grid point; `progress` sees each row as it completes.
pub fn run_sweep(
    params: &DeviceParams,
    spec: &SweepSpec,
    progress: &mut dyn FnMut(&SweepRow),
) -> Result<SweepResult> {
    spec.validate()?;
    let plans = plan(spec);
    let mut rows = Vec::with_capacity(plans.len());
    let mut solver: Option<(usize, PointSolver)> = None;
    for (i, p) in plans.iter().enumerate() {
        let reuse = matches!(&solver, Some((j, _)) if plans[*j].same_solver(p));
        if !reuse {
            drop(solver.take());
            solver = Some((
                i,
                PointSolver::new(params, p.c, us(p.kappa_inv_us), &p.cfg)?,
            ));
        }
        let (_, s) = solver.as_ref().expect("solver built above");
        let mut r = s.run(p.delta)?;
        if !reuse {
            r.wall_s += s.setup_seconds();
        }
        let row = SweepRow {
            variable: spec.variable,
            value: p.value,
            kappa_inv_us: p.kappa_inv_us,
            fidelity: r.fidelity,
            stderr: r.stderr,
            solver: p.cfg.solver,
            cutoff: p.cfg.cutoff,
            steps_per_period: p.cfg.steps_per_period,
            n_traj: if p.cfg.solver == Solver::Trajectories {
                p.cfg.n_traj
            } else {
                0
            },
            seed: p.cfg.seed,
            wall_s: r.wall_s,
            detail: r,
        };
        progress(&row);
        rows.push(row);
    }
    rows.sort_by(|a, b| {
        a.kappa_inv_us
            .total_cmp(&b.kappa_inv_us)
            .then(a.value.total_cmp(&b.value))
    });
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
    })
}

pub fn run_delta_sweep(params: &DeviceParams, spec: &SweepSpec) -> Result<SweepResult> {
    if spec.variable != SweepVariable::Delta {
        return Err(Error::InvalidArgument(
            "a delta sweep needs variable = delta".into(),
        ));
    }
    run_sweep(params, spec, &mut |_| {})
}

pub fn run_c_sweep(params: &DeviceParams, spec: &SweepSpec) -> Result<SweepResult> {
    if spec.variable != SweepVariable::C {
        return Err(Error::InvalidArgument(
            "a c sweep needs variable = c".into(),
        ));
    }
    run_sweep(params, spec, &mut |_| {})
}

/// Outcome of one ordering comparison between two rows.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderCheck {
    pub kappa_inv_us: f64,
    /// The two compared grid values, in the order the property expects `F` to fall.
    pub from: f64,
    pub to: f64,
    /// `F(to) − F(from)`; the property wants this at most zero.
    pub rise: f64,
    /// `3·√(SE₁² + SE₂²)`.
    pub allowance: f64,
}

impl OrderCheck {
    pub fn holds(&self) -> bool {
        self.rise <= self.allowance
    }
}

fn allowance(a: &SweepRow, b: &SweepRow) -> f64 {
    3.0 * (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn lifetimes(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.rows.iter().map(|r| r.kappa_inv_us).collect();
        k.dedup();
        k
    }

    pub fn rows_at(&self, kappa_inv_us: f64) -> impl Iterator<Item = &SweepRow> {
        self.rows
            .iter()
            .filter(move |r| r.kappa_inv_us == kappa_inv_us)
    }

    pub fn row(&self, value: f64, kappa_inv_us: f64) -> Option<&SweepRow> {
        self.rows_at(kappa_inv_us).find(|r| r.value == value)
    }

    /// Lowest fidelity over `[lo, hi]` at one lifetime.
    pub fn interval_minimum(&self, kappa_inv_us: f64, lo: f64, hi: f64) -> Option<&SweepRow> {
        self.rows_at(kappa_inv_us)
            .filter(|r| r.value >= lo && r.value <= hi)
            .min_by(|a, b| a.fidelity.total_cmp(&b.fidelity))
    }

    /// Interval minimum against the quoted value, for every lifetime that has one.
    pub fn bound_checks(&self) -> Vec<BoundCheck> {
        let Some((lo, hi)) = reference_interval(self.spec.variable) else {
            return Vec::new();
        };
        self.lifetimes()
            .into_iter()
            .filter_map(|k| {
                let bound = reference_minimum(self.spec.variable, k)?;
                let row = self.interval_minimum(k, lo, hi)?;
                Some(BoundCheck {
                    kappa_inv_us: k,
                    at: row.value,
                    minimum: row.fidelity,
                    stderr: row.stderr,
                    bound,
                })
            })
            .collect()
    }

    /// `F` should not increase as `|x|` grows away from zero on either side.
    pub fn magnitude_ordering(&self) -> Vec<OrderCheck> {
        let mut out = Vec::new();
        for k in self.lifetimes() {
            let rows: Vec<&SweepRow> = self.rows_at(k).collect();
            for side in [1.0, -1.0] {
                let mut half: Vec<&&SweepRow> =
                    rows.iter().filter(|r| r.value * side >= 0.0).collect();
                half.sort_by(|a, b| a.value.abs().total_cmp(&b.value.abs()));
                for w in half.windows(2) {
                    if w[0].value == w[1].value {
                        continue;
                    }
                    out.push(OrderCheck {
                        kappa_inv_us: k,
                        from: w[0].value,
                        to: w[1].value,
                        rise: w[1].fidelity - w[0].fidelity,
                        allowance: allowance(w[0], w[1]),
                    });
                }
            }
        }
        out
    }

    /// `F` should not fall as the cavity lifetime grows. `from`/`to` hold lifetimes here.
    pub fn lifetime_ordering(&self) -> Vec<OrderCheck> {
        let ks = self.lifetimes();
        let mut out = Vec::new();
        for &v in &self.spec.grid {
            for w in ks.windows(2) {
                let (Some(lo), Some(hi)) = (self.row(v, w[0]), self.row(v, w[1])) else {
                    continue;
                };
                out.push(OrderCheck {
                    kappa_inv_us: v,
                    from: w[1],
                    to: w[0],
                    rise: lo.fidelity - hi.fidelity,
                    allowance: allowance(lo, hi),
                });
            }
        }
        out
    }

    /// `(|x|, F(x) − F(−x))` for every mirrored pair at one lifetime.
    pub fn asymmetry(&self, kappa_inv_us: f64) -> Vec<(f64, f64)> {
        self.rows_at(kappa_inv_us)
            .filter(|r| r.value > 0.0)
            .filter_map(|r| {
                self.row(-r.value, kappa_inv_us)
                    .map(|m| (r.value, r.fidelity - m.fidelity))
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<String> {
        let text = self.to_csv()?;
        std::fs::write(path, &text)?;
        Ok(text)
    }

    /// Provenance record next to a CSV file.
    pub fn manifest(
        &self,
        device: &DeviceFile,
        csv_text: &str,
        started_unix: u64,
        finished_unix: u64,
    ) -> Manifest {
        let spec_toml = toml::to_string(&self.spec).expect("sweep spec serializes");
        let config_hash = sha256_hex(format!("{}\n{}", device.to_toml(), spec_toml).as_bytes());
        Manifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            csv_sha256: sha256_hex(csv_text.as_bytes()),
            started_unix,
            finished_unix,
            rows: self.rows.len(),
            device: device.clone(),
            sweep: self.spec.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub config_hash: String,
    pub csv_sha256: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub rows: usize,
    pub device: DeviceFile,
    pub sweep: SweepSpec,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        Ok(())
    }
}

/// Residual rotation `π/2 · (λ_j/λ₁ − 1)` of every cavity after the gate at mismatch `c`.
pub fn residual_rotation_angles(params: &DeviceParams, c: f64) -> Result<Vec<f64>> {
    let p = params.with_mismatch(c)?;
    let l1 = p.lambda(0);
    Ok((0..p.n())
        .map(|j| std::f64::consts::FRAC_PI_2 * (p.lambda(j) / l1 - 1.0))
        .collect())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
