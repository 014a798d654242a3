use num_complex::Complex64 as C64;

use super::config::{EvolutionConfig, Method, TimeGrid};
use super::rk4::Rk4;
use super::sectors::{SectorPlan, SectorRun};
use crate::device::{decay_term, CollapseOp, HamiltonianGenerator, OperatorSum};
use crate::error::{Error, Result};
use crate::fock::{caxpy_hadamard, DensityMatrix, SparseOperator};

/// Largest dimension accepted for dense density-matrix evolution.
pub const MASTER_DIM_GUARD: usize = 4096;
/// Above this dimension positivity is probed by Cholesky instead of an eigensolve.
pub const EIGEN_DIM_LIMIT: usize = 512;
/// Slack allowed on the smallest eigenvalue.
pub const POSITIVITY_TOL: f64 = 1e-6;

const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

/// How a jump operator is applied in `L ρ L†`.
enum JumpKernel {
    Diagonal(Vec<C64>),
    /// Entries `(i, i + shift)` only; `w[i]` is the value in row `i`, zero where the row is empty.
    Shift {
        shift: usize,
        w: Vec<C64>,
        cw: Vec<C64>,
        rows: Vec<usize>,
    },
    /// At most one entry per row: `(row, col, value)`.
    Monomial(Vec<(usize, usize, C64)>),
    General(SparseOperator),
}

impl JumpKernel {
    fn new(l: SparseOperator) -> Self {
        if l.is_diagonal() {
            return JumpKernel::Diagonal(l.diagonal());
        }
        let mono = (0..l.nrows()).all(|r| l.row(r).0.len() <= 1);
        if !mono {
            return JumpKernel::General(l);
        }
        let entries: Vec<(usize, usize, C64)> = l.iter().collect();
        let shift = entries
            .first()
            .map(|e| e.1 as isize - e.0 as isize)
            .unwrap_or(0);
        if shift > 0 && entries.iter().all(|e| e.1 as isize - e.0 as isize == shift) {
            let mut w = vec![C64::new(0.0, 0.0); l.nrows()];
            for &(i, _, v) in &entries {
                w[i] = v;
            }
            let rows = entries.iter().map(|e| e.0).collect();
            let cw = w.iter().map(|v| v.conj()).collect();
            return JumpKernel::Shift {
                shift: shift as usize,
                w,
                cw,
                rows,
            };
        }
        JumpKernel::Monomial(entries)
    }

    /// `out += L ρ L†`.
    fn accumulate(
        &self,
        rho: &[C64],
        d: usize,
        out: &mut [C64],
        scratch: &mut [C64],
        scratch2: &mut [C64],
    ) {
        match self {
            JumpKernel::Diagonal(l) => {
                let cl: Vec<C64> = l.iter().map(|v| v.conj()).collect();
                for i in 0..d {
                    let li = l[i];
                    if li.norm_sqr() == 0.0 {
                        continue;
                    }
                    caxpy_hadamard(
                        li,
                        &cl,
                        &rho[i * d..(i + 1) * d],
                        &mut out[i * d..(i + 1) * d],
                    );
                }
            }
            JumpKernel::Shift { shift, w, cw, rows } => {
                let (s, n) = (*shift, d - *shift);
                for &i in rows {
                    let src = &rho[(i + s) * d + s..(i + s + 1) * d];
                    caxpy_hadamard(w[i], &cw[..n], src, &mut out[i * d..i * d + n]);
                }
            }
            JumpKernel::Monomial(entries) => {
                for &(i, ki, vi) in entries {
                    let src = &rho[ki * d..(ki + 1) * d];
                    let o = &mut out[i * d..(i + 1) * d];
                    for &(j, kj, vj) in entries {
                        o[j] += vi * vj.conj() * src[kj];
                    }
                }
            }
            JumpKernel::General(l) => {
                // L (L ρ)† = L ρ L† for Hermitian ρ
                l.mul_dense(rho, d, scratch);
                adjoint_into(scratch, d, scratch2);
                l.mul_dense(scratch2, d, scratch);
                for (o, s) in out.iter_mut().zip(scratch.iter()) {
                    *o += s;
                }
            }
        }
    }
}

fn adjoint_into(a: &[C64], d: usize, out: &mut [C64]) {
    const B: usize = 32;
    for ib in (0..d).step_by(B) {
        for jb in (0..d).step_by(B) {
            for i in ib..(ib + B).min(d) {
                for j in jb..(jb + B).min(d) {
                    out[j * d + i] = a[i * d + j].conj();
                }
            }
        }
    }
}

/// Lindblad right-hand side with precomputed no-jump generator.
struct Lindbladian<'a> {
    heff: OperatorSum,
    jumps: Vec<JumpKernel>,
    d: usize,
    _gen: &'a HamiltonianGenerator,
}

/// `x ← x + x†` in place, visiting mirrored tiles together.
fn add_adjoint_in_place(x: &mut [C64], d: usize) {
    const B: usize = 16;
    for ib in (0..d).step_by(B) {
        for jb in (ib..d).step_by(B) {
            for i in ib..(ib + B).min(d) {
                for j in jb.max(i)..(jb + B).min(d) {
                    let v = x[i * d + j] + x[j * d + i].conj();
                    x[i * d + j] = v;
                    x[j * d + i] = v.conj();
                }
            }
        }
    }
}

/// `ρ ← (ρ + ρ†)/2` in place; returns the trace.
fn symmetrize_in_place(x: &mut [C64], d: usize) -> C64 {
    const B: usize = 16;
    let mut tr = C64::new(0.0, 0.0);
    for ib in (0..d).step_by(B) {
        for jb in (ib..d).step_by(B) {
            for i in ib..(ib + B).min(d) {
                for j in jb.max(i)..(jb + B).min(d) {
                    if i == j {
                        x[i * d + i].im = 0.0;
                        tr += x[i * d + i];
                        continue;
                    }
                    let v = 0.5 * (x[i * d + j] + x[j * d + i].conj());
                    x[i * d + j] = v;
                    x[j * d + i] = v.conj();
                }
            }
        }
    }
    tr
}

impl Lindbladian<'_> {
    fn rhs(&self, t: f64, rho: &[C64], out: &mut [C64], s1: &mut [C64], s2: &mut [C64]) {
        let d = self.d;
        // X = −i H_eff ρ; dρ/dt = X + X† + Σ L ρ L†
        self.heff.mul_dense_scaled(t, MINUS_I, rho, d, out);
        add_adjoint_in_place(out, d);
        for k in &self.jumps {
            k.accumulate(rho, d, out, s1, s2);
        }
    }
}

#[derive(Clone, Debug)]
pub struct MasterResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest `|tr ρ − 1|` over all steps.
    pub max_trace_drift: f64,
    /// Smallest eigenvalue per record (eigensolve only when the dimension allows).
    pub min_eigenvalues: Vec<Option<f64>>,
    /// Positivity verdict per record.
    pub positive: Vec<bool>,
}

impl MasterResult {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("at least one record")
    }
}

fn positivity(rho: &DensityMatrix) -> (Option<f64>, bool) {
    if rho.dim() <= EIGEN_DIM_LIMIT {
        let m = rho.min_eigenvalue();
        (Some(m), m >= -POSITIVITY_TOL)
    } else {
        (None, rho.cholesky_probe(POSITIVITY_TOL))
    }
}

/// Integrate the Lindblad master equation with dense `ρ`.
pub fn evolve_master(
    gen: &HamiltonianGenerator,
    collapse: &[CollapseOp],
    rho0: &DensityMatrix,
    cfg: &EvolutionConfig,
) -> Result<MasterResult> {
    if cfg.method != Method::Rk4Master {
        return Err(Error::InvalidArgument(format!(
            "{:?} is not a master-equation method",
            cfg.method
        )));
    }
    if rho0.spec() != gen.spec() {
        return Err(Error::SpecMismatch);
    }
    let d = rho0.dim();
    if d > MASTER_DIM_GUARD {
        return Err(Error::DimensionGuard {
            dim: d,
            guard: MASTER_DIM_GUARD,
        });
    }
    let heff = gen.sum().with_static(&decay_term(collapse, d)?)?;
    let grid = TimeGrid::build(cfg, heff.max_frequency())?;
    let jumps: Vec<SparseOperator> = collapse.iter().map(|c| c.scaled()).collect();
    match SectorPlan::new(gen.spec(), &heff, &jumps) {
        Some(plan) => evolve_sectors(&plan, rho0, &grid),
        None => evolve_dense(gen, heff, jumps, rho0, &grid),
    }
}

fn finish(
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    records: Vec<Vec<C64>>,
    max_trace_drift: f64,
) -> MasterResult {
    let mut out = MasterResult {
        times: grid.record_times(),
        states: Vec::with_capacity(records.len()),
        max_trace_drift,
        min_eigenvalues: Vec::new(),
        positive: Vec::new(),
    };
    for data in records {
        let mut rho = rho0.clone();
        rho.data_mut().copy_from_slice(&data);
        let (m, ok) = positivity(&rho);
        out.min_eigenvalues.push(m);
        out.positive.push(ok);
        out.states.push(rho);
    }
    out
}

fn evolve_sectors(
    plan: &SectorPlan,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<MasterResult> {
    let d = rho0.dim();
    let mut records = vec![vec![C64::new(0.0, 0.0); d * d]; grid.record_steps.len()];
    let mut drift = 0.0f64;
    for k in 0..=plan.max_charge() {
        let mut run = SectorRun::new(plan, k, rho0.data(), d);
        let mut next = 0;
        for step in 0..=grid.n_steps {
            while next < grid.record_steps.len() && grid.record_steps[next] == step {
                if !run
                    .state()
                    .iter()
                    .all(|v| v.re.is_finite() && v.im.is_finite())
                {
                    return Err(Error::Instability {
                        t: grid.time(step),
                        reason: "non-finite density matrix".into(),
                    });
                }
                run.scatter_into(&mut records[next], d);
                next += 1;
            }
            if step == grid.n_steps {
                break;
            }
            let t = grid.time(step);
            run.step(t, grid.dt);
            if k == 0 {
                let tr = run.hermitize();
                if !tr.re.is_finite() {
                    return Err(Error::Instability {
                        t,
                        reason: "non-finite density matrix".into(),
                    });
                }
                drift = drift.max((tr.re - 1.0).abs());
            }
        }
    }
    Ok(finish(rho0, grid, records, drift))
}

fn evolve_dense(
    gen: &HamiltonianGenerator,
    heff: OperatorSum,
    jumps: Vec<SparseOperator>,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<MasterResult> {
    let d = rho0.dim();
    let lind = Lindbladian {
        heff,
        jumps: jumps.into_iter().map(JumpKernel::new).collect(),
        d,
        _gen: gen,
    };
    let zero = C64::new(0.0, 0.0);
    let mut rho = rho0.data().to_vec();
    let general = lind
        .jumps
        .iter()
        .any(|k| matches!(k, JumpKernel::General(_)));
    let scratch = if general { d * d } else { 0 };
    let (mut s1, mut s2) = (vec![zero; scratch], vec![zero; scratch]);
    let mut rk = Rk4::new(d * d);
    let mut records = Vec::with_capacity(grid.record_steps.len());
    let mut drift = 0.0f64;
    let mut next = 0;
    for step in 0..=grid.n_steps {
        while next < grid.record_steps.len() && grid.record_steps[next] == step {
            records.push(rho.clone());
            next += 1;
        }
        if step == grid.n_steps {
            break;
        }
        let t = grid.time(step);
        rk.step(
            |t, r, o| lind.rhs(t, r, o, &mut s1, &mut s2),
            t,
            grid.dt,
            &mut rho,
        );
        let tr = symmetrize_in_place(&mut rho, d);
        if !tr.re.is_finite() {
            return Err(Error::Instability {
                t,
                reason: "non-finite density matrix".into(),
            });
        }
        drift = drift.max((tr.re - 1.0).abs());
    }
    Ok(finish(rho0, grid, records, drift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::config::StepRule;
    use crate::fock::{HilbertSpec, Level, StateVector};

    #[test]
    fn general_kernel_matches_monomial() {
        let spec = HilbertSpec::uniform(1, 3).unwrap();
        let d = spec.dim();
        let mut psi = StateVector::basis(&spec, Level::E, &[2]);
        psi.amplitudes_mut()[spec.flatten(Level::G, &[3])] = C64::new(0.3, 0.4);
        psi.amplitudes_mut()[spec.flatten(Level::F, &[1])] = C64::new(-0.2, 0.1);
        let rho = DensityMatrix::from_pure(&psi.normalized());
        let a = crate::fock::embed(&crate::fock::annihilation(3).unwrap(), 1, &spec).unwrap();
        let zero = C64::new(0.0, 0.0);
        let (mut o1, mut o2) = (vec![zero; d * d], vec![zero; d * d]);
        let (mut s1, mut s2) = (vec![zero; d * d], vec![zero; d * d]);
        JumpKernel::new(a.clone()).accumulate(rho.data(), d, &mut o1, &mut s1, &mut s2);
        JumpKernel::General(a).accumulate(rho.data(), d, &mut o2, &mut s1, &mut s2);
        for (x, y) in o1.iter().zip(&o2) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn sectors_match_dense() {
        use crate::device::{
            collapse_operators, hamiltonian, table1_params, Frame, ModelOptions, Tier,
        };
        let p = table1_params();
        let spec = HilbertSpec::uniform(3, 2).unwrap();
        let gen = hamiltonian(
            &p,
            &spec,
            Tier::Full,
            Frame::Interaction,
            ModelOptions { drop_gprime: true },
        )
        .unwrap();
        let mut col = collapse_operators(&p, &spec).unwrap();
        for c in &mut col {
            c.rate *= 1e3;
        }
        let psi = crate::oracle::initial_plus_state(3, p.alpha, &spec).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi);
        let cfg = EvolutionConfig::new(Method::Rk4Master, StepRule::Resolution(10.0), 2e-8)
            .with_records(vec![0.5e-8, 1e-8]);
        let d = spec.dim();
        let heff = gen
            .sum()
            .with_static(&decay_term(&col, d).unwrap())
            .unwrap();
        let grid = TimeGrid::build(&cfg, heff.max_frequency()).unwrap();
        let jumps: Vec<SparseOperator> = col.iter().map(|c| c.scaled()).collect();
        let plan = SectorPlan::new(&spec, &heff, &jumps).expect("sector structure");
        let a = evolve_sectors(&plan, &rho0, &grid).unwrap();
        let b = evolve_dense(&gen, heff, jumps, &rho0, &grid).unwrap();
        assert_eq!(a.states.len(), b.states.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            let err = x
                .data()
                .iter()
                .zip(y.data())
                .map(|(u, v)| (u - v).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "{err}");
        }
        assert!((a.final_state().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gprime_falls_back_to_dense() {
        use crate::device::{hamiltonian, table1_params, Frame, ModelOptions, Tier};
        let p = table1_params();
        let spec = HilbertSpec::uniform(3, 1).unwrap();
        let gen = hamiltonian(
            &p,
            &spec,
            Tier::Full,
            Frame::Interaction,
            ModelOptions { drop_gprime: false },
        )
        .unwrap();
        assert!(SectorPlan::new(&spec, gen.sum(), &[]).is_none());
    }

    #[test]
    fn guards() {
        let spec = HilbertSpec::uniform(1, 1).unwrap();
        let rho = DensityMatrix::maximally_mixed(&spec);
        let cfg = EvolutionConfig::new(Method::Rk4Schrodinger, StepRule::Resolution(20.0), 1.0);
        assert!(evolve_master(&HamiltonianGenerator::zero(&spec), &[], &rho, &cfg).is_err());
    }
}
