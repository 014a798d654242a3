use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use hybrid_cnot::config::{DeviceFile, Lifetimes};
use hybrid_cnot::device::{diagnose_conditions, lambda_and_gate_time, mhz};
use hybrid_cnot::experiments::{
    self, residual_rotation_angles, run_convergence, run_point, run_sweep, unix_now, SolverConfig,
    SweepRow, SweepSpec, SweepVariable, CONVERGENCE_TOL, DEFAULT_C_GRID, DEFAULT_DELTA_GRID,
    MINIMUM_TOLERANCE,
};

use crate::{Failure, EXIT_OK, EXIT_WARNING};

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: crate::EXIT_USAGE,
        message: format!("{}: {e}", path.display()),
    }
}

/// Shared cavity lifetime of the file in μs, if there is one.
fn file_lifetime(file: &DeviceFile) -> Option<f64> {
    match &file.kappa_inv_us {
        Lifetimes::Shared(t) => Some(*t),
        Lifetimes::PerCavity(list) if list.windows(2).all(|w| w[0] == w[1]) => {
            list.first().copied()
        }
        Lifetimes::PerCavity(_) => None,
    }
}

fn lifetime_or(file: &DeviceFile, flag: Option<f64>) -> Result<f64, Failure> {
    flag.or_else(|| file_lifetime(file)).ok_or_else(|| Failure {
        code: crate::EXIT_USAGE,
        message: "per-cavity lifetimes differ; pass --kappa-inv".into(),
    })
}

pub fn diagnose(file: &DeviceFile, threshold: f64) -> Result<u8, Failure> {
    let p = file.to_params()?;
    let report = diagnose_conditions(&p, threshold);
    let timing = lambda_and_gate_time(&p, None)?;
    println!("cavities: {}", p.n());
    for (j, r) in report.detuning_ratios.iter().enumerate() {
        println!(
            "  cavity {}: g/2pi = {:.4} MHz  Delta/2pi = {:.2} MHz  |Delta|/g = {:.3}  lambda/2pi = {:.6} MHz",
            j + 1,
            p.g[j] / mhz(1.0),
            p.detuning(j) / mhz(1.0),
            r,
            report.lambdas[j] / mhz(1.0)
        );
    }
    for pair in &report.pairs {
        println!(
            "  pair ({}, {}): decoupling quotient = {:.3}",
            pair.j + 1,
            pair.k + 1,
            pair.quotient
        );
    }
    println!("lambda spread: {:.3e}", report.lambda_spread);
    println!("t_gate: {:.4} us", timing.t_gate * 1e6);
    let q: Vec<String> = p
        .omega_c
        .iter()
        .zip(&p.kappa)
        .map(|(w, k)| {
            if *k > 0.0 {
                format!("{:.3e}", w / k)
            } else {
                "inf".into()
            }
        })
        .collect();
    println!("quality factors: {}", q.join(", "));
    if report.passed() {
        println!("all conditions pass (threshold {threshold})");
        Ok(EXIT_OK)
    } else {
        for w in &report.warnings {
            println!("WARNING: {w}");
        }
        Ok(EXIT_WARNING)
    }
}

pub fn verify_gate(file: &DeviceFile, cutoff: usize, threshold: f64) -> Result<u8, Failure> {
    let p = file.to_params()?;
    let report = experiments::verify_gate(&p, cutoff, threshold)?;
    println!(
        "cutoff {cutoff}, t_gate {:.4} us, threshold {threshold:e}",
        report.t_gate * 1e6
    );
    for w in &report.words {
        let mark = if w.infidelity <= threshold {
            "ok"
        } else {
            "FAIL"
        };
        println!(
            "  {} -> {}  infidelity {:.3e}  {mark}",
            w.input, w.expected, w.infidelity
        );
    }
    let total = report.words.len();
    println!(
        "{}/{} words pass; max infidelity {:.3e}",
        total - report.failures(),
        total,
        report.max_infidelity()
    );
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_WARNING
    })
}

fn csv_line(r: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        r.variable,
        r.value,
        r.kappa_inv_us,
        r.fidelity,
        r.stderr,
        r.solver,
        r.cutoff,
        r.steps_per_period,
        r.n_traj,
        r.seed,
        r.wall_s
    )
}

pub fn sweep(
    file: &DeviceFile,
    var: SweepVariable,
    grid: Option<Vec<f64>>,
    kappa_inv: Vec<f64>,
    cfg: SolverConfig,
    out: &Path,
) -> Result<u8, Failure> {
    let p = file.to_params()?;
    let grid = grid.unwrap_or_else(|| match var {
        SweepVariable::C => DEFAULT_C_GRID.to_vec(),
        _ => DEFAULT_DELTA_GRID.to_vec(),
    });
    let mut spec = SweepSpec::new(var, grid, cfg);
    spec.kappa_inv_us = kappa_inv;
    spec.delta = file.delta;
    spec.c = file.c;
    spec.validate()?;

    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let stem = format!("sweep_{var}");
    let csv_path = out.join(format!("{stem}.csv"));
    let partial_path = out.join(format!("{stem}.partial.csv"));
    let manifest_path = out.join(format!("{stem}.manifest.toml"));

    // Rows land here as they finish so an interrupted run keeps its results.
    let mut partial = File::create(&partial_path).map_err(|e| io_failure(&partial_path, e))?;
    partial
        .write_all(b"variable,value,kappa_inv_us,fidelity,stderr,solver,cutoff,steps_per_period,n_traj,seed,wall_s\n")
        .map_err(|e| io_failure(&partial_path, e))?;
    let started = unix_now();
    let total = spec.grid.len() * spec.kappa_inv_us.len();
    let mut done = 0;
    let result = run_sweep(&p, &spec, &mut |row| {
        done += 1;
        let _ = partial
            .write_all(csv_line(row).as_bytes())
            .and_then(|_| partial.flush());
        eprintln!(
            "[{done}/{total}] {var} = {:+.4}  kappa_inv = {} us  F = {:.4} +/- {:.4}  ({:.1} s)",
            row.value, row.kappa_inv_us, row.fidelity, row.stderr, row.wall_s
        );
    })?;
    let finished = unix_now();
    let text = result.write_csv(&csv_path)?;
    result
        .manifest(file, &text, started, finished)
        .write(&manifest_path)?;
    let _ = fs::remove_file(&partial_path);
    println!(
        "wrote {} and {}",
        csv_path.display(),
        manifest_path.display()
    );

    let mut warn = false;
    for b in result.bound_checks() {
        let ok = b.passed();
        warn |= !ok;
        println!(
            "kappa_inv = {:>5} us: min F = {:.4} +/- {:.4} at {var} = {:+} vs quoted {:.4} (tolerance {MINIMUM_TOLERANCE}) {}",
            b.kappa_inv_us,
            b.minimum,
            b.stderr,
            b.at,
            b.bound,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    for k in result.lifetimes() {
        let best = result
            .rows_at(k)
            .map(|r| r.detail.compensated)
            .fold(f64::INFINITY, f64::min);
        println!("kappa_inv = {k:>5} us: min phase-compensated F = {best:.4}");
        for (x, d) in result.asymmetry(k) {
            println!("  asymmetry F({x}) - F(-{x}) = {d:+.4}");
        }
    }
    for check in result
        .magnitude_ordering()
        .iter()
        .chain(&result.lifetime_ordering())
        .filter(|c| !c.holds())
    {
        warn = true;
        println!(
            "WARNING: ordering violated between {} and {} (rise {:.4} > {:.4})",
            check.from, check.to, check.rise, check.allowance
        );
    }
    if var == SweepVariable::C {
        for &c in &spec.grid {
            let angles = residual_rotation_angles(&p, c)?;
            let s: Vec<String> = angles.iter().map(|a| format!("{a:+.4}")).collect();
            println!(
                "c = {c:+}: residual rotation (rad) per cavity: {}",
                s.join(", ")
            );
        }
    }
    Ok(if warn { EXIT_WARNING } else { EXIT_OK })
}

pub fn ghz(
    file: &DeviceFile,
    delta: Option<f64>,
    c: Option<f64>,
    kappa_inv: Option<f64>,
    cfg: SolverConfig,
) -> Result<u8, Failure> {
    let p = file.to_params()?;
    let kappa = lifetime_or(file, kappa_inv)?;
    let (delta, c) = (delta.unwrap_or(file.delta), c.unwrap_or(file.c));
    cfg.validate()?;
    let r = run_point(&p, delta, c, kappa * 1e-6, &cfg)?;
    println!(
        "delta = {delta}, c = {c}, kappa_inv = {kappa} us, solver = {}, cutoff = {}",
        cfg.solver, cfg.cutoff
    );
    println!("F = {:.6} +/- {:.6}", r.fidelity, r.stderr);
    println!(
        "phase-compensated F = {:.6} +/- {:.6} (phi = {:+.4} rad)",
        r.compensated, r.compensated_stderr, r.compensation_phase
    );
    if let Some(j) = r.mean_jumps {
        println!("mean jumps per trajectory: {j:.3}");
    }
    if let Some(d) = r.trace_drift {
        println!("trace drift: {d:.3e}");
    }
    println!("engine: {}, wall time {:.1} s", r.engine, r.wall_s);
    Ok(if r.positive == Some(false) {
        EXIT_WARNING
    } else {
        EXIT_OK
    })
}

pub fn converge(
    file: &DeviceFile,
    cutoffs: &[usize],
    resolutions: &[f64],
    kappa_inv: Option<f64>,
    cfg: SolverConfig,
) -> Result<u8, Failure> {
    let p = file.to_params()?;
    let kappa = lifetime_or(file, kappa_inv)?;
    if cutoffs.is_empty() || resolutions.is_empty() {
        return Err(Failure {
            code: crate::EXIT_USAGE,
            message: "cutoff and resolution lists must be nonempty".into(),
        });
    }
    let report = run_convergence(&p, file.delta, file.c, kappa, cutoffs, resolutions, &cfg)?;
    println!("cutoff  steps/period  F          SE");
    for pt in report.cutoffs.iter().chain(&report.resolutions) {
        println!(
            "{:>6}  {:>12}  {:.6}  {:.6}",
            pt.cutoff, pt.steps_per_period, pt.result.fidelity, pt.result.stderr
        );
    }
    for (w, d) in report.cutoffs.windows(2).zip(report.cutoff_steps()) {
        println!("cutoff {} -> {}: |dF| = {d:.2e}", w[0].cutoff, w[1].cutoff);
    }
    for (w, d) in report.resolutions.windows(2).zip(report.resolution_steps()) {
        println!(
            "resolution {} -> {}: |dF| = {d:.2e}",
            w[0].steps_per_period, w[1].steps_per_period
        );
    }
    match report.converged_cutoff(CONVERGENCE_TOL) {
        Some(n) => println!("converged from cutoff {n}"),
        None => println!("WARNING: no cutoff step below {CONVERGENCE_TOL:e}"),
    }
    match report.converged_resolution(CONVERGENCE_TOL) {
        Some(r) => println!("converged from {r} steps per period"),
        None => println!("WARNING: no resolution step below {CONVERGENCE_TOL:e}"),
    }
    Ok(if report.converged(CONVERGENCE_TOL) {
        EXIT_OK
    } else {
        EXIT_WARNING
    })
}
