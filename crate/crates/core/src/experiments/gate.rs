use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::device::{hamiltonian, lambda_and_gate_time, DeviceParams, Frame, Tier};
use crate::error::Result;
use crate::evolve::{evolve_schrodinger, EvolutionConfig, Method, StepRule};
use crate::fock::{cat_logical, HilbertSpec, Ket, StateVector};
use crate::oracle::{encode_word, truth_table, LogicalWord};

pub const DEFAULT_GATE_THRESHOLD: f64 = 1e-4;
/// Cutoff at which the reference cat states are built before projection.
pub const REFERENCE_CUTOFF: usize = 40;
/// Largest phase advance per RK4 step on the diagonal generator.
const PHASE_PER_STEP: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordCheck {
    pub input: String,
    pub expected: String,
    pub infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateReport {
    pub cutoff: usize,
    pub threshold: f64,
    pub t_gate: f64,
    pub words: Vec<WordCheck>,
}

impl GateReport {
    pub fn failures(&self) -> usize {
        self.words
            .iter()
            .filter(|w| !(w.infidelity <= self.threshold))
            .count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn max_infidelity(&self) -> f64 {
        self.words.iter().map(|w| w.infidelity).fold(0.0, f64::max)
    }
}

/// Reference image of `word` built at a large cutoff and projected onto `spec`
/// without renormalizing, so truncation losses count against the gate.
fn reference(word: &LogicalWord, alpha: f64, spec: &HilbertSpec) -> Result<StateVector> {
    let mut qutrit = [C64::new(0.0, 0.0); 3];
    qutrit[word.control.index()] = C64::new(1.0, 0.0);
    let cats = word
        .targets
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let full = cat_logical(b, alpha, REFERENCE_CUTOFF.max(spec.cutoff(j)))?;
            Ok(Ket(full.0[..=spec.cutoff(j)].to_vec()))
        })
        .collect::<Result<Vec<Ket>>>()?;
    StateVector::product(spec, qutrit, &cats)
}

/// Evolve every logical word under the effective tier for `t = π/(2λ)` and
/// score it against the truth table.
pub fn verify_gate(params: &DeviceParams, cutoff: usize, threshold: f64) -> Result<GateReport> {
    let spec = HilbertSpec::uniform(params.n(), cutoff)?;
    let timing = lambda_and_gate_time(params, None)?;
    let gen = hamiltonian(
        params,
        &spec,
        Tier::Effective,
        Frame::Interaction,
        Default::default(),
    )?;
    let n_steps = (gen.sum().norm_bound() * timing.t_gate / PHASE_PER_STEP)
        .ceil()
        .max(1.0);
    let cfg = EvolutionConfig::new(
        Method::Rk4Schrodinger,
        StepRule::Fixed(timing.t_gate / n_steps),
        timing.t_gate,
    );
    let words = LogicalWord::all(params.n())
        .into_par_iter()
        .map(|word| {
            let psi0 = encode_word(&word, params.alpha, &spec)?;
            let out = evolve_schrodinger(&gen, &psi0, &cfg)?;
            let expected = truth_table(&word);
            let target = reference(&expected, params.alpha, &spec)?;
            let overlap = target.inner(out.final_state())?.norm_sqr();
            Ok(WordCheck {
                input: word.to_string(),
                expected: expected.to_string(),
                infidelity: (1.0 - overlap).max(0.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GateReport {
        cutoff,
        threshold,
        t_gate: timing.t_gate,
        words,
    })
}
