//! Closed-form references: the gate truth table, the ideal conditional
//! rotation, and the GHZ target states.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{cat_logical, norm_sqr, HilbertSpec, Ket, Level, StateVector};

/// `|f⟩` population above which the ideal unitary refuses a state.
pub const F_POPULATION_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Control level plus one logical bit per target cavity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LogicalWord {
    pub control: Level,
    pub targets: Vec<u8>,
}

impl LogicalWord {
    pub fn new(control: Level, targets: Vec<u8>) -> Result<Self> {
        if control == Level::F {
            return Err(Error::InvalidArgument("the control must be g or e".into()));
        }
        if targets.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("target bits must be 0 or 1".into()));
        }
        Ok(Self { control, targets })
    }

    /// All `2 · 2ⁿ` words, control-major, targets in binary order.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for control in [Level::G, Level::E] {
            for code in 0..1usize << n {
                let targets = (0..n).map(|j| ((code >> (n - 1 - j)) & 1) as u8).collect();
                out.push(Self { control, targets });
            }
        }
        out
    }
}

impl fmt::Display for LogicalWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.control)?;
        for b in &self.targets {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Control `g` leaves the targets alone; control `e` flips every target.
pub fn truth_table(word: &LogicalWord) -> LogicalWord {
    let flip = word.control == Level::E;
    LogicalWord {
        control: word.control,
        targets: word
            .targets
            .iter()
            .map(|&b| if flip { 1 - b } else { b })
            .collect(),
    }
}

/// `|control⟩ ⊗ cat_{l₁} ⊗ … ⊗ cat_{lₙ}`.
pub fn encode_word(word: &LogicalWord, alpha: f64, spec: &HilbertSpec) -> Result<StateVector> {
    if word.targets.len() != spec.n_cavities() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_cavities(),
            got: word.targets.len(),
        });
    }
    let mut qutrit = [ZERO; 3];
    qutrit[word.control.index()] = ONE;
    let cats = word
        .targets
        .iter()
        .enumerate()
        .map(|(j, &b)| cat_logical(b, alpha, spec.cutoff(j)))
        .collect::<Result<Vec<Ket>>>()?;
    StateVector::product(spec, qutrit, &cats)
}

/// `U = Π_j exp(iλ a†_j a_j |e⟩⟨e| t)`: phase `e^{iλ n t}` on each Fock
/// component of the `|e⟩` branch.
pub fn apply_ideal_unitary(psi: &StateVector, lambda: f64, t: f64) -> Result<StateVector> {
    let spec = psi.spec();
    let pop = psi.level_population(Level::F);
    if pop > F_POPULATION_TOL {
        return Err(Error::FLevelPopulated {
            population: pop,
            tolerance: F_POPULATION_TOL,
        });
    }
    let block = spec.cavity_block();
    let offset = Level::E.index() * block;
    let mut out = psi.clone();
    let amps = out.amplitudes_mut();
    for k in 0..block {
        let n: usize = (0..spec.n_cavities())
            .map(|j| spec.photons_at(offset + k, j))
            .sum();
        amps[offset + k] *= C64::from_polar(1.0, lambda * n as f64 * t);
    }
    Ok(out)
}

/// `(|g⟩ + |e⟩)/√2 ⊗ cat₀^⊗n`.
pub fn initial_plus_state(n: usize, alpha: f64, spec: &HilbertSpec) -> Result<StateVector> {
    if n != spec.n_cavities() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_cavities(),
            got: n,
        });
    }
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let cats = (0..n)
        .map(|j| cat_logical(0, alpha, spec.cutoff(j)))
        .collect::<Result<Vec<Ket>>>()?;
    Ok(StateVector::product(spec, [h, h, ZERO], &cats)?.normalized())
}

/// GHZ target description.
#[derive(Clone, Debug, PartialEq)]
pub struct GhzSpec {
    pub n_cats: usize,
    /// Two-level qubits that never take part in the dynamics.
    pub m_spectators: usize,
    pub alpha: f64,
}

impl GhzSpec {
    pub fn new(n_cats: usize, m_spectators: usize, alpha: f64) -> Result<Self> {
        if n_cats == 0 {
            return Err(Error::InvalidArgument(
                "at least one cat qubit is required".into(),
            ));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            n_cats,
            m_spectators,
            alpha,
        })
    }
}

/// A system state extended by spectator qubits. Spectators occupy the
/// slowest indices: `index = s · dim + i` for spectator pattern `s`
/// (first spectator most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct GhzState {
    spectators: usize,
    system: HilbertSpec,
    amps: Vec<C64>,
}

impl GhzState {
    pub fn spectators(&self) -> usize {
        self.spectators
    }

    pub fn system_spec(&self) -> &HilbertSpec {
        &self.system
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// The system state; only valid without spectators.
    pub fn into_system(self) -> Result<StateVector> {
        if self.spectators != 0 {
            return Err(Error::InvalidArgument(
                "state carries spectator qubits".into(),
            ));
        }
        StateVector::new(self.system, self.amps)
    }

    /// Reduced 2×2 state of spectator `k`, row-major.
    pub fn spectator_reduced(&self, k: usize) -> Result<[C64; 4]> {
        if k >= self.spectators {
            return Err(Error::InvalidArgument(format!("no spectator {k}")));
        }
        let d = self.system.dim();
        let bit = self.spectators - 1 - k;
        let mut rho = [ZERO; 4];
        for s in 0..1usize << self.spectators {
            if (s >> bit) & 1 == 1 {
                continue;
            }
            let s1 = s | (1 << bit);
            let a0 = &self.amps[s * d..(s + 1) * d];
            let a1 = &self.amps[s1 * d..(s1 + 1) * d];
            for (x, y) in a0.iter().zip(a1) {
                rho[0] += x * x.conj();
                rho[1] += x * y.conj();
                rho[2] += y * x.conj();
                rho[3] += y * y.conj();
            }
        }
        Ok(rho)
    }

    /// Reduced 3×3 state of the qutrit, row-major.
    pub fn qutrit_reduced(&self) -> [C64; 9] {
        let d = self.system.dim();
        let block = self.system.cavity_block();
        let mut rho = [ZERO; 9];
        for chunk in self.amps.chunks(d) {
            for a in 0..3 {
                for b in 0..3 {
                    let (ra, rb) = (
                        &chunk[a * block..(a + 1) * block],
                        &chunk[b * block..(b + 1) * block],
                    );
                    rho[a * 3 + b] += ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum::<C64>();
                }
            }
        }
        rho
    }
}

/// `(|g…g⟩|0…0⟩ + |e…e⟩|1…1⟩)/√2`, spectators included on both branches.
///
/// The two branches differ in the qutrit level, so they are orthogonal even
/// though cat words overlap; each branch is normalized in the truncated space.
pub fn ghz_target(ghz: &GhzSpec, spec: &HilbertSpec) -> Result<GhzState> {
    if ghz.n_cats != spec.n_cavities() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_cavities(),
            got: ghz.n_cats,
        });
    }
    let n = ghz.n_cats;
    let zeros = encode_word(&LogicalWord::new(Level::G, vec![0; n])?, ghz.alpha, spec)?;
    let ones = encode_word(&LogicalWord::new(Level::E, vec![1; n])?, ghz.alpha, spec)?;
    let d = spec.dim();
    let m = ghz.m_spectators;
    let mut amps = vec![ZERO; d << m];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let top = (1usize << m) - 1;
    for (i, v) in zeros.amplitudes().iter().enumerate() {
        amps[i] += v * h;
    }
    for (i, v) in ones.amplitudes().iter().enumerate() {
        amps[top * d + i] += v * h;
    }
    let norm = norm_sqr(&amps).sqrt();
    amps.iter_mut().for_each(|v| *v /= norm);
    Ok(GhzState {
        spectators: m,
        system: spec.clone(),
        amps,
    })
}

/// The `n`-cat GHZ target without spectators.
pub fn ghz_system_target(n: usize, alpha: f64, spec: &HilbertSpec) -> Result<StateVector> {
    ghz_target(&GhzSpec::new(n, 0, alpha)?, spec)?.into_system()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fidelity};

    #[test]
    fn truth_table_examples() {
        let w = LogicalWord::new(Level::G, vec![0, 1, 0]).unwrap();
        assert_eq!(truth_table(&w), w);
        let w = LogicalWord::new(Level::E, vec![0, 1, 0]).unwrap();
        assert_eq!(truth_table(&w).targets, vec![1, 0, 1]);
        assert_eq!(truth_table(&truth_table(&w)), w);
        assert_eq!(LogicalWord::all(3).len(), 16);
        assert!(LogicalWord::new(Level::F, vec![0]).is_err());
    }

    #[test]
    fn rotation_of_coherent_amplitude() {
        let spec = HilbertSpec::uniform(1, 20).unwrap();
        let beta = C64::new(1.25, 0.0);
        let lambda = 2.0e6;
        let t = 0.3e-6;
        let coh = coherent_state(beta, 20).unwrap().ket;
        let psi = StateVector::product(&spec, [ZERO, ONE, ZERO], &[coh]).unwrap();
        let out = apply_ideal_unitary(&psi, lambda, t).unwrap();
        let rotated = coherent_state(beta * C64::from_polar(1.0, lambda * t), 20)
            .unwrap()
            .ket;
        let want = StateVector::product(&spec, [ZERO, ONE, ZERO], &[rotated]).unwrap();
        assert!(fidelity(&want, &out).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn quarter_turn_swaps_cats() {
        let spec = HilbertSpec::uniform(1, 15).unwrap();
        let lambda = 1.0;
        let t = std::f64::consts::FRAC_PI_2;
        for (a, b) in [(0u8, 1u8), (1, 0)] {
            let from =
                encode_word(&LogicalWord::new(Level::E, vec![a]).unwrap(), 1.25, &spec).unwrap();
            let to =
                encode_word(&LogicalWord::new(Level::E, vec![b]).unwrap(), 1.25, &spec).unwrap();
            let out = apply_ideal_unitary(&from, lambda, t).unwrap();
            assert!(fidelity(&to, &out).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn f_population_rejected() {
        let spec = HilbertSpec::uniform(1, 2).unwrap();
        let psi = StateVector::basis(&spec, Level::F, &[0]);
        assert!(matches!(
            apply_ideal_unitary(&psi, 1.0, 1.0),
            Err(Error::FLevelPopulated { .. })
        ));
    }

    #[test]
    fn plus_state_overlap_with_target() {
        let spec = HilbertSpec::uniform(3, 15).unwrap();
        let plus = initial_plus_state(3, 1.25, &spec).unwrap();
        let ghz = ghz_system_target(3, 1.25, &spec).unwrap();
        // ⟨ψ_id|ψ₀⟩ = (1 + ⟨1|0⟩³)/2 with a real cat overlap
        let c = 0.0033315894146362015f64;
        let want = 0.5 * (1.0 + c * c * c);
        assert!((plus.inner(&ghz).unwrap().norm() - want).abs() < 1e-9);
        assert_eq!(plus.level_population(Level::F), 0.0);
    }

    #[test]
    fn spectators_are_bookkeeping() {
        let spec = HilbertSpec::uniform(2, 6).unwrap();
        let g = ghz_target(&GhzSpec::new(2, 2, 1.25).unwrap(), &spec).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
        for k in 0..2 {
            let r = g.spectator_reduced(k).unwrap();
            assert!((r[0].re - 0.5).abs() < 1e-12 && (r[3].re - 0.5).abs() < 1e-12);
            assert!(r[1].norm() < 1e-15);
        }
        assert!(g.into_system().is_err());
    }
}
