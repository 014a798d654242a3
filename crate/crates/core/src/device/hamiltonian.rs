use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use super::operator_sum::{OperatorSum, OscTerm};
use super::params::DeviceParams;
use crate::error::{Error, Result};
use crate::fock::{
    annihilation, embed, number, qutrit_transition, HilbertSpec, Level, SparseOperator,
};

/// Model tier of a Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tier {
    /// Required `|e⟩↔|f⟩` couplings only, interaction picture.
    Ideal,
    /// Dispersive shifts of `|e⟩` only.
    Effective,
    /// Dispersive shifts of `|e⟩` and `|f⟩`.
    EffectiveWithF,
    /// Required plus unwanted couplings and crosstalk, interaction picture.
    Full,
    /// Static laboratory-frame reconstruction of the full tier.
    Lab,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tier::Ideal => "ideal",
            Tier::Effective => "effective",
            Tier::EffectiveWithF => "effective_with_f",
            Tier::Full => "full",
            Tier::Lab => "lab",
        };
        f.write_str(s)
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ideal" => Tier::Ideal,
            "effective" => Tier::Effective,
            "effective_with_f" => Tier::EffectiveWithF,
            "full" => Tier::Full,
            "lab" => Tier::Lab,
            other => return Err(Error::InvalidArgument(format!("unknown tier `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Frame {
    Interaction,
    Lab,
    /// Rotating at the mean cavity frequency per excitation (see
    /// [`rotating_reference`]). Without the `|g⟩↔|f⟩` couplings the full
    /// model is static in this frame.
    Rotating,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModelOptions {
    /// Omit the weak, fast `|g⟩↔|f⟩` couplings.
    pub drop_gprime: bool,
}

/// A static or time-dependent Hamiltonian on the composite space.
#[derive(Clone, Debug)]
pub struct HamiltonianGenerator {
    tier: Tier,
    frame: Frame,
    spec: HilbertSpec,
    sum: OperatorSum,
}

impl HamiltonianGenerator {
    pub fn from_parts(
        tier: Tier,
        frame: Frame,
        spec: HilbertSpec,
        sum: OperatorSum,
    ) -> Result<Self> {
        if sum.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: sum.dim(),
            });
        }
        Ok(Self {
            tier,
            frame,
            spec,
            sum,
        })
    }

    /// The zero Hamiltonian.
    pub fn zero(spec: &HilbertSpec) -> Self {
        let sum = OperatorSum::new(SparseOperator::zeros(spec.dim(), spec.dim()), Vec::new())
            .expect("square by construction");
        Self {
            tier: Tier::Ideal,
            frame: Frame::Interaction,
            spec: spec.clone(),
            sum,
        }
    }

    /// Generator with a time-independent operator.
    pub fn constant(spec: &HilbertSpec, op: SparseOperator) -> Result<Self> {
        let sum = OperatorSum::new(op, Vec::new())?;
        Self::from_parts(Tier::Ideal, Frame::Interaction, spec.clone(), sum)
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn sum(&self) -> &OperatorSum {
        &self.sum
    }

    pub fn is_static(&self) -> bool {
        self.sum.is_static()
    }

    pub fn operator_at(&self, t: f64) -> SparseOperator {
        self.sum.at(t)
    }

    pub fn max_frequency(&self) -> f64 {
        self.sum.max_frequency()
    }

    pub fn term_count(&self) -> usize {
        self.sum.term_count()
    }

    /// Copy with a non-Hermitian static addition (e.g. `−i/2 Σ L†L`).
    pub fn with_static(&self, extra: &SparseOperator) -> Result<Self> {
        Ok(Self {
            sum: self.sum.with_static(extra)?,
            ..self.clone()
        })
    }
}

struct Ops {
    a: Vec<SparseOperator>,
    n: Vec<SparseOperator>,
}

impl Ops {
    fn new(spec: &HilbertSpec) -> Result<Self> {
        let mut a = Vec::new();
        let mut n = Vec::new();
        for j in 0..spec.n_cavities() {
            a.push(embed(&annihilation(spec.cutoff(j))?, j + 1, spec)?);
            n.push(embed(&number(spec.cutoff(j))?, j + 1, spec)?);
        }
        Ok(Self { a, n })
    }
}

fn sigma(spec: &HilbertSpec, from: Level, to: Level) -> Result<SparseOperator> {
    embed(&qutrit_transition(from, to), 0, spec)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Diagonal of `H₀ = Σ_j ω_cj a†_j a_j + ω_eg |e⟩⟨e| + ω_fg |f⟩⟨f|`.
pub fn h0_diagonal(params: &DeviceParams, spec: &HilbertSpec) -> Vec<f64> {
    (0..spec.dim())
        .map(|i| {
            let (level, photons) = spec.unflatten(i);
            let qutrit = match level {
                Level::G => 0.0,
                Level::E => params.omega_eg,
                Level::F => params.omega_fg,
            };
            qutrit
                + photons
                    .iter()
                    .zip(&params.omega_c)
                    .map(|(&n, w)| n as f64 * w)
                    .sum::<f64>()
        })
        .collect()
}

/// Excitation number `Σ n_j + k` with `k = 0, 1, 2` for `g, e, f`.
pub fn excitation_number(spec: &HilbertSpec, index: usize) -> usize {
    let (level, photons) = spec.unflatten(index);
    level.index() + photons.iter().sum::<usize>()
}

/// Reference frequency `ω_R` of the rotating frame: the mean cavity frequency.
pub fn rotating_reference(params: &DeviceParams) -> f64 {
    params.omega_c.iter().sum::<f64>() / params.n() as f64
}

/// Diagonal of `H₀ − ω_R N`.
///
/// A rotating-frame state maps to the interaction frame through
/// `ψ_I = e^{+i(H₀ − ω_R N)t} ψ_R`.
pub fn rotating_offsets(params: &DeviceParams, spec: &HilbertSpec) -> Vec<f64> {
    let w = rotating_reference(params);
    h0_diagonal(params, spec)
        .into_iter()
        .enumerate()
        .map(|(i, e)| e - w * excitation_number(spec, i) as f64)
        .collect()
}

/// Coupling terms of the full model: `(operator, amplitude, interaction-frame frequency)`.
fn coupling_terms(
    params: &DeviceParams,
    spec: &HilbertSpec,
    ops: &Ops,
    include_unwanted: bool,
    opts: ModelOptions,
) -> Result<Vec<OscTerm>> {
    let s_fe = sigma(spec, Level::E, Level::F)?; // |f⟩⟨e|
    let s_fg = sigma(spec, Level::G, Level::F)?; // |f⟩⟨g|
    let s_eg = sigma(spec, Level::G, Level::E)?; // |e⟩⟨g|
    let mut terms = Vec::new();
    for j in 0..params.n() {
        terms.push(OscTerm {
            op: ops.a[j].matmul(&s_fe)?,
            amp: real(params.g[j]),
            freq: params.detuning(j),
        });
    }
    if !include_unwanted {
        return Ok(terms);
    }
    if !opts.drop_gprime {
        for j in 0..params.n() {
            terms.push(OscTerm {
                op: ops.a[j].matmul(&s_fg)?,
                amp: real(params.g_prime[j]),
                freq: params.detuning_fg(j),
            });
        }
    }
    for j in 0..params.n() {
        terms.push(OscTerm {
            op: ops.a[j].matmul(&s_eg)?,
            amp: real(params.g_tilde[j]),
            freq: params.detuning_eg(j),
        });
    }
    for k in 0..params.n() {
        for l in k + 1..params.n() {
            terms.push(OscTerm {
                op: ops.a[k].adjoint().matmul(&ops.a[l])?,
                amp: real(params.g_cross[k][l]),
                freq: params.cavity_detuning(k, l),
            });
        }
    }
    Ok(terms)
}

/// Build the Hamiltonian of `tier` in `frame`.
///
/// The lab tier is `H₀ + Σ (coupling + h.c.)` with the same couplings as the
/// full tier; its interaction picture with respect to `H₀` is the full tier.
pub fn hamiltonian(
    params: &DeviceParams,
    spec: &HilbertSpec,
    tier: Tier,
    frame: Frame,
    opts: ModelOptions,
) -> Result<HamiltonianGenerator> {
    if spec.n_cavities() != params.n() {
        return Err(Error::DimensionMismatch {
            expected: params.n(),
            got: spec.n_cavities(),
        });
    }
    let ops = Ops::new(spec)?;
    let dim = spec.dim();
    let sum = match (tier, frame) {
        (Tier::Ideal, Frame::Interaction) => OperatorSum::new(
            SparseOperator::zeros(dim, dim),
            coupling_terms(params, spec, &ops, false, opts)?,
        )?,
        (Tier::Full, Frame::Interaction) => OperatorSum::new(
            SparseOperator::zeros(dim, dim),
            coupling_terms(params, spec, &ops, true, opts)?,
        )?,
        (Tier::Effective | Tier::EffectiveWithF, Frame::Interaction) => {
            let p_e = sigma(spec, Level::E, Level::E)?;
            let p_f = sigma(spec, Level::F, Level::F)?;
            let mut h = SparseOperator::zeros(dim, dim);
            for j in 0..params.n() {
                let lam = real(-params.lambda(j));
                h = h.add(&ops.n[j].matmul(&p_e)?.scale(lam))?;
                if tier == Tier::EffectiveWithF {
                    let aad = ops.a[j].matmul(&ops.a[j].adjoint())?;
                    h = h.sub(&aad.matmul(&p_f)?.scale(lam))?;
                }
            }
            OperatorSum::new(h, Vec::new())?
        }
        (Tier::Full, Frame::Rotating) => {
            let w = rotating_reference(params);
            let mut h = SparseOperator::from_diagonal(
                &rotating_offsets(params, spec)
                    .into_iter()
                    .map(real)
                    .collect::<Vec<_>>(),
            );
            let mut osc = Vec::new();
            for term in coupling_terms(params, spec, &ops, true, opts)? {
                let shift = match term.op.iter().next() {
                    Some((r, c, _)) => {
                        excitation_number(spec, r) as f64 - excitation_number(spec, c) as f64
                    }
                    None => continue,
                };
                if shift == 0.0 {
                    let op = term.op.scale(term.amp);
                    h = h.add(&op)?.add(&op.adjoint())?;
                } else {
                    osc.push(OscTerm {
                        freq: w * shift,
                        ..term
                    });
                }
            }
            OperatorSum::new(h, osc)?
        }
        (Tier::Lab, Frame::Lab) | (Tier::Full, Frame::Lab) => {
            let mut h = SparseOperator::from_diagonal(
                &h0_diagonal(params, spec)
                    .into_iter()
                    .map(real)
                    .collect::<Vec<_>>(),
            );
            for term in coupling_terms(params, spec, &ops, true, opts)? {
                let op = term.op.scale(term.amp);
                h = h.add(&op)?.add(&op.adjoint())?;
            }
            OperatorSum::new(h, Vec::new())?
        }
        (t, f) => {
            return Err(Error::Unsupported(format!(
                "tier {t} is not available in the {f:?} frame"
            )))
        }
    };
    let tier = if frame == Frame::Lab { Tier::Lab } else { tier };
    HamiltonianGenerator::from_parts(tier, frame, spec.clone(), sum)
}

/// A Lindblad channel `L = √rate · op`.
#[derive(Clone, Debug)]
pub struct CollapseOp {
    pub label: String,
    pub rate: f64,
    pub op: SparseOperator,
}

impl CollapseOp {
    /// `√rate · op`.
    pub fn scaled(&self) -> SparseOperator {
        self.op.scale(real(self.rate.sqrt()))
    }
}

/// Cavity decay, qutrit relaxation and qutrit dephasing channels with
/// nonzero rate.
///
/// The channels are frame-independent: under `H₀` each operator only picks
/// up a phase, which cancels in the dissipator.
pub fn collapse_operators(params: &DeviceParams, spec: &HilbertSpec) -> Result<Vec<CollapseOp>> {
    let mut out = Vec::new();
    for j in 0..params.n() {
        out.push(CollapseOp {
            label: format!("kappa_{}", j + 1),
            rate: params.kappa[j],
            op: embed(&annihilation(spec.cutoff(j))?, j + 1, spec)?,
        });
    }
    let qutrit = [
        ("gamma_eg", params.gamma_eg, Level::E, Level::G),
        ("gamma_fe", params.gamma_fe, Level::F, Level::E),
        ("gamma_fg", params.gamma_fg, Level::F, Level::G),
        ("gamma_phi_e", params.gamma_phi_e, Level::E, Level::E),
        ("gamma_phi_f", params.gamma_phi_f, Level::F, Level::F),
    ];
    for (label, rate, from, to) in qutrit {
        out.push(CollapseOp {
            label: label.to_string(),
            rate,
            op: sigma(spec, from, to)?,
        });
    }
    out.retain(|c| c.rate > 0.0);
    Ok(out)
}

/// `−(i/2) Σ_k L_k† L_k`, the anti-Hermitian part of the no-jump generator.
pub fn decay_term(collapse: &[CollapseOp], dim: usize) -> Result<SparseOperator> {
    let mut acc = SparseOperator::zeros(dim, dim);
    for c in collapse {
        let l = c.scaled();
        acc = acc.add(&l.adjoint().matmul(&l)?)?;
    }
    Ok(acc.scale(C64::new(0.0, -0.5)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::params::{mhz, table1_params};
    use crate::fock::StateVector;

    fn spec(cutoff: usize) -> HilbertSpec {
        HilbertSpec::uniform(3, cutoff).unwrap()
    }

    #[test]
    fn effective_annihilates_g_branch() {
        let s = spec(3);
        let h = hamiltonian(
            &table1_params(),
            &s,
            Tier::Effective,
            Frame::Interaction,
            Default::default(),
        )
        .unwrap()
        .operator_at(0.0);
        for i in 0..s.cavity_block() {
            let mut psi = StateVector::zeros(&s);
            psi.amplitudes_mut()[i] = C64::new(1.0, 0.0);
            assert!(h.mul_vec(psi.amplitudes()).iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn effective_eigenvalue_on_e_branch() {
        let s = spec(3);
        let p = table1_params();
        let h = hamiltonian(
            &p,
            &s,
            Tier::Effective,
            Frame::Interaction,
            Default::default(),
        )
        .unwrap()
        .operator_at(0.0);
        let psi = StateVector::basis(&s, Level::E, &[1, 2, 3]);
        let e = psi.expectation(&h).re;
        assert!((e + p.lambda(0) * 6.0).abs() < 1e-9 * p.lambda(0));
    }

    #[test]
    fn full_tier_structure() {
        let s = spec(2);
        let p = table1_params();
        let h = hamiltonian(&p, &s, Tier::Full, Frame::Interaction, Default::default()).unwrap();
        assert_eq!(h.term_count(), 2 * (3 + 3 + 3 + 3));
        assert!(h.operator_at(0.0).hermiticity_residual() < 1e-12 * mhz(1.0));
        let dropped = hamiltonian(
            &p,
            &s,
            Tier::Full,
            Frame::Interaction,
            ModelOptions { drop_gprime: true },
        )
        .unwrap();
        assert_eq!(dropped.term_count(), 2 * 9);
        assert!((h.max_frequency() - p.detuning_fg(2)).abs() < 1.0);
        assert!((dropped.max_frequency() - p.detuning_eg(2)).abs() < 1.0);
    }

    #[test]
    fn rotating_frame_is_static_without_gprime() {
        let s = spec(2);
        let p = table1_params();
        let opts = ModelOptions { drop_gprime: true };
        let rot = hamiltonian(&p, &s, Tier::Full, Frame::Rotating, opts).unwrap();
        assert!(rot.is_static());
        let h = rot.operator_at(0.0);
        for (r, c, _) in h.iter() {
            assert_eq!(excitation_number(&s, r), excitation_number(&s, c));
        }
        let with_gp = hamiltonian(&p, &s, Tier::Full, Frame::Rotating, Default::default()).unwrap();
        assert!(!with_gp.is_static());
        assert!((with_gp.sum().max_oscillation() - rotating_reference(&p)).abs() < 1.0);
    }

    #[test]
    fn unsupported_combinations() {
        let s = spec(1);
        let p = table1_params();
        assert!(hamiltonian(&p, &s, Tier::Effective, Frame::Lab, Default::default()).is_err());
        assert!(hamiltonian(&p, &s, Tier::Lab, Frame::Interaction, Default::default()).is_err());
    }

    #[test]
    fn collapse_channel_count() {
        let s = spec(1);
        let p = table1_params();
        assert_eq!(collapse_operators(&p, &s).unwrap().len(), 8);
        assert!(collapse_operators(&p.without_decoherence(), &s)
            .unwrap()
            .is_empty());
    }
}
