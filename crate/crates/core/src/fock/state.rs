use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::space::{HilbertSpec, Level, QUTRIT_DIM};
use super::sparse::SparseOperator;
use crate::error::{Error, Result};

/// Tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Tolerance for state norms.
pub const NORM_TOL: f64 = 1e-8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// A single-mode (or any local) ket in a truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket(pub Vec<C64>);

impl Ket {
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Ket(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.0).sqrt()
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        inner(&self.0, &other.0)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.0.iter_mut().for_each(|a| *a /= n);
        self
    }

    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        inner(&self.0, &op.mul_vec(&self.0))
    }
}

/// A coherent state together with the norm lost to truncation.
#[derive(Clone, Debug)]
pub struct Coherent {
    pub ket: Ket,
    /// `1 - Σ|c_n|²` before renormalization.
    pub deficit: f64,
}

/// Truncated coherent state `|amp⟩` on Fock levels `0..=cutoff`, renormalized.
pub fn coherent_state(amp: C64, cutoff: usize) -> Result<Coherent> {
    if !amp.re.is_finite() || !amp.im.is_finite() {
        return Err(Error::InvalidArgument(
            "coherent amplitude must be finite".into(),
        ));
    }
    if cutoff < 1 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut c = C64::new((-0.5 * amp.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..=cutoff {
        c = c * amp / (n as f64).sqrt();
        amps.push(c);
    }
    let kept = norm_sqr(&amps);
    Ok(Coherent {
        ket: Ket(amps).normalized(),
        deficit: 1.0 - kept,
    })
}

/// Logical cat state: bit 0 is `N(|α⟩ + |−α⟩)`, bit 1 is `N(|iα⟩ + |−iα⟩)`.
pub fn cat_logical(bit: u8, alpha: f64, cutoff: usize) -> Result<Ket> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cat amplitude must be positive, got {alpha}"
        )));
    }
    let base = match bit {
        0 => C64::new(alpha, 0.0),
        1 => C64::new(0.0, alpha),
        b => {
            return Err(Error::InvalidArgument(format!(
                "logical bit must be 0 or 1, got {b}"
            )))
        }
    };
    let plus = coherent_state(base, cutoff)?.ket;
    let minus = coherent_state(-base, cutoff)?.ket;
    let sum = plus.0.iter().zip(&minus.0).map(|(a, b)| a + b).collect();
    Ok(Ket(sum).normalized())
}

/// Analytic normalizer `1/√(2(1 + e^{−2α²}))` of the untruncated cat states.
pub fn cat_normalizer(alpha: f64) -> f64 {
    1.0 / (2.0 * (1.0 + (-2.0 * alpha * alpha).exp())).sqrt()
}

/// Truncated annihilation operator on Fock levels `0..=cutoff`.
pub fn annihilation(cutoff: usize) -> Result<SparseOperator> {
    if cutoff < 1 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    Ok(SparseOperator::from_triplets(
        cutoff + 1,
        cutoff + 1,
        (1..=cutoff).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    ))
}

/// `a†a` on Fock levels `0..=cutoff`.
pub fn number(cutoff: usize) -> Result<SparseOperator> {
    let a = annihilation(cutoff)?;
    a.adjoint().matmul(&a)
}

/// Single-entry qutrit operator `|to⟩⟨from|`.
pub fn qutrit_transition(from: Level, to: Level) -> SparseOperator {
    SparseOperator::from_triplets(QUTRIT_DIM, QUTRIT_DIM, [(to.index(), from.index(), ONE)])
}

/// Lift a local operator acting on `slot` to the composite space.
pub fn embed(local: &SparseOperator, slot: usize, spec: &HilbertSpec) -> Result<SparseOperator> {
    if slot >= spec.n_slots() {
        return Err(Error::InvalidArgument(format!("slot {slot} out of range")));
    }
    let d = spec.slot_dim(slot);
    if local.nrows() != d || local.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: local.nrows(),
        });
    }
    let before: usize = (0..slot).map(|s| spec.slot_dim(s)).product();
    let after: usize = (slot + 1..spec.n_slots())
        .map(|s| spec.slot_dim(s))
        .product();
    let mut trips = Vec::with_capacity(local.nnz() * before * after);
    for b in 0..before {
        for (r, c, v) in local.iter() {
            let (rb, cb) = ((b * d + r) * after, (b * d + c) * after);
            for a in 0..after {
                trips.push((rb + a, cb + a, v));
            }
        }
    }
    let n = spec.dim();
    Ok(SparseOperator::from_triplets(n, n, trips))
}

/// Pure state on the composite qutrit ⊗ cavities space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    spec: HilbertSpec,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(spec: HilbertSpec, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: amps.len(),
            });
        }
        Ok(Self { spec, amps })
    }

    pub fn zeros(spec: &HilbertSpec) -> Self {
        Self {
            amps: vec![ZERO; spec.dim()],
            spec: spec.clone(),
        }
    }

    pub fn basis(spec: &HilbertSpec, level: Level, photons: &[usize]) -> Self {
        let mut s = Self::zeros(spec);
        s.amps[spec.flatten(level, photons)] = ONE;
        s
    }

    /// Tensor product `qutrit ⊗ cavities[0] ⊗ … ⊗ cavities[n-1]`.
    pub fn product(spec: &HilbertSpec, qutrit: [C64; 3], cavities: &[Ket]) -> Result<Self> {
        if cavities.len() != spec.n_cavities() {
            return Err(Error::DimensionMismatch {
                expected: spec.n_cavities(),
                got: cavities.len(),
            });
        }
        for (j, k) in cavities.iter().enumerate() {
            if k.dim() != spec.cutoff(j) + 1 {
                return Err(Error::DimensionMismatch {
                    expected: spec.cutoff(j) + 1,
                    got: k.dim(),
                });
            }
        }
        let mut amps = qutrit.to_vec();
        for k in cavities {
            let mut next = Vec::with_capacity(amps.len() * k.dim());
            for a in &amps {
                next.extend(k.0.iter().map(|b| a * b));
            }
            amps = next;
        }
        Self::new(spec.clone(), amps)
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        self.amps.iter_mut().for_each(|a| *a /= n);
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        inner(&self.amps, &op.mul_vec(&self.amps))
    }

    pub fn level_population(&self, level: Level) -> f64 {
        let b = self.spec.cavity_block();
        let start = level.index() * b;
        norm_sqr(&self.amps[start..start + b])
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(())
    }
}

/// Dense density matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    spec: HilbertSpec,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn new(spec: HilbertSpec, data: Vec<C64>) -> Result<Self> {
        let d = spec.dim();
        if data.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: data.len(),
            });
        }
        Ok(Self { spec, data })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        let d = a.len();
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = a[i] * a[j].conj();
            }
        }
        Self {
            spec: psi.spec().clone(),
            data,
        }
    }

    pub fn maximally_mixed(spec: &HilbertSpec) -> Self {
        let d = spec.dim();
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            data[i * d + i] = C64::new(1.0 / d as f64, 0.0);
        }
        Self {
            spec: spec.clone(),
            data,
        }
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// `(ρ + ρ†)/2` in place.
    pub fn symmetrize(&mut self) {
        let d = self.dim();
        for i in 0..d {
            self.data[i * d + i].im = 0.0;
            for j in i + 1..d {
                let avg = 0.5 * (self.data[i * d + j] + self.data[j * d + i].conj());
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg.conj();
            }
        }
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expect_pure(&self, psi: &[C64]) -> f64 {
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            acc += psi[i].conj() * inner_plain(row, psi);
        }
        acc.re
    }

    /// `tr(A ρ)`.
    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        let d = self.dim();
        op.iter().map(|(r, c, v)| v * self.data[c * d + r]).sum()
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.data)
    }

    /// Smallest eigenvalue from a dense Hermitian eigensolve.
    pub fn min_eigenvalue(&self) -> f64 {
        let mut m = self.to_dense();
        // exact Hermitian input for the solver
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Indefiniteness probe: true when `ρ + tol·I` admits a Cholesky factor.
    pub fn cholesky_probe(&self, tol: f64) -> bool {
        let mut m = self.to_dense();
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        for i in 0..self.dim() {
            m[(i, i)] += C64::new(tol, 0.0);
        }
        m.cholesky().is_some()
    }
}

fn inner_plain(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// States that can be scored against a pure target.
pub trait QuantumState {
    fn layout(&self) -> &HilbertSpec;
    /// `⟨ψ|ρ|ψ⟩` for the normalized pure `ψ`.
    fn overlap_with(&self, psi: &[C64]) -> f64;
}

impl QuantumState for StateVector {
    fn layout(&self) -> &HilbertSpec {
        &self.spec
    }

    fn overlap_with(&self, psi: &[C64]) -> f64 {
        inner(psi, &self.amps).norm_sqr()
    }
}

impl QuantumState for DensityMatrix {
    fn layout(&self) -> &HilbertSpec {
        &self.spec
    }

    fn overlap_with(&self, psi: &[C64]) -> f64 {
        self.expect_pure(psi)
    }
}

/// `F = √⟨ψ|ρ|ψ⟩`; for a pure state this is `|⟨ψ|φ⟩|`.
pub fn fidelity<S: QuantumState + ?Sized>(target: &StateVector, state: &S) -> Result<f64> {
    if target.spec() != state.layout() {
        return Err(Error::SpecMismatch);
    }
    target.check_normalized(NORM_TOL)?;
    Ok(state
        .overlap_with(target.amplitudes())
        .max(0.0)
        .sqrt()
        .min(1.0))
}
