use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, StateVector};

/// Direction of the change of picture generated by a diagonal `H₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameDirection {
    /// Lab → interaction: multiply by `e^{+iH₀t}`.
    ToInteraction,
    /// Interaction → lab: multiply by `e^{−iH₀t}`.
    ToLab,
}

impl FrameDirection {
    fn sign(self) -> f64 {
        match self {
            FrameDirection::ToInteraction => 1.0,
            FrameDirection::ToLab => -1.0,
        }
    }
}

/// Apply `e^{±iH₀t}` for `H₀ = diag(h0)`.
pub fn frame_transform(
    state: &StateVector,
    h0: &[f64],
    t: f64,
    direction: FrameDirection,
) -> Result<StateVector> {
    if h0.len() != state.spec().dim() {
        return Err(Error::DimensionMismatch {
            expected: state.spec().dim(),
            got: h0.len(),
        });
    }
    let s = direction.sign();
    let amps = state
        .amplitudes()
        .iter()
        .zip(h0)
        .map(|(a, e)| a * C64::from_polar(1.0, s * e * t))
        .collect();
    StateVector::new(state.spec().clone(), amps)
}

/// Density-matrix version: `ρ_ij ↦ ρ_ij e^{±i(E_i − E_j)t}`.
pub fn frame_transform_density(
    rho: &DensityMatrix,
    h0: &[f64],
    t: f64,
    direction: FrameDirection,
) -> Result<DensityMatrix> {
    let d = rho.dim();
    if h0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h0.len(),
        });
    }
    let s = direction.sign();
    let mut data = rho.data().to_vec();
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] *= C64::from_polar(1.0, s * (h0[i] - h0[j]) * t);
        }
    }
    DensityMatrix::new(rho.spec().clone(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{HilbertSpec, Level};

    #[test]
    fn zero_time_and_inverse() {
        let spec = HilbertSpec::uniform(1, 2).unwrap();
        let mut psi = StateVector::basis(&spec, Level::E, &[1]);
        psi.amplitudes_mut()[0] = C64::new(0.0, 1.0);
        let psi = psi.normalized();
        let h0: Vec<f64> = (0..spec.dim()).map(|i| 1e9 * i as f64).collect();
        let same = frame_transform(&psi, &h0, 0.0, FrameDirection::ToInteraction).unwrap();
        assert_eq!(same, psi);
        let there = frame_transform(&psi, &h0, 3.7e-7, FrameDirection::ToInteraction).unwrap();
        let back = frame_transform(&there, &h0, 3.7e-7, FrameDirection::ToLab).unwrap();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
