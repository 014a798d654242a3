use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{coherent_state, HilbertSpec, Ket, StateVector};

/// `Ñ_α = 1/√(2 + 2√(1−δ²) e^{−2α²})`, the analytic normalizer of one imbalanced cat.
pub fn nonideal_normalizer(delta: f64, alpha: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(1.0 / (2.0 + 2.0 * (1.0 - delta * delta).sqrt() * (-2.0 * alpha * alpha).exp()).sqrt())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "|delta| must be below 1, got {delta}"
        )));
    }
    Ok(())
}

/// Imbalanced preparation: every cavity in `Ñ_α(√(1+δ)|α⟩ + √(1−δ)|−α⟩)` and the
/// qutrit in `(√(1+δ)|g⟩ + √(1−δ)|e⟩)/√2`, renormalized in the truncated space.
pub fn nonideal_initial_state(delta: f64, alpha: f64, spec: &HilbertSpec) -> Result<StateVector> {
    let norm = nonideal_normalizer(delta, alpha)?;
    let (wp, wm) = ((1.0 + delta).sqrt(), (1.0 - delta).sqrt());
    let cats = (0..spec.n_cavities())
        .map(|j| {
            let plus = coherent_state(C64::new(alpha, 0.0), spec.cutoff(j))?.ket;
            let minus = coherent_state(C64::new(-alpha, 0.0), spec.cutoff(j))?.ket;
            Ok(Ket(plus
                .0
                .iter()
                .zip(&minus.0)
                .map(|(a, b)| norm * (wp * a + wm * b))
                .collect()))
        })
        .collect::<Result<Vec<Ket>>>()?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let qutrit = [
        C64::new(h * wp, 0.0),
        C64::new(h * wm, 0.0),
        C64::new(0.0, 0.0),
    ];
    Ok(StateVector::product(spec, qutrit, &cats)?.normalized())
}
