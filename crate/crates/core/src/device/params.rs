use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{Error, Result};

/// Angular frequency (rad/s) from a frequency in GHz.
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// Angular frequency (rad/s) from a frequency in MHz.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Seconds from microseconds.
pub fn us(t: f64) -> f64 {
    t * 1e-6
}

/// Ratios that derive the unwanted couplings from the `|e⟩↔|f⟩` couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingRules {
    /// `g̃_j / g_j` (transmon `|g⟩↔|e⟩` matrix element).
    pub tilde_ratio: f64,
    /// `g'_j / g_j` (weak `|g⟩↔|f⟩` transition).
    pub prime_ratio: f64,
    /// `g_kl / max_j g_j` for every cavity pair.
    pub cross_ratio: f64,
}

impl Default for CouplingRules {
    fn default() -> Self {
        Self {
            tilde_ratio: FRAC_1_SQRT_2,
            prime_ratio: 0.01,
            cross_ratio: 0.01,
        }
    }
}

/// Physical constants of the qutrit–cavity device.
///
/// All frequencies and couplings are angular (rad/s) and all rates are in 1/s.
/// Detunings are always derived from the base frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceParams {
    pub alpha: f64,
    pub omega_eg: f64,
    pub omega_fe: f64,
    pub omega_fg: f64,
    pub omega_c: Vec<f64>,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
    pub g_tilde: Vec<f64>,
    /// Symmetric crosstalk matrix with zero diagonal.
    pub g_cross: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    pub gamma_eg: f64,
    pub gamma_fe: f64,
    pub gamma_fg: f64,
    pub gamma_phi_e: f64,
    pub gamma_phi_f: f64,
    pub delta_mix: f64,
    pub c_mismatch: f64,
    pub rules: CouplingRules,
}

/// Relative tolerance on `ω_fg = ω_eg + ω_fe`.
const LEVEL_SUM_TOL: f64 = 1e-9;

impl DeviceParams {
    pub fn n(&self) -> usize {
        self.omega_c.len()
    }

    /// `Δ_j = ω_fe − ω_cj`.
    pub fn detuning(&self, j: usize) -> f64 {
        self.omega_fe - self.omega_c[j]
    }

    pub fn detunings(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.detuning(j)).collect()
    }

    /// `Δ'_j = ω_fg − ω_cj`.
    pub fn detuning_fg(&self, j: usize) -> f64 {
        self.omega_fg - self.omega_c[j]
    }

    /// `Δ̃_j = ω_eg − ω_cj`.
    pub fn detuning_eg(&self, j: usize) -> f64 {
        self.omega_eg - self.omega_c[j]
    }

    /// `Δ_kl = ω_ck − ω_cl`.
    pub fn cavity_detuning(&self, k: usize, l: usize) -> f64 {
        self.omega_c[k] - self.omega_c[l]
    }

    /// Dispersive shift `λ_j = g_j² / Δ_j`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.g[j] * self.g[j] / self.detuning(j)
    }

    pub fn max_g(&self) -> f64 {
        self.g.iter().copied().fold(0.0, f64::max)
    }

    /// Recompute `g̃`, `g'` and the crosstalk matrix from `g` and the rules.
    pub fn apply_coupling_rules(&mut self) {
        let r = self.rules;
        self.g_tilde = self.g.iter().map(|g| r.tilde_ratio * g).collect();
        self.g_prime = self.g.iter().map(|g| r.prime_ratio * g).collect();
        let cross = r.cross_ratio * self.max_g();
        let n = self.n();
        self.g_cross = (0..n)
            .map(|k| (0..n).map(|l| if k == l { 0.0 } else { cross }).collect())
            .collect();
    }

    /// Copy with `g_2…g_n` re-solved from `g_1` for mismatch `c`.
    pub fn with_mismatch(&self, c: f64) -> Result<Self> {
        let mut p = self.clone();
        p.g = solve_matched_couplings(self.g[0], &self.detunings(), c)?;
        p.c_mismatch = c;
        p.apply_coupling_rules();
        Ok(p)
    }

    /// Copy with every cavity decay rate set to `1 / kappa_inv`.
    pub fn with_kappa_inv(&self, kappa_inv: f64) -> Result<Self> {
        if !(kappa_inv > 0.0) {
            return Err(Error::InvalidArgument(
                "cavity lifetime must be positive".into(),
            ));
        }
        let mut p = self.clone();
        p.kappa = vec![1.0 / kappa_inv; self.n()];
        Ok(p)
    }

    /// Copy with every dissipative rate set to zero.
    pub fn without_decoherence(&self) -> Self {
        let mut p = self.clone();
        p.kappa = vec![0.0; self.n()];
        p.gamma_eg = 0.0;
        p.gamma_fe = 0.0;
        p.gamma_fg = 0.0;
        p.gamma_phi_e = 0.0;
        p.gamma_phi_f = 0.0;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Config("at least one cavity is required".into()));
        }
        for (name, len) in [
            ("g", self.g.len()),
            ("g_prime", self.g_prime.len()),
            ("g_tilde", self.g_tilde.len()),
            ("g_cross", self.g_cross.len()),
            ("kappa", self.kappa.len()),
        ] {
            if len != n {
                return Err(Error::Config(format!(
                    "{name} has {len} entries for {n} cavities"
                )));
            }
        }
        if self.g_cross.iter().any(|row| row.len() != n) {
            return Err(Error::Config("g_cross must be square".into()));
        }
        let sum = self.omega_eg + self.omega_fe;
        if (self.omega_fg - sum).abs() > LEVEL_SUM_TOL * sum.abs() {
            return Err(Error::Config(format!(
                "omega_fg ({:.6} GHz) differs from omega_eg + omega_fe ({:.6} GHz)",
                self.omega_fg / ghz(1.0),
                sum / ghz(1.0)
            )));
        }
        let rates = [
            self.gamma_eg,
            self.gamma_fe,
            self.gamma_fg,
            self.gamma_phi_e,
            self.gamma_phi_f,
        ];
        if rates
            .iter()
            .chain(&self.kappa)
            .any(|r| !(*r >= 0.0) || !r.is_finite())
        {
            return Err(Error::Config(
                "decay and dephasing rates must be finite and non-negative".into(),
            ));
        }
        if let Some(j) = (0..n).find(|&j| self.detuning(j) == 0.0) {
            return Err(Error::Config(format!(
                "cavity {} is resonant with the e-f transition",
                j + 1
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if !(self.delta_mix.abs() < 1.0) {
            return Err(Error::Config("delta must lie in (-1, 1)".into()));
        }
        if !(self.c_mismatch.abs() < 1.0) {
            return Err(Error::Config("c must lie in (-1, 1)".into()));
        }
        Ok(())
    }
}

/// The three-cavity device used for the reported simulations, with
/// `κ⁻¹ = 45 μs` on every cavity.
pub fn table1_params() -> DeviceParams {
    let omega_c = vec![ghz(3.24), ghz(3.21), ghz(3.18)];
    let omega_fe = ghz(3.3);
    let detunings: Vec<f64> = omega_c.iter().map(|w| omega_fe - w).collect();
    let g =
        solve_matched_couplings(mhz(4.5), &detunings, 0.0).expect("table values are consistent");
    let mut p = DeviceParams {
        alpha: 1.25,
        omega_eg: ghz(4.0),
        omega_fe,
        omega_fg: ghz(7.3),
        omega_c,
        g,
        g_prime: Vec::new(),
        g_tilde: Vec::new(),
        g_cross: Vec::new(),
        kappa: vec![1.0 / us(45.0); 3],
        gamma_eg: 1.0 / us(60.0),
        gamma_fe: 1.0 / us(30.0),
        gamma_fg: 1.0 / us(150.0),
        gamma_phi_e: 1.0 / us(20.0),
        gamma_phi_f: 1.0 / us(20.0),
        delta_mix: 0.0,
        c_mismatch: 0.0,
        rules: CouplingRules::default(),
    };
    p.apply_coupling_rules();
    p
}

/// Couplings `g_j` satisfying `g₁²/Δ₁ = (1+c) g₂²/Δ₂ = (1−c) g₃²/Δ₃`.
///
/// With `c = 0` this is the equal-shift condition for any number of cavities.
pub fn solve_matched_couplings(g1: f64, detunings: &[f64], c: f64) -> Result<Vec<f64>> {
    if detunings.is_empty() {
        return Err(Error::InvalidArgument("no detunings given".into()));
    }
    if !(c.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "|c| must be below 1, got {c}"
        )));
    }
    if c != 0.0 && detunings.len() != 3 {
        return Err(Error::InvalidArgument(
            "a nonzero mismatch needs exactly three cavities".into(),
        ));
    }
    if !(g1 > 0.0) {
        return Err(Error::InvalidArgument("g1 must be positive".into()));
    }
    let d1 = detunings[0];
    if d1 == 0.0
        || detunings
            .iter()
            .any(|d| d.signum() != d1.signum() || *d == 0.0)
    {
        return Err(Error::InvalidArgument(
            "detunings must be nonzero and share one sign".into(),
        ));
    }
    let weight = |j: usize| match j {
        1 => 1.0 + c,
        2 => 1.0 - c,
        _ => 1.0,
    };
    Ok(detunings
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if j == 0 {
                g1
            } else {
                g1 * (d / (d1 * weight(j))).sqrt()
            }
        })
        .collect())
}

/// Shift and duration of the gate.
#[derive(Clone, Debug, PartialEq)]
pub struct GateTiming {
    /// `λ = g₁²/Δ₁` (rad/s).
    pub lambda: f64,
    /// `t = π / (2λ)` (s).
    pub t_gate: f64,
    /// Per-cavity `λ_j`.
    pub lambdas: Vec<f64>,
    /// `max_j |λ_j − λ₁| / |λ₁|`.
    pub spread: f64,
}

/// `λ` and gate time; with `require_matched = Some(tol)` a relative `λ_j`
/// spread above `tol` is an error.
pub fn lambda_and_gate_time(
    params: &DeviceParams,
    require_matched: Option<f64>,
) -> Result<GateTiming> {
    let lambdas: Vec<f64> = (0..params.n()).map(|j| params.lambda(j)).collect();
    let lambda = lambdas[0];
    let spread = lambdas
        .iter()
        .map(|l| ((l - lambda) / lambda).abs())
        .fold(0.0, f64::max);
    if let Some(tol) = require_matched {
        if spread > tol {
            return Err(Error::Unmatched { spread });
        }
    }
    Ok(GateTiming {
        lambda,
        t_gate: PI / (2.0 * lambda.abs()),
        lambdas,
        spread,
    })
}

/// Loaded quality factors `Q_j = ω_cj κ⁻¹`.
pub fn quality_factors(params: &DeviceParams, kappa_inv: f64) -> Result<Vec<f64>> {
    if !(kappa_inv > 0.0) {
        return Err(Error::InvalidArgument(
            "cavity lifetime must be positive".into(),
        ));
    }
    Ok(params.omega_c.iter().map(|w| w * kappa_inv).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_detunings() {
        let p = table1_params();
        p.validate().unwrap();
        assert!((p.detuning(0) / mhz(1.0) - 60.0).abs() < 1e-6);
        assert!((p.detuning_fg(2) / mhz(1.0) - 4120.0).abs() < 1e-6);
        assert!((p.detuning_eg(1) / mhz(1.0) - 790.0).abs() < 1e-6);
        assert!((p.cavity_detuning(0, 2) / mhz(1.0) - 60.0).abs() < 1e-6);
    }

    #[test]
    fn table1_derived_couplings() {
        let p = table1_params();
        assert!((p.g_tilde[0] / mhz(1.0) - 3.182).abs() < 1e-3);
        assert!((p.g_prime[0] / mhz(1.0) - 0.045).abs() < 1e-12);
        assert!((p.g_cross[0][1] / mhz(1.0) - 0.0636396).abs() < 1e-6);
        assert_eq!(p.g_cross[1][1], 0.0);
    }

    #[test]
    fn matched_couplings() {
        let p = table1_params();
        let g = solve_matched_couplings(mhz(4.5), &p.detunings(), 0.0).unwrap();
        assert_eq!(format!("{:.2}", g[1] / mhz(1.0)), "5.51");
        assert_eq!(format!("{:.2}", g[2] / mhz(1.0)), "6.36");
        let equal = solve_matched_couplings(1.0, &[2.0, 2.0, 2.0, 2.0], 0.0).unwrap();
        assert!(equal.iter().all(|&x| x == 1.0));
        let gc = solve_matched_couplings(mhz(4.5), &p.detunings(), 0.05).unwrap();
        // g3 = g1 √(Δ3 / ((1 − c) Δ1))
        assert!((gc[2] / mhz(1.0) - 6.529286).abs() < 1e-5);
    }

    #[test]
    fn matched_couplings_errors() {
        assert!(solve_matched_couplings(1.0, &[1.0, 2.0, 3.0], 1.0).is_err());
        assert!(solve_matched_couplings(1.0, &[1.0, -2.0, 3.0], 0.0).is_err());
        assert!(solve_matched_couplings(1.0, &[1.0, 2.0], 0.1).is_err());
    }

    #[test]
    fn gate_time() {
        let t = lambda_and_gate_time(&table1_params(), Some(1e-12)).unwrap();
        assert!((t.lambda / mhz(1.0) - 0.3375).abs() < 1e-12);
        assert!((t.t_gate / us(1.0) - 0.7407).abs() < 1e-4);
        let mut p = table1_params();
        p.g[0] *= 2.0;
        let t2 = lambda_and_gate_time(&p, None).unwrap();
        assert!((t2.t_gate * 4.0 - t.t_gate).abs() < 1e-18);
        assert!(lambda_and_gate_time(&p, Some(1e-6)).is_err());
    }

    #[test]
    fn mismatch_shifts() {
        let p = table1_params().with_mismatch(0.05).unwrap();
        let l = (0..3).map(|j| p.lambda(j)).collect::<Vec<_>>();
        assert!((l[1] - l[0] / 1.05).abs() < 1e-9 * l[0]);
        assert!((l[2] - l[0] / 0.95).abs() < 1e-9 * l[0]);
    }

    #[test]
    fn quality() {
        let q = quality_factors(&table1_params(), us(45.0)).unwrap();
        assert!((q[0] / 9.16e5 - 1.0).abs() < 5e-3);
        let q2 = quality_factors(&table1_params(), us(90.0)).unwrap();
        assert!((q2[1] - 2.0 * q[1]).abs() < 1e-6);
        let q100 = quality_factors(&table1_params(), us(100.0)).unwrap();
        assert!((q100[0] / 2.04e6 - 1.0).abs() < 5e-3);
        assert!(quality_factors(&table1_params(), 0.0).is_err());
    }

    #[test]
    fn validation_catches_inconsistent_levels() {
        let mut p = table1_params();
        p.omega_fg = ghz(7.2);
        assert!(p.validate().is_err());
        let mut p = table1_params();
        p.gamma_eg = -1.0;
        assert!(p.validate().is_err());
    }
}
