//! Parameter files in laboratory units.
//!
//! Frequencies are written in GHz, couplings in MHz and lifetimes in μs; the
//! conversion to angular frequencies and rates happens only here.

use serde::{Deserialize, Serialize};

use crate::device::{ghz, mhz, solve_matched_couplings, us, CouplingRules, DeviceParams};
use crate::error::{Error, Result};

/// Device section of a parameter file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub alpha: f64,
    pub omega_eg_ghz: f64,
    pub omega_fe_ghz: f64,
    pub omega_fg_ghz: f64,
    pub omega_c_ghz: Vec<f64>,
    /// `g₁/2π`; the remaining `g_j` follow from the matching rule.
    pub g1_mhz: f64,
    /// Explicit `g_j/2π`, overriding the matching rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_mhz: Option<Vec<f64>>,
    #[serde(default = "default_tilde")]
    pub g_tilde_ratio: f64,
    #[serde(default = "default_small_ratio")]
    pub g_prime_ratio: f64,
    #[serde(default = "default_small_ratio")]
    pub g_cross_ratio: f64,
    /// One lifetime for every cavity, or one per cavity.
    pub kappa_inv_us: Lifetimes,
    pub gamma_eg_inv_us: f64,
    pub gamma_fe_inv_us: f64,
    pub gamma_fg_inv_us: f64,
    pub gamma_phi_e_inv_us: f64,
    pub gamma_phi_f_inv_us: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lifetimes {
    Shared(f64),
    PerCavity(Vec<f64>),
}

fn default_tilde() -> f64 {
    CouplingRules::default().tilde_ratio
}

fn default_small_ratio() -> f64 {
    CouplingRules::default().prime_ratio
}

/// Inverse of a lifetime in μs; an infinite lifetime (or zero entry) means no decay.
fn rate(inv_us: f64, name: &str) -> Result<f64> {
    if inv_us.is_infinite() && inv_us > 0.0 {
        return Ok(0.0);
    }
    if !(inv_us > 0.0) {
        return Err(Error::Config(format!(
            "{name} must be a positive lifetime in μs"
        )));
    }
    Ok(1.0 / us(inv_us))
}

impl DeviceFile {
    /// The device used for the reported simulations.
    pub fn table1() -> Self {
        Self {
            alpha: 1.25,
            omega_eg_ghz: 4.0,
            omega_fe_ghz: 3.3,
            omega_fg_ghz: 7.3,
            omega_c_ghz: vec![3.24, 3.21, 3.18],
            g1_mhz: 4.5,
            g_mhz: None,
            g_tilde_ratio: default_tilde(),
            g_prime_ratio: 0.01,
            g_cross_ratio: 0.01,
            kappa_inv_us: Lifetimes::Shared(45.0),
            gamma_eg_inv_us: 60.0,
            gamma_fe_inv_us: 30.0,
            gamma_fg_inv_us: 150.0,
            gamma_phi_e_inv_us: 20.0,
            gamma_phi_f_inv_us: 20.0,
            delta: 0.0,
            c: 0.0,
        }
    }

    pub fn to_params(&self) -> Result<DeviceParams> {
        let n = self.omega_c_ghz.len();
        let omega_c: Vec<f64> = self.omega_c_ghz.iter().map(|&f| ghz(f)).collect();
        let omega_fe = ghz(self.omega_fe_ghz);
        let g = match &self.g_mhz {
            Some(list) => list.iter().map(|&f| mhz(f)).collect(),
            None => {
                let detunings: Vec<f64> = omega_c.iter().map(|w| omega_fe - w).collect();
                solve_matched_couplings(mhz(self.g1_mhz), &detunings, self.c)
                    .map_err(|e| Error::Config(e.to_string()))?
            }
        };
        let kappa = match &self.kappa_inv_us {
            Lifetimes::Shared(t) => vec![rate(*t, "kappa_inv_us")?; n],
            Lifetimes::PerCavity(list) => {
                if list.len() != n {
                    return Err(Error::Config(format!(
                        "kappa_inv_us has {} entries for {n} cavities",
                        list.len()
                    )));
                }
                list.iter()
                    .map(|&t| rate(t, "kappa_inv_us"))
                    .collect::<Result<_>>()?
            }
        };
        let mut p = DeviceParams {
            alpha: self.alpha,
            omega_eg: ghz(self.omega_eg_ghz),
            omega_fe,
            omega_fg: ghz(self.omega_fg_ghz),
            omega_c,
            g,
            g_prime: Vec::new(),
            g_tilde: Vec::new(),
            g_cross: Vec::new(),
            kappa,
            gamma_eg: rate(self.gamma_eg_inv_us, "gamma_eg_inv_us")?,
            gamma_fe: rate(self.gamma_fe_inv_us, "gamma_fe_inv_us")?,
            gamma_fg: rate(self.gamma_fg_inv_us, "gamma_fg_inv_us")?,
            gamma_phi_e: rate(self.gamma_phi_e_inv_us, "gamma_phi_e_inv_us")?,
            gamma_phi_f: rate(self.gamma_phi_f_inv_us, "gamma_phi_f_inv_us")?,
            delta_mix: self.delta,
            c_mismatch: self.c,
            rules: CouplingRules {
                tilde_ratio: self.g_tilde_ratio,
                prime_ratio: self.g_prime_ratio,
                cross_ratio: self.g_cross_ratio,
            },
        };
        p.apply_coupling_rules();
        p.validate()?;
        Ok(p)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("device file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::table1_params;

    #[test]
    fn table1_file_matches_builtin() {
        let p = DeviceFile::table1().to_params().unwrap();
        let q = table1_params();
        assert_eq!(p.omega_c, q.omega_c);
        for (a, b) in p.g.iter().zip(&q.g) {
            assert!((a - b).abs() < 1e-9 * b);
        }
        assert_eq!(p.kappa, q.kappa);
    }

    #[test]
    fn round_trip_is_exact() {
        let f = DeviceFile::table1();
        let back = DeviceFile::from_toml(&f.to_toml()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_params().unwrap(), f.to_params().unwrap());
    }

    #[test]
    fn unknown_keys_and_bad_units_rejected() {
        let text = DeviceFile::table1().to_toml() + "bogus = 1\n";
        let err = DeviceFile::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let mut f = DeviceFile::table1();
        f.gamma_eg_inv_us = -3.0;
        assert!(f.to_params().is_err());
        f = DeviceFile::table1();
        f.omega_fg_ghz = 7.2;
        assert!(f.to_params().is_err());
    }
}
