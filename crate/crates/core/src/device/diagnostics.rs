use super::params::{lambda_and_gate_time, DeviceParams};

pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// Cross-cavity decoupling check for one pair of cavities.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMetric {
    pub j: usize,
    pub k: usize,
    /// `|Δ_j − Δ_k| / (|Δ_j⁻¹| + |Δ_k⁻¹|)` in (rad/s)².
    pub metric: f64,
    /// `g_j g_k` in (rad/s)².
    pub coupling_product: f64,
    pub quotient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticReport {
    pub threshold: f64,
    /// `|Δ_j| / g_j` per cavity.
    pub detuning_ratios: Vec<f64>,
    pub pairs: Vec<PairMetric>,
    pub lambdas: Vec<f64>,
    pub lambda_spread: f64,
    pub warnings: Vec<String>,
}

impl DiagnosticReport {
    pub fn passed(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Evaluate the large-detuning and cavity-decoupling conditions.
///
/// Violations are reported as warnings, never as errors.
pub fn diagnose_conditions(params: &DeviceParams, threshold: f64) -> DiagnosticReport {
    let n = params.n();
    let mut warnings = Vec::new();
    let detuning_ratios: Vec<f64> = (0..n)
        .map(|j| params.detuning(j).abs() / params.g[j])
        .collect();
    for (j, r) in detuning_ratios.iter().enumerate() {
        if !(*r >= threshold) {
            warnings.push(format!(
                "cavity {}: |Delta|/g = {:.3} below threshold {}",
                j + 1,
                r,
                threshold
            ));
        }
    }
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let (dj, dk) = (params.detuning(j), params.detuning(k));
            let metric = (dj - dk).abs() / (1.0 / dj.abs() + 1.0 / dk.abs());
            let coupling_product = params.g[j] * params.g[k];
            let quotient = metric / coupling_product;
            if !(quotient >= threshold) {
                warnings.push(format!(
                    "cavities {} and {}: decoupling quotient {:.3} below threshold {}",
                    j + 1,
                    k + 1,
                    quotient,
                    threshold
                ));
            }
            pairs.push(PairMetric {
                j,
                k,
                metric,
                coupling_product,
                quotient,
            });
        }
    }
    let timing = lambda_and_gate_time(params, None).expect("unchecked timing cannot fail");
    DiagnosticReport {
        threshold,
        detuning_ratios,
        pairs,
        lambdas: timing.lambdas,
        lambda_spread: timing.spread,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::params::{mhz, table1_params};

    #[test]
    fn table1_passes() {
        let r = diagnose_conditions(&table1_params(), DEFAULT_THRESHOLD);
        assert!(r.passed(), "{:?}", r.warnings);
        let unit = mhz(1.0) * mhz(1.0);
        let p12 = &r.pairs[0];
        assert!((p12.metric / unit - 1080.0).abs() < 1e-6);
        assert!((p12.coupling_product / unit - 24.8011).abs() < 1e-3);
        assert!((p12.quotient - 43.546).abs() < 1e-3);
        assert!((r.detuning_ratios[0] - 60.0 / 4.5).abs() < 1e-12);
        assert!(r.lambda_spread < 1e-12);
    }

    #[test]
    fn equal_detunings_flagged() {
        let mut p = table1_params();
        p.omega_c = vec![p.omega_c[0]; 3];
        p.g = vec![p.g[0]; 3];
        let r = diagnose_conditions(&p, DEFAULT_THRESHOLD);
        assert!(!r.passed());
        assert_eq!(r.pairs[0].metric, 0.0);
    }
}
