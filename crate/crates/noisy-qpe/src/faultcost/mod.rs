//! Surface-code resource models.

pub mod crossover;
pub mod factory;
pub mod layout;
pub mod workload;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use crossover::{crossover_cell, crossover_max_depth, crossover_max_depth_bruteforce, CrossoverCell, CrossoverMode};
pub use factory::{Ccz2tFactory, FactoryModel};
pub use layout::{optimize_layout, standard_ft_point, ResourcePoint};
pub use workload::{hubbard_workload, molecular_workload, parse_workload, WorkloadSpec};

/// Surface-code threshold used in `Λ = threshold / p_phys`.
pub const THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalAssumptions {
    pub p_phys: f64,
    /// Seconds per surface-code cycle.
    pub cycle_time: f64,
    /// Seconds per raw physical gate.
    pub gate_time_raw: f64,
    pub threshold: f64,
    /// Extra fraction of data-block qubits spent on routing.
    pub routing_overhead: f64,
    /// Largest code distance searched.
    pub max_distance: u32,
}

impl Default for PhysicalAssumptions {
    fn default() -> Self {
        PhysicalAssumptions {
            p_phys: 1e-3,
            cycle_time: 1e-6,
            gate_time_raw: 20e-9,
            threshold: THRESHOLD,
            routing_overhead: 0.5,
            max_distance: 35,
        }
    }
}

impl PhysicalAssumptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_phys > 0.0 && self.p_phys < self.threshold) {
            return invalid(format!(
                "p_phys must lie in (0, threshold = {}), got {}",
                self.threshold, self.p_phys
            ));
        }
        if !(self.cycle_time > 0.0 && self.gate_time_raw > 0.0) {
            return invalid("times must be positive");
        }
        if !(self.routing_overhead >= 0.0 && self.routing_overhead.is_finite()) {
            return invalid("routing overhead must be >= 0");
        }
        if self.max_distance < 3 {
            return invalid("max_distance must be >= 3");
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.threshold / self.p_phys
    }

    /// Logical error per qubit per cycle, `0.1·Λ^{−(d+1)/2}`.
    pub fn error_per_cycle(&self, d: u32) -> f64 {
        0.1 * self.lambda().powf(-((d + 1) as f64) / 2.0)
    }
}

/// `Λ = 0.01/p_phys`.
pub fn lambda_factor(p_phys: f64) -> Result<f64> {
    if !(p_phys > 0.0 && p_phys < THRESHOLD) {
        return invalid(format!("p_phys must lie in (0, {THRESHOLD}), got {p_phys}"));
    }
    Ok(THRESHOLD / p_phys)
}

/// Logical error per cycle `0.1·Λ^{−(d+1)/2}`.
pub fn error_per_cycle(lambda: f64, d: u32) -> f64 {
    0.1 * lambda.powf(-((d + 1) as f64) / 2.0)
}

/// `N'_phys/N_phys ≈ 1 − 4log_Λ(R)/d + 4log_Λ²(R)/d²` for circuits shortened
/// by a factor `R`.
pub fn qubit_savings(r: f64, d: u32, lambda: f64) -> Result<f64> {
    if !(r >= 1.0 && r.is_finite()) {
        return invalid(format!("division factor must be >= 1, got {r}"));
    }
    if d < 3 {
        return invalid(format!("distance must be >= 3, got {d}"));
    }
    if !(lambda > 1.0 && lambda.is_finite()) {
        return invalid(format!("Λ must exceed 1, got {lambda}"));
    }
    let l = r.ln() / lambda.ln();
    let d = d as f64;
    Ok(1.0 - 4.0 * l / d + 4.0 * l * l / (d * d))
}

/// `1 − Π(1 − p_i)^{n_i}` evaluated in log space.
pub fn compound_failure(terms: &[(f64, f64)]) -> f64 {
    let log_success: f64 = terms.iter().map(|&(p, n)| n * (-p).ln_1p()).sum();
    (-log_success.exp_m1()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_examples() {
        assert!((lambda_factor(1e-3).unwrap() - 10.0).abs() < 1e-12);
        assert!(lambda_factor(0.01).is_err());
        assert!((error_per_cycle(10.0, 11) - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn savings_examples() {
        assert_eq!(qubit_savings(1.0, 11, 10.0).unwrap(), 1.0);
        let s = qubit_savings(40.0, 11, 10.0).unwrap();
        assert!((s - 0.5).abs() < 0.03, "{s}");
        let s10 = qubit_savings(10.0, 11, 10.0).unwrap();
        assert!((s10 - (1.0 - 2.0 / 11.0f64).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn compound_failure_is_exact() {
        let f = compound_failure(&[(0.1, 2.0), (0.5, 1.0)]);
        assert!((f - (1.0 - 0.81 * 0.5)).abs() < 1e-15);
        assert_eq!(compound_failure(&[(1e-3, 1e9)]), 1.0);
        assert_eq!(compound_failure(&[]), 0.0);
    }
}
