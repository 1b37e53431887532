//! Phase estimators with full cost accounting.

pub mod mle;
pub mod msqpe;
pub mod rpe;

use serde::Serialize;

pub use mle::{MleResult, SinModel};
pub use msqpe::{msqpe_estimate, msqpe_plan, MsqpeConfig, MsqpeOptions, Regime, T1Rule};
pub use rpe::{rpe_estimate, rpe_estimate_exact, rpe_noiseless_config, rpe_noisy_config, RpeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitKind {
    /// Hadamard test measured in the X basis.
    HadamardX,
    /// Hadamard test measured in the Y basis.
    HadamardY,
    SinQpe,
}

/// One batch of identical circuits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitRecord {
    pub kind: CircuitKind,
    /// Oracle calls per shot.
    pub depth: u64,
    pub shots: u64,
    /// Sparse outcome histogram `(outcome, count)`.
    pub outcomes: Vec<(u64, u64)>,
}

impl CircuitRecord {
    pub fn cost(&self) -> u64 {
        self.depth * self.shots
    }
}

/// Diagnostics raised during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunFlags {
    /// Orders where `|Z̄| < 1e-12` and the angle was set to 0.
    pub arg_ties: u32,
    /// The likelihood had two grid maxima within tolerance.
    pub likelihood_tie: bool,
}

/// Record of one estimation experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRun {
    pub estimate: f64,
    pub total_cost: u64,
    pub max_depth: u64,
    pub circuits: Vec<CircuitRecord>,
    pub flags: RunFlags,
}

impl EstimatorRun {
    pub(crate) fn from_circuits(estimate: f64, circuits: Vec<CircuitRecord>, flags: RunFlags) -> Self {
        let total_cost = circuits.iter().map(CircuitRecord::cost).sum();
        let max_depth = circuits.iter().map(|c| c.depth).max().unwrap_or(0);
        EstimatorRun {
            estimate,
            total_cost,
            max_depth,
            circuits,
            flags,
        }
    }

    /// `Σ depth × shots` from the circuit log.
    pub fn recomputed_cost(&self) -> u64 {
        self.circuits.iter().map(|c| c.depth * c.shots).sum()
    }
}

pub(crate) fn sparse_counts(counts: &[u64]) -> Vec<(u64, u64)> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i as u64, c))
        .collect()
}
