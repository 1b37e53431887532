//! Logical workloads: qubit count, Toffolis per walk step, 1-norm and target.
//!
//! Workload files are flat TOML:
//!
//! ```toml
//! name = "hubbard-L5"
//! logical_qubits = 90
//! toffoli_per_step = 205
//! lambda = 200.0
//! delta_E = 0.01
//! beta = 10          # optional, default 10
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub name: String,
    pub logical_qubits: u64,
    pub toffoli_per_step: u64,
    /// Qubitization 1-norm.
    pub lambda: f64,
    /// Target energy precision.
    #[serde(rename = "delta_E")]
    pub delta_e: f64,
    #[serde(default = "default_beta")]
    pub beta: u32,
}

fn default_beta() -> u32 {
    10
}

impl WorkloadSpec {
    /// Phase precision `ε = ΔE/λ`.
    pub fn eps(&self) -> f64 {
        self.delta_e / self.lambda
    }

    pub fn validate(&self) -> Result<()> {
        if self.logical_qubits == 0 || self.toffoli_per_step == 0 {
            return invalid("logical_qubits and toffoli_per_step must be positive");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite() && self.delta_e > 0.0 && self.delta_e.is_finite()) {
            return invalid("lambda and delta_E must be positive and finite");
        }
        if !(self.eps() > 0.0 && self.eps() < 1.0) {
            return invalid(format!("ε = ΔE/λ = {} must lie in (0, 1)", self.eps()));
        }
        Ok(())
    }
}

/// Parse and validate a workload file.
pub fn parse_workload(text: &str) -> Result<WorkloadSpec> {
    let w: WorkloadSpec = toml::from_str(text).map_err(|e| Error::Config(toml_message(text, &e)))?;
    w.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(w)
}

/// `line:col: message` for a TOML error.
pub(crate) fn toml_message(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            format!("{line}:{col}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}

pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let col = offset - before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Toffolis per controlled walk step for the `L × L` Hubbard model at
/// `u/t = 4`, `β = 10`.
///
/// These are analytic approximations, `2.5N + 10⌈log₂N⌉ + 2β` with `N = 2L²`
/// (about ten T gates per spin-orbital in SELECT, plus unary iteration and
/// PREPARE rotations). They are not the counts behind the published curves,
/// which came from an external compiler; supply measured counts through a
/// workload file where available.
pub const HUBBARD_TOFFOLI_DEFAULTS: [(u32, u64); 4] = [(2, 70), (5, 205), (10, 600), (20, 2120)];

pub fn hubbard_default_toffoli(l: u32) -> Option<u64> {
    HUBBARD_TOFFOLI_DEFAULTS.iter().find(|(s, _)| *s == l).map(|&(_, t)| t)
}

/// `L × L` Hubbard workload with `2L² + ⌈12 + 3log₂(2L²)⌉ + β + 1` logical
/// qubits, `λ = 8L²` and `ΔE = 0.01`.
pub fn hubbard_workload(l: u32, toffoli_per_step: Option<u64>) -> Result<WorkloadSpec> {
    if l < 2 {
        return invalid(format!("lattice side must be >= 2, got {l}"));
    }
    let beta = 10u32;
    let n = 2.0 * (l as f64).powi(2);
    let ancillas = (12.0 + 3.0 * n.log2()).ceil() as u64;
    let toffoli = match toffoli_per_step.or_else(|| hubbard_default_toffoli(l)) {
        Some(t) => t,
        None => return invalid(format!("no default Toffoli count for L = {l}; supply toffoli_per_step")),
    };
    let w = WorkloadSpec {
        name: format!("hubbard-L{l}"),
        logical_qubits: n as u64 + ancillas + beta as u64 + 1,
        toffoli_per_step: toffoli,
        lambda: 8.0 * (l as f64).powi(2),
        delta_e: 0.01,
        beta,
    };
    w.validate()?;
    Ok(w)
}

/// Symmetry-shifted THC 1-norms `λ′` of the molecular active spaces.
pub const MOLECULAR_LAMBDAS: [(&str, f64); 5] = [
    ("N2", 4.66),
    ("H2O", 6.97),
    ("naphthalene", 6.45),
    ("anthracene", 12.12),
    ("Co(salophen)", 34.58),
];

/// Molecular workload at `ΔE = 10⁻³` with user-supplied logical costs.
pub fn molecular_workload(name: &str, logical_qubits: u64, toffoli_per_step: u64) -> Result<WorkloadSpec> {
    let Some(&(_, lambda)) = MOLECULAR_LAMBDAS.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)) else {
        return invalid(format!("unknown molecule {name}"));
    };
    let w = WorkloadSpec {
        name: name.to_string(),
        logical_qubits,
        toffoli_per_step,
        lambda,
        delta_e: 1e-3,
        beta: 10,
    };
    w.validate()?;
    Ok(w)
}
