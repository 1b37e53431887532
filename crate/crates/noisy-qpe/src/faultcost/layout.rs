//! Code-distance and factory optimization for one workload.
//!
//! A candidate `(d, d0, d1)` with `n_f` factories runs every Toffoli in
//! `max(3d, cycles_per_state/n_f)` cycles. Its per-circuit failure compounds
//! data errors over `qubits × cycles` logical cells and state infidelity over
//! all Toffolis of the deepest circuit. Feasible candidates meet the failure
//! budget; the one with the smallest qubit-seconds volume is returned.

use rayon::prelude::*;
use serde::Serialize;

use super::factory::FactoryModel;
use super::workload::WorkloadSpec;
use super::{compound_failure, PhysicalAssumptions};
use crate::error::{invalid, Error, Result};
use crate::estimators::msqpe_plan;

/// Lattice-surgery cycles per Toffoli per unit of data distance.
pub const TOFFOLI_CYCLES_PER_DISTANCE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourcePoint {
    /// Residual error rate per walk step; NaN for fixed-δ points.
    pub gamma: f64,
    pub d: u32,
    pub d0: u32,
    pub d1: u32,
    pub n_factories: u32,
    pub physical_qubits: f64,
    /// Seconds for all circuits.
    pub wall_clock: f64,
    pub spacetime_volume: f64,
    /// Walk steps of the deepest circuit.
    pub depth: u64,
    /// Walk steps over all circuits.
    pub total_steps: u64,
    pub failure_per_circuit: f64,
    pub failure_budget: f64,
}

/// Circuit to be laid out.
#[derive(Debug, Clone, Copy)]
pub struct CircuitDemand {
    pub depth: u64,
    pub total_steps: u64,
    pub failure_budget: f64,
}

fn odd(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).filter(|d| d % 2 == 1).collect()
}

/// Evaluate one candidate.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_candidate(
    workload: &WorkloadSpec,
    demand: &CircuitDemand,
    a: &PhysicalAssumptions,
    factory: &dyn FactoryModel,
    n_factories: u32,
    d: u32,
    d0: u32,
    d1: u32,
) -> ResourcePoint {
    let toffolis = demand.depth as f64 * workload.toffoli_per_step as f64;
    let cycles_per_toffoli =
        (TOFFOLI_CYCLES_PER_DISTANCE * d as f64).max(factory.cycles_per_state(d0, d1) / n_factories as f64);
    let data_logical = workload.logical_qubits as f64 * (1.0 + a.routing_overhead);
    let cells = data_logical * toffolis * cycles_per_toffoli;
    let failure = compound_failure(&[
        (a.error_per_cycle(d), cells),
        (factory.output_infidelity(a, d0, d1), toffolis),
    ]);
    let physical_qubits = data_logical * 2.0 * (d as f64).powi(2) + n_factories as f64 * factory.footprint(d0, d1);
    let wall_clock =
        demand.total_steps as f64 * workload.toffoli_per_step as f64 * cycles_per_toffoli * a.cycle_time;
    ResourcePoint {
        gamma: f64::NAN,
        d,
        d0,
        d1,
        n_factories,
        physical_qubits,
        wall_clock,
        spacetime_volume: physical_qubits * wall_clock,
        depth: demand.depth,
        total_steps: demand.total_steps,
        failure_per_circuit: failure,
        failure_budget: demand.failure_budget,
    }
}

fn better(a: &ResourcePoint, b: &ResourcePoint) -> bool {
    a.spacetime_volume
        .total_cmp(&b.spacetime_volume)
        .then((a.d, a.d0, a.d1).cmp(&(b.d, b.d0, b.d1)))
        .is_lt()
}

/// Exhaustive search over odd `d, d0, d1 ∈ [3, max_distance]`.
pub fn search_layout(
    workload: &WorkloadSpec,
    demand: &CircuitDemand,
    a: &PhysicalAssumptions,
    factory: &dyn FactoryModel,
    n_factories: u32,
) -> Result<ResourcePoint> {
    a.validate()?;
    workload.validate()?;
    if !(1..=2).contains(&n_factories) {
        return invalid(format!("factory count must be 1 or 2, got {n_factories}"));
    }
    if !(demand.failure_budget > 0.0 && demand.failure_budget < 1.0) {
        return invalid(format!("failure budget must lie in (0, 1), got {}", demand.failure_budget));
    }
    let ds = odd(3, a.max_distance);
    let mut triples = Vec::with_capacity(ds.len().pow(3));
    for &d in &ds {
        for &d0 in &ds {
            for &d1 in &ds {
                triples.push((d, d0, d1));
            }
        }
    }
    let evaluated: Vec<ResourcePoint> = triples
        .par_iter()
        .map(|&(d, d0, d1)| evaluate_candidate(workload, demand, a, factory, n_factories, d, d0, d1))
        .collect();
    let mut best: Option<ResourcePoint> = None;
    let mut closest = f64::INFINITY;
    for p in evaluated {
        if p.failure_per_circuit <= demand.failure_budget {
            if best.as_ref().is_none_or(|b| better(&p, b)) {
                best = Some(p);
            }
        } else {
            closest = closest.min(p.failure_per_circuit / demand.failure_budget);
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no distances up to {} meet the failure budget {:.3e}; best candidate exceeds it by {closest:.3}x",
            a.max_distance, demand.failure_budget
        ))
    })
}

/// Plan the sin-state circuits for `(ε, γ)` and lay them out with failure per
/// circuit at most `1 − e^{−γT}`.
pub fn optimize_layout(
    workload: &WorkloadSpec,
    gamma: f64,
    a: &PhysicalAssumptions,
    factory: &dyn FactoryModel,
    n_factories: u32,
) -> Result<ResourcePoint> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return invalid(format!("γ must be positive, got {gamma}"));
    }
    workload.validate()?;
    let plan = msqpe_plan(workload.eps(), gamma)?;
    let demand = CircuitDemand {
        depth: plan.depth,
        total_steps: plan.total_cost(),
        failure_budget: -(-gamma * plan.depth as f64).exp_m1(),
    };
    let mut p = search_layout(workload, &demand, a, factory, n_factories)?;
    p.gamma = gamma;
    Ok(p)
}

/// Single noiseless-precision circuit `T = ⌈λπ/ΔE⌉` with failure at most `δ`.
pub fn standard_ft_point(
    workload: &WorkloadSpec,
    delta: f64,
    a: &PhysicalAssumptions,
    factory: &dyn FactoryModel,
    n_factories: u32,
) -> Result<ResourcePoint> {
    if !(delta > 0.0 && delta < 0.5) {
        return invalid(format!("δ must lie in (0, 0.5), got {delta}"));
    }
    workload.validate()?;
    let depth = standard_ft_depth(workload);
    let demand = CircuitDemand {
        depth,
        total_steps: depth,
        failure_budget: delta,
    };
    search_layout(workload, &demand, a, factory, n_factories)
}

/// `⌈λπ/ΔE⌉`.
pub fn standard_ft_depth(workload: &WorkloadSpec) -> u64 {
    (workload.lambda * std::f64::consts::PI / workload.delta_e).ceil() as u64
}

/// Phase-scale mean squared error when a failed run returns a uniform phase:
/// `(1 − δ)ε² + 2δ`.
pub fn failed_run_variance(eps: f64, delta: f64) -> f64 {
    (1.0 - delta) * eps * eps + 2.0 * delta
}

/// Layouts over a sweep of `γ`, skipping infeasible rates.
pub fn tradeoff_curve(
    workload: &WorkloadSpec,
    gammas: &[f64],
    a: &PhysicalAssumptions,
    factory: &dyn FactoryModel,
    n_factories: u32,
) -> Result<Vec<ResourcePoint>> {
    let mut out = Vec::new();
    for &g in gammas {
        match optimize_layout(workload, g, a, factory, n_factories) {
            Ok(p) => out.push(p),
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Points not dominated in (qubits, wall clock), sorted by qubits.
pub fn pareto_front(points: &[ResourcePoint]) -> Vec<ResourcePoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.physical_qubits
            .total_cmp(&b.physical_qubits)
            .then(a.wall_clock.total_cmp(&b.wall_clock))
    });
    let mut front: Vec<ResourcePoint> = Vec::new();
    for p in sorted {
        if front.last().is_none_or(|l| p.wall_clock < l.wall_clock) {
            front.push(p);
        }
    }
    front
}
