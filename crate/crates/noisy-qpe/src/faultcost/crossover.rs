//! Toy model of combined error correction and error mitigation.
//!
//! A 100-logical-qubit CNOT circuit of depth `D` (49.5 noisy gates per layer)
//! must be sampled at an effective rate of one sample per minute. With code
//! distance `d` (`d = 1`: no correction):
//!
//! * `p_logical = p_phys` for `d = 1`, else `1 − (1 − 0.1Λ^{−(d+1)/2})^{6d}`;
//! * `t_gate = 20 ns` for `d = 1`, else `3d × 970 ns`;
//! * `N_parallel = ⌊N_phys / (100(2d² − 1))⌋`;
//! * PEC overhead `γ² = ((1 + 7p_logical/8)/(1 − p_logical))^{2G}`, `G = 49.5D`;
//! * feasible when `D·t_gate·γ²/N_parallel ≤ 60 s`.
//!
//! Error correction alone instead requires `1 − (1 − p_logical)^{49.5D} ≤ 0.01`.

use serde::Serialize;

use crate::error::{invalid, Result};

const LOGICAL_QUBITS: f64 = 100.0;
const GATES_PER_LAYER: f64 = 49.5;
const RAW_GATE_TIME: f64 = 20e-9;
const CYCLE_TIME: f64 = 970e-9;
const SAMPLE_BUDGET: f64 = 60.0;
const QEC_FAILURE_BUDGET: f64 = 0.01;
const THRESHOLD: f64 = 0.01;
/// Largest code distance considered.
pub const MAX_TOY_DISTANCE: u32 = 25;
const DEPTH_CAP: u64 = 1 << 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossoverMode {
    /// Physical gates with probabilistic error cancellation.
    QemOnly,
    /// Surface code with at most 1% circuit failure, no mitigation.
    QecOnly,
    /// Best of mitigation on top of any distance, including the two above.
    QecQem,
}

/// `p_logical` per two-qubit gate at distance `d`.
pub fn toy_logical_error(p_phys: f64, d: u32) -> f64 {
    if d == 1 {
        return p_phys;
    }
    let lambda = THRESHOLD / p_phys;
    let per_cycle = 0.1 * lambda.powf(-((d + 1) as f64) / 2.0);
    -(6.0 * d as f64 * (-per_cycle).ln_1p()).exp_m1()
}

fn gate_time(d: u32) -> f64 {
    if d == 1 {
        RAW_GATE_TIME
    } else {
        3.0 * d as f64 * CYCLE_TIME
    }
}

fn parallel_copies(n_phys: f64, d: u32) -> f64 {
    let per_copy = LOGICAL_QUBITS * (2.0 * (d as f64).powi(2) - 1.0);
    (n_phys / per_copy).floor()
}

/// Per-distance feasibility predicates.
#[derive(Debug, Clone, Copy)]
struct Layer {
    p_logical: f64,
    t_gate: f64,
    copies: f64,
}

impl Layer {
    fn new(p_phys: f64, n_phys: f64, d: u32) -> Layer {
        Layer {
            p_logical: toy_logical_error(p_phys, d),
            t_gate: gate_time(d),
            copies: parallel_copies(n_phys, d),
        }
    }

    /// `ln(D·t·γ²/N) − ln 60` as a function of `u = ln D`.
    fn pec_excess(&self, u: f64) -> f64 {
        let log_rate = (7.0 / 8.0 * self.p_logical).ln_1p() - (-self.p_logical).ln_1p();
        u + 2.0 * GATES_PER_LAYER * u.exp() * log_rate + self.t_gate.ln() - (SAMPLE_BUDGET * self.copies).ln()
    }

    fn pec_ok(&self, depth: u64) -> bool {
        self.copies >= 1.0 && self.pec_excess((depth as f64).ln()) <= 0.0
    }

    fn qec_ok(&self, depth: u64) -> bool {
        if self.copies < 1.0 {
            return false;
        }
        let fail = -(GATES_PER_LAYER * depth as f64 * (-self.p_logical).ln_1p()).exp_m1();
        fail <= QEC_FAILURE_BUDGET && depth as f64 * self.t_gate / self.copies <= SAMPLE_BUDGET
    }
}

/// Largest `D ≥ 1` with `ok(D)`, given a continuous estimate; 0 if none.
fn settle(estimate: f64, ok: impl Fn(u64) -> bool) -> u64 {
    if !ok(1) {
        return 0;
    }
    let start = if estimate.is_finite() {
        estimate.clamp(1.0, DEPTH_CAP as f64) as u64
    } else {
        DEPTH_CAP
    };
    // bracket lo (ok) < hi (not ok) by galloping away from the estimate
    let (mut lo, mut hi);
    if ok(start) {
        lo = start;
        let mut step = 1u64;
        loop {
            if lo == DEPTH_CAP {
                return DEPTH_CAP;
            }
            let probe = lo.saturating_add(step).min(DEPTH_CAP);
            if ok(probe) {
                lo = probe;
                step = step.saturating_mul(2);
            } else {
                hi = probe;
                break;
            }
        }
    } else {
        hi = start;
        let mut step = 1u64;
        loop {
            let probe = hi.saturating_sub(step).max(1);
            if ok(probe) {
                lo = probe;
                break;
            }
            hi = probe;
            step = step.saturating_mul(2);
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Newton iteration on the convex increasing `pec_excess(u)`.
fn pec_depth(layer: &Layer) -> u64 {
    if layer.copies < 1.0 {
        return 0;
    }
    let log_rate = (7.0 / 8.0 * layer.p_logical).ln_1p() - (-layer.p_logical).ln_1p();
    let slope = 2.0 * GATES_PER_LAYER * log_rate;
    let mut u = 0.0f64;
    // move right of the root, where Newton converges monotonically
    while layer.pec_excess(u) < 0.0 && u < (DEPTH_CAP as f64).ln() {
        u += 1.0;
    }
    for _ in 0..200 {
        let h = layer.pec_excess(u);
        let dh = 1.0 + slope * u.exp();
        let next = u - h / dh;
        if (next - u).abs() < 1e-13 {
            u = next;
            break;
        }
        u = next;
    }
    settle(u.exp(), |d| layer.pec_ok(d))
}

fn qec_depth(layer: &Layer) -> u64 {
    if layer.copies < 1.0 {
        return 0;
    }
    let by_error = (1.0 - QEC_FAILURE_BUDGET).ln() / (GATES_PER_LAYER * (-layer.p_logical).ln_1p());
    let by_time = SAMPLE_BUDGET * layer.copies / layer.t_gate;
    settle(by_error.min(by_time), |d| layer.qec_ok(d))
}

fn check(p_phys: f64, n_phys: f64) -> Result<()> {
    if !(p_phys > 0.0 && p_phys < THRESHOLD) {
        return invalid(format!("physical error rate must lie in (0, 0.01), got {p_phys}"));
    }
    if !(n_phys >= LOGICAL_QUBITS && n_phys.is_finite()) {
        return invalid(format!("need at least 100 physical qubits, got {n_phys}"));
    }
    Ok(())
}

fn odd_distances(max: u32) -> impl Iterator<Item = u32> {
    (1..=max).step_by(2)
}

/// Maximum depth at one sample per minute; 0 when no depth is feasible.
pub fn crossover_max_depth(p_phys: f64, n_phys: f64, mode: CrossoverMode) -> Result<u64> {
    check(p_phys, n_phys)?;
    let qec = || {
        odd_distances(MAX_TOY_DISTANCE)
            .skip(1)
            .map(|d| qec_depth(&Layer::new(p_phys, n_phys, d)))
            .max()
            .unwrap_or(0)
    };
    Ok(match mode {
        CrossoverMode::QemOnly => pec_depth(&Layer::new(p_phys, n_phys, 1)),
        CrossoverMode::QecOnly => qec(),
        CrossoverMode::QecQem => {
            let pec = odd_distances(MAX_TOY_DISTANCE)
                .map(|d| pec_depth(&Layer::new(p_phys, n_phys, d)))
                .max()
                .unwrap_or(0);
            pec.max(qec())
        }
    })
}

/// Same result by exhaustive distance scan and integer doubling plus bisection.
pub fn crossover_max_depth_bruteforce(p_phys: f64, n_phys: f64, mode: CrossoverMode) -> Result<u64> {
    check(p_phys, n_phys)?;
    fn largest(ok: impl Fn(u64) -> bool) -> u64 {
        if !ok(1) {
            return 0;
        }
        let mut lo = 1u64;
        while lo < DEPTH_CAP && ok((lo * 2).min(DEPTH_CAP)) {
            lo = (lo * 2).min(DEPTH_CAP);
        }
        if lo == DEPTH_CAP {
            return lo;
        }
        let mut hi = (lo * 2).min(DEPTH_CAP);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
    let mut best = 0;
    for d in odd_distances(MAX_TOY_DISTANCE) {
        let layer = Layer::new(p_phys, n_phys, d);
        let pec = (d == 1 || mode == CrossoverMode::QecQem) && mode != CrossoverMode::QecOnly;
        let qec = d > 1 && mode != CrossoverMode::QemOnly;
        if pec {
            best = best.max(largest(|x| layer.pec_ok(x)));
        }
        if qec {
            best = best.max(largest(|x| layer.qec_ok(x)));
        }
    }
    Ok(best)
}

/// One cell of the crossover map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverCell {
    pub p_phys: f64,
    pub n_phys: f64,
    pub qem_only: u64,
    pub qec_only: u64,
    pub combined: u64,
}

impl CrossoverCell {
    /// `combined / max(qem_only, qec_only)`; infinite when only the combination is feasible.
    pub fn gain(&self) -> f64 {
        let single = self.qem_only.max(self.qec_only);
        if single == 0 {
            if self.combined == 0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.combined as f64 / single as f64
        }
    }
}

pub fn crossover_cell(p_phys: f64, n_phys: f64) -> Result<CrossoverCell> {
    Ok(CrossoverCell {
        p_phys,
        n_phys,
        qem_only: crossover_max_depth(p_phys, n_phys, CrossoverMode::QemOnly)?,
        qec_only: crossover_max_depth(p_phys, n_phys, CrossoverMode::QecOnly)?,
        combined: crossover_max_depth(p_phys, n_phys, CrossoverMode::QecQem)?,
    })
}
