//! Multi-circuit sin-state QPE under global depolarizing noise.
//!
//! The planner picks one depth `T` and shot count `M` for a target precision:
//!
//! * single-shot, `ε_t > ε₁`: the smallest noiseless control dimension with
//!   `tan(π/(K+1)) ≤ ε_t`, one shot;
//! * asymptotic, `ε_t < ε₂`: `T = T₂ = ⌊1/γ⌋`, `M = ⌈1/(Ī_γ(T₂)ε_t²)⌉`;
//! * intermediate: `argmin T·M` over `T ∈ [T₁, T₂]` subject to the error model
//!   `2p_F + (1 − p_F)/(Ī_γ(T)M) ≤ ε_t²`.
//!
//! The circuit with depth `T` has control dimension `K = T + 1`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mle::SinModel;
use super::{CircuitKind, CircuitRecord, EstimatorRun, RunFlags};
use crate::distributions::{control_dim_for_error, single_circuit_holevo, SinQpeDistribution};
use crate::error::{invalid, Error, Result};
use crate::information::SinFisherTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum T1Rule {
    /// `⌊∛(2π²/(3γ))⌋`.
    #[default]
    Algorithm,
    /// `⌊∛(π²/(2γ))⌋`, from the two-sample comparison.
    Derivation,
}

/// Failure-probability model of the intermediate regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FailureModel {
    /// `p_F = (1 − e^{−γT})^{M/2}`: exponential in `M`, with `p_F(2) = 1 − F`.
    #[default]
    FidelityComplement,
    /// `p_F = e^{−γTM/2}` as printed in the algorithm box.
    Literal,
}

impl FailureModel {
    pub fn failure_probability(self, gamma: f64, depth: u64, shots: u64) -> f64 {
        let gt = gamma * depth as f64;
        let m = shots as f64;
        match self {
            FailureModel::FidelityComplement => {
                let q = -(-gt).exp_m1();
                if q <= 0.0 {
                    0.0
                } else {
                    (0.5 * m * q.ln()).exp()
                }
            }
            FailureModel::Literal => (-0.5 * gt * m).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsqpeOptions {
    pub t1_rule: T1Rule,
    pub failure_model: FailureModel,
    /// Shot count where the asymptotic regime starts.
    pub m2: u64,
}

impl Default for MsqpeOptions {
    fn default() -> Self {
        MsqpeOptions {
            t1_rule: T1Rule::Algorithm,
            failure_model: FailureModel::FidelityComplement,
            m2: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SingleShot,
    Intermediate,
    Asymptotic,
}

/// Regime boundaries for a noisy plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t1: u64,
    pub eps1: f64,
    pub t2: u64,
    pub m2: u64,
    pub eps2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsqpeConfig {
    pub target: f64,
    pub gamma: f64,
    /// `None` when `γ = 0`.
    pub thresholds: Option<Thresholds>,
    pub depth: u64,
    pub shots: u64,
    pub regime: Regime,
    /// Error predicted by the planning model for `(T, M)`.
    pub predicted_error: f64,
    pub options: MsqpeOptions,
}

impl MsqpeConfig {
    pub fn control_dim(&self) -> usize {
        self.depth as usize + 1
    }

    pub fn total_cost(&self) -> u64 {
        self.depth * self.shots
    }
}

pub fn thresholds(gamma: f64, options: &MsqpeOptions) -> Result<Thresholds> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid(format!("regime thresholds need 0 < γ < 1, got {gamma}"));
    }
    let t1 = match options.t1_rule {
        T1Rule::Algorithm => (2.0 * PI * PI / (3.0 * gamma)).cbrt(),
        T1Rule::Derivation => (PI * PI / (2.0 * gamma)).cbrt(),
    }
    .floor()
    .max(1.0) as u64;
    let eps1 = single_circuit_holevo(gamma, t1)?.sqrt();
    let t2 = ((1.0 / gamma).floor() as u64).max(1);
    let info = SinFisherTable::shared().average(t2, gamma)?;
    let eps2 = 1.0 / (info * options.m2 as f64).sqrt();
    Ok(Thresholds {
        t1,
        eps1,
        t2,
        m2: options.m2,
        eps2,
    })
}

pub fn msqpe_plan(eps_t: f64, gamma: f64) -> Result<MsqpeConfig> {
    msqpe_plan_with(eps_t, gamma, &MsqpeOptions::default())
}

pub fn msqpe_plan_with(eps_t: f64, gamma: f64, options: &MsqpeOptions) -> Result<MsqpeConfig> {
    if !(eps_t > 0.0 && eps_t.is_finite()) {
        return invalid(format!("target precision must be positive, got {eps_t}"));
    }
    if !(gamma >= 0.0 && gamma < 1.0) {
        return invalid(format!("depolarizing rate must lie in [0, 1), got {gamma}"));
    }
    if options.m2 < 1 {
        return invalid("M₂ must be >= 1");
    }
    let single = |thresholds| -> Result<MsqpeConfig> {
        let k = control_dim_for_error(eps_t)?;
        let depth = (k - 1) as u64;
        Ok(MsqpeConfig {
            target: eps_t,
            gamma,
            thresholds,
            depth,
            shots: 1,
            regime: Regime::SingleShot,
            predicted_error: single_circuit_holevo(gamma, depth)?.sqrt(),
            options: *options,
        })
    };
    if gamma == 0.0 {
        return single(None);
    }
    let th = thresholds(gamma, options)?;
    if eps_t > th.eps1 {
        return single(Some(th));
    }
    let table = SinFisherTable::shared();
    if eps_t < th.eps2 {
        let info = table.average(th.t2, gamma)?;
        let m = (1.0 / (info * eps_t * eps_t)).ceil();
        if !(m < 1e15) {
            return Err(Error::Infeasible(format!("shot count {m:e} is impractical")));
        }
        let shots = m as u64;
        return Ok(MsqpeConfig {
            target: eps_t,
            gamma,
            thresholds: Some(th),
            depth: th.t2,
            shots,
            regime: Regime::Asymptotic,
            predicted_error: 1.0 / (info * shots as f64).sqrt(),
            options: *options,
        });
    }
    let (depth, shots, err2) = intermediate_search(eps_t, gamma, &th, options)?;
    Ok(MsqpeConfig {
        target: eps_t,
        gamma,
        thresholds: Some(th),
        depth,
        shots,
        regime: Regime::Intermediate,
        predicted_error: err2.sqrt(),
        options: *options,
    })
}

/// Squared error of the intermediate-regime model.
pub fn model_error_squared(gamma: f64, depth: u64, shots: u64, model: FailureModel) -> Result<f64> {
    let info = SinFisherTable::shared().average(depth, gamma)?;
    let pf = model.failure_probability(gamma, depth, shots);
    Ok(2.0 * pf + (1.0 - pf) / (info * shots as f64))
}

const MAX_SHOTS: u64 = 1 << 40;

/// Smallest `M` meeting the model at depth `T`, if any below `MAX_SHOTS`.
fn minimal_shots(eps2: f64, gamma: f64, depth: u64, model: FailureModel) -> Result<Option<(u64, f64)>> {
    let ok = |m: u64| -> Result<(bool, f64)> {
        let e = model_error_squared(gamma, depth, m, model)?;
        Ok((e <= eps2, e))
    };
    let mut hi = 1u64;
    loop {
        if ok(hi)?.0 {
            break;
        }
        if hi >= MAX_SHOTS {
            return Ok(None);
        }
        hi *= 2;
    }
    let mut lo = hi / 2; // fails, or 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)?.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some((hi, ok(hi)?.1)))
}

fn intermediate_search(eps_t: f64, gamma: f64, th: &Thresholds, options: &MsqpeOptions) -> Result<(u64, u64, f64)> {
    let eps2 = eps_t * eps_t;
    let (t_lo, t_hi) = (th.t1.min(th.t2), th.t2);
    let mut best: Option<(u64, u64, f64)> = None;
    let consider = |t: u64, best: &mut Option<(u64, u64, f64)>| -> Result<()> {
        if let Some((bt, bm, _)) = *best {
            if t >= bt * bm {
                return Ok(());
            }
        }
        if let Some((m, e)) = minimal_shots(eps2, gamma, t, options.failure_model)? {
            let better = match *best {
                None => true,
                Some((bt, bm, _)) => t * m < bt * bm || (t * m == bt * bm && t < bt),
            };
            if better {
                *best = Some((t, m, e));
            }
        }
        Ok(())
    };
    for t in geometric_grid(t_lo, t_hi, 1.1) {
        consider(t, &mut best)?;
    }
    let Some((t0, _, _)) = best else {
        return Err(Error::Internal(format!(
            "no (T, M) meets ε_t = {eps_t} between T₁ = {} and T₂ = {}",
            th.t1, th.t2
        )));
    };
    let polish_lo = ((t0 as f64 / 1.1).floor() as u64).max(t_lo);
    let polish_hi = ((t0 as f64 * 1.1).ceil() as u64).min(t_hi);
    for t in geometric_grid(polish_lo, polish_hi, 1.01) {
        consider(t, &mut best)?;
    }
    let (t1, _, _) = best.expect("non-empty after the coarse pass");
    for t in t1.saturating_sub(2).max(t_lo)..=(t1 + 2).min(t_hi) {
        consider(t, &mut best)?;
    }
    Ok(best.expect("non-empty"))
}

/// Distinct integers `lo, ⌈lo·r⌉, …` up to and including `hi`.
fn geometric_grid(lo: u64, hi: u64, ratio: f64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = lo.max(1) as f64;
    while (x as u64) < hi {
        let t = x.round() as u64;
        if out.last() != Some(&t) {
            out.push(t);
        }
        x *= ratio;
    }
    if out.last() != Some(&hi) {
        out.push(hi);
    }
    out
}

/// Run a plan on a hidden phase: draw `M` outcomes of the depth-`T` noisy
/// sin-state circuit and maximize the joint likelihood.
pub fn msqpe_estimate<R: Rng + ?Sized>(phase: f64, plan: &MsqpeConfig, rng: &mut R) -> Result<EstimatorRun> {
    if plan.depth < 1 || plan.shots < 1 {
        return invalid("plan needs depth >= 1 and shots >= 1");
    }
    let k = plan.control_dim();
    let dist = SinQpeDistribution::new(k, phase, plan.gamma)?;
    let counts = dist.pmf().draw_counts(plan.shots, rng);
    let weights: Vec<(usize, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(x, &c)| (x, c as f64))
        .collect();
    let model = SinModel::shared(k, dist.fidelity(), 0.0)?;
    let r = model.maximize(&weights, &[], None)?;
    let circuits = vec![CircuitRecord {
        kind: CircuitKind::SinQpe,
        depth: plan.depth,
        shots: plan.shots,
        outcomes: super::sparse_counts(&counts),
    }];
    let flags = RunFlags {
        likelihood_tie: r.tie,
        ..RunFlags::default()
    };
    Ok(EstimatorRun::from_circuits(r.phase, circuits, flags))
}
