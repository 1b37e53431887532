//! Experiment drivers and the sweep runner.
//!
//! Trials run in parallel; each owns the stream
//! `TrialRng::for_trial(seed, experiment_id, trial)` and results are collected
//! in trial order, so output does not depend on the thread count.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentKind, SweepConfig};
use super::output::ResultRow;
use super::rng::TrialRng;
use crate::distributions::{holevo_error, wrap_signed, HolevoError, TAU};
use crate::error::{Error, Result};
use crate::estimators::{
    msqpe_estimate, msqpe_plan, rpe_estimate, rpe_noisy_config, EstimatorRun, MsqpeConfig, RpeConfig,
};
use crate::eumle::{
    eumle_estimate, eumle_variance, filtered_eumle_estimate, synth_pauli_decomposition, FilterWindow,
    RegularizedModel,
};
use crate::faultcost::layout::standard_ft_point;
use crate::faultcost::{
    crossover_cell, hubbard_workload, optimize_layout, parse_workload, ResourcePoint, WorkloadSpec,
};
use crate::information::{fisher_hadamard_exact, fisher_sinqpe_noiseless_exact, SinFisherTable};
use crate::stats::{anderson_darling, Summary};

/// `f(phase, rng)` for `trials` uniformly random phases. Every run's cost is
/// checked against its circuit log.
pub fn run_trials<F>(seed: u64, experiment_id: &str, trials: u64, f: F) -> Result<Vec<(f64, EstimatorRun)>>
where
    F: Fn(f64, &mut TrialRng) -> Result<EstimatorRun> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = TrialRng::for_trial(seed, experiment_id, t);
            let phase = rng.random::<f64>() * TAU;
            let run = f(phase, &mut rng)?;
            if run.total_cost != run.recomputed_cost() {
                return Err(Error::Internal(format!(
                    "{experiment_id} trial {t}: cost {} differs from circuit log {}",
                    run.total_cost,
                    run.recomputed_cost()
                )));
            }
            Ok((phase, run))
        })
        .collect()
}

/// Aggregate of one estimator at one `(γ, ε_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub target: f64,
    pub trials: u64,
    pub eps_holevo: f64,
    pub eps_holevo_se: f64,
    /// Mean oracle calls per run.
    pub t_tot: f64,
    pub t_max: u64,
    /// Fisher information of all circuits in one run.
    pub fisher_total: f64,
}

impl CurvePoint {
    pub fn cramer_rao(&self) -> f64 {
        1.0 / self.fisher_total.sqrt()
    }

    fn from_runs(gamma: f64, target: f64, fisher_total: f64, runs: &[(f64, EstimatorRun)]) -> Result<CurvePoint> {
        let est: Vec<f64> = runs.iter().map(|(_, r)| r.estimate).collect();
        let truth: Vec<f64> = runs.iter().map(|(p, _)| *p).collect();
        let HolevoError { value, std_error, .. } = holevo_error(&est, &truth)?;
        let costs: Vec<f64> = runs.iter().map(|(_, r)| r.total_cost as f64).collect();
        Ok(CurvePoint {
            gamma,
            target,
            trials: runs.len() as u64,
            eps_holevo: value,
            eps_holevo_se: if runs.len() > 1 { std_error } else { f64::NAN },
            t_tot: Summary::of(&costs)?.mean,
            t_max: runs.iter().map(|(_, r)| r.max_depth).max().unwrap_or(0),
            fisher_total,
        })
    }
}

fn experiment_id(kind: &str, gamma: f64, eps: f64) -> String {
    format!("{kind}/gamma={gamma:e}/eps={eps:e}")
}

pub fn msqpe_fisher(plan: &MsqpeConfig) -> Result<f64> {
    let info = if plan.gamma == 0.0 {
        fisher_sinqpe_noiseless_exact(plan.control_dim())?
    } else {
        SinFisherTable::shared().average(plan.depth, plan.gamma)?
    };
    Ok(plan.shots as f64 * info)
}

pub fn rpe_fisher(config: &RpeConfig, gamma: f64) -> f64 {
    config
        .shots
        .iter()
        .enumerate()
        .map(|(j, &m)| m as f64 * fisher_hadamard_exact(1u64 << j, gamma))
        .sum()
}

pub fn msqpe_curve_point(gamma: f64, eps_t: f64, trials: u64, seed: u64) -> Result<(MsqpeConfig, CurvePoint)> {
    let plan = msqpe_plan(eps_t, gamma)?;
    let id = experiment_id("msqpe", gamma, eps_t);
    let runs = run_trials(seed, &id, trials, |phase, rng| msqpe_estimate(phase, &plan, rng))?;
    let p = CurvePoint::from_runs(gamma, eps_t, msqpe_fisher(&plan)?, &runs)?;
    Ok((plan, p))
}

pub fn rpe_curve_point(gamma: f64, eps_t: f64, trials: u64, seed: u64) -> Result<(RpeConfig, CurvePoint)> {
    let config = rpe_noisy_config(eps_t, gamma)?;
    let id = experiment_id("rpe", gamma, eps_t);
    let runs = run_trials(seed, &id, trials, |phase, rng| rpe_estimate(phase, &config, gamma, rng))?;
    let p = CurvePoint::from_runs(gamma, eps_t, rpe_fisher(&config, gamma), &runs)?;
    Ok((config, p))
}

/// RPE at `ε_t`, then MSQPE targeting the Holevo error RPE achieved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkPoint {
    pub rpe: CurvePoint,
    pub msqpe: CurvePoint,
    pub plan: MsqpeConfig,
}

impl BenchmarkPoint {
    /// `T_tot(RPE) / T_tot(MSQPE)`.
    pub fn cost_ratio(&self) -> f64 {
        self.rpe.t_tot / self.msqpe.t_tot
    }
}

pub fn benchmark_pair(gamma: f64, eps_t: f64, trials: u64, seed: u64) -> Result<BenchmarkPoint> {
    let (_, rpe) = rpe_curve_point(gamma, eps_t, trials, seed)?;
    let (plan, msqpe) = msqpe_curve_point(gamma, rpe.eps_holevo, trials, seed)?;
    Ok(BenchmarkPoint { rpe, msqpe, plan })
}

/// Where the filter window sits in an EUMLE study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EumleWindow {
    None,
    /// Half-width 0.5 rad with the true phase 0.01 rad inside one edge.
    Edge,
}

/// Phase used by EUMLE studies.
pub const EUMLE_PHASE: f64 = 1.234;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EumleStudyPoint {
    pub fidelity: f64,
    pub control_dim: usize,
    pub samples: u64,
    pub reps: u64,
    pub one_norm: f64,
    pub bias: f64,
    pub bias_se: f64,
    pub normality_p: f64,
    /// `M̃ · Var(φ̂)`.
    pub scaled_variance: f64,
    pub formula_variance: f64,
    pub sandwich_variance: f64,
    /// `M̃ · Var(φ̂) · Ī₀(K)`.
    pub overhead: f64,
    /// `5/F⁴`, with `F → F/2` for the edge window.
    pub overhead_bound: f64,
    pub mean_accepted: f64,
}

pub fn eumle_study_point(
    fidelity: f64,
    control_dim: usize,
    samples: u64,
    reps: u64,
    seed: u64,
    window: EumleWindow,
) -> Result<EumleStudyPoint> {
    let depth = (control_dim - 1) as u64;
    let gamma = -fidelity.ln() / depth as f64;
    let decomp = synth_pauli_decomposition(gamma, depth, control_dim, EUMLE_PHASE)?;
    let model = RegularizedModel::with_default_regularization(control_dim, depth)?;
    let w = match window {
        EumleWindow::None => None,
        EumleWindow::Edge => Some(FilterWindow::new(EUMLE_PHASE + 0.49, 0.5)?),
    };
    let id = format!("eumle/F={fidelity:e}/K={control_dim}/M={samples}/{window:?}");
    let runs: Vec<(f64, u64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = TrialRng::for_trial(seed, &id, r);
            let run = match w {
                None => eumle_estimate(&decomp, &model, samples, &mut rng)?,
                Some(w) => filtered_eumle_estimate(&decomp, &model, w, samples, &mut rng)?,
            };
            Ok((wrap_signed(run.run.estimate - EUMLE_PHASE), run.accepted))
        })
        .collect::<Result<_>>()?;
    let errs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let s = Summary::of(&errs)?;
    let normality_p = anderson_darling(&errs).map_or(f64::NAN, |t| t.p_value);
    let v = eumle_variance(&decomp, &model, EUMLE_PHASE)?;
    let fisher0 = fisher_sinqpe_noiseless_exact(control_dim)?;
    let scaled = s.variance * samples as f64;
    let f_bound = match window {
        EumleWindow::None => fidelity,
        EumleWindow::Edge => fidelity / 2.0,
    };
    Ok(EumleStudyPoint {
        fidelity,
        control_dim,
        samples,
        reps,
        one_norm: decomp.one_norm(),
        bias: s.mean,
        bias_se: s.std_error(),
        normality_p,
        scaled_variance: scaled,
        formula_variance: v.formula,
        sandwich_variance: v.sandwich,
        overhead: scaled * fisher0,
        overhead_bound: 5.0 / f_bound.powi(4),
        mean_accepted: runs.iter().map(|r| r.1 as f64).sum::<f64>() / reps as f64,
    })
}

/// Workloads named by a config: Hubbard lattices first, then files.
pub fn load_workloads(config: &SweepConfig) -> Result<Vec<WorkloadSpec>> {
    let mut out = Vec::new();
    for &l in &config.lattice_sizes {
        out.push(hubbard_workload(l, None)?);
    }
    for p in &config.workloads {
        let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        out.push(parse_workload(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?);
    }
    Ok(out)
}

fn failed(row: ResultRow, e: &Error) -> Result<ResultRow> {
    match e {
        Error::Internal(_) => Err(e.clone()),
        _ => Ok(ResultRow {
            error: Some(e.to_string()),
            ..row
        }),
    }
}

fn curve_row(kind: &str, p: &CurvePoint) -> ResultRow {
    ResultRow::new(kind, p.trials)
        .with("eps_holevo_rad", p.eps_holevo)
        .with("t_tot_calls", p.t_tot)
        .with("t_max_calls", p.t_max)
        .with("eps_cramer_rao_rad", p.cramer_rao())
        .with("eps_over_cramer_rao", p.eps_holevo / p.cramer_rao())
        .with("eps_times_t_tot_over_pi", p.eps_holevo * p.t_tot / PI)
        .std_error(p.eps_holevo_se)
}

fn resource_row(kind: &str, w: &WorkloadSpec, n_f: u32, r: &ResourcePoint) -> ResultRow {
    ResultRow::new(kind, 1)
        .with("workload", w.name.as_str())
        .with("n_factories", n_f)
        .with("gamma_per_step", r.gamma)
        .with("depth_steps", r.depth)
        .with("total_steps", r.total_steps)
        .with("d", r.d)
        .with("d0", r.d0)
        .with("d1", r.d1)
        .with("physical_qubits", r.physical_qubits)
        .with("wall_clock_s", r.wall_clock)
        .with("spacetime_volume_qubit_s", r.spacetime_volume)
        .with("failure_per_circuit", r.failure_per_circuit)
        .with("failure_budget", r.failure_budget)
}

/// Execute the configured experiment and return its rows in grid order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<ResultRow>> {
    config.check()?;
    let kind = config.experiment.name();
    let mut rows: Vec<ResultRow> = config
        .warnings
        .iter()
        .map(|w| ResultRow {
            warning: Some(w.clone()),
            ..ResultRow::new(kind, 0)
        })
        .collect();
    let (seed, trials) = (config.seed, config.trials);
    match config.experiment {
        ExperimentKind::BenchmarkPair => {
            for &g in &config.gammas {
                for &e in &config.epsilons {
                    let base = ResultRow::new(kind, trials)
                        .with("gamma_per_call", g)
                        .with("eps_target_rad", e);
                    rows.push(match benchmark_pair(g, e, trials, seed) {
                        Ok(b) => base
                            .with("rpe_eps_holevo_rad", b.rpe.eps_holevo)
                            .with("rpe_t_tot_calls", b.rpe.t_tot)
                            .with("rpe_t_max_calls", b.rpe.t_max)
                            .with("msqpe_eps_holevo_rad", b.msqpe.eps_holevo)
                            .with("msqpe_t_tot_calls", b.msqpe.t_tot)
                            .with("msqpe_t_max_calls", b.msqpe.t_max)
                            .with("msqpe_shots", b.plan.shots)
                            .with("msqpe_regime", format!("{:?}", b.plan.regime).to_lowercase())
                            .with("t_tot_ratio_rpe_over_msqpe", b.cost_ratio())
                            .std_error(b.msqpe.eps_holevo_se),
                        Err(err) => failed(base, &err)?,
                    });
                }
            }
        }
        ExperimentKind::MsqpeCurve | ExperimentKind::RpeCurve => {
            let msqpe = config.experiment == ExperimentKind::MsqpeCurve;
            for &g in &config.gammas {
                for &e in &config.epsilons {
                    let base = ResultRow::new(kind, trials)
                        .with("gamma_per_call", g)
                        .with("eps_target_rad", e);
                    let r = if msqpe {
                        msqpe_curve_point(g, e, trials, seed).map(|(plan, p)| {
                            let row = curve_row(kind, &p)
                                .with("shots", plan.shots)
                                .with("regime", format!("{:?}", plan.regime).to_lowercase());
                            (row, p)
                        })
                    } else {
                        rpe_curve_point(g, e, trials, seed).map(|(c, p)| (curve_row(kind, &p).with("orders", c.orders()), p))
                    };
                    rows.push(match r {
                        Ok((row, _)) => {
                            let mut fields = base.fields.clone();
                            fields.extend(row.fields);
                            ResultRow { fields, ..row }
                        }
                        Err(err) => failed(base, &err)?,
                    });
                }
            }
        }
        ExperimentKind::EumleStudy => {
            for window in [EumleWindow::None, EumleWindow::Edge] {
                for &f in &config.fidelities {
                    let base = ResultRow::new(kind, trials)
                        .with("window", format!("{window:?}").to_lowercase())
                        .with("fidelity", f)
                        .with("control_dim", config.control_dim)
                        .with("samples", config.samples);
                    rows.push(
                        match eumle_study_point(f, config.control_dim, config.samples, trials, seed, window) {
                            Ok(p) => base
                                .with("one_norm", p.one_norm)
                                .with("bias_rad", p.bias)
                                .with("bias_over_se", p.bias / p.bias_se)
                                .with("normality_p_value", p.normality_p)
                                .with("scaled_variance_rad2", p.scaled_variance)
                                .with("formula_variance_rad2", p.formula_variance)
                                .with("sandwich_variance_rad2", p.sandwich_variance)
                                .with("overhead", p.overhead)
                                .with("overhead_bound", p.overhead_bound)
                                .with("mean_accepted_samples", p.mean_accepted)
                                .std_error(p.bias_se),
                            Err(err) => failed(base, &err)?,
                        },
                    );
                }
            }
        }
        ExperimentKind::CrossoverMap => {
            let cells: Vec<(f64, f64)> = config
                .p_phys
                .iter()
                .flat_map(|&p| config.n_phys.iter().map(move |&n| (p, n)))
                .collect();
            let out: Vec<Result<ResultRow>> = cells
                .par_iter()
                .map(|&(p, n)| {
                    let base = ResultRow::new(kind, 1).with("p_phys", p).with("n_phys", n);
                    match crossover_cell(p, n) {
                        Ok(c) => Ok(base
                            .with("depth_qem_only", c.qem_only)
                            .with("depth_qec_only", c.qec_only)
                            .with("depth_qec_qem", c.combined)
                            .with("gain", c.gain())),
                        Err(err) => failed(base, &err),
                    }
                })
                .collect();
            for r in out {
                rows.push(r?);
            }
        }
        ExperimentKind::ResourceTradeoff => {
            for w in load_workloads(config)? {
                for &n_f in &config.n_factories {
                    let out: Vec<Result<ResultRow>> = config
                        .gammas
                        .par_iter()
                        .map(|&g| {
                            let base = ResultRow::new(kind, 1)
                                .with("workload", w.name.as_str())
                                .with("n_factories", n_f)
                                .with("gamma_per_step", g);
                            match optimize_layout(&w, g, &config.assumptions, &config.factory, n_f) {
                                Ok(r) => Ok(resource_row(kind, &w, n_f, &r)),
                                Err(err) => failed(base, &err),
                            }
                        })
                        .collect();
                    for r in out {
                        rows.push(r?);
                    }
                }
            }
        }
        ExperimentKind::StandardFt => {
            for w in load_workloads(config)? {
                for &n_f in &config.n_factories {
                    for &delta in &config.deltas {
                        let base = ResultRow::new(kind, 1)
                            .with("workload", w.name.as_str())
                            .with("n_factories", n_f)
                            .with("delta", delta);
                        rows.push(match standard_ft_point(&w, delta, &config.assumptions, &config.factory, n_f) {
                            Ok(r) => {
                                let mut row = resource_row(kind, &w, n_f, &r);
                                row.fields.insert(2, ("delta".into(), delta.into()));
                                row
                            }
                            Err(err) => failed(base, &err)?,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::output::{to_csv, Cell};

    fn small(kind: ExperimentKind) -> SweepConfig {
        let mut c = SweepConfig::defaults(kind, 11);
        c.trials = 20;
        c.gammas = vec![2f64.powi(-10)];
        c.epsilons = vec![0.1, 0.02];
        c
    }

    #[test]
    fn benchmark_rows_are_complete() {
        let rows = run_sweep(&small(ExperimentKind::BenchmarkPair)).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.error.is_none(), "{r:?}");
            assert!(r.float("t_tot_ratio_rpe_over_msqpe").unwrap() > 0.0);
            assert!(r.std_error.unwrap() >= 0.0);
        }
    }

    #[test]
    fn single_trial_has_undefined_std_error() {
        let mut c = small(ExperimentKind::RpeCurve);
        c.trials = 1;
        c.epsilons = vec![0.1];
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].std_error, None);
        assert!(to_csv(&rows).unwrap().lines().nth(2).unwrap().contains(",undefined,"));
    }

    #[test]
    fn zero_gamma_emits_warning_row() {
        let mut c = small(ExperimentKind::MsqpeCurve);
        c.gammas = vec![0.0];
        c.epsilons = vec![0.05];
        c.warnings.push("gamma = 0 runs the noiseless single-circuit branch".into());
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].warning.is_some());
        assert_eq!(rows[1].get("regime"), Some(&Cell::Text("singleshot".into())));
    }

    #[test]
    fn infeasible_points_become_error_rows() {
        let mut c = SweepConfig::defaults(ExperimentKind::ResourceTradeoff, 1);
        c.lattice_sizes = vec![2];
        c.gammas = vec![1e-15, 1e-4];
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_some(), "{:?}", rows[0]);
        assert!(rows[1].error.is_none(), "{:?}", rows[1]);
    }

    #[test]
    fn trial_results_do_not_depend_on_thread_count() {
        let c = small(ExperimentKind::MsqpeCurve);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = to_csv(&one.install(|| run_sweep(&c)).unwrap()).unwrap();
        let b = to_csv(&four.install(|| run_sweep(&c)).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
