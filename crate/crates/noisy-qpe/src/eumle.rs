//! Explicitly unbiased maximum likelihood from signed samples.
//!
//! The noiseless outcome pmf `P(x|φ*)` is written as a signed mixture
//! `Σ_j α_j Q_j(x)` of sampleable pmfs. Samples `(j, x)` drawn with
//! `j ~ |α_j|/|α|₁`, `x ~ Q_j` carry the sign of `α_j`; their signed histogram
//! `ŵ_x` satisfies `E[|α|₁ ŵ_x] = M̃·P(x|φ*)`. The phase is recovered by
//! maximizing a likelihood built on the regularized model `P_c = P + c`.
//!
//! Two weightings are provided. [`Weighting::Literal`] maximizes
//! `Σ_x |α|₁ŵ_x ln P_c(x|φ)`. [`Weighting::PseudoCount`] (the default) adds the
//! regularization to the data as well, `Σ_x (|α|₁ŵ_x + M̃c) ln P_c(x|φ)`; since
//! `Σ_x P_c(x|φ)` does not depend on `φ`, Gibbs' inequality puts the population
//! maximum exactly at `φ*` on the discrete outcome space. The literal form is
//! only consistent up to aliasing of `ln P_c` on the `K`-point grid.

use std::f64::consts::{E, PI};

use rand::Rng;
use serde::Serialize;

use crate::distributions::{circular_distance, sin_qpe_pmf, Pmf, TAU};
use crate::error::{invalid, Error, Result};
use crate::estimators::mle::{SearchWindow, SinModel};
use crate::estimators::{CircuitKind, CircuitRecord, EstimatorRun, RunFlags};

const IDENTITY_TOL: f64 = 1e-10;
const MIN_FIDELITY: f64 = 0.05;

/// Signed mixture `Σ_j α_j Q_j` reproducing a target pmf.
#[derive(Debug, Clone)]
pub struct QuasiprobDecomposition {
    weights: Vec<f64>,
    components: Vec<Pmf>,
    target: Vec<f64>,
    one_norm: f64,
    depth: u64,
}

impl QuasiprobDecomposition {
    /// Validates `Σ α_j Q_j = target` pointwise and `Σ α_j = 1`.
    pub fn new(weights: Vec<f64>, components: Vec<Pmf>, target: Vec<f64>, depth: u64) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return invalid("decomposition needs one weight per component");
        }
        if weights.iter().any(|w| !w.is_finite() || *w == 0.0) {
            return invalid("decomposition weights must be finite and non-zero");
        }
        let k = target.len();
        if components.iter().any(|q| q.len() != k) {
            return invalid("components must share the target's outcome space");
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::Internal(format!("decomposition weights sum to {sum}")));
        }
        for (x, &p) in target.iter().enumerate() {
            let mix: f64 = weights.iter().zip(&components).map(|(a, q)| a * q.probs()[x]).sum();
            if (mix - p).abs() > IDENTITY_TOL {
                return Err(Error::Internal(format!(
                    "decomposition identity fails at outcome {x}: {mix} vs {p}"
                )));
            }
        }
        let one_norm = weights.iter().map(|w| w.abs()).sum();
        Ok(QuasiprobDecomposition {
            weights,
            components,
            target,
            one_norm,
            depth,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Pmf] {
        &self.components
    }

    /// Noiseless pmf `P(x|φ*)`.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn one_norm(&self) -> f64 {
        self.one_norm
    }

    pub fn control_dim(&self) -> usize {
        self.target.len()
    }

    /// Oracle calls per sampled circuit.
    pub fn depth(&self) -> u64 {
        self.depth
    }

    /// Marginal sampling pmf `Q̃(x) = Σ_j |α_j| Q_j(x) / |α|₁`.
    pub fn sampling_marginal(&self) -> Vec<f64> {
        (0..self.control_dim())
            .map(|x| {
                self.weights
                    .iter()
                    .zip(&self.components)
                    .map(|(a, q)| a.abs() * q.probs()[x])
                    .sum::<f64>()
                    / self.one_norm
            })
            .collect()
    }

    /// Draw `M̃` signed samples.
    pub fn sample<R: Rng + ?Sized>(&self, samples: u64, rng: &mut R) -> SignedSamples {
        let k = self.control_dim();
        let selector = Pmf::new(self.weights.iter().map(|a| a.abs() / self.one_norm).collect())
            .expect("normalized component selector");
        let per_component = selector.draw_counts(samples, rng);
        let mut positive = vec![0u64; k];
        let mut negative = vec![0u64; k];
        let mut circuits = Vec::with_capacity(self.components.len());
        for ((q, &a), &n) in self.components.iter().zip(&self.weights).zip(&per_component) {
            let counts = q.draw_counts(n, rng);
            let dest = if a > 0.0 { &mut positive } else { &mut negative };
            for (d, c) in dest.iter_mut().zip(&counts) {
                *d += c;
            }
            circuits.push(counts);
        }
        SignedSamples {
            positive,
            negative,
            per_component: circuits,
        }
    }
}

/// Signed outcome histograms from one sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSamples {
    /// Samples from components with `α_j > 0`, by outcome.
    pub positive: Vec<u64>,
    /// Samples from components with `α_j < 0`, by outcome.
    pub negative: Vec<u64>,
    /// Outcome histogram of each component.
    pub per_component: Vec<Vec<u64>>,
}

impl SignedSamples {
    pub fn total(&self) -> u64 {
        self.positive.iter().chain(&self.negative).sum()
    }

    pub fn negative_total(&self) -> u64 {
        self.negative.iter().sum()
    }

    /// `ŵ_x = n⁺_x − n⁻_x`.
    pub fn signed(&self, x: usize) -> f64 {
        self.positive[x] as f64 - self.negative[x] as f64
    }
}

/// Synthetic decomposition emulating inversion of local stochastic noise on a
/// depth-`T` sin-state circuit with `K` outcomes.
///
/// With `F = e^{−γT}`, noisy pmf `Q₀ = F·P + (1−F)/K`, complement
/// `C = (1 − P)/(K − 1)` and uniform `U = 1/K`:
///
/// `P = Q₀/F + a·C − b·D`, `D = (a·C + (1−F)/F·U)/b`,
///
/// with `a = (1−F)²/(2F²)` and `b = (1−F)(1+F)/(2F²)`, so that `α₀ = 1/F`,
/// `Σα = 1` and `|α|₁ = 1/F²`.
pub fn synth_pauli_decomposition(gamma: f64, depth: u64, k: usize, phase: f64) -> Result<QuasiprobDecomposition> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return invalid(format!("rate must be finite and >= 0, got {gamma}"));
    }
    if depth == 0 {
        return invalid("depth must be >= 1");
    }
    let fidelity = (-gamma * depth as f64).exp();
    if fidelity < MIN_FIDELITY {
        return invalid(format!("fidelity {fidelity:.4} below {MIN_FIDELITY}"));
    }
    let target = sin_qpe_pmf(k, phase, 0.0)?;
    if fidelity == 1.0 {
        return QuasiprobDecomposition::new(vec![1.0], vec![Pmf::new(target.clone())?], target, depth);
    }
    if k < 2 {
        return invalid("noisy decomposition needs K >= 2");
    }
    let kf = k as f64;
    let f = fidelity;
    let noisy: Vec<f64> = target.iter().map(|p| f * p + (1.0 - f) / kf).collect();
    let complement: Vec<f64> = target.iter().map(|p| ((1.0 - p) / (kf - 1.0)).max(0.0)).collect();
    let a = (1.0 - f).powi(2) / (2.0 * f * f);
    let b = (1.0 - f) * (1.0 + f) / (2.0 * f * f);
    let mixture: Vec<f64> = complement
        .iter()
        .map(|c| (a * c + (1.0 - f) / f / kf) / b)
        .collect();
    QuasiprobDecomposition::new(
        vec![1.0 / f, a, -b],
        vec![Pmf::new(noisy)?, Pmf::new(complement)?, Pmf::new(mixture)?],
        target,
        depth,
    )
}

/// Default regularization: the von Mises choice `c = 1/(N_σ e²)` with
/// `σ = π/T`, converted from a density to a per-outcome mass `2π/K`.
pub fn default_regularization(k: usize, depth: u64) -> f64 {
    let sigma = PI / depth as f64;
    (TAU / k as f64) / (sigma * TAU.sqrt() * E * E)
}

/// How signed counts enter the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// `Σ (|α|₁ŵ_x + M̃c) ln P_c`.
    #[default]
    PseudoCount,
    /// `Σ |α|₁ŵ_x ln P_c`.
    Literal,
}

/// Noiseless sin-state model plus a constant `c` per outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedModel {
    pub control_dim: usize,
    pub regularization: f64,
    pub weighting: Weighting,
}

impl RegularizedModel {
    pub fn new(control_dim: usize, regularization: f64) -> Result<Self> {
        if control_dim < 1 {
            return invalid("control dimension must be >= 1");
        }
        if !(regularization >= 0.0 && regularization.is_finite()) {
            return invalid(format!("regularization must be finite and >= 0, got {regularization}"));
        }
        Ok(RegularizedModel {
            control_dim,
            regularization,
            weighting: Weighting::default(),
        })
    }

    /// Model with [`default_regularization`].
    pub fn with_default_regularization(control_dim: usize, depth: u64) -> Result<Self> {
        Self::new(control_dim, default_regularization(control_dim, depth))
    }

    pub fn weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    fn sin_model(&self) -> Result<std::sync::Arc<SinModel>> {
        SinModel::shared(self.control_dim, 1.0, self.regularization)
    }

    /// `P_c(x|φ)` for every outcome.
    pub fn probs(&self, phase: f64) -> Result<Vec<f64>> {
        Ok(self.sin_model()?.probs(phase))
    }

    /// `(P_c, ∂_φ P)` at every outcome; the regularized score is their ratio.
    pub fn scores(&self, phase: f64) -> Result<Vec<(f64, f64)>> {
        let m = self.sin_model()?;
        let k = self.control_dim;
        Ok((0..k)
            .map(|x| m.prob_and_derivative(phase - TAU * x as f64 / k as f64))
            .collect())
    }
}

/// Output of one signed-sample estimation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EumleRun {
    pub run: EstimatorRun,
    /// Samples drawn from negatively weighted components.
    pub negative_samples: u64,
    /// Samples kept by the filter; all samples when unfiltered.
    pub accepted: u64,
}

fn check_model(decomp: &QuasiprobDecomposition, model: &RegularizedModel) -> Result<()> {
    if model.control_dim != decomp.control_dim() {
        return invalid(format!(
            "model has K = {} but the decomposition has K = {}",
            model.control_dim,
            decomp.control_dim()
        ));
    }
    if model.regularization == 0.0 {
        // without regularization every sampled outcome must have P > 0
        let q = decomp.sampling_marginal();
        if q.iter().zip(decomp.target()).any(|(q, p)| *q > 0.0 && *p <= 0.0) {
            return invalid("c = 0 needs the noiseless pmf positive wherever samples can fall");
        }
    }
    Ok(())
}

fn circuits_of(decomp: &QuasiprobDecomposition, samples: &SignedSamples) -> Vec<CircuitRecord> {
    samples
        .per_component
        .iter()
        .map(|counts| CircuitRecord {
            kind: CircuitKind::SinQpe,
            depth: decomp.depth(),
            shots: counts.iter().sum(),
            outcomes: crate::estimators::sparse_counts(counts),
        })
        .collect()
}

/// Maximize the signed likelihood of given samples, optionally filtered.
pub fn eumle_from_samples(
    decomp: &QuasiprobDecomposition,
    model: &RegularizedModel,
    samples: &SignedSamples,
    window: Option<FilterWindow>,
) -> Result<EumleRun> {
    check_model(decomp, model)?;
    let k = decomp.control_dim();
    if samples.positive.len() != k || samples.negative.len() != k {
        return invalid("sample histograms do not match the outcome space");
    }
    let total = samples.total();
    if total == 0 {
        return invalid("no samples");
    }
    let window = window.filter(|w| !w.is_full_circle());
    let keep = |x: usize| window.is_none_or(|w| w.contains(TAU * x as f64 / k as f64));
    let accepted: u64 = (0..k)
        .filter(|&x| keep(x))
        .map(|x| samples.positive[x] + samples.negative[x])
        .sum();
    if accepted == 0 {
        return Err(Error::Infeasible("filter window empty: no sample accepted".into()));
    }
    let norm = decomp.one_norm();
    let pseudo = match model.weighting {
        Weighting::PseudoCount => total as f64 * model.regularization,
        Weighting::Literal => 0.0,
    };
    let weights: Vec<(usize, f64)> = (0..k)
        .filter(|&x| keep(x))
        .map(|x| (x, norm * samples.signed(x) + pseudo))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    // inside a window Σ P_c depends on φ; the extended term restores the
    // stationary point (pseudo-count weighting only)
    let linear: Vec<(usize, f64)> = match (window, model.weighting) {
        (Some(_), Weighting::PseudoCount) => (0..k).filter(|&x| keep(x)).map(|x| (x, total as f64)).collect(),
        _ => Vec::new(),
    };
    let search = window.map(|w| SearchWindow {
        center: w.center,
        half_width: w.half_width,
    });
    let r = model.sin_model()?.maximize(&weights, &linear, search)?;
    if !r.objective.is_finite() {
        return Err(Error::Internal("signed likelihood unbounded".into()));
    }
    let flags = RunFlags {
        likelihood_tie: r.tie,
        ..RunFlags::default()
    };
    Ok(EumleRun {
        run: EstimatorRun::from_circuits(r.phase, circuits_of(decomp, samples), flags),
        negative_samples: samples.negative_total(),
        accepted,
    })
}

/// Draw `M̃` signed samples and maximize the regularized signed likelihood.
pub fn eumle_estimate<R: Rng + ?Sized>(
    decomp: &QuasiprobDecomposition,
    model: &RegularizedModel,
    samples: u64,
    rng: &mut R,
) -> Result<EumleRun> {
    check_model(decomp, model)?;
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let s = decomp.sample(samples, rng);
    eumle_from_samples(decomp, model, &s, None)
}

/// Arc `circular_distance(x, center) < half_width`, or the full circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterWindow {
    pub center: f64,
    pub half_width: f64,
}

impl FilterWindow {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !center.is_finite() {
            return invalid("window center must be finite");
        }
        if !(half_width > 0.0 && half_width < PI) {
            return invalid(format!("window half-width must lie in (0, π), got {half_width}"));
        }
        Ok(FilterWindow {
            center: crate::distributions::wrap_phase(center),
            half_width,
        })
    }

    /// Accepts every outcome.
    pub fn full_circle() -> Self {
        FilterWindow {
            center: 0.0,
            half_width: f64::INFINITY,
        }
    }

    pub fn is_full_circle(&self) -> bool {
        self.half_width > PI
    }

    /// Indicator `R(x)`.
    pub fn contains(&self, x: f64) -> bool {
        self.is_full_circle() || circular_distance(x, self.center) < self.half_width
    }
}

/// Sample as [`eumle_estimate`], keep outcomes inside `window`, and maximize
/// over phases inside the window. Every draw counts toward the cost.
pub fn filtered_eumle_estimate<R: Rng + ?Sized>(
    decomp: &QuasiprobDecomposition,
    model: &RegularizedModel,
    window: FilterWindow,
    samples: u64,
    rng: &mut R,
) -> Result<EumleRun> {
    check_model(decomp, model)?;
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let s = decomp.sample(samples, rng);
    eumle_from_samples(decomp, model, &s, Some(window))
}

/// Asymptotic variance coefficients `σ²·M̃` from exact sums over outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EumleVariance {
    /// `|α|₁² E_Q̃[s_c²] / E_P[s_c²]²`.
    pub formula: f64,
    /// Sandwich `Var(score) / H²` for the selected weighting.
    pub sandwich: f64,
    /// `E_Q̃[s_c²]`.
    pub sampled_score_sq: f64,
    /// `E_P[s_c²]`.
    pub noiseless_score_sq: f64,
    /// `Σ_x P(x|φ*) s_c(x)`.
    pub score_mean: f64,
    /// Fisher information `Σ P'²/P` of the noiseless pmf.
    pub fisher: f64,
}

impl EumleVariance {
    /// Overhead `M̃/M`: `|α|₁² (E_Q̃[s_c²]/E_P[s_c²]) (Ī₀/E_P[s_c²])`.
    pub fn overhead(&self, one_norm: f64) -> f64 {
        one_norm * one_norm * self.sampled_score_sq / self.noiseless_score_sq * self.fisher / self.noiseless_score_sq
    }

    /// Sandwich variance relative to the noiseless `1/Ī₀`.
    pub fn sandwich_overhead(&self) -> f64 {
        self.sandwich * self.fisher
    }
}

/// Asymptotic variance of the estimator at the decomposition's true phase.
pub fn eumle_variance(decomp: &QuasiprobDecomposition, model: &RegularizedModel, phase: f64) -> Result<EumleVariance> {
    check_model(decomp, model)?;
    let target = decomp.target();
    let q = decomp.sampling_marginal();
    let c = model.regularization;
    let pts = model.scores(phase)?;
    let norm = decomp.one_norm();
    let (mut eq, mut ep, mut mean, mut fisher, mut curvature) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let m = model.sin_model()?;
    let k = decomp.control_dim();
    for (x, &(pc, dp)) in pts.iter().enumerate() {
        let p = target[x];
        if pc <= 0.0 {
            if q[x] > 0.0 {
                return invalid("sampled outcome with zero model probability");
            }
            continue;
        }
        let s = dp / pc;
        eq += q[x] * s * s;
        ep += p * s * s;
        mean += p * s;
        if p > 0.0 {
            fisher += dp * dp / p;
        }
        // second derivative by central difference of the analytic first one
        let h = 1e-5 / k as f64;
        let xi = phase - TAU * x as f64 / k as f64;
        let ddp = (m.prob_and_derivative(xi + h).1 - m.prob_and_derivative(xi - h).1) / (2.0 * h);
        let a = match model.weighting {
            Weighting::PseudoCount => p + c,
            Weighting::Literal => p,
        };
        curvature += a * (ddp / pc - s * s);
    }
    if !(ep > 0.0) {
        return invalid("degenerate score: E_P[s_c²] = 0");
    }
    let score_var = norm * norm * eq - mean * mean;
    Ok(EumleVariance {
        formula: norm * norm * eq / (ep * ep),
        sandwich: score_var / (curvature * curvature),
        sampled_score_sq: eq,
        noiseless_score_sq: ep,
        score_mean: mean,
        fisher,
    })
}

/// Constants of the von Mises overhead analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VonMisesBound {
    /// Root of `e² e^{−α²/2} = α² − 1`.
    pub alpha: f64,
    /// `α − 1/α`.
    pub beta: f64,
    pub sigma: f64,
    /// `c = 1/(N_σ e²)`, `N_σ = σ√(2π)`, as a density.
    pub regularization: f64,
    /// `β/σ`.
    pub score_cap: f64,
    pub fidelity: f64,
    /// `5/F⁴`.
    pub overhead_bound: f64,
    /// `β²/0.45²`, the prefactor the argument yields before rounding to 5.
    pub derived_prefactor: f64,
    /// `1/(4γ)`; infinite at `γ = 0`.
    pub optimal_depth: f64,
}

impl VonMisesBound {
    /// `T_tot ≤ 20π²eγ/ε²` at the optimal depth.
    pub fn total_cost_bound(gamma: f64, eps: f64) -> f64 {
        20.0 * PI * PI * E * gamma / (eps * eps)
    }
}

/// Root of `e² e^{−α²/2} = α² − 1` on `[1, 3]` by bisection.
pub fn von_mises_alpha() -> f64 {
    let g = |a: f64| E * E * (-a * a / 2.0).exp() - (a * a - 1.0);
    let (mut lo, mut hi) = (1.0f64, 3.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn von_mises_overhead_bound(gamma: f64, depth: f64) -> Result<VonMisesBound> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return invalid(format!("rate must be finite and >= 0, got {gamma}"));
    }
    let sigma = PI / depth;
    if !(sigma > 0.0 && sigma <= 0.5) {
        return invalid(format!("σ = π/T = {sigma} outside (0, 0.5]"));
    }
    let alpha = von_mises_alpha();
    let beta = alpha - 1.0 / alpha;
    let fidelity = (-gamma * depth).exp();
    Ok(VonMisesBound {
        alpha,
        beta,
        sigma,
        regularization: 1.0 / (sigma * TAU.sqrt() * E * E),
        score_cap: beta / sigma,
        fidelity,
        overhead_bound: 5.0 / fidelity.powi(4),
        derived_prefactor: beta * beta / (0.45 * 0.45),
        optimal_depth: 1.0 / (4.0 * gamma),
    })
}

/// Algorithm constants `a = 5`, `b ≈ 5π` of the mitigated single-ancilla
/// protocol.
pub const EM_KAPPA: f64 = 5.0 * 5.0 * PI;

/// Row of the error mitigation overhead table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmOverhead {
    /// `Λκe/π · νγ/ε`.
    pub overhead: f64,
    /// `1/(γν)`.
    pub depth: f64,
}

pub fn em_overhead_table(gamma: f64, eps: f64, nu: u32, lambda: f64, kappa: f64) -> Result<EmOverhead> {
    if !matches!(nu, 1 | 2 | 4) {
        return invalid(format!("exponent ν must be 1, 2 or 4, got {nu}"));
    }
    for (name, v) in [("γ", gamma), ("ε", eps), ("Λ", lambda), ("κ", kappa)] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    let nu = nu as f64;
    Ok(EmOverhead {
        overhead: lambda * kappa * E / PI * nu * gamma / eps,
        depth: 1.0 / (gamma * nu),
    })
}
