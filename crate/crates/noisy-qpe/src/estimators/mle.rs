//! Maximum-likelihood phase estimation over sin-state outcome histograms.
//!
//! The objective is `ℓ(φ) = Σ_x w_x ln P(x|φ) − Σ_x v_x P(x|φ)` with
//! `P(x|φ) = F·f_K(φ − 2πx/K) + (1−F)/K + c`. Plain MLE uses counts for `w`
//! and no linear term; the signed and filtered estimators in `eumle` reuse the
//! same maximizer with signed weights and a linear term.
//!
//! The maximizer scans a grid of `G = 4K` phases `φ_g = 2πg/G` and refines the
//! best few grid local maxima by golden-section search on
//! `[φ_g − 2π/G, φ_g + 2π/G]`. Likelihoods of samples in adjacent bins
//! oscillate on the scale `π/K`, so the best grid point is not always in the
//! best basin.
//! Because `2πx/K = 2π·4x/G`, the grid objective is a circular correlation of
//! the weights with a tabulated `ln P`; it is evaluated directly for sparse
//! histograms and by FFT otherwise.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::distributions::{circular_distance, wrap_phase, SinKernel, TAU};
use crate::error::{invalid, Error, Result};

const LOG_FLOOR: f64 = -690.775_527_898_213_7; // ln(1e-300)
const GRID_FACTOR: usize = 4;
const DIRECT_WORK_LIMIT: usize = 1 << 22;
const TIE_REL: f64 = 1e-9;
const MODEL_CACHE_LIMIT: usize = 64;
const REFINED_PEAKS: usize = 8;

/// Maximizer output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleResult {
    pub phase: f64,
    pub objective: f64,
    /// Another grid maximum lay within tolerance of the best one.
    pub tie: bool,
}

/// Restriction of the search to `circular_distance(φ, center) < half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub center: f64,
    pub half_width: f64,
}

struct Transforms {
    inverse_g: Arc<dyn Fft<f64>>,
    forward_k: Arc<dyn Fft<f64>>,
    log_hat: Vec<Complex<f64>>,
    prob_hat: Vec<Complex<f64>>,
}

/// Noisy, optionally regularized sin-state likelihood model at fixed `K`.
pub struct SinModel {
    kernel: SinKernel,
    k: usize,
    fidelity: f64,
    reg: f64,
    log_table: Vec<f64>,
    prob_table: Vec<f64>,
    transforms: OnceLock<Transforms>,
}

impl std::fmt::Debug for SinModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SinModel")
            .field("k", &self.k)
            .field("fidelity", &self.fidelity)
            .field("reg", &self.reg)
            .finish()
    }
}

impl SinModel {
    /// Model with circuit fidelity `fidelity` and additive regularization `reg`.
    pub fn new(k: usize, fidelity: f64, reg: f64) -> Result<Self> {
        let kernel = SinKernel::new(k)?;
        if !(fidelity > 0.0 && fidelity <= 1.0) {
            return invalid(format!("fidelity must lie in (0, 1], got {fidelity}"));
        }
        if !(reg >= 0.0 && reg.is_finite()) {
            return invalid(format!("regularization must be finite and >= 0, got {reg}"));
        }
        let g = GRID_FACTOR * k;
        let mut model = SinModel {
            kernel,
            k,
            fidelity,
            reg,
            log_table: Vec::new(),
            prob_table: Vec::new(),
            transforms: OnceLock::new(),
        };
        model.prob_table = (0..g).map(|n| model.prob(TAU * n as f64 / g as f64)).collect();
        model.log_table = model.prob_table.iter().map(|&p| safe_ln(p)).collect();
        Ok(model)
    }

    /// Shared instance from a process-wide cache.
    pub fn shared(k: usize, fidelity: f64, reg: f64) -> Result<Arc<SinModel>> {
        type Cache = Mutex<HashMap<(usize, u64, u64), Arc<SinModel>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (k, fidelity.to_bits(), reg.to_bits());
        if let Some(m) = cache.lock().expect("model cache poisoned").get(&key) {
            return Ok(Arc::clone(m));
        }
        let model = Arc::new(SinModel::new(k, fidelity, reg)?);
        let mut guard = cache.lock().expect("model cache poisoned");
        if guard.len() >= MODEL_CACHE_LIMIT {
            guard.clear();
        }
        Ok(Arc::clone(guard.entry(key).or_insert(model)))
    }

    pub fn control_dim(&self) -> usize {
        self.k
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn regularization(&self) -> f64 {
        self.reg
    }

    /// `P_c(ξ) = F f_K(ξ) + (1−F)/K + c` at `ξ = φ − 2πx/K`.
    pub fn prob(&self, xi: f64) -> f64 {
        self.fidelity * self.kernel.value(xi) + (1.0 - self.fidelity) / self.k as f64 + self.reg
    }

    /// `(P_c, ∂P_c/∂ξ)`.
    pub fn prob_and_derivative(&self, xi: f64) -> (f64, f64) {
        let (f, fp) = self.kernel.value_and_derivative(xi);
        (
            self.fidelity * f + (1.0 - self.fidelity) / self.k as f64 + self.reg,
            self.fidelity * fp,
        )
    }

    /// `P_c(x|φ)` over all outcomes.
    pub fn probs(&self, phase: f64) -> Vec<f64> {
        (0..self.k).map(|x| self.prob(self.offset(phase, x))).collect()
    }

    fn offset(&self, phase: f64, x: usize) -> f64 {
        phase - TAU * x as f64 / self.k as f64
    }

    /// Continuous objective `Σ w ln P_c − Σ v P_c`.
    pub fn objective(&self, phase: f64, weights: &[(usize, f64)], linear: &[(usize, f64)]) -> f64 {
        let mut s = 0.0;
        for &(x, w) in weights {
            s += w * safe_ln(self.prob(self.offset(phase, x)));
        }
        for &(x, v) in linear {
            s -= v * self.prob(self.offset(phase, x));
        }
        s
    }

    fn grid_len(&self) -> usize {
        GRID_FACTOR * self.k
    }

    fn transforms(&self) -> &Transforms {
        self.transforms.get_or_init(|| {
            let g = self.grid_len();
            let mut planner = FftPlanner::new();
            let forward_g = planner.plan_fft_forward(g);
            let inverse_g = planner.plan_fft_inverse(g);
            let forward_k = planner.plan_fft_forward(self.k);
            let transform = |table: &[f64]| {
                let mut buf: Vec<Complex<f64>> = table.iter().map(|&v| Complex::new(v, 0.0)).collect();
                forward_g.process(&mut buf);
                buf
            };
            let log_hat = transform(&self.log_table);
            let prob_hat = transform(&self.prob_table);
            Transforms {
                inverse_g,
                forward_k,
                log_hat,
                prob_hat,
            }
        })
    }

    /// Objective on the full grid `φ_g = 2πg/G`.
    pub fn grid_objective(&self, weights: &[(usize, f64)], linear: &[(usize, f64)]) -> Vec<f64> {
        let g = self.grid_len();
        let nnz = weights.len() + linear.len();
        if nnz.saturating_mul(g) <= DIRECT_WORK_LIMIT {
            let mut out = vec![0.0; g];
            for &(x, w) in weights {
                let shift = GRID_FACTOR * x;
                for (i, o) in out.iter_mut().enumerate() {
                    *o += w * self.log_table[(i + g - shift) % g];
                }
            }
            for &(x, v) in linear {
                let shift = GRID_FACTOR * x;
                for (i, o) in out.iter_mut().enumerate() {
                    *o -= v * self.prob_table[(i + g - shift) % g];
                }
            }
            return out;
        }
        let t = self.transforms();
        let spectrum = |sparse: &[(usize, f64)]| -> Vec<Complex<f64>> {
            let mut buf = vec![Complex::new(0.0, 0.0); self.k];
            for &(x, w) in sparse {
                buf[x].re += w;
            }
            t.forward_k.process(&mut buf);
            buf
        };
        let w_hat = spectrum(weights);
        let v_hat = if linear.is_empty() { None } else { Some(spectrum(linear)) };
        let mut acc: Vec<Complex<f64>> = (0..g)
            .map(|m| {
                let mut z = w_hat[m % self.k] * t.log_hat[m];
                if let Some(v) = &v_hat {
                    z -= v[m % self.k] * t.prob_hat[m];
                }
                z
            })
            .collect();
        t.inverse_g.process(&mut acc);
        acc.iter().map(|z| z.re / g as f64).collect()
    }

    /// Maximize the objective over `[0, 2π)` or over `window`.
    pub fn maximize(
        &self,
        weights: &[(usize, f64)],
        linear: &[(usize, f64)],
        window: Option<SearchWindow>,
    ) -> Result<MleResult> {
        if let Some(&(x, _)) = weights.iter().chain(linear).find(|(x, _)| *x >= self.k) {
            return invalid(format!("outcome {x} outside 0..{}", self.k));
        }
        if weights.iter().chain(linear).any(|(_, w)| !w.is_finite()) {
            return invalid("likelihood weights must be finite");
        }
        let g = self.grid_len();
        let step = TAU / g as f64;
        let values = self.grid_objective(weights, linear);
        let admissible = |i: usize| match window {
            None => true,
            Some(w) => circular_distance(step * i as f64, w.center) < w.half_width,
        };
        // grid local maxima, best first
        let mut peaks: Vec<usize> = (0..g)
            .filter(|&i| {
                if !admissible(i) {
                    return false;
                }
                let left = (i + g - 1) % g;
                let right = (i + 1) % g;
                (!admissible(left) || values[i] >= values[left]) && (!admissible(right) || values[i] > values[right])
            })
            .collect();
        if peaks.is_empty() {
            // flat objective or single admissible run without a strict peak
            peaks = (0..g).filter(|&i| admissible(i)).collect();
        }
        if peaks.is_empty() {
            return invalid("search window contains no grid phase");
        }
        peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        peaks.truncate(REFINED_PEAKS);
        if !values[peaks[0]].is_finite() {
            return Err(Error::Internal(format!(
                "likelihood maximum is not finite: {}",
                values[peaks[0]]
            )));
        }
        let f = |phi: f64| self.objective(phi, weights, linear);
        let tol_phase = 1e-4 * std::f64::consts::PI / (self.k - 1) as f64;
        let mut candidates: Vec<(f64, f64)> = peaks
            .iter()
            .map(|&i| {
                let grid_phase = TAU * i as f64 / g as f64;
                let (mut lo, mut hi) = (grid_phase - step, grid_phase + step);
                if let Some(w) = window {
                    let base = grid_phase - wrap_signed_around(grid_phase, w.center);
                    let margin = w.half_width * (1.0 - 1e-12);
                    lo = lo.max(base - margin);
                    hi = hi.min(base + margin);
                }
                let refined = golden_max(f, lo, hi, tol_phase);
                let (gv, rv) = (f(grid_phase), f(refined));
                if rv > gv {
                    (wrap_phase(refined), rv)
                } else {
                    (wrap_phase(grid_phase), gv)
                }
            })
            .collect();
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best_phase, best_value) = candidates[0];
        let tol = TIE_REL * (1.0 + best_value.abs());
        let mut phase = best_phase;
        let mut tie = false;
        for &(p, v) in &candidates[1..] {
            if v >= best_value - tol && circular_distance(p, best_phase) > step {
                tie = true;
                if p < phase {
                    phase = p;
                }
            }
        }
        Ok(MleResult {
            phase,
            objective: f(phase),
            tie,
        })
    }
}

fn wrap_signed_around(phase: f64, center: f64) -> f64 {
    crate::distributions::wrap_signed(phase - center)
}

fn safe_ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
