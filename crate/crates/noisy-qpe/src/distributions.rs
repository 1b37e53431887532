//! Outcome distributions of sin-state QPE and Hadamard-test circuits, exact
//! inverse-CDF sampling and the Holevo error metric.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::harness::rng::TrialRng;

pub const TAU: f64 = 2.0 * PI;

/// Canonical phase in `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y >= TAU {
        0.0
    } else {
        y
    }
}

/// Signed representative in `[-π, π)`.
pub fn wrap_signed(x: f64) -> f64 {
    let y = wrap_phase(x);
    if y >= PI {
        y - TAU
    } else {
        y
    }
}

/// Distance on the unit circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_signed(a - b).abs()
}

/// The noiseless sin-state kernel `f_K(ξ)` with `P₀(x|φ) = f_K(φ − 2πx/K)`.
///
/// Evaluated in the factored form `f = B·S(ξ)²` where
/// `S = sin(N(ξ−a)/2) / (sin((ξ−a)/2)·sin((ξ+a)/2))`, `N = K+1`, `a = π/(K+1)`.
/// The Dirichlet-type ratio `sin(Nu/2)/sin(u/2)` carries the removable
/// singularities at `ξ = ±a`; within `|Nu/2| < 1e-5` it is replaced by its
/// second-order Taylor polynomial.
#[derive(Debug, Clone, Copy)]
pub struct SinKernel {
    k: usize,
    n: f64,
    a: f64,
    b: f64,
    // ln((N-1)/(N+1)) for the derivative series
    log_ratio: f64,
}

const TAYLOR_CUTOFF: f64 = 1e-5;
const SERIES_CUTOFF: f64 = 1.0;

impl SinKernel {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return invalid(format!("control dimension K must be >= 2, got {k}"));
        }
        let kf = k as f64;
        let n = kf + 1.0;
        let a = PI / n;
        let b = a.sin().powi(2) / (2.0 * kf * n);
        Ok(SinKernel {
            k,
            n,
            a,
            b,
            log_ratio: (-2.0 / (n + 1.0)).ln_1p(),
        })
    }

    pub fn control_dim(&self) -> usize {
        self.k
    }

    /// `(D(u), dD/du)` for `D(u) = sin(Nu/2)/sin(u/2)`.
    fn dirichlet(&self, u: f64) -> (f64, f64) {
        let n = self.n;
        let x = 0.5 * u;
        let nx = n * x;
        let d = if nx.abs() < TAYLOR_CUTOFF {
            n * (1.0 - (n * n - 1.0) * x * x / 6.0)
        } else {
            nx.sin() / x.sin()
        };
        if x == 0.0 {
            return (d, 0.0);
        }
        // g(x) = N cos(Nx) sin x - sin(Nx) cos x, so dD/dx = g / sin²x
        let g = if nx.abs() < SERIES_CUTOFF {
            let y2 = ((n + 1.0) * x).powi(2);
            let pref = 0.5 * (n * n - 1.0) * x;
            let mut sum = 0.0;
            let mut pow = 1.0;
            let mut fact = 1.0;
            for k in 1..40 {
                pow *= y2;
                fact *= ((2 * k) * (2 * k + 1)) as f64;
                let diff = -(2.0 * k as f64 * self.log_ratio).exp_m1();
                let term = pref * pow * diff / fact;
                if k % 2 == 1 {
                    sum -= term;
                } else {
                    sum += term;
                }
                if term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
            }
            sum
        } else {
            n * nx.cos() * x.sin() - nx.sin() * x.cos()
        };
        let s = x.sin();
        (d, 0.5 * g / (s * s))
    }

    /// `(S, dS/dξ)` on the wrapped argument.
    fn amplitude(&self, xi: f64) -> (f64, f64) {
        let xi = wrap_signed(xi);
        let a = self.a;
        if xi >= 0.0 {
            let (d, dd) = self.dirichlet(xi - a);
            let v = (0.5 * (xi + a)).sin();
            let dv = 0.5 * (0.5 * (xi + a)).cos();
            (d / v, dd / v - d * dv / (v * v))
        } else {
            let (d, dd) = self.dirichlet(xi + a);
            let q = (0.5 * (xi - a)).sin();
            let dq = 0.5 * (0.5 * (xi - a)).cos();
            (-d / q, -dd / q + d * dq / (q * q))
        }
    }

    /// `f_K(ξ)`.
    pub fn value(&self, xi: f64) -> f64 {
        let (s, _) = self.amplitude(xi);
        self.b * s * s
    }

    /// `(f_K(ξ), f_K'(ξ))`.
    pub fn value_and_derivative(&self, xi: f64) -> (f64, f64) {
        let (s, ds) = self.amplitude(xi);
        (self.b * s * s, 2.0 * self.b * s * ds)
    }

    /// `f'²/f = 4B·S'²`, finite everywhere including the zeros of `f`.
    pub fn score_density(&self, xi: f64) -> f64 {
        let (_, ds) = self.amplitude(xi);
        4.0 * self.b * ds * ds
    }

    /// Noisy Fisher integrand `K F² f'²/(F f + (1−F)/K)` at fidelity `F`.
    pub fn fisher_integrand(&self, xi: f64, fidelity: f64) -> f64 {
        let kf = self.k as f64;
        let (s, ds) = self.amplitude(xi);
        if fidelity >= 1.0 {
            return kf * 4.0 * self.b * ds * ds;
        }
        let f = self.b * s * s;
        let fp = 2.0 * self.b * s * ds;
        kf * fidelity * fidelity * fp * fp / (fidelity * f + (1.0 - fidelity) / kf)
    }

    /// Value at the removable singularity, `f_K(±π/(K+1)) = (K+1)/(2K)`.
    pub fn limit_value(&self) -> f64 {
        self.n / (2.0 * self.k as f64)
    }
}

/// Circuit fidelity `e^{−(K−1)γ}` of a depth-(K−1) sin-state circuit.
pub fn sin_fidelity(k: usize, gamma: f64) -> f64 {
    (-(k as f64 - 1.0) * gamma).exp()
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return invalid(format!("{name} must be finite, got {v}"));
    }
    Ok(())
}

fn check_rate(gamma: f64) -> Result<()> {
    if gamma.is_nan() || gamma < 0.0 {
        return invalid(format!("depolarizing rate must be >= 0, got {gamma}"));
    }
    Ok(())
}

/// Noisy sin-state outcome distribution over `{0, …, K−1}`.
#[derive(Debug, Clone)]
pub struct SinQpeDistribution {
    pub kernel: SinKernel,
    pub phase: f64,
    pub gamma: f64,
    pmf: Pmf,
}

impl SinQpeDistribution {
    pub fn new(k: usize, phase: f64, gamma: f64) -> Result<Self> {
        let kernel = SinKernel::new(k)?;
        check_finite("phase", phase)?;
        check_rate(gamma)?;
        let phase = wrap_phase(phase);
        let f = sin_fidelity(k, gamma);
        let floor = (1.0 - f) / k as f64;
        let probs: Vec<f64> = (0..k)
            .map(|x| f * kernel.value(phase - TAU * x as f64 / k as f64) + floor)
            .collect();
        Ok(SinQpeDistribution {
            kernel,
            phase,
            gamma,
            pmf: Pmf::from_probs_unchecked(probs),
        })
    }

    pub fn fidelity(&self) -> f64 {
        sin_fidelity(self.kernel.control_dim(), self.gamma)
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }
}

/// `P_γ(x|φ)` for the sin-state circuit with `K` control levels.
pub fn sin_qpe_pmf(k: usize, phase: f64, gamma: f64) -> Result<Vec<f64>> {
    Ok(SinQpeDistribution::new(k, phase, gamma)?.pmf.probs)
}

/// Hadamard-test outcomes indexed `2·x + y` for bits `(x, y)`, i.e.
/// `Z = (−1)^x + i(−1)^y`.
#[derive(Debug, Clone)]
pub struct HadamardTestDistribution {
    pub exponent: u64,
    pub phase: f64,
    pub gamma: f64,
    pmf: Pmf,
}

impl HadamardTestDistribution {
    pub fn new(exponent: u64, phase: f64, gamma: f64) -> Result<Self> {
        if exponent < 1 {
            return invalid("Hadamard exponent k must be >= 1");
        }
        check_finite("phase", phase)?;
        check_rate(gamma)?;
        let (re, im) = hadamard_means(exponent, phase, gamma);
        let px = [(1.0 + re) / 2.0, (1.0 - re) / 2.0];
        let py = [(1.0 + im) / 2.0, (1.0 - im) / 2.0];
        let probs = vec![px[0] * py[0], px[0] * py[1], px[1] * py[0], px[1] * py[1]];
        Ok(HadamardTestDistribution {
            exponent,
            phase: wrap_phase(phase),
            gamma,
            pmf: Pmf::from_probs_unchecked(probs),
        })
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    /// Oracle calls per `(X, Y)` pair.
    pub fn cost_per_pair(&self) -> u64 {
        2 * self.exponent
    }
}

/// Damped quadrature means `(E[Re Z], E[Im Z]) = e^{−γk}(cos kφ, sin kφ)`.
pub fn hadamard_means(exponent: u64, phase: f64, gamma: f64) -> (f64, f64) {
    let k = exponent as f64;
    let damp = (-gamma * k).exp();
    let arg = (k * wrap_phase(phase)) % TAU;
    (damp * arg.cos(), damp * arg.sin())
}

/// Probabilities over `{+1+i, +1−i, −1+i, −1−i}`.
pub fn hadamard_pmf(exponent: u64, phase: f64, gamma: f64) -> Result<[f64; 4]> {
    let d = HadamardTestDistribution::new(exponent, phase, gamma)?;
    let p = d.pmf.probs();
    Ok([p[0], p[1], p[2], p[3]])
}

/// Validated probability vector with a cumulative table for inverse-CDF draws.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return invalid("pmf must have at least one outcome");
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return invalid("pmf entries must be finite and non-negative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("pmf sums to {total}, expected 1"));
        }
        Ok(Self::from_probs_unchecked(probs))
    }

    fn from_probs_unchecked(probs: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Pmf { probs, cdf }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// One draw by inverse CDF; zero-probability outcomes are never returned.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty pmf");
        let u: f64 = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        let mut i = idx.min(self.probs.len() - 1);
        while self.probs[i] == 0.0 && i > 0 {
            i -= 1;
        }
        while self.probs[i] == 0.0 {
            i += 1;
        }
        i
    }

    /// Outcome histogram of `n` draws.
    pub fn draw_counts<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.probs.len()];
        for _ in 0..n {
            counts[self.draw(rng)] += 1;
        }
        counts
    }
}

/// `n` i.i.d. outcomes from `pmf` using the stream derived from `seed`.
pub fn sample(pmf: &Pmf, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = TrialRng::from_seed(seed);
    (0..n).map(|_| pmf.draw(&mut rng)).collect()
}

/// Holevo error `sqrt(mean 4 sin²((φ̂−φ)/2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolevoError {
    pub value: f64,
    /// Standard error of `value` from the per-trial spread (delta method).
    pub std_error: f64,
    pub samples: usize,
}

impl HolevoError {
    pub fn squared(&self) -> f64 {
        self.value * self.value
    }
}

pub fn holevo_error(estimates: &[f64], truths: &[f64]) -> Result<HolevoError> {
    if estimates.is_empty() {
        return invalid("holevo_error needs at least one estimate");
    }
    if estimates.len() != truths.len() {
        return invalid(format!(
            "estimates ({}) and truths ({}) differ in length",
            estimates.len(),
            truths.len()
        ));
    }
    if estimates.iter().chain(truths).any(|v| !v.is_finite()) {
        return invalid("phases must be finite");
    }
    let terms: Vec<f64> = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| 4.0 * (0.5 * (e - t)).sin().powi(2))
        .collect();
    Ok(holevo_from_terms(&terms))
}

pub(crate) fn holevo_from_terms(terms: &[f64]) -> HolevoError {
    let n = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / n;
    let var = if terms.len() > 1 {
        terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let value = mean.sqrt();
    let std_error = if value > 0.0 {
        (var / n).sqrt() / (2.0 * value)
    } else {
        0.0
    };
    HolevoError {
        value,
        std_error,
        samples: terms.len(),
    }
}

/// Squared Holevo error of one depth-`T` sin-state circuit under GDN:
/// `e^{−γT}π²/T² + 2(1−e^{−γT})`.
pub fn single_circuit_holevo(gamma: f64, depth: u64) -> Result<f64> {
    if depth < 1 {
        return invalid("depth must be >= 1");
    }
    check_rate(gamma)?;
    let t = depth as f64;
    let f = (-gamma * t).exp();
    Ok(f * PI * PI / (t * t) + 2.0 * (1.0 - f))
}

/// Holevo error `tan(π/(K+1))` of the noiseless single-circuit estimator.
pub fn noiseless_sin_error(k: usize) -> f64 {
    (PI / (k as f64 + 1.0)).tan()
}

/// Smallest `K ≥ 2` whose noiseless single-circuit error `tan(π/(K+1))`
/// does not exceed `eps`.
pub fn control_dim_for_error(eps: f64) -> Result<usize> {
    if !(eps.is_finite() && eps > 0.0) {
        return invalid(format!("target error must be positive, got {eps}"));
    }
    // tan(π/(K+1)) <= eps  <=>  K+1 >= π/atan(eps)
    let guess = (PI / eps.atan() - 1.0).ceil().max(2.0);
    if guess > 1e15 {
        return invalid(format!("target error {eps} needs an impractical control dimension"));
    }
    let mut k = guess as usize;
    while k > 2 && noiseless_sin_error(k - 1) <= eps {
        k -= 1;
    }
    while noiseless_sin_error(k) > eps {
        k += 1;
    }
    Ok(k)
}
