//! Fisher information of the two circuit families, Bayesian Cramér-Rao bounds
//! and optimal-depth selection.

use std::collections::HashMap;
use std::f64::consts::{E, FRAC_PI_2, PI};
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;

use crate::distributions::{sin_fidelity, SinKernel, TAU};
use crate::error::{invalid, Error, Result};

/// Reference prefactor of the GDN channel limit `ε ≥ c·√(γ/T_tot)` used in plots.
pub const GDN_LIMIT_PREFACTOR: f64 = 1.7;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * s;
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const GL_ORDER: usize = 8;
const MAX_REFINEMENTS: usize = 4;
const ACCEPT_REL: f64 = 1e-12;
const REPORT_REL: f64 = 1e-8;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(GL_ORDER))
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Relative change between the last two refinement levels.
    pub rel_change: f64,
    pub panels: usize,
}

/// Composite rule over fixed breakpoints; every panel is bisected per level.
fn adaptive_on<F: Fn(f64) -> f64>(what: &str, f: F, breaks: &[f64]) -> Result<Quadrature> {
    adaptive_tol(what, f, breaks, REPORT_REL)
}

fn adaptive_tol<F: Fn(f64) -> f64>(what: &str, f: F, breaks: &[f64], report: f64) -> Result<Quadrature> {
    let gl = rule();
    let integrate = |split: usize| -> f64 {
        breaks
            .windows(2)
            .map(|w| gl.integrate(&f, w[0], w[1], split))
            .sum()
    };
    let mut split = 1;
    let mut prev = integrate(split);
    let mut rel = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        split *= 2;
        let cur = integrate(split);
        rel = if cur == 0.0 { (cur - prev).abs() } else { ((cur - prev) / cur).abs() };
        prev = cur;
        if rel <= ACCEPT_REL {
            break;
        }
    }
    if !(rel <= report) {
        return Err(Error::NonConvergence {
            what: what.to_string(),
            estimate: rel,
        });
    }
    Ok(Quadrature {
        value: prev,
        rel_change: rel,
        panels: (breaks.len() - 1) * split,
    })
}

// ---------------------------------------------------------------- Hadamard

/// Fisher information per `(X, Y)` pair of the Hadamard test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HadamardFisher {
    /// `e^{−2γk}k²`.
    pub closed_form: f64,
    /// Phase-averaged `Σ (∂P)²/P` over the four outcomes, by quadrature.
    pub quadrature: f64,
    /// Analytic phase average of the same sum, `2k²(1 − √(1 − e^{−2γk}))`.
    pub exact: f64,
}

pub fn fisher_hadamard_closed(exponent: u64, gamma: f64) -> f64 {
    let k = exponent as f64;
    (-2.0 * gamma * k).exp() * k * k
}

pub fn fisher_hadamard_exact(exponent: u64, gamma: f64) -> f64 {
    let k = exponent as f64;
    let d2 = (-2.0 * gamma * k).exp();
    // 1 - sqrt(1 - d²) without cancellation
    let one_minus = if d2 < 1.0 { d2 / (1.0 + (1.0 - d2).sqrt()) } else { 1.0 };
    2.0 * k * k * one_minus
}

/// `Σ_{x,y} (∂_φ P)²/P` at a fixed phase.
pub fn hadamard_fisher_at(exponent: u64, phase: f64, gamma: f64) -> f64 {
    let k = exponent as f64;
    let d = (-gamma * k).exp();
    let damp = -(-2.0 * gamma * k).exp_m1();
    let (s, c) = (k * phase).sin_cos();
    // p = (1 + m)/2 with ∂p = dm/2: (∂p)²/(p(1−p)) = dm²/(1 − m²);
    // 1 − d²c² is formed as (1 − d²) + d²s² to avoid cancellation
    let bit = |dm: f64, other: f64| {
        let den = damp + d * d * other * other;
        if den <= 0.0 {
            k * k
        } else {
            dm * dm / den
        }
    };
    bit(-d * k * s, s) + bit(d * k * c, c)
}

pub fn fisher_hadamard(exponent: u64, gamma: f64) -> Result<HadamardFisher> {
    if exponent < 1 {
        return invalid("Hadamard exponent must be >= 1");
    }
    if gamma.is_nan() || gamma < 0.0 {
        return invalid("depolarizing rate must be >= 0");
    }
    // integrand has period 2π/k; each bit dips to zero over a width
    // √(1 − e^{−2γk}) where sin or cos of kφ vanishes, so quarter periods are
    // graded geometrically toward both ends
    let k = exponent as f64;
    let period = TAU / k;
    let width = (-(-2.0 * gamma * k).exp_m1()).sqrt() / 8.0;
    let quarter = FRAC_PI_2;
    let mut offsets = vec![0.0];
    let mut w = width;
    while w > 0.0 && w < quarter / 4.0 {
        offsets.push(w);
        w *= 2.0;
    }
    let mut breaks = Vec::new();
    for m in 0..4 {
        let a = m as f64 * quarter;
        breaks.extend(offsets.iter().map(|o| a + o));
        breaks.push(a + quarter / 2.0);
        breaks.extend(offsets[1..].iter().rev().map(|o| a + quarter - o));
    }
    breaks.push(TAU);
    let breaks: Vec<f64> = breaks.iter().map(|u| u / k).collect();
    let q = adaptive_on(
        "Hadamard Fisher quadrature",
        |phi| hadamard_fisher_at(exponent, phi, gamma),
        &breaks,
    )?;
    Ok(HadamardFisher {
        closed_form: fisher_hadamard_closed(exponent, gamma),
        quadrature: q.value / period,
        exact: fisher_hadamard_exact(exponent, gamma),
    })
}

// ---------------------------------------------------------------- sin state

/// Phase-averaged Fisher information `Ī_γ(T)` of one depth-`T = K−1`
/// sin-state circuit, by adaptive composite Gauss-Legendre quadrature of
/// `∫ dξ/2π K F² f'²/(F f + (1−F)/K)`.
///
/// The integrand is even in `ξ`, so `[0, π]` is integrated and doubled.
/// Breakpoints sit at the zeros `(2m+1)π/(K+1)` of `f_K`. With `F < 1` the
/// integrand dips to zero at each of them over a width
/// `δ₀ = √(floor/(F·B·S'²))`, which shrinks like `1/K²` next to the peak, so
/// the panels are graded geometrically (ratio 2) from `δ₀/8` up to the
/// half-spacing. Each panel carries 8 nodes; all panels are bisected until
/// the relative change drops below 1e−12, and a final change above
/// `max(1e−8, 16·K·ε_mach)` is reported as non-convergence. Phase arguments
/// of size `K` carry absolute rounding `K·ε_mach`, which bounds the attainable
/// accuracy at depths of order 10⁸.
pub fn fisher_sinqpe_quadrature(k: usize, gamma: f64) -> Result<Quadrature> {
    sin_quadrature_capped(k, gamma, EXACT_LOBES)
}

/// Lobes integrated one by one; beyond this the tail is sampled.
const EXACT_LOBES: usize = 1 << 16;
/// Geometric spacing of the sampled tail lobes.
const TAIL_RATIO: f64 = 1.02;

/// Past `cap` lobes, lobe integrals are evaluated on a geometric grid of lobe
/// indices and summed by piecewise power-law interpolation (trapezoid in
/// log-log) plus the endpoint correction. The last two lobes, next to `π`,
/// are always integrated directly.
fn sin_quadrature_capped(k: usize, gamma: f64, cap: usize) -> Result<Quadrature> {
    let kernel = SinKernel::new(k)?;
    if gamma.is_nan() || gamma < 0.0 {
        return invalid("depolarizing rate must be >= 0");
    }
    let fid = sin_fidelity(k, gamma);
    let n = k as f64 + 1.0;
    let floor = (1.0 - fid) / k as f64;
    // zeros 0 < 3π/n < 5π/n < … < π; lobe i spans zero(i)..zero(i+1)
    // m ≥ 1 with 2m + 1 < K + 1
    let inner = (k + 1) / 2 - 1;
    let n_zeros = inner + 2;
    let zero = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else if i == n_zeros - 1 {
            PI
        } else {
            (2 * i + 1) as f64 * PI / n
        }
    };
    let width = |z: f64| -> f64 {
        if fid >= 1.0 || z == 0.0 || z == PI && (k % 2 == 1) {
            return 0.0;
        }
        let sd = kernel.score_density(z);
        if sd <= 0.0 {
            return 0.0;
        }
        (4.0 * floor / (fid * sd)).sqrt()
    };
    // graded breakpoints of lobes lo..hi, excluding the final right edge
    let lobe_breaks = |lo: usize, hi: usize, breaks: &mut Vec<f64>| {
        for i in lo..hi {
            let (l, r) = (zero(i), zero(i + 1));
            let half = 0.5 * (r - l);
            breaks.push(l);
            let d = width(l);
            if d > 0.0 {
                let mut t = d / 8.0;
                while t < half {
                    breaks.push(l + t);
                    t *= 2.0;
                }
            }
            breaks.push(l + half);
            let d = width(r);
            if d > 0.0 {
                let mut right = Vec::new();
                let mut t = d / 8.0;
                while t < half {
                    right.push(r - t);
                    t *= 2.0;
                }
                breaks.extend(right.into_iter().rev());
            }
        }
    };
    let integrand = |xi: f64| kernel.fisher_integrand(xi, fid);
    let lobes = n_zeros - 1;
    let what = "sin-state Fisher quadrature";
    let report = REPORT_REL.max(16.0 * n * f64::EPSILON);
    let direct = |lo: usize, hi: usize| -> Result<Quadrature> {
        let mut breaks = Vec::new();
        lobe_breaks(lo, hi, &mut breaks);
        breaks.push(zero(hi));
        adaptive_tol(what, integrand, &breaks, report)
    };
    if lobes <= cap.saturating_add(4) {
        let q = direct(0, lobes)?;
        return Ok(Quadrature {
            value: q.value / PI,
            ..q
        });
    }
    let head = direct(0, cap)?;
    let end = direct(lobes - 2, lobes)?;
    let last_sampled = lobes - 3;
    let mut grid = vec![cap];
    let mut x = cap as f64;
    loop {
        x *= TAIL_RATIO;
        let m = (x.round() as usize).max(grid[grid.len() - 1] + 1);
        if m >= last_sampled {
            break;
        }
        grid.push(m);
    }
    grid.push(last_sampled);
    let samples = grid
        .iter()
        .map(|&m| direct(m, m + 1))
        .collect::<Result<Vec<_>>>()?;
    let mut tail = 0.5 * (samples[0].value + samples[samples.len() - 1].value);
    for (w, q) in grid.windows(2).zip(samples.windows(2)) {
        let (m0, m1) = (w[0] as f64, w[1] as f64);
        let (l0, l1) = (q[0].value, q[1].value);
        tail += if l0 > 0.0 && l1 > 0.0 && (l0 - l1).abs() > 1e-12 * l0 {
            // ∫ l0 (m/m0)^s dm over [m0, m1]
            let s = (l1 / l0).ln() / (m1 / m0).ln();
            if (s + 1.0).abs() < 1e-9 {
                l0 * m0 * (m1 / m0).ln()
            } else {
                l0 * m0 / (s + 1.0) * ((m1 / m0).powf(s + 1.0) - 1.0)
            }
        } else {
            0.5 * (l0 + l1) * (m1 - m0)
        };
    }
    let rel = samples
        .iter()
        .chain([&head, &end])
        .map(|q| q.rel_change)
        .fold(0.0, f64::max);
    let panels = head.panels + end.panels + samples.iter().map(|q| q.panels).sum::<usize>();
    Ok(Quadrature {
        value: (head.value + tail + end.value) / PI,
        rel_change: rel,
        panels,
    })
}

pub fn fisher_sinqpe(k: usize, gamma: f64) -> Result<f64> {
    Ok(fisher_sinqpe_quadrature(k, gamma)?.value)
}

/// Noiseless `Ī₀` by Parseval on the real amplitude of the sin state:
/// `8/(K+1) · Σ_j (j − (K−1)/2)² sin²((j+1)π/(K+1))`.
pub fn fisher_sinqpe_noiseless_exact(k: usize) -> Result<f64> {
    if k < 2 {
        return invalid("control dimension must be >= 2");
    }
    let n = k as f64 + 1.0;
    let mid = (k as f64 - 1.0) / 2.0;
    let sum: f64 = (0..k)
        .map(|j| {
            let s = ((j as f64 + 1.0) * PI / n).sin();
            (j as f64 - mid).powi(2) * s * s
        })
        .sum();
    Ok(8.0 / n * sum)
}

/// `Σ_x (∂_φ P_γ(x|φ))²/P_γ(x|φ)` at a fixed phase.
pub fn sinqpe_fisher_at(k: usize, phase: f64, gamma: f64) -> Result<f64> {
    let kernel = SinKernel::new(k)?;
    let fid = sin_fidelity(k, gamma);
    let floor = (1.0 - fid) / k as f64;
    Ok((0..k)
        .map(|x| {
            let xi = phase - TAU * x as f64 / k as f64;
            if fid >= 1.0 {
                return kernel.score_density(xi);
            }
            let (f, fp) = kernel.value_and_derivative(xi);
            let p = fid * f + floor;
            (fid * fp).powi(2) / p
        })
        .sum())
}

/// Memoized sin-state Fisher evaluator keyed on `(T, γ)`.
#[derive(Debug, Default)]
pub struct SinFisherTable {
    memo: Mutex<HashMap<(u64, u64), f64>>,
}

impl SinFisherTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide shared table.
    pub fn shared() -> &'static SinFisherTable {
        static TABLE: OnceLock<SinFisherTable> = OnceLock::new();
        TABLE.get_or_init(SinFisherTable::default)
    }

    /// `Ī_γ(T)` for depth `T ≥ 1`.
    pub fn average(&self, depth: u64, gamma: f64) -> Result<f64> {
        if depth < 1 {
            return invalid("depth must be >= 1");
        }
        let key = (depth, gamma.to_bits());
        if let Some(v) = self.memo.lock().expect("fisher memo poisoned").get(&key) {
            return Ok(*v);
        }
        let v = fisher_sinqpe(depth as usize + 1, gamma)?;
        self.memo.lock().expect("fisher memo poisoned").insert(key, v);
        Ok(v)
    }
}

// ---------------------------------------------------------------- bounds

/// `Ī(T)/T`.
pub fn specific_fisher(information: f64, depth: u64) -> f64 {
    information / depth as f64
}

/// Cramér-Rao error bound `1/√I` for accumulated information `I`.
pub fn cramer_rao_bound(fisher_total: f64) -> Result<f64> {
    if !(fisher_total > 0.0) || !fisher_total.is_finite() {
        return invalid(format!("Fisher information must be positive, got {fisher_total}"));
    }
    Ok(1.0 / fisher_total.sqrt())
}

/// Bound for `M` shots at depth `T` spending `T_tot = M·T`: `√(T/(Ī(T)·T_tot))`.
pub fn cramer_rao_for_cost(information: f64, depth: u64, total_cost: f64) -> Result<f64> {
    cramer_rao_bound(information * total_cost / depth as f64)
}

/// Asymptotic lower bound `T_tot ≥ 4eγ/ε²` for Hadamard-test estimators.
pub fn rpe_cost_lower_bound(gamma: f64, eps: f64) -> f64 {
    4.0 * E * gamma / (eps * eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitFamily {
    Hadamard,
    SinQpe,
}

/// Depth maximizing the specific Fisher information `Ī_γ(T)/T`.
pub fn optimal_depth(family: CircuitFamily, gamma: f64) -> Result<u64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return invalid("optimal depth needs a positive, finite rate");
    }
    match family {
        CircuitFamily::Hadamard => Ok((0.5 / gamma).round().max(1.0) as u64),
        CircuitFamily::SinQpe => {
            let table = SinFisherTable::shared();
            let specific = |t: u64| -> Result<f64> { Ok(table.average(t, gamma)? / t as f64) };
            // golden section on log T around 1/γ
            let t_hint = (1.0 / gamma).max(1.0);
            let (mut lo, mut hi) = ((t_hint / 8.0).max(1.0).ln(), (t_hint * 8.0).ln());
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let eval = |lt: f64| specific(lt.exp().round().max(1.0) as u64);
            let mut x1 = hi - g * (hi - lo);
            let mut x2 = lo + g * (hi - lo);
            let mut f1 = eval(x1)?;
            let mut f2 = eval(x2)?;
            while hi - lo > 1e-3 {
                if f1 < f2 {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = eval(x2)?;
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = eval(x1)?;
                }
            }
            let center = (0.5 * (lo + hi)).exp().round().max(1.0) as u64;
            let span = ((center as f64) * 2e-3).ceil() as u64 + 2;
            let mut best = (center, specific(center)?);
            for t in center.saturating_sub(span).max(1)..=center + span {
                let v = specific(t)?;
                if v > best.1 {
                    best = (t, v);
                }
            }
            let t_star = best.0;
            let ratio = t_star as f64 * gamma;
            if !(0.8..=1.2).contains(&ratio) {
                return Err(Error::Internal(format!(
                    "specific-information optimum T*={t_star} is not within 20% of 1/γ"
                )));
            }
            Ok(t_star)
        }
    }
}

/// `Ī_γ(T)` over a list of depths.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FisherCurve {
    pub family: CircuitFamily,
    pub gamma: f64,
    pub depths: Vec<u64>,
    pub values: Vec<f64>,
}

pub fn fisher_curve(family: CircuitFamily, gamma: f64, depths: &[u64]) -> Result<FisherCurve> {
    let values = depths
        .par_iter()
        .map(|&t| match family {
            CircuitFamily::Hadamard => {
                if t < 1 {
                    invalid("depth must be >= 1")
                } else {
                    Ok(fisher_hadamard_closed(t, gamma))
                }
            }
            CircuitFamily::SinQpe => SinFisherTable::shared().average(t, gamma),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FisherCurve {
        family,
        gamma,
        depths: depths.to_vec(),
        values,
    })
}
