//! Small statistics helpers used by the estimators, the harness and the tests.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

/// Sample mean and unbiased variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Result<Summary> {
        if xs.is_empty() {
            return invalid("summary of an empty sample");
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            f64::NAN
        };
        Ok(Summary { n, mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Standard error of the mean; NaN for a single observation.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("linear fit needs two or more paired points");
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("linear fit with constant abscissa");
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_std_error = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_std_error,
    })
}

/// Least-squares `y = k·x` through the origin.
pub fn proportional_fit(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return invalid("proportional fit needs paired points");
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return invalid("proportional fit with zero abscissa");
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx)
}

/// Anderson-Darling test for normality with mean and variance estimated from
/// the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityTest {
    /// Small-sample adjusted statistic `A²(1 + 0.75/n + 2.25/n²)`.
    pub statistic: f64,
    pub p_value: f64,
}

impl NormalityTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

pub fn anderson_darling(xs: &[f64]) -> Result<NormalityTest> {
    if xs.len() < 8 {
        return invalid("normality test needs at least 8 observations");
    }
    let s = Summary::of(xs)?;
    let sd = s.std_dev();
    if !(sd > 0.0) {
        return invalid("normality test on a constant sample");
    }
    let mut z: Vec<f64> = xs.iter().map(|x| (x - s.mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let n = z.len();
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let lo = normal.cdf(z[i]).max(1e-300).ln();
        let hi = normal.sf(z[n - 1 - i]).max(1e-300).ln();
        acc += (2 * i + 1) as f64 * (lo + hi);
    }
    let a2 = -nf - acc / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok(NormalityTest {
        statistic: a,
        p_value: p.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::TrialRng;
    use rand_distr::{Distribution, Exp, StandardNormal};

    #[test]
    fn summary_and_fit() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(Summary::of(&[1.0]).unwrap().std_error().is_nan());
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert!((proportional_fit(&[1.0, 2.0], &[3.0, 6.0]).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn anderson_darling_accepts_normal_rejects_exponential() {
        let mut rng = TrialRng::from_seed(5);
        let normal: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(anderson_darling(&normal).unwrap().passes(0.01));
        let exp = Exp::new(1.0).unwrap();
        let skewed: Vec<f64> = (0..500).map(|_| exp.sample(&mut rng)).collect();
        assert!(!anderson_darling(&skewed).unwrap().passes(0.01));
    }

    #[test]
    fn anderson_darling_reference_value() {
        // statistic for the evenly spaced normal quantiles of n = 10 is small
        let normal = Normal::standard();
        let q: Vec<f64> = (1..=10).map(|i| normal.inverse_cdf((i as f64 - 0.5) / 10.0)).collect();
        let t = anderson_darling(&q).unwrap();
        assert!(t.statistic < 0.2 && t.p_value > 0.9, "{t:?}");
    }

    #[test]
    fn anderson_darling_false_rejection_rate() {
        let mut rejections = 0;
        for rep in 0..400 {
            let mut rng = TrialRng::for_trial(99, "ad-size", rep);
            let xs: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            if !anderson_darling(&xs).unwrap().passes(0.05) {
                rejections += 1;
            }
        }
        // 5% nominal, binomial sd about 1.1%
        assert!((8..=36).contains(&rejections), "{rejections}");
    }
}
