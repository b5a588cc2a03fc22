//! Continuous approximation of the `V_rho` null distribution by a
//! (scaled) chi-square law with the same expectation.

use std::fmt;

use crate::error::{Error, Result};
use crate::mc::EmpiricalDistribution;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma function `P(a, x)`.
///
/// Series for `x < a + 1`, Lentz continued fraction for the complement
/// otherwise.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_p requires a > 0");
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum * log_prefix.exp()).clamp(0.0, 1.0)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        (1.0 - log_prefix.exp() * h).clamp(0.0, 1.0)
    }
}

pub fn chi2_cdf(df: f64, x: f64) -> f64 {
    gamma_p(df / 2.0, x / 2.0)
}

/// `x` with `P(chi2_df <= x) = p`, by bisection on the CDF to a relative
/// width of 1e-10 or better.
pub fn chi2_quantile(df: f64, p: f64) -> Result<f64> {
    if !(df > 0.0 && df.is_finite()) {
        return Err(Error::invalid(format!("degrees of freedom {df} must be positive")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} must lie in (0, 1)")));
    }
    let mut lo = 0.0;
    let mut hi = df.max(1.0);
    while chi2_cdf(df, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(df, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// How the approximating law is matched to the simulated distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Chi2Method {
    /// `scale * chi2_df` with mean and variance matched (a gamma law).
    #[default]
    MeanVariance,
    /// Plain `chi2_df` with `df` equal to the mean.
    MeanOnly,
}

impl fmt::Display for Chi2Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chi2Method::MeanVariance => "mean-variance",
            Chi2Method::MeanOnly => "mean",
        })
    }
}

/// A fitted `scale * chi2_df` law; `scale * df` equals the empirical mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Chi2Fit {
    pub df: f64,
    pub scale: f64,
    pub method: Chi2Method,
    pub mean: f64,
    pub variance: f64,
}

pub fn fit_chi2(dist: &EmpiricalDistribution, method: Chi2Method) -> Result<Chi2Fit> {
    let mean = dist.mean();
    let variance = dist.variance();
    if dist.support().len() < 2 || variance <= 0.0 || mean <= 0.0 {
        return Err(Error::invalid(
            "cannot fit a chi-square law to a degenerate or non-positive distribution",
        ));
    }
    let (df, scale) = match method {
        Chi2Method::MeanOnly => (mean, 1.0),
        Chi2Method::MeanVariance => (2.0 * mean * mean / variance, variance / (2.0 * mean)),
    };
    Ok(Chi2Fit {
        df,
        scale,
        method,
        mean,
        variance,
    })
}

impl Chi2Fit {
    pub fn cdf(&self, x: f64) -> f64 {
        chi2_cdf(self.df, x / self.scale)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.scale * chi2_quantile(self.df, p)?)
    }
}

/// Lower-tail `alpha` quantile of the fitted law (`V_rho` rejects low).
pub fn approx_critical_value(fit: &Chi2Fit, alpha: f64) -> Result<f64> {
    fit.quantile(alpha)
}
