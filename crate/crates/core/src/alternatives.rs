//! Data generation under the null and the two Lehmann-type alternatives.
//!
//! Rank statistics are distribution free under all three models, so the
//! underlying distribution is fixed to Uniform(0, 1).

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::random::{uniform, RandomSource};
use crate::rank::SampleSet;

#[derive(Clone, Debug, PartialEq)]
pub enum AlternativeSpec {
    /// All observations iid Uniform(0, 1).
    Null,
    /// Sample i is distributed as the i-th order statistic of `order_count`
    /// iid uniforms.
    OrderStatistic { order_count: usize },
    /// Sample i has distribution function `y^eta_i` on [0, 1].
    PowerFunction { exponents: Vec<f64> },
}

impl AlternativeSpec {
    /// Checks the spec against the number of samples.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            AlternativeSpec::Null => Ok(()),
            AlternativeSpec::OrderStatistic { order_count } => {
                if *order_count != k {
                    return Err(Error::invalid(format!(
                        "order-statistic alternative of depth {order_count} needs {order_count} samples, got {k}"
                    )));
                }
                Ok(())
            }
            AlternativeSpec::PowerFunction { exponents } => {
                if exponents.len() != k {
                    return Err(Error::invalid(format!(
                        "{} exponents given for {k} samples",
                        exponents.len()
                    )));
                }
                if exponents.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
                    return Err(Error::invalid("exponents must be positive and finite"));
                }
                if exponents.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::invalid("exponents must be non-decreasing"));
                }
                Ok(())
            }
        }
    }

    /// Parses `null`, `orderstat` or `power:e1,e2,...` for `k` samples.
    pub fn parse(s: &str, k: usize) -> Result<Self> {
        let s = s.trim();
        let spec = match s {
            "null" => AlternativeSpec::Null,
            "orderstat" => AlternativeSpec::OrderStatistic { order_count: k },
            _ => {
                let list = s
                    .strip_prefix("power:")
                    .ok_or_else(|| Error::invalid(format!("unknown alternative {s:?}")))?;
                let exponents = list
                    .split(',')
                    .map(|e| {
                        e.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::invalid(format!("bad exponent {e:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                AlternativeSpec::PowerFunction { exponents }
            }
        };
        spec.validate(k)?;
        Ok(spec)
    }

    pub fn is_null(&self) -> bool {
        matches!(self, AlternativeSpec::Null)
    }
}

impl fmt::Display for AlternativeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlternativeSpec::Null => write!(f, "null"),
            AlternativeSpec::OrderStatistic { .. } => write!(f, "orderstat"),
            AlternativeSpec::PowerFunction { exponents } => {
                let list: Vec<String> = exponents.iter().map(|e| e.to_string()).collect();
                write!(f, "power:{}", list.join(","))
            }
        }
    }
}

/// CDF of the i-th order statistic of k uniforms:
/// `sum_{t=i}^{k} C(k,t) y^t (1-y)^(k-t)`.
pub fn order_stat_cdf(i: usize, k: usize, y: f64) -> Result<f64> {
    if i == 0 || i > k {
        return Err(Error::invalid(format!("order index {i} outside 1..={k}")));
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::invalid(format!("argument {y} outside [0, 1]")));
    }
    let mut binom = 1.0f64; // C(k, t), built up from t = 0
    let mut total = 0.0;
    for t in 0..=k {
        if t > 0 {
            binom = binom * (k - t + 1) as f64 / t as f64;
        }
        if t >= i {
            total += binom * y.powi(t as i32) * (1.0 - y).powi((k - t) as i32);
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Draws a k-sample data set with the given sizes.
pub fn sample_dataset(spec: &AlternativeSpec, sizes: &[usize], source: RandomSource) -> Result<SampleSet> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::invalid(format!("invalid sample sizes {sizes:?}")));
    }
    spec.validate(sizes.len())?;
    let mut samples = Vec::new();
    let mut scratch = Vec::new();
    fill_dataset(spec, sizes, &mut source.rng(), &mut samples, &mut scratch);
    SampleSet::new(samples)
}

/// Fills `out` with one data set, reusing its buffers. `spec` must already
/// be validated against `sizes`.
pub(crate) fn fill_dataset<R: Rng + ?Sized>(
    spec: &AlternativeSpec,
    sizes: &[usize],
    rng: &mut R,
    out: &mut Vec<Vec<f64>>,
    scratch: &mut Vec<f64>,
) {
    out.resize_with(sizes.len(), Vec::new);
    for (i, (&n, sample)) in sizes.iter().zip(out.iter_mut()).enumerate() {
        sample.clear();
        match spec {
            AlternativeSpec::Null => sample.extend((0..n).map(|_| uniform(rng))),
            AlternativeSpec::PowerFunction { exponents } => {
                // inverse transform of F(y) = y^eta
                let inv = 1.0 / exponents[i];
                sample.extend((0..n).map(|_| uniform(rng).powf(inv)));
            }
            AlternativeSpec::OrderStatistic { order_count } => {
                for _ in 0..n {
                    scratch.clear();
                    scratch.extend((0..*order_count).map(|_| uniform(rng)));
                    let (_, ith, _) = scratch.select_nth_unstable_by(i, f64::total_cmp);
                    sample.push(*ith);
                }
            }
        }
    }
}
