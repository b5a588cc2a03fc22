//! Monte Carlo null distributions, randomized exact-level critical values,
//! test execution and power estimation.
//!
//! Every replication draws from its own keyed stream
//! (`source.replication(index)`) and results are aggregated by counting, so
//! output is identical for any number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::alternatives::{fill_dataset, AlternativeSpec};
use crate::error::{Error, Result};
use crate::random::{purpose, uniform, RandomSource};
use crate::rank::{fold_deviations, jt_statistic, m_statistic, pool_and_rank, v_statistic};
use crate::rank::{OrderedRankProfile, RankPool, SampleSet, TrimSpec};
use crate::value::{HalfInt, Rho};

/// Default number of simulated data sets.
pub const DEFAULT_REPS: u64 = 10_000;

/// Replications simulated per batch; bounds memory for large runs.
const BATCH: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    M,
    V,
    Jt,
}

/// Which side of the null distribution is evidence for the ordered
/// alternative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    Lower,
    Upper,
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::Lower => "lower",
            Tail::Upper => "upper",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StatisticId {
    pub family: Family,
    /// Ignored (and kept at zero) for JT.
    pub rho: Rho,
}

impl StatisticId {
    pub fn m(rho: Rho) -> Self {
        StatisticId { family: Family::M, rho }
    }

    pub fn v(rho: Rho) -> Self {
        StatisticId { family: Family::V, rho }
    }

    pub fn jt() -> Self {
        StatisticId {
            family: Family::Jt,
            rho: Rho::ZERO,
        }
    }

    pub fn tail(&self) -> Tail {
        match self.family {
            Family::M | Family::V => Tail::Lower,
            Family::Jt => Tail::Upper,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::M => "M",
            Family::V => "V",
            Family::Jt => "JT",
        }
    }

    pub fn evaluate(&self, data: &SampleSet) -> Result<HalfInt> {
        match self.family {
            Family::Jt => Ok(jt_statistic(data)),
            Family::M | Family::V => {
                let profile = pool_and_rank(data);
                self.evaluate_profile(&profile)
            }
        }
    }

    /// Evaluates from ranks alone (JT via pairwise rank comparison).
    pub fn evaluate_profile(&self, profile: &OrderedRankProfile) -> Result<HalfInt> {
        let trim = TrimSpec::new(self.rho, &profile.sizes());
        match self.family {
            Family::M => m_statistic(profile, &trim),
            Family::V => v_statistic(profile, &trim),
            Family::Jt => Ok(profile.jt_from_ranks()),
        }
    }
}

impl fmt::Display for StatisticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Jt => write!(f, "JT"),
            _ => write!(f, "{}_{}", self.family_name(), self.rho),
        }
    }
}

impl FromStr for StatisticId {
    type Err = Error;

    /// `JT`, `M_0.1`, `V_0` (the `_rho` part defaults to 0).
    fn from_str(s: &str) -> Result<Self> {
        let (fam, rho) = s.split_once('_').unwrap_or((s, "0"));
        let rho: Rho = rho.parse()?;
        match fam.to_ascii_uppercase().as_str() {
            "M" => Ok(StatisticId::m(rho)),
            "V" => Ok(StatisticId::v(rho)),
            "JT" => Ok(StatisticId::jt()),
            _ => Err(Error::invalid(format!("unknown statistic {s:?}"))),
        }
    }
}

/// Relative frequencies of simulated statistic values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    support: Vec<HalfInt>,
    counts: Vec<u64>,
    reps: u64,
}

impl EmpiricalDistribution {
    /// Builds from (value, count) pairs; repeated values are merged and
    /// zero counts dropped.
    pub fn from_counts(pairs: Vec<(HalfInt, u64)>) -> Result<Self> {
        let mut merged: BTreeMap<HalfInt, u64> = BTreeMap::new();
        for (v, c) in pairs {
            *merged.entry(v).or_default() += c;
        }
        merged.retain(|_, c| *c > 0);
        let reps: u64 = merged.values().sum();
        if reps == 0 {
            return Err(Error::invalid("empirical distribution has no mass"));
        }
        let (support, counts) = merged.into_iter().unzip();
        Ok(EmpiricalDistribution { support, counts, reps })
    }

    pub fn from_values(values: &[HalfInt]) -> Result<Self> {
        Self::from_counts(values.iter().map(|&v| (v, 1)).collect())
    }

    pub fn support(&self) -> &[HalfInt] {
        &self.support
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn reps(&self) -> u64 {
        self.reps
    }

    pub fn probs(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.reps as f64).collect()
    }

    fn frac(&self, count: u64) -> f64 {
        count as f64 / self.reps as f64
    }

    /// `P(S <= v)`.
    pub fn cdf(&self, v: HalfInt) -> f64 {
        let end = self.support.partition_point(|&s| s <= v);
        self.frac(self.counts[..end].iter().sum())
    }

    /// `P(S >= v)`.
    pub fn sf(&self, v: HalfInt) -> f64 {
        let start = self.support.partition_point(|&s| s < v);
        self.frac(self.counts[start..].iter().sum())
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self
            .support
            .iter()
            .zip(&self.counts)
            .map(|(v, &c)| v.to_f64() * c as f64)
            .sum();
        total / self.reps as f64
    }

    /// Population variance of the tabulated values.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self
            .support
            .iter()
            .zip(&self.counts)
            .map(|(v, &c)| (v.to_f64() - mean).powi(2) * c as f64)
            .sum();
        ss / self.reps as f64
    }
}

/// A simulated null distribution together with the design it belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NullDistribution {
    pub statistic: StatisticId,
    pub sizes: Vec<usize>,
    pub source: RandomSource,
    pub dist: EmpiricalDistribution,
}

/// Exact-level randomized rejection rule.
///
/// Lower tail: reject when `S <= s_alpha`; when `s_alpha < S <= boundary`
/// reject with probability `pi`. `boundary` is the support point right
/// after `s_alpha`, `alpha_l = P(S <= s_alpha)` and
/// `alpha_r = P(S <= boundary)`. The upper tail mirrors this with `>=`.
/// `s_alpha` is `None` when even the most extreme atom has probability
/// above `alpha`; the deterministic part then never rejects.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomizedCriticalValue {
    pub tail: Tail,
    pub alpha: f64,
    pub s_alpha: Option<HalfInt>,
    pub boundary: HalfInt,
    pub alpha_l: f64,
    pub alpha_r: f64,
    pub pi: f64,
}

impl RandomizedCriticalValue {
    /// The value printed in critical-value tables: the randomization
    /// boundary. Values strictly beyond it (in the rejecting direction)
    /// reject outright, with attained level `alpha_l`.
    pub fn tabulated(&self) -> HalfInt {
        self.boundary
    }

    pub fn rejects_never(&self) -> bool {
        self.s_alpha.is_none()
    }

    /// Where `value` falls relative to the critical region.
    pub fn classify(&self, value: HalfInt) -> Region {
        let beyond = |a: HalfInt, b: HalfInt| match self.tail {
            Tail::Lower => a <= b,
            Tail::Upper => a >= b,
        };
        match self.s_alpha {
            Some(s) if beyond(value, s) => Region::Reject,
            _ if beyond(value, self.boundary) => Region::Boundary,
            _ => Region::Accept,
        }
    }

    pub fn decide(&self, value: HalfInt, z: f64) -> Decision {
        match self.classify(value) {
            Region::Reject => Decision::Reject,
            Region::Accept => Decision::Accept,
            Region::Boundary => Decision::Randomized {
                pi: self.pi,
                rejected: z < self.pi,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Reject,
    Boundary,
    Accept,
}

/// Finds the exact-level randomized critical value for `alpha`.
pub fn critical_value(dist: &EmpiricalDistribution, alpha: f64, tail: Tail) -> Result<RandomizedCriticalValue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must lie in (0, 1)")));
    }
    // Walk atoms from the rejecting end, accumulating tail mass.
    let order: Vec<usize> = match tail {
        Tail::Lower => (0..dist.support.len()).collect(),
        Tail::Upper => (0..dist.support.len()).rev().collect(),
    };
    let mut cum = 0u64;
    let mut s_alpha = None;
    let mut alpha_l = 0.0;
    for &idx in &order {
        let next = cum + dist.counts[idx];
        let p = dist.frac(next);
        if p <= alpha {
            cum = next;
            s_alpha = Some(dist.support[idx]);
            alpha_l = p;
        } else {
            let alpha_r = p;
            return Ok(RandomizedCriticalValue {
                tail,
                alpha,
                s_alpha,
                boundary: dist.support[idx],
                alpha_l,
                alpha_r,
                pi: (alpha - alpha_l) / (alpha_r - alpha_l),
            });
        }
    }
    // total mass is 1 > alpha, so the loop always returns
    unreachable!("tail mass never exceeded alpha < 1")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decision {
    Reject,
    Accept,
    /// Boundary case: rejected when the Bernoulli(pi) draw came up 1.
    Randomized {
        pi: f64,
        rejected: bool,
    },
}

impl Decision {
    pub fn rejected(&self) -> bool {
        match self {
            Decision::Reject => true,
            Decision::Accept => false,
            Decision::Randomized { rejected, .. } => *rejected,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Reject => write!(f, "reject"),
            Decision::Accept => write!(f, "accept"),
            Decision::Randomized { pi, rejected } => write!(
                f,
                "randomized({:.4}):{}",
                pi,
                if *rejected { "reject" } else { "accept" }
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub statistic: StatisticId,
    pub value: HalfInt,
    pub critical: RandomizedCriticalValue,
    /// Null probability of a value at least as extreme as the observed one.
    pub p_value: f64,
    pub decision: Decision,
    pub source: RandomSource,
}

/// Computes the statistic on `data` and applies the randomized rule; the
/// Bernoulli draw for the boundary case comes from `source`.
pub fn run_test(
    data: &SampleSet,
    stat: StatisticId,
    alpha: f64,
    null: &NullDistribution,
    source: RandomSource,
) -> Result<TestReport> {
    let sizes = data.sizes();
    if sizes != null.sizes {
        return Err(Error::SizeMismatch {
            data: sizes,
            null: null.sizes.clone(),
        });
    }
    if null.statistic != stat {
        return Err(Error::invalid(format!(
            "null distribution is for {} but the test asks for {stat}",
            null.statistic
        )));
    }
    let value = stat.evaluate(data)?;
    let critical = critical_value(&null.dist, alpha, stat.tail())?;
    let p_value = match stat.tail() {
        Tail::Lower => null.dist.cdf(value),
        Tail::Upper => null.dist.sf(value),
    };
    let z = uniform(&mut source.rng());
    Ok(TestReport {
        statistic: stat,
        value,
        decision: critical.decide(value, z),
        critical,
        p_value,
        source,
    })
}

/// Per-worker buffers for evaluating many statistics on one design.
struct Evaluator<'a> {
    stats: &'a [StatisticId],
    trims: Vec<Vec<usize>>,
    spec: &'a AlternativeSpec,
    sizes: &'a [usize],
    samples: Vec<Vec<f64>>,
    scratch: Vec<f64>,
    pool: RankPool,
    profile: OrderedRankProfile,
    needs_ranks: bool,
}

impl<'a> Evaluator<'a> {
    fn new(stats: &'a [StatisticId], spec: &'a AlternativeSpec, sizes: &'a [usize]) -> Self {
        Evaluator {
            stats,
            trims: stats
                .iter()
                .map(|s| TrimSpec::new(s.rho, sizes).trims().to_vec())
                .collect(),
            spec,
            sizes,
            samples: Vec::new(),
            scratch: Vec::new(),
            pool: RankPool::default(),
            profile: OrderedRankProfile::extremal(sizes),
            needs_ranks: stats.iter().any(|s| s.family != Family::Jt),
        }
    }

    fn run<R: Rng>(&mut self, rng: &mut R, out: &mut Vec<HalfInt>) {
        fill_dataset(self.spec, self.sizes, rng, &mut self.samples, &mut self.scratch);
        self.pool.load(&self.samples);
        if self.needs_ranks {
            self.pool.fill_ranks(self.profile.ranks_mut());
        }
        out.clear();
        for (stat, trims) in self.stats.iter().zip(&self.trims) {
            let v = match stat.family {
                Family::M => fold_deviations(&self.profile, trims, HalfInt::ZERO, |a, d| a.max(d)),
                Family::V => fold_deviations(&self.profile, trims, HalfInt::ZERO, |a, d| a + d),
                Family::Jt => self.pool.jt(),
            };
            out.push(v);
        }
    }
}

fn check_design(stats: &[StatisticId], spec: &AlternativeSpec, sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::invalid(format!("invalid sample sizes {sizes:?}")));
    }
    if stats.is_empty() {
        return Err(Error::invalid("no statistics requested"));
    }
    spec.validate(sizes.len())
}

/// Simulates replications `range` of the design and returns, per
/// replication, the values of `stats` in order. Replication `i` uses
/// `source.replication(i)`.
pub fn simulate_statistics(
    stats: &[StatisticId],
    spec: &AlternativeSpec,
    sizes: &[usize],
    range: std::ops::Range<u64>,
    source: RandomSource,
) -> Result<Vec<Vec<HalfInt>>> {
    check_design(stats, spec, sizes)?;
    Ok(range
        .into_par_iter()
        .map_init(
            || Evaluator::new(stats, spec, sizes),
            |ev, i| {
                let mut out = Vec::with_capacity(stats.len());
                ev.run(&mut source.replication(i).rng(), &mut out);
                out
            },
        )
        .collect())
}

/// Visits all `reps` replications in index order, in batches.
fn for_each_batch(
    stats: &[StatisticId],
    spec: &AlternativeSpec,
    sizes: &[usize],
    reps: u64,
    source: RandomSource,
    mut f: impl FnMut(u64, &[Vec<HalfInt>]),
) -> Result<()> {
    let mut start = 0;
    while start < reps {
        let end = (start + BATCH).min(reps);
        let batch = simulate_statistics(stats, spec, sizes, start..end, source)?;
        f(start, &batch);
        start = end;
    }
    Ok(())
}

/// Simulates the null distribution of one statistic.
pub fn estimate_null_distribution(
    stat: StatisticId,
    sizes: &[usize],
    reps: u64,
    source: RandomSource,
) -> Result<NullDistribution> {
    Ok(estimate_null_distributions(&[stat], sizes, reps, source)?.remove(0))
}

/// Simulates null distributions of several statistics from shared data
/// sets. Each result equals what [`estimate_null_distribution`] gives for
/// that statistic alone.
pub fn estimate_null_distributions(
    stats: &[StatisticId],
    sizes: &[usize],
    reps: u64,
    source: RandomSource,
) -> Result<Vec<NullDistribution>> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    let mut counts: Vec<BTreeMap<HalfInt, u64>> = vec![BTreeMap::new(); stats.len()];
    for_each_batch(stats, &AlternativeSpec::Null, sizes, reps, source, |_, batch| {
        for row in batch {
            for (c, &v) in counts.iter_mut().zip(row) {
                *c.entry(v).or_default() += 1;
            }
        }
    })?;
    stats
        .iter()
        .zip(counts)
        .map(|(&statistic, c)| {
            Ok(NullDistribution {
                statistic,
                sizes: sizes.to_vec(),
                source,
                dist: EmpiricalDistribution::from_counts(c.into_iter().collect())?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerEstimate {
    pub statistic: StatisticId,
    pub power: f64,
    /// Binomial standard error `sqrt(power (1 - power) / reps)`.
    pub stderr: f64,
    /// Rejection rate of the deterministic region.
    pub beta1: f64,
    /// Rejection rate of the deterministic region plus the boundary.
    pub beta2: f64,
    pub critical: RandomizedCriticalValue,
    pub reps: u64,
}

/// Power at exact level `alpha`: `pi * beta2 + (1 - pi) * beta1`, where
/// beta1/beta2 are the alternative's rejection rates at `s_alpha` and at
/// the boundary atom. All statistics are evaluated on the same simulated
/// alternative data sets.
pub fn power_study(
    nulls: &[NullDistribution],
    alt: &AlternativeSpec,
    alpha: f64,
    reps: u64,
    source: RandomSource,
) -> Result<Vec<PowerEstimate>> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    let Some(first) = nulls.first() else {
        return Err(Error::invalid("no null distributions given"));
    };
    let sizes = first.sizes.clone();
    if let Some(other) = nulls.iter().find(|n| n.sizes != sizes) {
        return Err(Error::SizeMismatch {
            data: sizes,
            null: other.sizes.clone(),
        });
    }
    let stats: Vec<StatisticId> = nulls.iter().map(|n| n.statistic).collect();
    let criticals = nulls
        .iter()
        .map(|n| critical_value(&n.dist, alpha, n.statistic.tail()))
        .collect::<Result<Vec<_>>>()?;
    // (deterministic rejections, rejections including the boundary)
    let mut hits = vec![(0u64, 0u64); stats.len()];
    for_each_batch(&stats, alt, &sizes, reps, source, |_, batch| {
        for row in batch {
            for ((h, crit), &v) in hits.iter_mut().zip(&criticals).zip(row) {
                match crit.classify(v) {
                    Region::Reject => {
                        h.0 += 1;
                        h.1 += 1;
                    }
                    Region::Boundary => h.1 += 1,
                    Region::Accept => {}
                }
            }
        }
    })?;
    Ok(stats
        .into_iter()
        .zip(criticals)
        .zip(hits)
        .map(|((statistic, critical), (h1, h2))| {
            let beta1 = h1 as f64 / reps as f64;
            let beta2 = h2 as f64 / reps as f64;
            let power = critical.pi * beta2 + (1.0 - critical.pi) * beta1;
            PowerEstimate {
                statistic,
                power,
                stderr: (power * (1.0 - power) / reps as f64).sqrt(),
                beta1,
                beta2,
                critical,
                reps,
            }
        })
        .collect())
}

/// Simulates the null with `reps` replications, then the alternative with
/// `reps` more, and returns the exact-level power of `stat`.
pub fn estimate_power(
    stat: StatisticId,
    alt: &AlternativeSpec,
    sizes: &[usize],
    alpha: f64,
    reps: u64,
    source: RandomSource,
) -> Result<PowerEstimate> {
    let null = estimate_null_distribution(stat, sizes, reps, source.derive(purpose::NULL))?;
    Ok(power_study(&[null], alt, alpha, reps, source.derive(purpose::ALTERNATIVE))?.remove(0))
}

/// Runs the full randomized test on `reps` fresh data sets drawn from
/// `spec` and returns the fraction rejected. Under the null this is the
/// realized level.
pub fn rejection_rate(
    null: &NullDistribution,
    spec: &AlternativeSpec,
    alpha: f64,
    reps: u64,
    source: RandomSource,
) -> Result<f64> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    let crit = critical_value(&null.dist, alpha, null.statistic.tail())?;
    let data_source = source.derive(purpose::LEVEL);
    let decision_source = source.derive(purpose::DECISION);
    let mut rejected = 0u64;
    for_each_batch(
        &[null.statistic],
        spec,
        &null.sizes,
        reps,
        data_source,
        |start, batch| {
            for (offset, row) in batch.iter().enumerate() {
                let z = uniform(&mut decision_source.replication(start + offset as u64).rng());
                if crit.decide(row[0], z).rejected() {
                    rejected += 1;
                }
            }
        },
    )?;
    Ok(rejected as f64 / reps as f64)
}
