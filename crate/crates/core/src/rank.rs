//! Pooled ranking of k samples and the three rank statistics.
//!
//! Samples are given in their hypothesized stochastic order: sample 1 is
//! expected to be the smallest and sample k the largest. Ties receive
//! mid-ranks, so ranks and statistics are [`HalfInt`]s.
//!
//! * `M_rho` is the largest deviation of a (trimmed) extreme rank of each
//!   sample from the rank it would hold in the extremal ordering where
//!   sample j owns ranks `c_{j-1}+1 ..= c_j`.
//! * `V_rho` is the sum of those deviations.
//! * `JT` is the Jonckheere-Terpstra sum of pairwise Mann-Whitney counts.
//!
//! Small `M_rho`/`V_rho` and large `JT` favor the ordered alternative.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::value::{HalfInt, Rho};

/// k samples of real-valued observations, in hypothesized ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    samples: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl SampleSet {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        Self::validate(&samples)?;
        Ok(SampleSet { samples, labels: None })
    }

    pub fn with_labels(samples: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        Self::validate(&samples)?;
        if labels.len() != samples.len() {
            return Err(Error::invalid(format!(
                "{} labels given for {} samples",
                labels.len(),
                samples.len()
            )));
        }
        Ok(SampleSet {
            samples,
            labels: Some(labels),
        })
    }

    fn validate(samples: &[Vec<f64>]) -> Result<()> {
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "at least 2 samples are required, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::invalid(format!("sample {} is empty", i + 1)));
            }
            if let Some(v) = s.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "sample {} contains a non-finite value {v}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of sample `i` (0-based), falling back to its 1-based position.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format!("{}", i + 1),
        }
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.samples.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    /// Reorders samples; `order[i]` is the current index of the sample that
    /// becomes sample `i`.
    pub fn reorder(&self, order: &[usize]) -> Result<SampleSet> {
        let k = self.k();
        let mut seen = vec![false; k];
        if order.len() != k {
            return Err(Error::invalid(format!(
                "reordering lists {} samples but the data has {k}",
                order.len()
            )));
        }
        for &o in order {
            if o >= k || std::mem::replace(&mut seen[o], true) {
                return Err(Error::invalid(format!("{order:?} is not a permutation of the samples")));
            }
        }
        Ok(SampleSet {
            samples: order.iter().map(|&o| self.samples[o].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| order.iter().map(|&o| l[o].clone()).collect()),
        })
    }

    /// Reorders samples by label.
    pub fn reorder_by_labels<S: AsRef<str>>(&self, order: &[S]) -> Result<SampleSet> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::invalid("samples have no labels to reorder by"))?;
        let idx = order
            .iter()
            .map(|name| {
                labels
                    .iter()
                    .position(|l| l == name.as_ref())
                    .ok_or_else(|| Error::invalid(format!("unknown sample label {:?}", name.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        self.reorder(&idx)
    }

    /// Number of groups of tied values in the pooled sample and the number of
    /// observations they cover.
    pub fn tie_summary(&self) -> (usize, usize) {
        let mut all: Vec<f64> = self.samples.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        let (mut groups, mut covered) = (0, 0);
        let mut i = 0;
        while i < all.len() {
            let mut j = i + 1;
            while j < all.len() && all[j] == all[i] {
                j += 1;
            }
            if j - i > 1 {
                groups += 1;
                covered += j - i;
            }
            i = j;
        }
        (groups, covered)
    }
}

/// Per-sample ascending pooled ranks plus cumulative sizes `c_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedRankProfile {
    ranks: Vec<Vec<HalfInt>>,
    cum_sizes: Vec<usize>,
}

impl OrderedRankProfile {
    /// Builds a profile from per-sample ranks (any order within a sample).
    /// The ranks must be a valid pooled ranking of `1..=n`, possibly with
    /// mid-ranks.
    pub fn from_ranks(mut ranks: Vec<Vec<HalfInt>>) -> Result<Self> {
        if ranks.iter().any(Vec::is_empty) {
            return Err(Error::invalid("every sample needs at least one rank"));
        }
        let n: usize = ranks.iter().map(Vec::len).sum();
        let lo = HalfInt::from_int(1);
        let hi = HalfInt::from_int(n as i64);
        let mut total = HalfInt::ZERO;
        for r in ranks.iter_mut() {
            r.sort_unstable();
            for &v in r.iter() {
                if v < lo || v > hi {
                    return Err(Error::invalid(format!("rank {v} outside [1, {n}]")));
                }
                total += v;
            }
        }
        if total.doubled() != (n * (n + 1)) as i64 {
            return Err(Error::invalid(format!(
                "ranks sum to {total}, expected n(n+1)/2 = {}",
                HalfInt::from_doubled((n * (n + 1)) as i64)
            )));
        }
        Ok(Self::from_sorted_unchecked(ranks))
    }

    pub(crate) fn from_sorted_unchecked(ranks: Vec<Vec<HalfInt>>) -> Self {
        let cum_sizes = ranks
            .iter()
            .scan(0, |acc, r| {
                *acc += r.len();
                Some(*acc)
            })
            .collect();
        OrderedRankProfile { ranks, cum_sizes }
    }

    pub fn ranks(&self) -> &[Vec<HalfInt>] {
        &self.ranks
    }

    /// Sizes must stay unchanged; `cum_sizes` is not recomputed.
    pub(crate) fn ranks_mut(&mut self) -> &mut [Vec<HalfInt>] {
        &mut self.ranks
    }

    pub fn cum_sizes(&self) -> &[usize] {
        &self.cum_sizes
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranks.iter().map(Vec::len).collect()
    }

    pub fn k(&self) -> usize {
        self.ranks.len()
    }

    pub fn total(&self) -> usize {
        *self.cum_sizes.last().unwrap_or(&0)
    }

    /// The profile in which sample j holds ranks `c_{j-1}+1 ..= c_j`.
    pub fn extremal(sizes: &[usize]) -> Self {
        let mut next = 1i64;
        let ranks = sizes
            .iter()
            .map(|&m| {
                let r: Vec<HalfInt> = (next..next + m as i64).map(HalfInt::from_int).collect();
                next += m as i64;
                r
            })
            .collect();
        Self::from_sorted_unchecked(ranks)
    }

    /// Jonckheere-Terpstra statistic computed from the ranks alone: counts
    /// cross-sample pairs `(i < j)` where the sample-j rank is larger, with
    /// equal (tied) ranks counting one half.
    pub fn jt_from_ranks(&self) -> HalfInt {
        let mut doubled = 0i64;
        for (i, lower) in self.ranks.iter().enumerate() {
            for upper in &self.ranks[i + 1..] {
                for a in lower {
                    for b in upper {
                        doubled += match a.cmp(b) {
                            Ordering::Less => 2,
                            Ordering::Equal => 1,
                            Ordering::Greater => 0,
                        };
                    }
                }
            }
        }
        HalfInt::from_doubled(doubled)
    }
}

/// Trimmed proportion together with the per-sample trim counts
/// `s_j = floor(rho * n_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrimSpec {
    rho: Rho,
    trims: Vec<usize>,
}

impl TrimSpec {
    pub fn new(rho: Rho, sizes: &[usize]) -> Self {
        TrimSpec {
            rho,
            trims: sizes.iter().map(|&n| rho.trim_count(n)).collect(),
        }
    }

    /// Explicit trim counts, validated only when a statistic is computed.
    pub fn from_counts(rho: Rho, trims: Vec<usize>) -> Self {
        TrimSpec { rho, trims }
    }

    pub fn rho(&self) -> Rho {
        self.rho
    }

    pub fn trims(&self) -> &[usize] {
        &self.trims
    }

    fn check(&self, profile: &OrderedRankProfile) -> Result<()> {
        if self.trims.len() != profile.k() {
            return Err(Error::invalid(format!(
                "trim has {} entries but the profile has {} samples",
                self.trims.len(),
                profile.k()
            )));
        }
        for (j, (&s, r)) in self.trims.iter().zip(&profile.ranks).enumerate() {
            if s >= r.len() {
                return Err(Error::InvalidTrim {
                    sample: j + 1,
                    trim: s,
                    size: r.len(),
                });
            }
        }
        Ok(())
    }
}

/// Ranks all observations jointly; ties get the average of the positions
/// they occupy.
pub fn pool_and_rank(data: &SampleSet) -> OrderedRankProfile {
    let mut pool = RankPool::default();
    pool.load(data.samples());
    pool.profile()
}

/// `M_rho`: the maximum deviation term.
pub fn m_statistic(profile: &OrderedRankProfile, trim: &TrimSpec) -> Result<HalfInt> {
    trim.check(profile)?;
    Ok(fold_deviations(profile, trim.trims(), HalfInt::ZERO, |acc, d| {
        acc.max(d)
    }))
}

/// `V_rho`: the sum of all deviation terms.
pub fn v_statistic(profile: &OrderedRankProfile, trim: &TrimSpec) -> Result<HalfInt> {
    trim.check(profile)?;
    Ok(fold_deviations(profile, trim.trims(), HalfInt::ZERO, |acc, d| acc + d))
}

/// Jonckheere-Terpstra statistic from the raw observations.
pub fn jt_statistic(data: &SampleSet) -> HalfInt {
    let mut pool = RankPool::default();
    pool.load(data.samples());
    pool.jt()
}

/// For each boundary j between samples j and j+1:
/// `|R*_{j, n_j - s_j} - c_j + s_j|` and `|c_j + 1 + s_{j+1} - R*_{j+1, 1 + s_{j+1}}|`.
pub(crate) fn fold_deviations<F>(profile: &OrderedRankProfile, trims: &[usize], init: HalfInt, mut f: F) -> HalfInt
where
    F: FnMut(HalfInt, HalfInt) -> HalfInt,
{
    let ranks = &profile.ranks;
    let mut acc = init;
    for j in 0..ranks.len() - 1 {
        let c = profile.cum_sizes[j] as i64;
        let (s_lo, s_hi) = (trims[j] as i64, trims[j + 1] as i64);
        let top = ranks[j][ranks[j].len() - 1 - trims[j]];
        let bottom = ranks[j + 1][trims[j + 1]];
        acc = f(acc, (top - HalfInt::from_int(c - s_lo)).abs());
        acc = f(acc, (HalfInt::from_int(c + 1 + s_hi) - bottom).abs());
    }
    acc
}

/// Reusable buffers for ranking a pooled sample; the simulation engine
/// keeps one per worker.
#[derive(Default, Debug)]
pub(crate) struct RankPool {
    // (value, sample index), sorted by value
    pooled: Vec<(f64, usize)>,
    k: usize,
}

impl RankPool {
    pub(crate) fn load(&mut self, samples: &[Vec<f64>]) {
        self.pooled.clear();
        self.k = samples.len();
        for (i, s) in samples.iter().enumerate() {
            self.pooled.extend(s.iter().map(|&v| (v, i)));
        }
        self.pooled
            .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }

    /// Calls `f(start, end)` for every run of equal values in the sorted pool.
    fn for_each_run(&self, mut f: impl FnMut(usize, usize)) {
        let p = &self.pooled;
        let mut i = 0;
        while i < p.len() {
            let mut j = i + 1;
            while j < p.len() && p[j].0 == p[i].0 {
                j += 1;
            }
            f(i, j);
            i = j;
        }
    }

    pub(crate) fn profile(&self) -> OrderedRankProfile {
        let mut ranks: Vec<Vec<HalfInt>> = vec![Vec::new(); self.k];
        self.fill_ranks(&mut ranks);
        OrderedRankProfile::from_sorted_unchecked(ranks)
    }

    /// Writes sorted mid-ranks into `ranks`, reusing its allocations.
    pub(crate) fn fill_ranks(&self, ranks: &mut [Vec<HalfInt>]) {
        for r in ranks.iter_mut() {
            r.clear();
        }
        // Positions i..j (0-based) are 1-based ranks i+1..=j; their mean
        // doubled is (i + 1 + j).
        self.for_each_run(|i, j| {
            let mid = HalfInt::from_doubled((i + 1 + j) as i64);
            for &(_, s) in &self.pooled[i..j] {
                ranks[s].push(mid);
            }
        });
        // runs are visited in ascending order, so each list is already sorted
    }

    pub(crate) fn jt(&self) -> HalfInt {
        let k = self.k;
        let mut before = vec![0i64; k];
        let mut run = vec![0i64; k];
        let mut doubled = 0i64;
        self.for_each_run(|i, j| {
            run.iter_mut().for_each(|c| *c = 0);
            for &(_, s) in &self.pooled[i..j] {
                run[s] += 1;
            }
            let (mut below_before, mut below_run) = (0i64, 0i64);
            for s in 0..k {
                doubled += run[s] * (2 * below_before + below_run);
                below_before += before[s];
                below_run += run[s];
            }
            for s in 0..k {
                before[s] += run[s];
            }
        });
        HalfInt::from_doubled(doubled)
    }
}
