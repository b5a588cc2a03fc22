//! Exact probabilities of rank groups under the Lehmann-type alternatives.
//!
//! A rank group is the set of permutations that hand each sample the same
//! set of pooled ranks; all probabilities here are group probabilities,
//! i.e. the single-permutation probability times `n_1! ... n_k!`.
//!
//! * Power-function alternative (`F_i = F^eta_i`): closed form
//!   `prod_i n_i! eta_i^n_i / prod_{m=1}^{n} sum_{j<=m} eta_{a_j}`.
//! * Order-statistic alternative: the iterated integral of the order
//!   statistic densities over `0 <= y_1 <= ... <= y_n <= 1`, evaluated by
//!   exact polynomial integration.

mod poly;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rank::OrderedRankProfile;
use crate::value::HalfInt;

pub use poly::{order_stat_cdf_poly, Poly};

pub type ExactRational = BigRational;

/// Default limit on the total sample size for the order-statistic engine.
pub const DEFAULT_EXACT_CAP: usize = 12;

/// A permutation of pooled ranks laid out per sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankAssignment {
    ranks: Vec<Vec<usize>>,
    owners: Vec<usize>,
    within: Vec<usize>,
}

impl RankAssignment {
    /// `ranks[i][h]` is the 1-based pooled rank of observation h of sample i.
    pub fn from_ranks(ranks: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = ranks.iter().map(Vec::len).sum();
        let mut owners = vec![usize::MAX; n];
        let mut within = vec![0; n];
        for (i, sample) in ranks.iter().enumerate() {
            for (h, &r) in sample.iter().enumerate() {
                if r == 0 || r > n || owners[r - 1] != usize::MAX {
                    return Err(Error::invalid(format!(
                        "ranks {ranks:?} are not a permutation of 1..={n}"
                    )));
                }
                owners[r - 1] = i;
                within[r - 1] = h;
            }
        }
        Ok(RankAssignment { ranks, owners, within })
    }

    /// Group representative from the owning sample of each pooled rank
    /// (`owners[j]` is the 0-based sample holding rank j+1).
    pub fn from_owners(k: usize, owners: Vec<usize>) -> Result<Self> {
        let mut ranks = vec![Vec::new(); k];
        for (j, &o) in owners.iter().enumerate() {
            if o >= k {
                return Err(Error::invalid(format!("sample index {o} outside 0..{k}")));
            }
            ranks[o].push(j + 1);
        }
        Self::from_ranks(ranks)
    }

    /// Sample j holds ranks `c_{j-1}+1 ..= c_j`.
    pub fn identity(sizes: &[usize]) -> Self {
        let owners = sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &m)| std::iter::repeat_n(i, m))
            .collect();
        Self::from_owners(sizes.len(), owners).expect("identity assignment is valid")
    }

    pub fn ranks(&self) -> &[Vec<usize>] {
        &self.ranks
    }

    /// 0-based sample index owning each pooled rank.
    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    /// 0-based within-sample index of the observation holding each rank.
    pub fn within(&self) -> &[usize] {
        &self.within
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranks.iter().map(Vec::len).collect()
    }

    pub fn to_profile(&self) -> Result<OrderedRankProfile> {
        OrderedRankProfile::from_ranks(
            self.ranks
                .iter()
                .map(|s| s.iter().map(|&r| HalfInt::from_int(r as i64)).collect())
                .collect(),
        )
    }

    fn check_sizes(&self, sizes: &[usize]) -> Result<()> {
        if self.sizes() != sizes {
            return Err(Error::invalid(format!(
                "assignment has sizes {:?}, expected {sizes:?}",
                self.sizes()
            )));
        }
        Ok(())
    }
}

/// Iterates over one representative of every rank group for `sizes`
/// (`n! / prod n_i!` of them) in lexicographic order of the owner sequence.
pub fn rank_groups(sizes: &[usize]) -> RankGroups {
    let owners: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| std::iter::repeat_n(i, m))
        .collect();
    RankGroups {
        k: sizes.len(),
        next: Some(owners),
    }
}

pub struct RankGroups {
    k: usize,
    next: Option<Vec<usize>>,
}

impl Iterator for RankGroups {
    type Item = RankAssignment;

    fn next(&mut self) -> Option<RankAssignment> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // next lexicographic permutation of a multiset
        if let Some(i) = (1..succ.len()).rev().find(|&i| succ[i - 1] < succ[i]) {
            let pivot = i - 1;
            let j = (i..succ.len()).rev().find(|&j| succ[j] > succ[pivot]).unwrap();
            succ.swap(pivot, j);
            succ[i..].reverse();
            self.next = Some(succ);
        }
        Some(RankAssignment::from_owners(self.k, current).expect("owners are in range"))
    }
}

fn check_eta(eta: &[BigRational], sizes: &[usize]) -> Result<()> {
    if eta.len() != sizes.len() {
        return Err(Error::invalid(format!(
            "{} exponents given for {} samples",
            eta.len(),
            sizes.len()
        )));
    }
    if eta.iter().any(|e| !e.is_positive()) {
        return Err(Error::invalid("exponents must be positive"));
    }
    Ok(())
}

fn factorial_power_product(eta: &[BigRational], sizes: &[usize]) -> BigRational {
    eta.iter().zip(sizes).fold(BigRational::one(), |acc, (e, &m)| {
        acc * BigRational::from_integer(poly::factorial(m)) * num_traits::pow(e.clone(), m)
    })
}

/// Probability of the rank group of `assignment` when sample i has
/// distribution function `F^eta_i`.
pub fn savage_rank_probability(
    eta: &[BigRational],
    sizes: &[usize],
    assignment: &RankAssignment,
) -> Result<ExactRational> {
    check_eta(eta, sizes)?;
    assignment.check_sizes(sizes)?;
    let mut partial = BigRational::zero();
    let mut denom = BigRational::one();
    for &a in assignment.owners() {
        partial += &eta[a];
        denom *= &partial;
    }
    Ok(factorial_power_product(eta, sizes) / denom)
}

/// Probability of the extremal (identity) rank group under `F^eta_i`:
/// `prod n_i! eta_i^n_i / prod_i prod_{j=1}^{n_i} (j eta_i + sum_{l<i} n_l eta_l)`.
pub fn savage_identity_probability(eta: &[BigRational], sizes: &[usize]) -> Result<ExactRational> {
    check_eta(eta, sizes)?;
    let mut offset = BigRational::zero();
    let mut denom = BigRational::one();
    for (e, &m) in eta.iter().zip(sizes) {
        for j in 1..=m {
            denom *= &offset + e * BigRational::from_integer(BigInt::from(j));
        }
        offset += e * BigRational::from_integer(BigInt::from(m));
    }
    Ok(factorial_power_product(eta, sizes) / denom)
}

/// Probability of the rank group of `assignment` when sample i is
/// distributed as the i-th order statistic of k = `sizes.len()` uniforms.
pub fn order_stat_rank_probability(k: usize, sizes: &[usize], assignment: &RankAssignment) -> Result<ExactRational> {
    order_stat_rank_probability_with_cap(k, sizes, assignment, DEFAULT_EXACT_CAP)
}

pub fn order_stat_rank_probability_with_cap(
    k: usize,
    sizes: &[usize],
    assignment: &RankAssignment,
    cap: usize,
) -> Result<ExactRational> {
    if k == 0 || k != sizes.len() {
        return Err(Error::invalid(format!(
            "order-statistic depth {k} must equal the number of samples {}",
            sizes.len()
        )));
    }
    assignment.check_sizes(sizes)?;
    let n: usize = sizes.iter().sum();
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    let densities: Vec<Poly> = (1..=k).map(|i| order_stat_cdf_poly(i, k).derivative()).collect();
    // Innermost variable first: P_m(y) = integral_0^y P_{m-1}(t) f_{a_m}(t) dt.
    let mut acc = Poly::one();
    for &a in assignment.owners() {
        acc = acc.mul(&densities[a]).integral();
    }
    let multiplicity = sizes.iter().fold(BigInt::one(), |acc, &m| acc * poly::factorial(m));
    Ok(acc.at_one() * BigRational::from_integer(multiplicity))
}

pub fn order_stat_identity_probability(k: usize, sizes: &[usize]) -> Result<ExactRational> {
    if sizes.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    order_stat_rank_probability(k, sizes, &RankAssignment::identity(sizes))
}

/// `prod n_i! / n!`, the probability of any rank group under the null.
pub fn null_group_probability(sizes: &[usize]) -> ExactRational {
    let n: usize = sizes.iter().sum();
    let num = sizes.iter().fold(BigInt::one(), |acc, &m| acc * poly::factorial(m));
    BigRational::new(num, poly::factorial(n))
}

/// Parses `3`, `1.5` or `3/2` as an exact rational.
pub fn parse_rational(s: &str) -> Result<ExactRational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse {s:?} as a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int.starts_with('-');
    let int_digits = int.trim_start_matches(['-', '+']);
    let digits = format!("{}{frac}", if int_digits.is_empty() { "0" } else { int_digits });
    let mut num: BigInt = digits.parse().map_err(|_| bad())?;
    if negative {
        num = -num;
    }
    Ok(BigRational::new(num, num_traits::pow(BigInt::from(10), frac.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| q(x, 1)).collect()
    }

    #[test]
    fn savage_two_singletons() {
        let id = RankAssignment::identity(&[1, 1]);
        assert_eq!(savage_rank_probability(&ints(&[1, 1]), &[1, 1], &id).unwrap(), q(1, 2));
        assert_eq!(savage_rank_probability(&ints(&[1, 2]), &[1, 1], &id).unwrap(), q(2, 3));
        assert_eq!(savage_identity_probability(&ints(&[1, 2]), &[1, 1]).unwrap(), q(2, 3));
    }

    #[test]
    fn savage_three_samples() {
        let id = RankAssignment::identity(&[2, 1, 1]);
        assert_eq!(
            savage_rank_probability(&ints(&[1, 2, 3]), &[2, 1, 1], &id).unwrap(),
            q(3, 14)
        );
    }

    #[test]
    fn savage_equal_eta_is_uniform() {
        let sizes = [2, 3, 1];
        let eta = ints(&[4, 4, 4]);
        for g in rank_groups(&sizes) {
            assert_eq!(
                savage_rank_probability(&eta, &sizes, &g).unwrap(),
                null_group_probability(&sizes)
            );
        }
        assert_eq!(
            savage_identity_probability(&ints(&[1, 1, 1]), &sizes).unwrap(),
            q(2 * 6, 720)
        );
    }

    #[test]
    fn savage_rejects_bad_eta() {
        let id = RankAssignment::identity(&[1, 1]);
        assert!(savage_rank_probability(&ints(&[0, 1]), &[1, 1], &id).is_err());
        assert!(savage_rank_probability(&ints(&[1]), &[1, 1], &id).is_err());
        assert!(savage_identity_probability(&[q(-1, 2), q(1, 1)], &[1, 1]).is_err());
        assert!(savage_rank_probability(&ints(&[1, 1]), &[2, 1], &id).is_err());
    }

    #[test]
    fn order_stat_small_cases() {
        assert_eq!(order_stat_identity_probability(1, &[4]).unwrap(), q(1, 1));
        assert_eq!(order_stat_identity_probability(2, &[1, 1]).unwrap(), q(5, 6));
        let rev = RankAssignment::from_ranks(vec![vec![2], vec![1]]).unwrap();
        assert_eq!(order_stat_rank_probability(2, &[1, 1], &rev).unwrap(), q(1, 6));
        let p3 = order_stat_identity_probability(3, &[1, 1, 1]).unwrap();
        assert!(p3 > q(1, 6) && p3 <= q(1, 1));
    }

    #[test]
    fn order_stat_capacity() {
        let sizes = [5, 5, 5];
        let id = RankAssignment::identity(&sizes);
        assert!(matches!(
            order_stat_rank_probability(3, &sizes, &id),
            Err(Error::Capacity { n: 15, cap: 12 })
        ));
        assert!(order_stat_rank_probability_with_cap(3, &sizes, &id, 15).is_ok());
        assert!(order_stat_rank_probability(2, &[1, 1, 1], &RankAssignment::identity(&[1, 1, 1])).is_err());
    }

    #[test]
    fn group_enumeration_counts() {
        assert_eq!(rank_groups(&[2, 2]).count(), 6);
        assert_eq!(rank_groups(&[3, 3, 2]).count(), 560);
        assert_eq!(rank_groups(&[1, 1, 1]).count(), 6);
        let first = rank_groups(&[2, 1]).next().unwrap();
        assert_eq!(first, RankAssignment::identity(&[2, 1]));
    }

    #[test]
    fn assignment_maps() {
        let a = RankAssignment::from_ranks(vec![vec![3, 1], vec![2]]).unwrap();
        assert_eq!(a.owners(), &[0, 1, 0]);
        assert_eq!(a.within(), &[1, 0, 0]);
        assert!(RankAssignment::from_ranks(vec![vec![1, 1], vec![2]]).is_err());
        assert!(RankAssignment::from_ranks(vec![vec![4], vec![2]]).is_err());
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational("1.5").unwrap(), q(3, 2));
        assert_eq!(parse_rational("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_rational("-0.25").unwrap(), q(-1, 4));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }
}
