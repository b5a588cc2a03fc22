//! Rank tests for homogeneity of k samples against stochastically ordered
//! alternatives.
//!
//! Three families of statistics are provided: the precedence-type `M_rho`
//! (largest trimmed deviation between neighbouring samples), the
//! exceedance-type `V_rho` (sum of those deviations) and the
//! Jonckheere-Terpstra count. Null distributions are simulated with keyed
//! random streams and turned into randomized critical values with exact
//! level. Exact rank-order probabilities under Lehmann alternatives are
//! available in rational arithmetic for small designs.
//!
//! ```
//! use multirank::{pool_and_rank, m_statistic, v_statistic, Rho, SampleSet, TrimSpec};
//!
//! let data = SampleSet::new(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
//! let profile = pool_and_rank(&data);
//! let trim = TrimSpec::new(Rho::ZERO, &data.sizes());
//! assert_eq!(m_statistic(&profile, &trim).unwrap().to_f64(), 0.0);
//! assert_eq!(v_statistic(&profile, &trim).unwrap().to_f64(), 0.0);
//! ```

pub mod alternatives;
pub mod cache;
pub mod chi2;
pub mod cli;
mod error;
pub mod exact;
pub mod input;
pub mod mc;
pub mod random;
pub mod rank;
mod value;

pub use alternatives::{order_stat_cdf, sample_dataset, AlternativeSpec};
pub use cache::NullCache;
pub use chi2::{approx_critical_value, fit_chi2, Chi2Fit, Chi2Method};
pub use error::{Error, Result};
pub use mc::{
    critical_value, estimate_null_distribution, estimate_null_distributions, estimate_power, power_study,
    rejection_rate, run_test, Decision, EmpiricalDistribution, Family, NullDistribution, PowerEstimate,
    RandomizedCriticalValue, StatisticId, Tail, TestReport, DEFAULT_REPS,
};
pub use random::RandomSource;
pub use rank::{jt_statistic, m_statistic, pool_and_rank, v_statistic, OrderedRankProfile, SampleSet, TrimSpec};
pub use value::{HalfInt, Rho};
