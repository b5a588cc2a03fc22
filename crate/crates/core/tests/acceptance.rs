//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::time::{Duration, Instant};

use multirank::cli::run as cli_run;
use multirank::exact::{
    null_group_probability, order_stat_identity_probability, rank_groups, savage_identity_probability,
    savage_rank_probability, RankAssignment,
};
use multirank::input::judges;
use multirank::random::purpose;
use multirank::{
    approx_critical_value, critical_value, estimate_null_distributions, fit_chi2, power_study, rejection_rate,
    run_test, sample_dataset, AlternativeSpec, Chi2Method, EmpiricalDistribution, HalfInt, PowerEstimate, RandomSource,
    Rho, StatisticId,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;
const ALPHA: f64 = 0.05;
/// Tolerance on attained tail probabilities in the critical-value tables.
const ATTAINED_TOL: f64 = 0.006;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rho(s: &str) -> Rho {
    s.parse().unwrap()
}

fn rhos() -> Vec<Rho> {
    ["0", "0.05", "0.10", "0.15", "0.20", "0.25"]
        .iter()
        .map(|s| rho(s))
        .collect()
}

/// M and V for every rho (paired by rho), then JT.
fn all_statistics() -> Vec<StatisticId> {
    let mut out: Vec<StatisticId> = rhos()
        .into_iter()
        .flat_map(|r| [StatisticId::m(r), StatisticId::v(r)])
        .collect();
    out.push(StatisticId::jt());
    out
}

fn h(x: f64) -> HalfInt {
    HalfInt::from_doubled((2.0 * x) as i64)
}

/// Number of support steps separating `a` from `b` in `dist`.
fn atoms_apart(dist: &EmpiricalDistribution, a: HalfInt, b: HalfInt) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    dist.support().iter().filter(|&&s| s > lo && s <= hi).count()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let data = judges();
    let stats = all_statistics();
    let nulls = estimate_null_distributions(&stats, &data.sizes(), 100_000, RandomSource::new(SEED, 0)).unwrap();
    let decide = RandomSource::new(SEED, 1);
    let reports: Vec<_> = stats
        .iter()
        .zip(&nulls)
        .enumerate()
        .map(|(i, (&s, null))| run_test(&data, s, ALPHA, null, decide.replication(i as u64)).unwrap())
        .collect();
    let elapsed = start.elapsed();

    let m0 = reports[0].value;
    let v0 = reports[1].value;
    let jt = reports[12].value;
    let reference_m = [40.5, 36.0, 37.0, 25.0, 26.0, 27.0];
    let reference_v = [114.5, 106.0, 100.5, 80.0, 76.5, 69.0];
    let trimmed_match =
        (0..6).all(|i| reports[2 * i].value == h(reference_m[i]) && reports[2 * i + 1].value == h(reference_v[i]));
    let rejects = reports.iter().filter(|r| r.decision.rejected()).count();
    let pass = m0 == h(40.5) && v0 == h(114.5) && jt == h(1164.0) && rejects == 13 && elapsed < Duration::from_secs(60);
    Outcome {
        pass,
        detail: format!(
            "M_0={m0} (40.5) V_0={v0} (114.5) JT={jt} (1164); all 12 M/V rows equal the reference values: {trimmed_match}; \
             {rejects}/13 tests reject at 5%; {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

struct TableCheck {
    stat: StatisticId,
    k: usize,
    n: usize,
    reference: f64,
    attained: Option<f64>,
    /// Largest accepted distance in support atoms.
    atoms: usize,
}

fn check_tables(checks: &[TableCheck], reps: u64) -> (bool, Vec<String>) {
    let mut pass = true;
    let mut notes = Vec::new();
    for c in checks {
        let sizes = vec![c.n; c.k];
        let source = RandomSource::new(SEED, 0).derive(purpose::NULL);
        let null = estimate_null_distributions(&[c.stat], &sizes, reps, source)
            .unwrap()
            .remove(0);
        let crit = critical_value(&null.dist, ALPHA, c.stat.tail()).unwrap();
        let cv = crit.tabulated();
        let apart = atoms_apart(&null.dist, cv, h(c.reference));
        let mut ok = apart <= c.atoms;
        let mut note = format!("{} k={} n={}: {} vs {}", c.stat, c.k, c.n, cv, c.reference);
        if let Some(a) = c.attained {
            ok &= (crit.alpha_l - a).abs() <= ATTAINED_TOL;
            note.push_str(&format!(" ({:.4} vs {a})", crit.alpha_l));
        }
        if !ok {
            note.push_str(" MISMATCH");
        }
        pass &= ok;
        notes.push(note);
    }
    (pass, notes)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let t = |stat, n, reference, attained, atoms| TableCheck {
        stat,
        k: 3,
        n,
        reference,
        attained,
        atoms,
    };
    let checks = [
        t(StatisticId::v(Rho::ZERO), 5, 18.0, Some(0.0345), 0),
        t(StatisticId::m(Rho::ZERO), 5, 7.0, Some(0.0401), 0),
        t(StatisticId::jt(), 5, 53.0, Some(0.0484), 0),
        t(StatisticId::v(rho("0.10")), 10, 38.0, None, 1),
        t(StatisticId::v(rho("0.25")), 20, 61.0, None, 1),
        t(StatisticId::m(rho("0.25")), 20, 24.0, None, 1),
        t(StatisticId::jt(), 25, 1107.0, None, 1),
    ];
    let (pass, notes) = check_tables(&checks, 100_000);
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && elapsed < Duration::from_secs(600),
        detail: format!("{}; {:.1}s", notes.join("; "), elapsed.as_secs_f64()),
    }
}

fn criterion_3() -> Outcome {
    let t = |stat, reference, attained| TableCheck {
        stat,
        k: 5,
        n: 5,
        reference,
        attained: Some(attained),
        atoms: 1,
    };
    let checks = [
        t(StatisticId::v(Rho::ZERO), 65.0, 0.0460),
        t(StatisticId::m(Rho::ZERO), 15.0, 0.0324),
        t(StatisticId::jt(), 160.0, 0.0492),
    ];
    let (pass, notes) = check_tables(&checks, 100_000);
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion_4() -> Outcome {
    let mut literal_ok = true;
    let mut fitted_ok = true;
    let mut notes = Vec::new();
    for (n, reference) in [(10usize, 46.6), (20, 105.9)] {
        let null = estimate_null_distributions(
            &[StatisticId::v(Rho::ZERO)],
            &[n; 3],
            100_000,
            RandomSource::new(SEED, 4),
        )
        .unwrap()
        .remove(0);
        let mean_only = approx_critical_value(&fit_chi2(&null.dist, Chi2Method::MeanOnly).unwrap(), ALPHA).unwrap();
        let fitted = approx_critical_value(&fit_chi2(&null.dist, Chi2Method::MeanVariance).unwrap(), ALPHA).unwrap();
        literal_ok &= (mean_only - reference).abs() <= 2.0;
        fitted_ok &= (fitted - reference).abs() <= 2.0;
        notes.push(format!(
            "n={n}: df=mean gives {mean_only:.2}, scaled (mean+variance) gives {fitted:.2}, reference {reference}"
        ));
    }
    Outcome {
        pass: literal_ok,
        detail: format!(
            "{}; df=mean within 2.0: {literal_ok}; default scaled fit within 2.0: {fitted_ok}",
            notes.join("; ")
        ),
    }
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Compositions of `n` into at least two positive parts.
fn designs(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << (n - 1)))
        .map(|mask| {
            let mut sizes = vec![1];
            for i in 0..n - 1 {
                if mask & (1 << i) != 0 {
                    sizes.push(1);
                } else {
                    *sizes.last_mut().unwrap() += 1;
                }
            }
            sizes
        })
        .collect()
}

fn criterion_5() -> Outcome {
    // (a) and (d)
    let mut sums_ok = true;
    let mut equal_ok = true;
    let mut n_designs = 0;
    for n in 2..=8 {
        for sizes in designs(n) {
            n_designs += 1;
            let k = sizes.len() as i64;
            let null_p = null_group_probability(&sizes);
            for eta in [vec![int(1); k as usize], (1..=k).map(int).collect::<Vec<_>>()] {
                let mut total = BigRational::zero();
                let equal = eta.iter().all(|e| *e == eta[0]);
                for g in rank_groups(&sizes) {
                    let p = savage_rank_probability(&eta, &sizes, &g).unwrap();
                    if equal && p != null_p {
                        equal_ok = false;
                    }
                    total += p;
                }
                sums_ok &= total.is_one();
            }
        }
    }
    // (b)
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let identity_ok = (0..50).all(|_| {
        let k = rng.random_range(2..=5);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=6)).collect();
        let eta: Vec<BigRational> = (0..k)
            .map(|_| {
                BigRational::new(
                    BigInt::from(rng.random_range(1..=12)),
                    BigInt::from(rng.random_range(1..=5)),
                )
            })
            .collect();
        savage_identity_probability(&eta, &sizes).unwrap()
            == savage_rank_probability(&eta, &sizes, &RankAssignment::identity(&sizes)).unwrap()
    });
    // (c)
    let exact = order_stat_identity_probability(2, &[1, 1]).unwrap().to_f64().unwrap();
    let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        let m = 400;
        let step = (b - a) / m as f64;
        let inner: f64 = (1..m)
            .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * step))
            .sum();
        (f(a) + f(b) + inner) * step / 3.0
    };
    let numeric = simpson(&|y2| 2.0 * y2 * simpson(&|y1| 2.0 * (1.0 - y1), 0.0, y2), 0.0, 1.0);
    let spec = AlternativeSpec::OrderStatistic { order_count: 2 };
    let src = RandomSource::new(SEED, 5);
    let draws = 1_000_000u64;
    let hits = (0..draws)
        .filter(|&i| {
            let d = sample_dataset(&spec, &[1, 1], src.replication(i)).unwrap();
            d.samples()[0][0] < d.samples()[1][0]
        })
        .count();
    let freq = hits as f64 / draws as f64;
    let se = (exact * (1.0 - exact) / draws as f64).sqrt();
    let integral_ok = (numeric - exact).abs() < 1e-6;
    let mc_ok = (freq - exact).abs() < 4.0 * se;
    Outcome {
        pass: sums_ok && equal_ok && identity_ok && integral_ok && mc_ok,
        detail: format!(
            "(a) sums exactly 1 over {n_designs} designs x 2 exponent grids: {sums_ok}; (b) 50 identity checks: {identity_ok}; \
             (c) exact {exact:.7} numeric {numeric:.7} MC {freq:.5} ({:.1} SE): {}; (d) equal exponents give the null probability: {equal_ok}",
            (freq - exact).abs() / se,
            integral_ok && mc_ok
        ),
    }
}

fn criterion_6() -> Outcome {
    let sizes = [10, 10, 10];
    let stats = all_statistics();
    let base = RandomSource::new(SEED, 6);
    let nulls = estimate_null_distributions(&stats, &sizes, 100_000, base.derive(purpose::NULL)).unwrap();
    let mut pass = true;
    let mut worst = (0.0f64, String::new());
    for (i, null) in nulls.iter().enumerate() {
        let rate = rejection_rate(
            null,
            &AlternativeSpec::Null,
            ALPHA,
            100_000,
            base.derive(100 + i as u64),
        )
        .unwrap();
        let dev = (rate - ALPHA).abs();
        pass &= dev <= 0.0035;
        if dev >= worst.0 {
            worst = (dev, format!("{} at {rate:.4}", null.statistic));
        }
    }
    Outcome {
        pass,
        detail: format!(
            "{} statistics, 10^5 null data sets each; largest deviation {}",
            stats.len(),
            worst.1
        ),
    }
}

fn criterion_7() -> Outcome {
    let stats = all_statistics();
    let alt = AlternativeSpec::OrderStatistic { order_count: 3 };
    let reps = 10_000;
    let base = RandomSource::new(SEED, 7);
    let ns = [5usize, 10, 15, 20, 25];
    let curves: Vec<Vec<PowerEstimate>> = ns
        .iter()
        .map(|&n| {
            let nulls = estimate_null_distributions(&stats, &[n; 3], reps, base.derive(purpose::NULL)).unwrap();
            power_study(&nulls, &alt, ALPHA, reps, base.derive(purpose::ALTERNATIVE)).unwrap()
        })
        .collect();
    let se2 = |a: &PowerEstimate, b: &PowerEstimate| 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let mut violations = Vec::new();
    let mut comparisons = 0;
    for (n, row) in ns.iter().zip(&curves) {
        let jt = &row[12];
        for i in 0..6 {
            let (m, v) = (&row[2 * i], &row[2 * i + 1]);
            comparisons += 2;
            if jt.power < v.power - se2(jt, v) {
                violations.push(format!("n={n}: JT {:.3} < {} {:.3}", jt.power, v.statistic, v.power));
            }
            if v.power < m.power - se2(v, m) {
                violations.push(format!(
                    "n={n}: {} {:.3} < {} {:.3}",
                    v.statistic, v.power, m.statistic, m.power
                ));
            }
        }
    }
    for s in 0..stats.len() {
        for w in curves.windows(2) {
            comparisons += 1;
            if w[1][s].power < w[0][s].power - se2(&w[0][s], &w[1][s]) {
                violations.push(format!(
                    "{} decreases: {:.3} -> {:.3}",
                    stats[s], w[0][s].power, w[1][s].power
                ));
            }
        }
    }
    let jt_curve: Vec<String> = curves.iter().map(|row| format!("{:.3}", row[12].power)).collect();
    Outcome {
        pass: violations.is_empty(),
        detail: format!(
            "{comparisons} comparisons, {} violations{}; JT power for n=5..25: {}",
            violations.len(),
            if violations.is_empty() {
                String::new()
            } else {
                format!(" ({})", violations.join(", "))
            },
            jt_curve.join(" ")
        ),
    }
}

fn cli_output(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli_run(
        std::iter::once("multirank").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, out)
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = judges();
    let mut csv = String::from("sample,value\n");
    for (i, s) in data.samples().iter().enumerate() {
        for v in s {
            csv.push_str(&format!("{},{v}\n", data.label(i)));
        }
    }
    let input = dir.path().join("judges.csv");
    std::fs::write(&input, csv).unwrap();
    let input = input.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["test", input, "--reps", "20000"],
        vec!["critvals", "--n", "5,10", "--reps", "20000"],
        vec!["power", "--n", "5,10", "--reps", "5000", "--alt", "power:1,2,3"],
        vec!["example", "--reps", "20000", "--format", "csv"],
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for args in runs {
        let with = |t: &'static str| {
            let mut a = args.clone();
            a.extend(["--threads", t]);
            cli_output(&a)
        };
        let (c1, a) = with("1");
        let (c2, b) = with("8");
        let (c3, c) = with("8");
        let same = c1 == 0 && c2 == 0 && c3 == 0 && !a.is_empty() && a == b && b == c;
        pass &= same;
        notes.push(format!("{} {}", args[0], if same { "identical" } else { "DIFFERS" }));
    }
    Outcome {
        pass,
        detail: format!("threads 1 vs 8 vs 8: {}", notes.join(", ")),
    }
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("example reproduction", criterion_1),
        ("critical values, 3 samples", criterion_2),
        ("critical values, 5 samples", criterion_3),
        ("chi-square approximation", criterion_4),
        ("exact-probability oracles", criterion_5),
        ("exact level", criterion_6),
        ("power ordering", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
