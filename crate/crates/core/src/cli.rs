//! Command-line front end.
//!
//! [`run`] parses arguments, executes one subcommand and writes the whole
//! report after all simulation work has finished, so the bytes written
//! depend only on the arguments (never on `--threads`).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::alternatives::AlternativeSpec;
use crate::cache::NullCache;
use crate::chi2::{approx_critical_value, fit_chi2, Chi2Method};
use crate::error::Error;
use crate::input::{judges, read_samples};
use crate::mc::{
    critical_value, estimate_null_distributions, power_study, run_test, Family, NullDistribution, StatisticId,
    DEFAULT_REPS,
};
use crate::random::{purpose, RandomSource};
use crate::rank::SampleSet;
use crate::value::{HalfInt, Rho};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

const DEFAULT_RHO: &str = "0,0.05,0.10,0.15,0.20,0.25";
const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Debug)]
#[command(
    name = "multirank",
    version,
    about = "Rank tests for k samples against ordered alternatives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test a data set (CSV with header `sample,value`).
    Test(TestArgs),
    /// Simulate critical values for a grid of designs.
    Critvals(CritvalsArgs),
    /// Estimate power curves under an alternative.
    Power(PowerArgs),
    /// Run the test on the bundled judges data.
    Example(ExampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum StatKind {
    M,
    V,
    Jt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FitKind {
    MeanVariance,
    Mean,
}

#[derive(Args, Debug)]
struct Common {
    /// Nominal significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Trimmed proportions for M and V.
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_RHO)]
    rho: Vec<Rho>,
    /// Statistics to compute (repeatable or comma separated).
    #[arg(long = "stat", value_enum, value_delimiter = ',', default_value = "m,v,jt")]
    stats: Vec<StatKind>,
    /// Simulated data sets per distribution.
    #[arg(long, default_value_t = DEFAULT_REPS, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Directory for cached null distributions.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    /// Worker threads (does not affect results).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Input CSV.
    input: PathBuf,
    /// Sample labels in hypothesized ascending order.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ExampleArgs {
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Design {
    /// Number of samples.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    k: u64,
    /// Common sample sizes, one design each.
    #[arg(long = "n", value_delimiter = ',', default_value = "5,10,15,20,25")]
    n: Vec<usize>,
    /// One explicit design with unequal sizes (overrides --k and --n).
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
}

impl Design {
    fn designs(&self) -> Result<Vec<Vec<usize>>, Failure> {
        let designs = match &self.sizes {
            Some(sizes) => vec![sizes.clone()],
            None => self.n.iter().map(|&n| vec![n; self.k as usize]).collect(),
        };
        for d in &designs {
            if d.len() < 2 {
                return Err(Failure::Usage("a design needs at least 2 samples".into()));
            }
            if d.contains(&0) {
                return Err(Failure::Usage("sample sizes must be positive".into()));
            }
        }
        Ok(designs)
    }
}

#[derive(Args, Debug)]
struct CritvalsArgs {
    #[command(flatten)]
    design: Design,
    /// Moment matching for the chi-square column.
    #[arg(long, value_enum, default_value = "mean-variance")]
    chi2_fit: FitKind,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[command(flatten)]
    design: Design,
    /// null, orderstat or power:e1,e2,...
    #[arg(long, default_value = "orderstat")]
    alt: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::InvalidTrim { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

/// Runs the command line `args` (including the program name), writing the
/// report to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let threads = match &cli.command {
        Command::Test(a) => a.common.threads,
        Command::Example(a) => a.common.threads,
        Command::Critvals(a) => a.common.threads,
        Command::Power(a) => a.common.threads,
    };
    let result = match threads {
        None => execute(&cli.command),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t as usize).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => Err(Failure::Usage(format!("cannot start {t} worker threads: {e}"))),
        },
    };
    match result {
        Ok(report) => match out.write_all(report.as_bytes()).and_then(|_| out.flush()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_DATA
            }
        },
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn execute(command: &Command) -> Result<String, Failure> {
    match command {
        Command::Test(a) => {
            let file = File::open(&a.input).map_err(|e| Failure::Data(format!("{}: {e}", a.input.display())))?;
            let data = read_samples(file, &a.input.display().to_string())?;
            cmd_test("test", Some(&a.input), data, a.order.as_deref(), &a.common)
        }
        Command::Example(a) => cmd_test("example", None, judges(), a.order.as_deref(), &a.common),
        Command::Critvals(a) => cmd_critvals(a),
        Command::Power(a) => cmd_power(a),
    }
}

fn check_common(c: &Common) -> Result<(), Failure> {
    if !(c.alpha > 0.0 && c.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha {} must lie in (0, 1)", c.alpha)));
    }
    Ok(())
}

/// Requested statistics in report order: for each rho M then V, JT last.
fn statistics(c: &Common) -> Vec<StatisticId> {
    let mut rhos = c.rho.clone();
    rhos.sort();
    rhos.dedup();
    let wants = |k: StatKind| c.stats.contains(&k);
    let mut out = Vec::new();
    for &rho in &rhos {
        if wants(StatKind::M) {
            out.push(StatisticId::m(rho));
        }
        if wants(StatKind::V) {
            out.push(StatisticId::v(rho));
        }
    }
    if wants(StatKind::Jt) {
        out.push(StatisticId::jt());
    }
    out
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn config_line(command: &str, c: &Common, extra: &[(&str, String)]) -> String {
    let mut rhos = c.rho.clone();
    rhos.sort();
    rhos.dedup();
    let mut kinds = c.stats.clone();
    kinds.sort();
    kinds.dedup();
    let kinds: Vec<&str> = kinds
        .iter()
        .map(|k| match k {
            StatKind::M => "m",
            StatKind::V => "v",
            StatKind::Jt => "jt",
        })
        .collect();
    let mut line = format!(
        "# config: command={command} alpha={} rho={} stat={} reps={} seed={}",
        c.alpha,
        join(&rhos, ","),
        kinds.join(","),
        c.reps,
        c.seed
    );
    for (k, v) in extra {
        let _ = write!(line, " {k}={v}");
    }
    if let Some(dir) = &c.cache_dir {
        let _ = write!(line, " cache-dir={}", dir.display());
    }
    let _ = write!(
        line,
        " format={}",
        match c.format {
            Format::Tsv => "tsv",
            Format::Csv => "csv",
        }
    );
    line.push('\n');
    line
}

fn nulls_for(
    stats: &[StatisticId],
    sizes: &[usize],
    c: &Common,
    base: RandomSource,
) -> Result<Vec<NullDistribution>, Failure> {
    let source = base.derive(purpose::NULL);
    Ok(match &c.cache_dir {
        Some(dir) => NullCache::new(dir).load_or_estimate(stats, sizes, c.reps, source)?,
        None => estimate_null_distributions(stats, sizes, c.reps, source)?,
    })
}

fn table(format: Format, header: &[&str], rows: &[Vec<String>]) -> Result<String, Failure> {
    let delimiter = match format {
        Format::Tsv => b'\t',
        Format::Csv => b',',
    };
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Data(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Data(e.to_string()))
}

fn rho_cell(stat: StatisticId) -> String {
    match stat.family {
        Family::Jt => "NA".into(),
        _ => stat.rho.to_string(),
    }
}

fn prob(p: f64) -> String {
    format!("{p:.6}")
}

fn opt_value(v: Option<HalfInt>) -> String {
    v.map_or_else(|| "NA".into(), |v| v.to_string())
}

fn n_cell(sizes: &[usize]) -> String {
    if sizes.windows(2).all(|w| w[0] == w[1]) {
        sizes[0].to_string()
    } else {
        join(sizes, "/")
    }
}

fn cmd_test(
    command: &str,
    input: Option<&PathBuf>,
    data: SampleSet,
    order: Option<&[String]>,
    c: &Common,
) -> Result<String, Failure> {
    check_common(c)?;
    let data = match order {
        Some(order) => data.reorder_by_labels(order)?,
        None => data,
    };
    let stats = statistics(c);
    let sizes = data.sizes();
    let base = RandomSource::new(c.seed, 0);
    let nulls = nulls_for(&stats, &sizes, c, base)?;
    let decisions = base.derive(purpose::DECISION);

    let mut extra = Vec::new();
    if let Some(path) = input {
        extra.push(("input", path.display().to_string()));
    }
    if let Some(order) = order {
        extra.push(("order", order.join(",")));
    }
    let mut report = config_line(command, c, &extra);
    let groups: Vec<String> = (0..data.k())
        .map(|i| format!("{} (n={})", data.label(i), sizes[i]))
        .collect();
    let _ = writeln!(report, "# samples: {}", groups.join(" < "));
    let (tie_groups, tied) = data.tie_summary();
    if tie_groups > 0 {
        let _ = writeln!(
            report,
            "# ties: {tie_groups} groups of tied values cover {tied} of {} observations; mid-ranks used",
            data.total()
        );
    }

    let mut rows = Vec::new();
    for (i, (&stat, null)) in stats.iter().zip(&nulls).enumerate() {
        let r = run_test(&data, stat, c.alpha, null, decisions.replication(i as u64))?;
        rows.push(vec![
            stat.family_name().to_string(),
            rho_cell(stat),
            r.value.to_string(),
            r.critical.tabulated().to_string(),
            opt_value(r.critical.s_alpha),
            prob(r.critical.alpha_l),
            prob(r.critical.alpha_r),
            prob(r.critical.pi),
            prob(r.p_value),
            r.decision.to_string(),
        ]);
    }
    report.push_str(&table(
        c.format,
        &[
            "statistic",
            "rho",
            "value",
            "cv",
            "s_alpha",
            "alpha_l",
            "alpha_r",
            "pi",
            "p_value",
            "decision",
        ],
        &rows,
    )?);
    Ok(report)
}

fn cmd_critvals(a: &CritvalsArgs) -> Result<String, Failure> {
    let c = &a.common;
    check_common(c)?;
    let designs = a.design.designs()?;
    let stats = statistics(c);
    let method = match a.chi2_fit {
        FitKind::MeanVariance => Chi2Method::MeanVariance,
        FitKind::Mean => Chi2Method::MeanOnly,
    };
    let base = RandomSource::new(c.seed, 0);
    let mut rows = Vec::new();
    for sizes in &designs {
        let nulls = nulls_for(&stats, sizes, c, base)?;
        for null in &nulls {
            let stat = null.statistic;
            let crit = critical_value(&null.dist, c.alpha, stat.tail())?;
            let chi2 = match stat.family {
                Family::V => fit_chi2(&null.dist, method)
                    .and_then(|fit| approx_critical_value(&fit, c.alpha))
                    .map_or_else(|_| "NA".into(), |q| format!("{q:.2}")),
                _ => "NA".into(),
            };
            rows.push(vec![
                sizes.len().to_string(),
                n_cell(sizes),
                rho_cell(stat),
                stat.family_name().to_string(),
                crit.tabulated().to_string(),
                prob(crit.alpha_l),
                opt_value(crit.s_alpha),
                prob(crit.alpha_r),
                prob(crit.pi),
                chi2,
            ]);
        }
    }
    let mut extra = design_config(&a.design);
    extra.push((
        "chi2-fit",
        match a.chi2_fit {
            FitKind::MeanVariance => "mean-variance".into(),
            FitKind::Mean => "mean".into(),
        },
    ));
    let mut report = config_line("critvals", c, &extra);
    report.push_str(&table(
        c.format,
        &[
            "k",
            "n",
            "rho",
            "statistic",
            "cv",
            "alpha_l",
            "s_alpha",
            "alpha_r",
            "pi",
            "chi2_approx",
        ],
        &rows,
    )?);
    Ok(report)
}

fn design_config(d: &Design) -> Vec<(&'static str, String)> {
    match &d.sizes {
        Some(sizes) => vec![("sizes", join(sizes, ","))],
        None => vec![("k", d.k.to_string()), ("n", join(&d.n, ","))],
    }
}

fn cmd_power(a: &PowerArgs) -> Result<String, Failure> {
    let c = &a.common;
    check_common(c)?;
    let designs = a.design.designs()?;
    let stats = statistics(c);
    let base = RandomSource::new(c.seed, 0);
    let mut rows = Vec::new();
    for sizes in &designs {
        let alt = AlternativeSpec::parse(&a.alt, sizes.len())?;
        let nulls = nulls_for(&stats, sizes, c, base)?;
        let estimates = power_study(&nulls, &alt, c.alpha, c.reps, base.derive(purpose::ALTERNATIVE))?;
        for e in estimates {
            rows.push(vec![
                sizes.len().to_string(),
                n_cell(sizes),
                rho_cell(e.statistic),
                e.statistic.family_name().to_string(),
                alt.to_string(),
                prob(e.power),
                prob(e.stderr),
            ]);
        }
    }
    let mut extra = design_config(&a.design);
    extra.push(("alt", a.alt.clone()));
    let mut report = config_line("power", c, &extra);
    report.push_str(&table(
        c.format,
        &["k", "n", "rho", "statistic", "alternative", "power", "mc_stderr"],
        &rows,
    )?);
    Ok(report)
}
