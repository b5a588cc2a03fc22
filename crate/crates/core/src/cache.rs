//! On-disk cache of simulated null distributions.
//!
//! One tab-separated file per (statistic, rho, sizes, reps, seed); tabs
//! are shown as spaces below:
//!
//! ```text
//! # multirank null distribution v1
//! # statistic  V
//! # rho  1/10
//! # k  3
//! # sizes  5,5,5
//! # reps  100000
//! # seed  42
//! # stream  7234
//! value_num  value_den  count
//! 12  1  3
//! 25  2  17
//! ...
//! ```
//!
//! Values are reduced fractions (`value_den` is 1 or 2). Counts sum to
//! `reps`. Rows are in increasing value order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mc::{estimate_null_distributions, EmpiricalDistribution, NullDistribution, StatisticId};
use crate::random::RandomSource;
use crate::value::{HalfInt, Rho};

pub const CACHE_MAGIC: &str = "# multirank null distribution v1";

#[derive(Clone, Debug)]
pub struct NullCache {
    dir: PathBuf,
}

fn rho_key(rho: Rho) -> String {
    format!("{}/{}", rho.numer(), rho.denom())
}

impl NullCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        NullCache { dir: dir.into() }
    }

    pub fn path_for(&self, stat: StatisticId, sizes: &[usize], reps: u64, source: RandomSource) -> PathBuf {
        let sizes: Vec<String> = sizes.iter().map(usize::to_string).collect();
        let name = format!(
            "{}_rho{}_n{}_r{}_s{}-{}.tsv",
            stat.family_name(),
            rho_key(stat.rho).replace('/', "-"),
            sizes.join("-"),
            reps,
            source.seed,
            source.stream_id
        );
        self.dir.join(name)
    }

    /// Loads cached distributions where present and simulates (and stores)
    /// the rest. Missing statistics are simulated jointly, which gives the
    /// same result as simulating each one alone.
    pub fn load_or_estimate(
        &self,
        stats: &[StatisticId],
        sizes: &[usize],
        reps: u64,
        source: RandomSource,
    ) -> Result<Vec<NullDistribution>> {
        let mut out: Vec<Option<NullDistribution>> = Vec::with_capacity(stats.len());
        for &s in stats {
            let path = self.path_for(s, sizes, reps, source);
            out.push(if path.exists() { Some(read_null(&path)?) } else { None });
        }
        let missing: Vec<StatisticId> = stats
            .iter()
            .zip(&out)
            .filter(|(_, o)| o.is_none())
            .map(|(s, _)| *s)
            .collect();
        if !missing.is_empty() {
            fs::create_dir_all(&self.dir)?;
            let mut fresh = estimate_null_distributions(&missing, sizes, reps, source)?.into_iter();
            for slot in out.iter_mut().filter(|o| o.is_none()) {
                let null = fresh.next().expect("one result per missing statistic");
                write_null(&self.path_for(null.statistic, sizes, reps, source), &null)?;
                *slot = Some(null);
            }
        }
        Ok(out.into_iter().map(|o| o.expect("filled above")).collect())
    }
}

pub fn format_null(null: &NullDistribution) -> String {
    let mut s = String::new();
    let sizes: Vec<String> = null.sizes.iter().map(usize::to_string).collect();
    s.push_str(CACHE_MAGIC);
    s.push('\n');
    s.push_str(&format!("# statistic\t{}\n", null.statistic.family_name()));
    s.push_str(&format!("# rho\t{}\n", rho_key(null.statistic.rho)));
    s.push_str(&format!("# k\t{}\n", null.sizes.len()));
    s.push_str(&format!("# sizes\t{}\n", sizes.join(",")));
    s.push_str(&format!("# reps\t{}\n", null.dist.reps()));
    s.push_str(&format!("# seed\t{}\n", null.source.seed));
    s.push_str(&format!("# stream\t{}\n", null.source.stream_id));
    s.push_str("value_num\tvalue_den\tcount\n");
    for (v, c) in null.dist.support().iter().zip(null.dist.counts()) {
        s.push_str(&format!("{}\t{}\t{}\n", v.numer(), v.denom(), c));
    }
    s
}

pub fn write_null(path: &Path, null: &NullDistribution) -> Result<()> {
    // write then rename so concurrent readers never see a partial file
    let tmp = path.with_extension("tsv.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(format_null(null).as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_null(path: &Path) -> Result<NullDistribution> {
    parse_null(&fs::read_to_string(path)?, path)
}

pub fn parse_null(text: &str, path: &Path) -> Result<NullDistribution> {
    let err = |line: usize, msg: String| Error::Cache {
        path: path.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == CACHE_MAGIC => {}
        _ => return Err(err(1, "missing or unsupported format header".into())),
    }
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines.next().ok_or_else(|| err(0, format!("missing {key} header")))?;
        let rest = line
            .strip_prefix("# ")
            .and_then(|l| l.strip_prefix(key))
            .and_then(|l| l.strip_prefix('\t'))
            .ok_or_else(|| err(no, format!("expected `# {key}<TAB>...`")))?;
        Ok((no, rest.to_string()))
    };
    let (no, family) = header("statistic")?;
    let (rno, rho) = header("rho")?;
    let (kno, k) = header("k")?;
    let (sno, sizes) = header("sizes")?;
    let (repno, reps) = header("reps")?;
    let (seedno, seed) = header("seed")?;
    let (streamno, stream) = header("stream")?;
    let rho: Rho = rho.parse().map_err(|e: Error| err(rno, e.to_string()))?;
    let statistic = match family.as_str() {
        "M" => StatisticId::m(rho),
        "V" => StatisticId::v(rho),
        "JT" => StatisticId::jt(),
        other => return Err(err(no, format!("unknown statistic {other:?}"))),
    };
    let k: usize = k.parse().map_err(|_| err(kno, "bad k".into()))?;
    let sizes = sizes
        .split(',')
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| err(sno, "bad sizes".into()))?;
    if sizes.len() != k {
        return Err(err(sno, format!("{} sizes listed but k = {k}", sizes.len())));
    }
    let reps: u64 = reps.parse().map_err(|_| err(repno, "bad reps".into()))?;
    let seed: u64 = seed.parse().map_err(|_| err(seedno, "bad seed".into()))?;
    let stream: u64 = stream.parse().map_err(|_| err(streamno, "bad stream".into()))?;
    match lines.next() {
        Some((_, "value_num\tvalue_den\tcount")) => {}
        Some((no, _)) => return Err(err(no, "expected column header".into())),
        None => return Err(err(0, "missing column header".into())),
    }
    let mut pairs = Vec::new();
    let mut prev: Option<HalfInt> = None;
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(no, format!("expected 3 fields, found {}", fields.len())));
        }
        let num: i64 = fields[0].parse().map_err(|_| err(no, "bad numerator".into()))?;
        let den: i64 = fields[1].parse().map_err(|_| err(no, "bad denominator".into()))?;
        let count: u64 = fields[2].parse().map_err(|_| err(no, "bad count".into()))?;
        let v = HalfInt::from_fraction(num, den).ok_or_else(|| err(no, "denominator must be 1 or 2".into()))?;
        if prev.is_some_and(|p| p >= v) {
            return Err(err(no, "values are not strictly increasing".into()));
        }
        prev = Some(v);
        pairs.push((v, count));
    }
    let dist = EmpiricalDistribution::from_counts(pairs).map_err(|e| err(0, e.to_string()))?;
    if dist.reps() != reps {
        return Err(err(0, format!("counts sum to {} but reps = {reps}", dist.reps())));
    }
    Ok(NullDistribution {
        statistic,
        sizes,
        source: RandomSource::new(seed, stream),
        dist,
    })
}
