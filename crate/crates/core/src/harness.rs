//! Batches of seeded runs, summary statistics, Friedman ranking with Holm
//! correction, and the energy-difference report.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::instance::Instance;
use crate::solver::{run, RunRecord, SolverConfig};

/// Means, minima and standard deviations published for the benchmark set,
/// one row per instance and algorithm. `NA` marks a missing value.
pub const REFERENCE_MEANS: &str = include_str!("../data/reference_means.csv");

/// Size and energy parameters of the benchmark set.
pub const BENCHMARK_META: &str = include_str!("../data/benchmark_meta.csv");

/// Significance level for the post-hoc test.
pub const ALPHA_SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no successful runs to summarise")]
    Empty,
    #[error("need at least {needed} {what}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },
    #[error("missing value for {algorithm} on {instance}")]
    MissingCell { instance: String, algorithm: String },
    #[error("no best-known value for {0}")]
    MissingBestKnown(String),
    #[error("no consumption rate for {0}")]
    MissingConsumption(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("bad subset `{0}` (expected e.g. `>=E101`)")]
    BadSubset(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Outcome of one run inside a batch.
#[derive(Debug, Clone)]
pub struct BatchEntry {
    pub seed: u64,
    pub result: Result<RunRecord, String>,
}

/// Runs `n_runs` seeds starting at `base_seed`. Runs execute on up to
/// `jobs` threads (all cores when `None`); entries come back in seed order.
pub fn run_batch(
    inst: &Instance,
    cfg: &SolverConfig,
    n_runs: usize,
    base_seed: u64,
    jobs: Option<usize>,
) -> Vec<BatchEntry> {
    let seeds: Vec<u64> = (0..n_runs as u64).map(|i| base_seed + i).collect();
    let work = || {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = SolverConfig { seed, ..cfg.clone() };
                BatchEntry {
                    seed,
                    result: run(inst, &cfg).map_err(|e| e.to_string()),
                }
            })
            .collect::<Vec<_>>()
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub instance: String,
    pub selector: String,
    pub min: f64,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

/// Minimum, mean and sample standard deviation (0 for a single value).
pub fn summarize(instance: &str, selector: &str, values: &[f64]) -> Result<StatsRow, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(StatsRow {
        instance: instance.to_string(),
        selector: selector.to_string(),
        min,
        mean,
        std,
        runs: values.len(),
    })
}

/// Summary of the successful runs of a batch.
pub fn summarize_batch(entries: &[BatchEntry]) -> Result<StatsRow, HarnessError> {
    let ok: Vec<&RunRecord> = entries.iter().filter_map(|e| e.result.as_ref().ok()).collect();
    let first = ok.first().ok_or(HarnessError::Empty)?;
    let values: Vec<f64> = ok.iter().map(|r| r.best_fitness).collect();
    summarize(&first.instance, &first.selector, &values)
}

pub fn write_stats_csv<W: Write>(rows: &[StatsRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stats_csv<R: Read>(input: R) -> Result<Vec<StatsRow>, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

/// Short benchmark label: `E-n22-k4` becomes `E22`, `X-n143-k7` becomes
/// `X143`. Other names pass through unchanged. `X-n351-k40` is listed as
/// `X352` in the published tables and is mapped to that label.
pub fn short_name(name: &str) -> String {
    if name == "X-n351-k40" {
        return "X352".into();
    }
    let mut parts = name.split('-');
    if let (Some(set), Some(n)) = (parts.next(), parts.next()) {
        if let Some(num) = n.strip_prefix('n') {
            if !set.is_empty() && num.chars().all(|c| c.is_ascii_digit()) && !num.is_empty() {
                return format!("{set}{num}");
            }
        }
    }
    name.to_string()
}

/// Sort key `(set letter, size)` for labels such as `E101`.
fn instance_key(label: &str) -> Option<(String, u64)> {
    let split = label.find(|c: char| c.is_ascii_digit())?;
    let (set, num) = label.split_at(split);
    Some((set.to_string(), num.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct ReferenceRecord {
    instance: String,
    algorithm: String,
    min: String,
    mean: String,
    std: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub instance: String,
    pub algorithm: String,
    pub min: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

fn opt_value(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

pub fn reference_rows() -> Vec<ReferenceRow> {
    let mut rd = csv::Reader::from_reader(REFERENCE_MEANS.as_bytes());
    rd.deserialize::<ReferenceRecord>()
        .map(|r| {
            let r = r.expect("bundled reference table parses");
            ReferenceRow {
                min: opt_value(&r.min),
                mean: opt_value(&r.mean),
                std: opt_value(&r.std),
                instance: r.instance,
                algorithm: r.algorithm,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BenchmarkMeta {
    pub instance: String,
    pub customers: usize,
    pub stations: usize,
    pub min_routes: usize,
    pub max_load: u32,
    pub max_energy: f64,
    pub consumption: f64,
}

pub fn benchmark_meta() -> Vec<BenchmarkMeta> {
    let mut rd = csv::Reader::from_reader(BENCHMARK_META.as_bytes());
    rd.deserialize()
        .map(|r| r.expect("bundled benchmark table parses"))
        .collect()
}

/// Per-instance consumption rate of the benchmark set.
pub fn benchmark_consumption() -> BTreeMap<String, f64> {
    benchmark_meta()
        .into_iter()
        .map(|m| (m.instance, m.consumption))
        .collect()
}

/// Lowest published minimum per instance over all algorithms.
pub fn best_known() -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for r in reference_rows() {
        if let Some(m) = r.min {
            out.entry(r.instance)
                .and_modify(|v| *v = v.min(m))
                .or_insert(m);
        }
    }
    out
}

/// Mean fitness per instance (rows) and algorithm (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    pub instances: Vec<String>,
    pub algorithms: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl MeanMatrix {
    /// Builds the matrix from `(instance, algorithm, mean)` triples, in
    /// first-seen order. Later triples overwrite earlier ones.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (String, String, Option<f64>)>,
        algorithms: Option<&[&str]>,
    ) -> Result<Self, HarnessError> {
        let mut map: BTreeMap<(String, String), Option<f64>> = BTreeMap::new();
        let mut inst_order: Vec<String> = Vec::new();
        let mut alg_order: Vec<String> = Vec::new();
        for (i, a, v) in entries {
            if !inst_order.contains(&i) {
                inst_order.push(i.clone());
            }
            if !alg_order.contains(&a) {
                alg_order.push(a.clone());
            }
            map.insert((i, a), v);
        }
        let algorithms: Vec<String> = match algorithms {
            Some(list) => {
                for a in list {
                    if !alg_order.iter().any(|x| x == a) {
                        return Err(HarnessError::UnknownAlgorithm(a.to_string()));
                    }
                }
                list.iter().map(|s| s.to_string()).collect()
            }
            None => alg_order,
        };
        let cells = inst_order
            .iter()
            .map(|i| {
                algorithms
                    .iter()
                    .map(|a| map.get(&(i.clone(), a.clone())).copied().flatten())
                    .collect()
            })
            .collect();
        Ok(Self {
            instances: inst_order,
            algorithms,
            cells,
        })
    }

    /// Matrix of the bundled published means, restricted to `algorithms`
    /// (all when `None`).
    pub fn from_reference(algorithms: Option<&[&str]>) -> Result<Self, HarnessError> {
        Self::from_entries(
            reference_rows().into_iter().map(|r| (r.instance, r.algorithm, r.mean)),
            algorithms,
        )
    }

    pub fn from_stats(rows: &[StatsRow], algorithms: Option<&[&str]>) -> Result<Self, HarnessError> {
        Self::from_entries(
            rows.iter()
                .map(|r| (short_name(&r.instance), r.selector.clone(), Some(r.mean))),
            algorithms,
        )
    }

    /// Keeps instances at or after `from` in set-then-size order, given as
    /// `>=E101` or `E101`.
    pub fn subset_from(&self, spec: &str) -> Result<Self, HarnessError> {
        let label = spec.trim().trim_start_matches(">=").trim();
        let from = instance_key(label).ok_or_else(|| HarnessError::BadSubset(spec.to_string()))?;
        let keep: Vec<usize> = (0..self.instances.len())
            .filter(|&i| instance_key(&self.instances[i]).is_some_and(|k| k >= from))
            .collect();
        Ok(Self {
            instances: keep.iter().map(|&i| self.instances[i].clone()).collect(),
            algorithms: self.algorithms.clone(),
            cells: keep.iter().map(|&i| self.cells[i].clone()).collect(),
        })
    }
}

/// How a missing mean is handled when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Reject,
    /// Missing cells share the worst ranks of their instance.
    RankLast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub algorithms: Vec<String>,
    pub instances: Vec<String>,
    /// Per-instance ranks, 1 = lowest mean.
    pub ranks: Vec<Vec<f64>>,
    pub avg_ranks: Vec<f64>,
    pub chi_square: f64,
    pub p_value: f64,
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
/// `None` values rank after every present value.
fn rank_row(row: &[Option<f64>]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    let key = |i: usize| row[i].unwrap_or(f64::INFINITY);
    idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && key(idx[end]) == key(idx[start]) {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Friedman ranking of the algorithms over the instances of `m`.
pub fn friedman_ranks(m: &MeanMatrix, policy: MissingPolicy) -> Result<RankReport, HarnessError> {
    let a = m.algorithms.len();
    let n = m.instances.len();
    if a < 2 {
        return Err(HarnessError::TooFew { what: "algorithms", needed: 2, got: a });
    }
    if n < 2 {
        return Err(HarnessError::TooFew { what: "instances", needed: 2, got: n });
    }
    if policy == MissingPolicy::Reject {
        for (i, row) in m.cells.iter().enumerate() {
            if let Some(j) = row.iter().position(Option::is_none) {
                return Err(HarnessError::MissingCell {
                    instance: m.instances[i].clone(),
                    algorithm: m.algorithms[j].clone(),
                });
            }
        }
    }
    let ranks: Vec<Vec<f64>> = m.cells.iter().map(|row| rank_row(row)).collect();
    let avg_ranks: Vec<f64> = (0..a)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let (af, nf) = (a as f64, n as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi_square = 12.0 * nf / (af * (af + 1.0)) * (sum_sq - af * (af + 1.0).powi(2) / 4.0);
    let dist = ChiSquared::new(af - 1.0).expect("positive degrees of freedom");
    let p_value = (1.0 - dist.cdf(chi_square.max(0.0))).clamp(0.0, 1.0);
    Ok(RankReport {
        algorithms: m.algorithms.clone(),
        instances: m.instances.clone(),
        ranks,
        avg_ranks,
        chi_square,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolmRow {
    pub algorithm: String,
    pub avg_rank: f64,
    pub z: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_holm: Option<f64>,
    pub significant: bool,
}

/// Holm-corrected comparisons of every algorithm against the best-ranked
/// one. Rows keep the order of `report.algorithms`; the control row has
/// no p-values.
pub fn holm_posthoc(report: &RankReport) -> Vec<HolmRow> {
    let a = report.algorithms.len();
    let n = report.instances.len();
    let control = (0..a)
        .min_by(|&i, &j| report.avg_ranks[i].total_cmp(&report.avg_ranks[j]))
        .expect("at least one algorithm");
    let se = ((a * (a + 1)) as f64 / (6.0 * n as f64)).sqrt();
    let normal = Normal::standard();

    let mut raw: Vec<(usize, f64, f64)> = (0..a)
        .filter(|&j| j != control)
        .map(|j| {
            let z = (report.avg_ranks[j] - report.avg_ranks[control]) / se;
            let p = (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0);
            (j, z, p)
        })
        .collect();
    raw.sort_by(|x, y| x.2.total_cmp(&y.2));
    let family = raw.len();
    let mut adjusted = vec![None; a];
    let mut z_of = vec![None; a];
    let mut p_of = vec![None; a];
    let mut running: f64 = 0.0;
    for (step, &(j, z, p)) in raw.iter().enumerate() {
        running = running.max(((family - step) as f64 * p).min(1.0));
        adjusted[j] = Some(running);
        z_of[j] = Some(z);
        p_of[j] = Some(p);
    }
    (0..a)
        .map(|j| HolmRow {
            algorithm: report.algorithms[j].clone(),
            avg_rank: report.avg_ranks[j],
            z: z_of[j],
            p_raw: p_of[j],
            p_holm: adjusted[j],
            significant: adjusted[j].is_some_and(|p| p < ALPHA_SIGNIFICANCE),
        })
        .collect()
}

pub fn write_ranks_csv<W: Write>(rows: &[HolmRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "avg_rank", "p_holm", "significant"])?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            format!("{:.4}", r.avg_rank),
            r.p_holm.map(|p| format!("{p:.6}")).unwrap_or_default(),
            r.significant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub algorithms: Vec<String>,
    pub instances: Vec<String>,
    /// `(mean - best_known) * h` per instance and algorithm.
    pub diffs: Vec<Vec<Option<f64>>>,
    pub totals: Vec<f64>,
}

impl EnergyReport {
    pub fn get(&self, instance: &str, algorithm: &str) -> Option<f64> {
        let i = self.instances.iter().position(|x| x == instance)?;
        let j = self.algorithms.iter().position(|x| x == algorithm)?;
        self.diffs[i][j]
    }
}

/// Extra energy of the mean solution over the best-known one, per instance
/// and algorithm, plus per-algorithm totals. Instance names are matched in
/// their short form.
pub fn energy_diff_report(
    stats: &[StatsRow],
    best_known: &BTreeMap<String, f64>,
    consumption: &BTreeMap<String, f64>,
) -> Result<EnergyReport, HarnessError> {
    let mut algorithms: Vec<String> = Vec::new();
    let mut instances: Vec<String> = Vec::new();
    for r in stats {
        if !algorithms.contains(&r.selector) {
            algorithms.push(r.selector.clone());
        }
        let s = short_name(&r.instance);
        if !instances.contains(&s) {
            instances.push(s);
        }
    }
    let mut diffs = vec![vec![None; algorithms.len()]; instances.len()];
    for r in stats {
        let s = short_name(&r.instance);
        let best = *best_known.get(&s).ok_or_else(|| HarnessError::MissingBestKnown(s.clone()))?;
        let h = *consumption.get(&s).ok_or_else(|| HarnessError::MissingConsumption(s.clone()))?;
        let i = instances.iter().position(|x| *x == s).expect("collected");
        let j = algorithms.iter().position(|x| *x == r.selector).expect("collected");
        diffs[i][j] = Some((r.mean - best) * h);
    }
    let totals = (0..algorithms.len())
        .map(|j| diffs.iter().filter_map(|row| row[j]).sum())
        .collect();
    Ok(EnergyReport {
        algorithms,
        instances,
        diffs,
        totals,
    })
}

/// Published means as stats rows, for feeding the energy report.
pub fn reference_stats(algorithms: &[&str]) -> Vec<StatsRow> {
    reference_rows()
        .into_iter()
        .filter(|r| algorithms.contains(&r.algorithm.as_str()))
        .filter_map(|r| {
            Some(StatsRow {
                mean: r.mean?,
                min: r.min?,
                std: r.std.unwrap_or(f64::NAN),
                runs: 20,
                instance: r.instance,
                selector: r.algorithm,
            })
        })
        .collect()
}

pub fn write_energy_csv<W: Write>(report: &EnergyReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["instance".to_string()];
    header.extend(report.algorithms.iter().cloned());
    w.write_record(&header)?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
    for (i, inst) in report.instances.iter().enumerate() {
        let mut rec = vec![inst.clone()];
        rec.extend(report.diffs[i].iter().map(|&v| fmt(v)));
        w.write_record(&rec)?;
    }
    let mut total = vec!["Total".to_string()];
    total.extend(report.totals.iter().map(|&v| fmt(Some(v))));
    w.write_record(&total)?;
    w.flush()?;
    Ok(())
}

/// Distinct algorithm names in the bundled reference table.
pub fn reference_algorithms() -> Vec<String> {
    let mut seen = BTreeSet::new();
    reference_rows()
        .into_iter()
        .filter(|r| seen.insert(r.algorithm.clone()))
        .map(|r| r.algorithm)
        .collect()
}
