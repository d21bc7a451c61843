//! Per-run rows, oracle scoring and aggregate statistics.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::run::RunRecord;

/// Relative tolerance for counting a run as reaching the optimum.
pub const HIT_TOLERANCE: f64 = 1e-9;

pub const RUN_COLUMNS: [&str; 13] = [
    "method",
    "scenario",
    "min_size",
    "param_idx",
    "repeat",
    "seed",
    "best_fitness",
    "subgroup_size",
    "ratio_to_opt",
    "hit_opt",
    "wall_s",
    "rule_bits",
    "rule_text",
];

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "method",
    "scenario",
    "runs",
    "mean_fitness",
    "std_dev",
    "mean_time_s",
    "mean_ratio",
    "median_ratio",
    "pct_hit_opt",
    "cv",
    "unique_solutions",
];

pub const FAILED_PREFIX: &str = "FAILED: ";

/// One benchmark cell's outcome, as stored in the line-delimited run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLine {
    pub method: String,
    pub scenario: String,
    pub min_size: usize,
    pub param_idx: usize,
    pub repeat: usize,
    pub seed: u64,
    pub dataset_hash: String,
    /// Exhaustive optimum for this dataset and minimum size, if known and feasible.
    pub optimum: Option<f64>,
    pub record: Option<RunRecord>,
    pub error: Option<String>,
}

impl RunLine {
    pub fn is_ok(&self) -> bool {
        self.record.is_some()
    }

    /// Ratio of best fitness to the optimum; zero for infeasible runs.
    pub fn ratio(&self) -> Option<f64> {
        let (r, opt) = (self.record.as_ref()?, self.optimum?);
        Some(if r.feasible { r.best_fitness / opt } else { 0.0 })
    }

    pub fn hit(&self) -> Option<bool> {
        let (r, opt) = (self.record.as_ref()?, self.optimum?);
        Some(r.feasible && (r.best_fitness - opt).abs() <= HIT_TOLERANCE * opt.abs())
    }

    /// The row of the per-run CSV. `wall_s` is left empty when `timing` is false.
    pub fn csv_row(&self, timing: bool) -> Vec<String> {
        let mut row = vec![
            self.method.clone(),
            self.scenario.clone(),
            self.min_size.to_string(),
            self.param_idx.to_string(),
            self.repeat.to_string(),
            self.seed.to_string(),
        ];
        match &self.record {
            Some(r) => row.extend([
                r.best_fitness.to_string(),
                r.subgroup_size.to_string(),
                opt_string(self.ratio()),
                self.hit()
                    .map(|h| if h { "1" } else { "0" }.to_string())
                    .unwrap_or_default(),
                if timing { r.wall_s.to_string() } else { String::new() },
                r.rule_bits.clone(),
                r.rule_text.clone(),
            ]),
            None => {
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(format!(
                    "{FAILED_PREFIX}{}",
                    self.error.as_deref().unwrap_or("unknown error")
                ));
            }
        }
        row
    }
}

fn opt_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (divisor `n - 1`); zero for a single value.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

/// `std_dev / mean`; `None` when the mean is zero.
pub fn coefficient_of_variation(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if m == 0.0 {
        return None;
    }
    Some(std_dev(xs)? / m.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub excluded: usize,
    pub mean_fitness: Option<f64>,
    pub std_dev: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub pct_hit_opt: Option<f64>,
    pub cv: Option<f64>,
    pub unique_solutions: usize,
}

fn aggregate(lines: &[&RunLine], cv: Option<f64>) -> Aggregate {
    let ok: Vec<&RunLine> = lines.iter().copied().filter(|l| l.is_ok()).collect();
    let fitness: Vec<f64> = ok.iter().map(|l| l.record.as_ref().unwrap().best_fitness).collect();
    let times: Vec<f64> = ok.iter().map(|l| l.record.as_ref().unwrap().wall_s).collect();
    let ratios: Vec<f64> = ok.iter().filter_map(|l| l.ratio()).collect();
    let hits: Vec<bool> = ok.iter().filter_map(|l| l.hit()).collect();
    let unique: HashSet<&str> = ok
        .iter()
        .map(|l| l.record.as_ref().unwrap().subgroup_digest.as_str())
        .collect();
    Aggregate {
        runs: ok.len(),
        excluded: lines.len() - ok.len(),
        mean_fitness: mean(&fitness),
        std_dev: std_dev(&fitness),
        mean_time_s: mean(&times),
        mean_ratio: mean(&ratios),
        median_ratio: median(&ratios),
        pct_hit_opt: (!hits.is_empty()).then(|| 100.0 * hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64),
        cv,
        unique_solutions: unique.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub method: String,
    pub scenario: String,
    pub min_size: usize,
    pub param_idx: usize,
    pub stats: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub scenario: String,
    pub stats: Aggregate,
}

/// Groups preserving the order in which keys first appear.
fn group_by<K: Ord + Clone>(lines: &[RunLine], key: impl Fn(&RunLine) -> K) -> Vec<(K, Vec<&RunLine>)> {
    let mut order: Vec<K> = Vec::new();
    let mut groups: BTreeMap<K, Vec<&RunLine>> = BTreeMap::new();
    for l in lines {
        let k = key(l);
        groups
            .entry(k.clone())
            .or_insert_with(|| {
                order.push(k);
                Vec::new()
            })
            .push(l);
    }
    order
        .into_iter()
        .map(|k| {
            let g = groups.remove(&k).unwrap();
            (k, g)
        })
        .collect()
}

fn cell_cv(lines: &[&RunLine]) -> Option<f64> {
    let fitness: Vec<f64> = lines
        .iter()
        .filter_map(|l| l.record.as_ref().map(|r| r.best_fitness))
        .collect();
    coefficient_of_variation(&fitness)
}

/// One row per (method, scenario, min_size, param_idx).
pub fn summarize_cells(lines: &[RunLine]) -> Vec<CellSummary> {
    group_by(lines, |l| {
        (l.method.clone(), l.scenario.clone(), l.min_size, l.param_idx)
    })
    .into_iter()
    .map(|((method, scenario, min_size, param_idx), g)| CellSummary {
        method,
        scenario,
        min_size,
        param_idx,
        stats: aggregate(&g, cell_cv(&g)),
    })
    .collect()
}

/// One row per (method, scenario); `cv` is the mean of the per-cell coefficients of variation.
pub fn summarize(lines: &[RunLine]) -> Vec<MethodSummary> {
    let cells = summarize_cells(lines);
    group_by(lines, |l| (l.method.clone(), l.scenario.clone()))
        .into_iter()
        .map(|((method, scenario), g)| {
            let cvs: Vec<f64> = cells
                .iter()
                .filter(|c| c.method == method && c.scenario == scenario)
                .filter_map(|c| c.stats.cv)
                .collect();
            MethodSummary {
                stats: aggregate(&g, mean(&cvs)),
                method,
                scenario,
            }
        })
        .collect()
}

fn stats_fields(a: &Aggregate) -> Vec<String> {
    vec![
        a.runs.to_string(),
        opt_string(a.mean_fitness),
        opt_string(a.std_dev),
        opt_string(a.mean_time_s),
        opt_string(a.mean_ratio),
        opt_string(a.median_ratio),
        opt_string(a.pct_hit_opt),
        opt_string(a.cv),
        a.unique_solutions.to_string(),
    ]
}

pub fn write_runs<W: Write>(lines: &[RunLine], timing: bool, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RUN_COLUMNS)?;
    for l in lines {
        w.write_record(l.csv_row(timing))?;
    }
    w.flush().map_err(|e| Error::io("<runs>", e))?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[MethodSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        let mut rec = vec![r.method.clone(), r.scenario.clone()];
        rec.extend(stats_fields(&r.stats));
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

pub fn write_cell_summary<W: Write>(rows: &[CellSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["method", "scenario", "min_size", "param_idx"];
    header.extend(&SUMMARY_COLUMNS[2..]);
    header.push("excluded");
    w.write_record(header)?;
    for r in rows {
        let mut rec = vec![
            r.method.clone(),
            r.scenario.clone(),
            r.min_size.to_string(),
            r.param_idx.to_string(),
        ];
        rec.extend(stats_fields(&r.stats));
        rec.push(r.stats.excluded.to_string());
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| Error::io("<cells>", e))?;
    Ok(())
}

/// Tidy best-so-far curves: one row per trace step of every successful run.
pub fn write_convergence<W: Write>(lines: &[RunLine], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "method",
        "scenario",
        "min_size",
        "param_idx",
        "repeat",
        "step",
        "best_so_far",
    ])?;
    for l in lines {
        let Some(r) = &l.record else { continue };
        for (step, v) in r.best_ever_series().into_iter().enumerate() {
            w.write_record([
                l.method.clone(),
                l.scenario.clone(),
                l.min_size.to_string(),
                l.param_idx.to_string(),
                l.repeat.to_string(),
                step.to_string(),
                v.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<convergence>", e))?;
    Ok(())
}

pub fn write_jsonl<W: Write>(lines: &[RunLine], mut writer: W) -> Result<()> {
    for l in lines {
        serde_json::to_writer(&mut writer, l)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(reader: R, path: &Path) -> Result<Vec<RunLine>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}
