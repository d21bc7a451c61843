//! Sequencing of independent screening filters to minimize expected cost per molecule.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One filter with per-molecule cost and the fraction of molecules it removes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterProfile {
    pub id: String,
    pub cost: f64,
    pub selectivity: f64,
}

impl FilterProfile {
    pub fn new(id: impl Into<String>, cost: f64, selectivity: f64) -> Result<Self> {
        let f = FilterProfile {
            id: id.into(),
            cost,
            selectivity,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::Config(format!("filter {}: cost must be positive", self.id)));
        }
        if !(0.0..=1.0).contains(&self.selectivity) {
            return Err(Error::Config(format!(
                "filter {}: selectivity must lie in [0, 1]",
                self.id
            )));
        }
        Ok(())
    }

    /// `cost / selectivity`, infinite when the filter removes nothing.
    pub fn ratio(&self) -> f64 {
        if self.selectivity > 0.0 {
            self.cost / self.selectivity
        } else {
            f64::INFINITY
        }
    }
}

/// `c1 + (1 - s1) c2 + (1 - s1)(1 - s2) c3 + ...`; zero for an empty pipeline.
pub fn expected_cost(pipeline: &[FilterProfile]) -> f64 {
    let mut survival = 1.0;
    let mut total = 0.0;
    for f in pipeline {
        total += survival * f.cost;
        survival *= 1.0 - f.selectivity;
    }
    total
}

/// Compares ids as strings, with runs of digits compared by value.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        match (a.chars().next(), b.chars().next()) {
            (None, None) => return Ordering::Equal,
            (None, _) => return Ordering::Less,
            (_, None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.len() - a.trim_start_matches(|c: char| c.is_ascii_digit()).len();
                let db = b.len() - b.trim_start_matches(|c: char| c.is_ascii_digit()).len();
                let (na, nb) = (a[..da].trim_start_matches('0'), b[..db].trim_start_matches('0'));
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(&y);
                }
                a = &a[x.len_utf8()..];
                b = &b[y.len_utf8()..];
            }
        }
    }
}

/// Sorts by ascending `c/s`; filters with `s = 0` go last by ascending cost.
/// Ties go to the lower id.
pub fn optimal_order(filters: &[FilterProfile]) -> Vec<FilterProfile> {
    let mut out = filters.to_vec();
    out.sort_by(|a, b| {
        let primary = match (a.selectivity > 0.0, b.selectivity > 0.0) {
            (true, true) => a.ratio().total_cmp(&b.ratio()),
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => a.cost.total_cmp(&b.cost),
        };
        primary.then_with(|| natural_cmp(&a.id, &b.id))
    });
    out
}

/// Records that pass every filter, given per-filter pass predicates.
/// The result does not depend on the order of `filters`.
pub fn surviving<T, F>(records: &[T], filters: &[F]) -> Vec<usize>
where
    F: Fn(&T) -> bool,
{
    (0..records.len())
        .filter(|&i| filters.iter().all(|f| f(&records[i])))
        .collect()
}

#[derive(Debug, Deserialize)]
struct FilterRow {
    id: String,
    cost: f64,
    selectivity: f64,
}

pub fn read_filters<R: Read>(reader: R, path: &Path) -> Result<Vec<FilterProfile>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<FilterRow>().enumerate() {
        let row = row.map_err(|e| Error::BadValue {
            path: path.to_path_buf(),
            line: line as u64 + 2,
            message: e.to_string(),
        })?;
        let f = FilterProfile {
            id: row.id,
            cost: row.cost,
            selectivity: row.selectivity,
        };
        f.validate().map_err(|e| Error::BadValue {
            path: path.to_path_buf(),
            line: line as u64 + 2,
            message: e.to_string(),
        })?;
        out.push(f);
    }
    if out.is_empty() {
        return Err(Error::BadValue {
            path: path.to_path_buf(),
            line: 1,
            message: "no filters".into(),
        });
    }
    Ok(out)
}

pub fn load_filters(path: &Path) -> Result<Vec<FilterProfile>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_filters(file, path)
}

pub const ORDER_COLUMNS: [&str; 8] = [
    "position",
    "id",
    "cost",
    "selectivity",
    "ratio",
    "survival_in",
    "expected_stage_cost",
    "cumulative_cost",
];

/// Writes a pipeline with per-stage survival and cost; the last row's cumulative cost is the total.
pub fn write_order<W: Write>(pipeline: &[FilterProfile], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ORDER_COLUMNS)?;
    let mut survival = 1.0;
    let mut cumulative = 0.0;
    for (pos, f) in pipeline.iter().enumerate() {
        let stage = survival * f.cost;
        cumulative += stage;
        let ratio = if f.selectivity > 0.0 {
            f.ratio().to_string()
        } else {
            "inf".to_string()
        };
        w.write_record([
            (pos + 1).to_string(),
            f.id.clone(),
            f.cost.to_string(),
            f.selectivity.to_string(),
            ratio,
            survival.to_string(),
            stage.to_string(),
            cumulative.to_string(),
        ])?;
        survival *= 1.0 - f.selectivity;
    }
    w.flush().map_err(|e| Error::io("<order>", e))?;
    Ok(())
}
