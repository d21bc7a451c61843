//! Approximate functional-equivalence classes: DBSCAN over objective values
//! and per-class niche elites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label for points that belong to no cluster.
pub const NOISE: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConfig {
    /// Two values are neighbors when `|a - b| < epsilon`.
    pub epsilon: f64,
    pub min_pts: usize,
    /// Generations between class detections.
    pub tau: usize,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            epsilon: 0.1,
            min_pts: 3,
            tau: 10,
        }
    }
}

impl EquivalenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.min_pts < 2 {
            return Err(Error::Config("min_pts must be at least 2".into()));
        }
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        Ok(())
    }
}

/// DBSCAN on the real line with distance `|a - b|` and strict radius `epsilon`.
///
/// A point is core when at least `min_pts` values (itself included) lie
/// strictly within `epsilon`. Clusters are chains of core points; a non-core
/// point within range of a core point joins the cluster of its nearest core
/// point, the lower-valued core winning exact distance ties. Labels start at
/// 1 and are numbered by the smallest input index in each cluster; noise is
/// [`NOISE`].
pub fn dbscan_1d(values: &[f64], epsilon: f64, min_pts: usize) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    // neighbor counts with a sliding window over sorted values
    let mut core = vec![false; n];
    let (mut lo, mut hi) = (0usize, 0usize);
    for k in 0..n {
        while sorted[k] - sorted[lo] >= epsilon {
            lo += 1;
        }
        hi = hi.max(k);
        while hi + 1 < n && sorted[hi + 1] - sorted[k] < epsilon {
            hi += 1;
        }
        core[k] = hi - lo + 1 >= min_pts;
    }

    // chain consecutive core points
    let mut cluster = vec![None; n];
    let mut clusters = 0usize;
    let mut prev_core: Option<usize> = None;
    for k in (0..n).filter(|&k| core[k]) {
        cluster[k] = match prev_core {
            Some(p) if sorted[k] - sorted[p] < epsilon => cluster[p],
            _ => {
                clusters += 1;
                Some(clusters - 1)
            }
        };
        prev_core = Some(k);
    }
    if clusters == 0 {
        return vec![NOISE; n];
    }

    // border points: nearest core on either side
    let mut left_core = vec![None; n];
    let mut last = None;
    for k in 0..n {
        if core[k] {
            last = Some(k);
        }
        left_core[k] = last;
    }
    let mut right_core = vec![None; n];
    last = None;
    for k in (0..n).rev() {
        if core[k] {
            last = Some(k);
        }
        right_core[k] = last;
    }
    for k in (0..n).filter(|&k| !core[k]) {
        let left = left_core[k].map(|c| (sorted[k] - sorted[c], c));
        let right = right_core[k].map(|c| (sorted[c] - sorted[k], c));
        let nearest = match (left, right) {
            (Some(l), Some(r)) => Some(if r.0 < l.0 { r } else { l }),
            (l, r) => l.or(r),
        };
        if let Some((d, c)) = nearest {
            if d < epsilon {
                cluster[k] = cluster[c];
            }
        }
    }

    // renumber by smallest input index among members
    let mut first_index = vec![usize::MAX; clusters];
    for k in 0..n {
        if let Some(c) = cluster[k] {
            first_index[c] = first_index[c].min(order[k]);
        }
    }
    let mut ids: Vec<usize> = (0..clusters).collect();
    ids.sort_by_key(|&c| first_index[c]);
    let mut label = vec![0; clusters];
    for (rank, c) in ids.into_iter().enumerate() {
        label[c] = rank + 1;
    }
    let mut labels = vec![NOISE; n];
    for k in 0..n {
        if let Some(c) = cluster[k] {
            labels[order[k]] = label[c];
        }
    }
    labels
}

/// Detected classes over a population snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceClasses {
    /// Per individual; [`NOISE`] for noise and for excluded individuals.
    pub labels: Vec<usize>,
    /// Member indices of class `k` at position `k - 1`.
    pub classes: Vec<Vec<usize>>,
    /// One individual index per class with at least `min_pts` members.
    pub elites: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class_id: usize,
    pub size: usize,
    pub centroid: f64,
    pub elite: usize,
}

impl EquivalenceClasses {
    pub fn summaries(&self, fitness: &[f64]) -> Vec<ClassSummary> {
        self.classes
            .iter()
            .enumerate()
            .filter_map(|(k, members)| {
                let elite = self.elites.iter().find(|&&e| members.contains(&e))?;
                Some(ClassSummary {
                    class_id: k + 1,
                    size: members.len(),
                    centroid: members.iter().map(|&i| fitness[i]).sum::<f64>() / members.len() as f64,
                    elite: *elite,
                })
            })
            .collect()
    }
}

/// Clusters the valid individuals' fitness values and picks one elite per class.
///
/// Returns `None` when fewer than `min_pts` individuals are valid, in which
/// case detection is skipped and callers keep their previous elites.
pub fn detect_classes(fitness: &[f64], valid: &[bool], config: &EquivalenceConfig) -> Option<EquivalenceClasses> {
    assert_eq!(fitness.len(), valid.len());
    let members: Vec<usize> = (0..fitness.len()).filter(|&i| valid[i]).collect();
    if members.len() < config.min_pts {
        return None;
    }
    let values: Vec<f64> = members.iter().map(|&i| fitness[i]).collect();
    let sub_labels = dbscan_1d(&values, config.epsilon, config.min_pts);
    let n_classes = sub_labels.iter().copied().max().unwrap_or(0);
    let mut labels = vec![NOISE; fitness.len()];
    let mut classes = vec![Vec::new(); n_classes];
    for (&i, &l) in members.iter().zip(&sub_labels) {
        labels[i] = l;
        if l != NOISE {
            classes[l - 1].push(i);
        }
    }
    let elites = classes
        .iter()
        .filter(|c| c.len() >= config.min_pts)
        .map(|c| {
            // members are in increasing index order, so the first maximum is the lowest index
            let mut best = c[0];
            for &i in &c[1..] {
                if fitness[i] > fitness[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    Some(EquivalenceClasses {
        labels,
        classes,
        elites,
    })
}
