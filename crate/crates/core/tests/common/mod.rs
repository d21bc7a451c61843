#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// Quadratic-time DBSCAN written directly from the definitions: core points have
/// at least `min_pts` values (self included) strictly within `eps`, cores within
/// `eps` of each other share a cluster, and a non-core point joins the cluster of
/// its nearest core within `eps`, the lower-valued core winning ties.
pub fn reference_dbscan(v: &[f64], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = v.len();
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| (v[i] - v[j]).abs() < eps).count() >= min_pts)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && (v[i] - v[j]).abs() < eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n)
        .map(|i| {
            if core[i] {
                return Some(find(&mut parent, i));
            }
            let mut best: Option<usize> = None;
            for j in (0..n).filter(|&j| core[j] && (v[i] - v[j]).abs() < eps) {
                best = match best {
                    None => Some(j),
                    Some(b) => {
                        let (dj, db) = ((v[i] - v[j]).abs(), (v[i] - v[b]).abs());
                        if dj < db || (dj == db && v[j] < v[b]) {
                            Some(j)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            best.map(|b| find(&mut parent, b))
        })
        .collect()
}

pub fn partition<T: Ord + Copy>(labels: &[T], noise: impl Fn(T) -> bool) -> BTreeSet<BTreeSet<usize>> {
    let mut groups: BTreeMap<T, BTreeSet<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        if !noise(l) {
            groups.entry(l).or_default().insert(i);
        }
    }
    groups.into_values().collect()
}

/// Partition of a reference labelling, noise dropped.
pub fn reference_partition(labels: &[Option<usize>]) -> BTreeSet<BTreeSet<usize>> {
    partition(
        &labels.iter().map(|o| o.unwrap_or(usize::MAX)).collect::<Vec<_>>(),
        |l| l == usize::MAX,
    )
}
