//! Rule application (the action of rules on a cohort) and the fold-change
//! objective with its minimum-subgroup-size constraint.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{Cohort, Record, Schema};
use crate::error::{Error, Result};
use crate::rule::{BitRule, Predicate, RuleUniverse};

pub const DEFAULT_INFEASIBLE_FITNESS: f64 = -1.0e9;

/// Bitset over a cohort's non-HV records, in [`Cohort::subjects`] order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SubjectSet {
    words: Vec<u64>,
    len: usize,
}

impl SubjectSet {
    pub fn full(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        SubjectSet { words, len }
    }

    pub fn empty(len: usize) -> Self {
        SubjectSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut s = Self::empty(len);
        for i in 0..len {
            if f(i) {
                s.words[i / 64] |= 1 << (i % 64);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersect_with(&mut self, other: &SubjectSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn is_subset_of(&self, other: &SubjectSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }

    /// Short stable fingerprint, used to count distinct induced subgroups.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len as u64).to_le_bytes());
        for w in &self.words {
            h.update(w.to_le_bytes());
        }
        hex::encode(&h.finalize()[..12])
    }
}

/// An atom bound to field positions of a concrete schema.
#[derive(Debug, Clone)]
enum BoundAtom {
    Level { field: usize, level: usize },
    Le { field: usize, threshold: f64 },
    Gt { field: usize, threshold: f64 },
}

impl BoundAtom {
    fn bind(field: &str, predicate: &Predicate, schema: &Schema) -> Result<Self> {
        match predicate {
            Predicate::CategoryEq(level) => {
                let (fi, f) = schema
                    .categorical
                    .iter()
                    .enumerate()
                    .find(|(_, f)| f.name == field)
                    .ok_or_else(|| Error::SchemaMismatch(format!("no categorical field `{field}`")))?;
                let level = f
                    .levels
                    .iter()
                    .position(|l| l == level)
                    .ok_or_else(|| Error::SchemaMismatch(format!("field `{field}` has no level `{level}`")))?;
                Ok(BoundAtom::Level { field: fi, level })
            }
            Predicate::NumericLe(t) | Predicate::NumericGt(t) => {
                let fi = schema
                    .numeric
                    .iter()
                    .position(|f| f.name == field)
                    .ok_or_else(|| Error::SchemaMismatch(format!("no numeric field `{field}`")))?;
                Ok(if matches!(predicate, Predicate::NumericLe(_)) {
                    BoundAtom::Le {
                        field: fi,
                        threshold: *t,
                    }
                } else {
                    BoundAtom::Gt {
                        field: fi,
                        threshold: *t,
                    }
                })
            }
        }
    }

    /// Missing numeric values fail every numeric predicate.
    fn matches(&self, r: &Record) -> bool {
        match *self {
            BoundAtom::Level { field, level } => r.categorical[field] == level,
            BoundAtom::Le { field, threshold } => r.numeric[field].is_some_and(|v| v <= threshold),
            BoundAtom::Gt { field, threshold } => r.numeric[field].is_some_and(|v| v > threshold),
        }
    }
}

/// Per-atom subject sets for one (universe, cohort) pair. Applying a bit
/// rule is then an intersection of its atoms' sets.
#[derive(Debug, Clone)]
pub struct AtomIndex {
    masks: Vec<SubjectSet>,
    subjects: usize,
}

impl AtomIndex {
    pub fn new(universe: &RuleUniverse, cohort: &Cohort) -> Result<Self> {
        let subjects = cohort.subjects();
        let masks = universe
            .atoms()
            .iter()
            .map(|a| {
                let bound = BoundAtom::bind(&a.field, &a.predicate, cohort.schema())?;
                Ok(SubjectSet::from_fn(subjects.len(), |i| {
                    bound.matches(&cohort.records()[subjects[i]])
                }))
            })
            .collect::<Result<_>>()?;
        Ok(AtomIndex {
            masks,
            subjects: subjects.len(),
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.masks.len()
    }

    pub fn atom_subjects(&self, id: usize) -> &SubjectSet {
        &self.masks[id]
    }

    pub fn subjects(&self, rule: &BitRule) -> Result<SubjectSet> {
        if rule.len() != self.masks.len() {
            return Err(Error::UniverseMismatch {
                expected: self.masks.len(),
                found: rule.len(),
            });
        }
        let mut set = SubjectSet::full(self.subjects);
        for i in rule.ones_iter() {
            set.intersect_with(&self.masks[i]);
        }
        Ok(set)
    }

    /// Subject set of the rule whose atoms are the set bits of `mask` (n <= 64).
    pub(crate) fn subjects_of_mask(&self, mut mask: u64) -> SubjectSet {
        let mut set = SubjectSet::full(self.subjects);
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            set.intersect_with(&self.masks[i]);
            mask &= mask - 1;
        }
        set
    }
}

/// Record indices (into the cohort) selected by `rule`; HV records are never selected.
pub fn apply_rule(universe: &RuleUniverse, rule: &BitRule, cohort: &Cohort) -> Result<Vec<usize>> {
    let set = AtomIndex::new(universe, cohort)?.subjects(rule)?;
    Ok(subject_records(&set, cohort))
}

pub fn subject_records(set: &SubjectSet, cohort: &Cohort) -> Vec<usize> {
    set.iter_ones().map(|i| cohort.subjects()[i]).collect()
}

/// Mean biomarker of `subgroup` (record indices) over the HV mean. `None` for empty subgroups.
pub fn fold_change(subgroup: &[usize], cohort: &Cohort) -> Option<f64> {
    if subgroup.is_empty() {
        return None;
    }
    let sum: f64 = subgroup.iter().map(|&i| cohort.records()[i].biomarker).sum();
    Some(sum / subgroup.len() as f64 / cohort.hv_mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub min_subgroup_size: usize,
    pub infeasible_fitness: f64,
}

impl ObjectiveConfig {
    pub fn new(min_subgroup_size: usize) -> Result<Self> {
        let c = ObjectiveConfig {
            min_subgroup_size,
            infeasible_fitness: DEFAULT_INFEASIBLE_FITNESS,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_subgroup_size == 0 {
            return Err(Error::Config("min_subgroup_size must be at least 1".into()));
        }
        if !self.infeasible_fitness.is_finite() {
            return Err(Error::Config("infeasible fitness must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub subgroup_size: usize,
    pub feasible: bool,
}

/// Fold-change objective over one cohort with a memo keyed by induced subgroup.
///
/// The memo is shared safely between threads; since the value is a pure
/// function of the subgroup, concurrent use gives the same results as
/// serialized use.
#[derive(Debug)]
pub struct Objective<'a> {
    cohort: &'a Cohort,
    config: ObjectiveConfig,
    cache: Mutex<HashMap<SubjectSet, Evaluation>>,
}

impl<'a> Objective<'a> {
    pub fn new(cohort: &'a Cohort, config: ObjectiveConfig) -> Result<Self> {
        config.validate()?;
        Ok(Objective {
            cohort,
            config,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn cohort(&self) -> &'a Cohort {
        self.cohort
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }

    /// Evaluation without touching the memo.
    pub fn evaluate_uncached(&self, set: &SubjectSet) -> Evaluation {
        let size = set.count();
        if size < self.config.min_subgroup_size || size == 0 {
            return Evaluation {
                fitness: self.config.infeasible_fitness,
                subgroup_size: size,
                feasible: false,
            };
        }
        let subjects = self.cohort.subjects();
        let records = self.cohort.records();
        let sum: f64 = set.iter_ones().map(|i| records[subjects[i]].biomarker).sum();
        Evaluation {
            fitness: sum / size as f64 / self.cohort.hv_mean(),
            subgroup_size: size,
            feasible: true,
        }
    }

    pub fn evaluate_set(&self, set: &SubjectSet) -> Evaluation {
        if let Some(e) = self.cache.lock().expect("cache poisoned").get(set) {
            return *e;
        }
        let e = self.evaluate_uncached(set);
        self.cache.lock().expect("cache poisoned").insert(set.clone(), e);
        e
    }

    pub fn evaluate_rule(&self, index: &AtomIndex, rule: &BitRule) -> Result<Evaluation> {
        Ok(self.evaluate_set(&index.subjects(rule)?))
    }
}

/// One-shot evaluation of a bit rule.
pub fn evaluate(
    universe: &RuleUniverse,
    rule: &BitRule,
    cohort: &Cohort,
    config: ObjectiveConfig,
) -> Result<Evaluation> {
    let index = AtomIndex::new(universe, cohort)?;
    let objective = Objective::new(cohort, config)?;
    objective.evaluate_rule(&index, rule)
}
