//! Exhaustive enumeration of the hypercube and greedy forward selection.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{AtomIndex, Evaluation, Objective, SubjectSet};
use crate::rule::{BitRule, RuleUniverse};
use crate::run::{RunRecord, TraceRow};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 20;

/// Outcome of enumerating every non-identity rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    /// `None` when no rule is feasible.
    pub best: Option<String>,
    pub best_fitness: f64,
    pub subgroup_size: usize,
    pub subgroup_digest: Option<String>,
    pub evaluated: u64,
    pub n_atoms: usize,
}

impl ExhaustiveResult {
    pub fn best_rule(&self) -> Option<BitRule> {
        self.best.as_deref().and_then(BitRule::parse_bits)
    }

    pub fn is_feasible(&self) -> bool {
        self.best.is_some()
    }
}

/// Lexicographic comparison of two masks with atom 0 most significant, 0 < 1.
fn mask_lex_cmp(a: u64, b: u64) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    if a & (diff & diff.wrapping_neg()) == 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    mask: u64,
    eval: Evaluation,
}

/// `Less` means `a` is preferred: higher fitness, then fewer atoms, then lexicographically smaller.
fn preference(a: &Candidate, b: &Candidate) -> Ordering {
    b.eval
        .fitness
        .total_cmp(&a.eval.fitness)
        .then(a.mask.count_ones().cmp(&b.mask.count_ones()))
        .then(mask_lex_cmp(a.mask, b.mask))
}

fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if preference(&y, &x) == Ordering::Less { y } else { x }),
        (x, y) => x.or(y),
    }
}

const CHUNK: u64 = 1 << 12;

/// Evaluates all `2^n - 1` non-identity rules and returns the best feasible one.
pub fn exhaustive_search(objective: &Objective<'_>, universe: &RuleUniverse, cap: usize) -> Result<ExhaustiveResult> {
    let n = universe.len();
    if n > cap || n > 63 {
        return Err(Error::ExhaustiveCap { n, cap: cap.min(63) });
    }
    let index = AtomIndex::new(universe, objective.cohort())?;
    let total = 1u64 << n;
    let chunks = total.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * CHUNK).max(1);
            let hi = ((c + 1) * CHUNK).min(total);
            let mut best: Option<Candidate> = None;
            for mask in lo..hi {
                let eval = objective.evaluate_uncached(&index.subjects_of_mask(mask));
                if eval.feasible {
                    best = pick(best, Some(Candidate { mask, eval }));
                }
            }
            best
        })
        .reduce(|| None, pick);
    Ok(match best {
        Some(c) => ExhaustiveResult {
            best: Some(BitRule::from_mask(c.mask, n).to_bit_string()),
            best_fitness: c.eval.fitness,
            subgroup_size: c.eval.subgroup_size,
            subgroup_digest: Some(index.subjects_of_mask(c.mask).digest()),
            evaluated: total - 1,
            n_atoms: n,
        },
        None => ExhaustiveResult {
            best: None,
            best_fitness: objective.config().infeasible_fitness,
            subgroup_size: 0,
            subgroup_digest: None,
            evaluated: total - 1,
            n_atoms: n,
        },
    })
}

/// The exhaustive result in the common run-record shape.
pub fn exhaustive_as_record(
    result: &ExhaustiveResult,
    universe: &RuleUniverse,
    cap: usize,
    wall_s: f64,
) -> Result<RunRecord> {
    let rule = result.best_rule().unwrap_or_else(|| BitRule::zeros(universe.len()));
    let mut flags = Vec::new();
    if !result.is_feasible() {
        flags.push(NO_FEASIBLE_RULE.to_string());
    }
    Ok(RunRecord {
        method: "exhaustive".into(),
        seed: 0,
        config: serde_json::json!({ "cap": cap }),
        best_fitness: result.best_fitness,
        feasible: result.is_feasible(),
        subgroup_size: result.subgroup_size,
        rule_text: universe.decode(&rule)?,
        rule_bits: rule.to_bit_string(),
        subgroup_digest: result.subgroup_digest.clone().unwrap_or_default(),
        evaluations: result.evaluated,
        wall_s,
        trace: Vec::new(),
        flags,
    })
}

pub fn exhaustive_record(objective: &Objective<'_>, universe: &RuleUniverse, cap: usize) -> Result<RunRecord> {
    let start = Instant::now();
    let result = exhaustive_search(objective, universe, cap)?;
    exhaustive_as_record(&result, universe, cap, start.elapsed().as_secs_f64())
}

pub const NO_FEASIBLE_RULE: &str = "no-feasible-rule";
pub const INFEASIBLE_START: &str = "infeasible-start";

/// Forward selection from the identity rule.
///
/// The first step takes the best feasible single atom; later steps add the
/// atom with the highest strictly improving feasible fitness. Ties go to the
/// lowest atom id. If no single atom is feasible the identity's own
/// evaluation is returned with the `infeasible-start` flag.
pub fn greedy_search(objective: &Objective<'_>, universe: &RuleUniverse) -> Result<RunRecord> {
    let start = Instant::now();
    let n = universe.len();
    let index = AtomIndex::new(universe, objective.cohort())?;
    let mut rule = BitRule::zeros(n);
    let mut set = SubjectSet::full(objective.cohort().subjects().len());
    let mut current: Option<Evaluation> = None;
    let mut trace = Vec::new();
    let mut evaluations = 0u64;

    loop {
        let mut step: Option<(usize, Evaluation, SubjectSet)> = None;
        for atom in (0..n).filter(|&a| !rule.get(a)) {
            let mut s = set.clone();
            s.intersect_with(index.atom_subjects(atom));
            let e = objective.evaluate_set(&s);
            evaluations += 1;
            if !e.feasible || current.is_some_and(|c| e.fitness <= c.fitness) {
                continue;
            }
            if step.as_ref().is_none_or(|(_, b, _)| e.fitness > b.fitness) {
                step = Some((atom, e, s));
            }
        }
        let Some((atom, e, s)) = step else { break };
        rule.set(atom, true);
        set = s;
        current = Some(e);
        trace.push(TraceRow::Step {
            step: trace.len() + 1,
            atom: Some(atom),
            fitness: e.fitness,
            subgroup_size: e.subgroup_size,
        });
    }

    let mut flags = Vec::new();
    let eval = match current {
        Some(e) => e,
        None => {
            flags.push(INFEASIBLE_START.to_string());
            let e = objective.evaluate_set(&set);
            evaluations += 1;
            trace.push(TraceRow::Step {
                step: 0,
                atom: None,
                fitness: e.fitness,
                subgroup_size: e.subgroup_size,
            });
            e
        }
    };
    Ok(RunRecord {
        method: "greedy".into(),
        seed: 0,
        config: serde_json::json!({}),
        best_fitness: eval.fitness,
        feasible: eval.feasible && current.is_some(),
        subgroup_size: eval.subgroup_size,
        rule_text: universe.decode(&rule)?,
        rule_bits: rule.to_bit_string(),
        subgroup_digest: set.digest(),
        evaluations,
        wall_s: start.elapsed().as_secs_f64(),
        trace,
        flags,
    })
}
