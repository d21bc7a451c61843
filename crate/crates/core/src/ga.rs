//! Mixed-type chromosomes and the generational loop, standard or
//! quotient-aware.
//!
//! A numeric field is encoded by three genes (active, operator, threshold)
//! and a categorical field with `K` levels by `1 + K` genes (active, level
//! mask). In quotient-aware mode the loop periodically clusters the
//! population's fitness values and carries the best individual of each
//! class into every following generation.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, Schema};
use crate::error::{Error, Result};
use crate::objective::{AtomIndex, Evaluation, Objective, SubjectSet};
use crate::quotient::{detect_classes, ClassSummary, EquivalenceConfig};
use crate::rule::{BitRule, RuleUniverse, IDENTITY_TEXT};
use crate::run::{RunRecord, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericGene {
    pub active: bool,
    /// `false` is `<=`, `true` is `>`.
    pub greater: bool,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalGene {
    pub active: bool,
    pub levels: Vec<bool>,
}

impl CategoricalGene {
    /// Active with at least one selected level.
    fn effective(&self) -> bool {
        self.active && self.levels.iter().any(|&b| b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub categorical: Vec<CategoricalGene>,
    pub numeric: Vec<NumericGene>,
}

impl Chromosome {
    pub fn inactive(schema: &Schema) -> Self {
        Chromosome {
            categorical: schema
                .categorical
                .iter()
                .map(|f| CategoricalGene {
                    active: false,
                    levels: vec![false; f.levels.len()],
                })
                .collect(),
            numeric: schema
                .numeric
                .iter()
                .map(|f| NumericGene {
                    active: false,
                    greater: false,
                    threshold: f.min,
                })
                .collect(),
        }
    }

    pub fn random<R: Rng>(schema: &Schema, rng: &mut R) -> Self {
        let categorical = schema
            .categorical
            .iter()
            .map(|f| CategoricalGene {
                active: rng.random_bool(0.5),
                levels: (0..f.levels.len()).map(|_| rng.random_bool(0.5)).collect(),
            })
            .collect();
        let numeric = schema
            .numeric
            .iter()
            .map(|f| NumericGene {
                active: rng.random_bool(0.5),
                greater: rng.random_bool(0.5),
                threshold: if f.range() > 0.0 {
                    rng.random_range(f.min..=f.max)
                } else {
                    f.min
                },
            })
            .collect();
        Chromosome { categorical, numeric }
    }

    pub fn gene_count(&self) -> usize {
        self.categorical.iter().map(|c| 1 + c.levels.len()).sum::<usize>() + 3 * self.numeric.len()
    }

    fn blocks(&self) -> usize {
        self.categorical.len() + self.numeric.len()
    }

    pub fn conforms(&self, schema: &Schema) -> bool {
        self.categorical.len() == schema.categorical.len()
            && self.numeric.len() == schema.numeric.len()
            && self
                .categorical
                .iter()
                .zip(&schema.categorical)
                .all(|(g, f)| g.levels.len() == f.levels.len())
            && self
                .numeric
                .iter()
                .zip(&schema.numeric)
                .all(|(g, f)| g.threshold >= f.min && g.threshold <= f.max)
    }

    /// No block constrains anything.
    pub fn is_identity(&self) -> bool {
        !self.categorical.iter().any(CategoricalGene::effective) && !self.numeric.iter().any(|g| g.active)
    }

    /// Projection onto the atomic universe: each selected level of an active
    /// categorical block sets its level atom; an active numeric block sets
    /// the grid atom with the same operator and the nearest threshold.
    pub fn to_atomic_vector(&self, schema: &Schema, universe: &RuleUniverse) -> BitRule {
        let mut bits = BitRule::zeros(universe.len());
        for (gene, field) in self.categorical.iter().zip(&schema.categorical) {
            if !gene.effective() {
                continue;
            }
            for (selected, level) in gene.levels.iter().zip(&field.levels) {
                if *selected {
                    if let Some(id) = universe.category_atom(&field.name, level) {
                        bits.set(id, true);
                    }
                }
            }
        }
        for (gene, field) in self.numeric.iter().zip(&schema.numeric) {
            if !gene.active {
                continue;
            }
            if let Some(id) = nearest_grid_atom(universe, &field.name, gene.greater, gene.threshold) {
                bits.set(id, true);
            }
        }
        bits
    }

    /// Executes the decoded rule: conjunction across active fields, a
    /// disjunction of the selected levels within a categorical field.
    pub fn subjects(&self, cohort: &Cohort) -> SubjectSet {
        let records = cohort.records();
        let subjects = cohort.subjects();
        SubjectSet::from_fn(subjects.len(), |i| self.selects(&records[subjects[i]]))
    }

    fn selects(&self, r: &crate::cohort::Record) -> bool {
        for (gene, &level) in self.categorical.iter().zip(&r.categorical) {
            if gene.effective() && !gene.levels[level] {
                return false;
            }
        }
        for (gene, value) in self.numeric.iter().zip(&r.numeric) {
            if !gene.active {
                continue;
            }
            let pass = match value {
                None => false,
                Some(v) if gene.greater => *v > gene.threshold,
                Some(v) => *v <= gene.threshold,
            };
            if !pass {
                return false;
            }
        }
        true
    }

    pub fn describe(&self, schema: &Schema) -> String {
        let mut parts = Vec::new();
        for (gene, field) in self.categorical.iter().zip(&schema.categorical) {
            if !gene.effective() {
                continue;
            }
            let chosen: Vec<&str> = gene
                .levels
                .iter()
                .zip(&field.levels)
                .filter(|(b, _)| **b)
                .map(|(_, l)| l.as_str())
                .collect();
            if chosen.len() == 1 {
                parts.push(format!("{} = {}", field.name, chosen[0]));
            } else {
                parts.push(format!("{} in {{{}}}", field.name, chosen.join(", ")));
            }
        }
        for (gene, field) in self.numeric.iter().zip(&schema.numeric) {
            if gene.active {
                let op = if gene.greater { ">" } else { "<=" };
                parts.push(format!("{} {} {}", field.name, op, gene.threshold));
            }
        }
        if parts.is_empty() {
            IDENTITY_TEXT.to_string()
        } else {
            parts.join(" AND ")
        }
    }

    /// Single-point crossover at a field-block boundary: the children swap
    /// every block from `cut` onward.
    pub fn crossover(a: &Chromosome, b: &Chromosome, cut: usize) -> (Chromosome, Chromosome) {
        let (mut x, mut y) = (a.clone(), b.clone());
        let nc = a.categorical.len();
        for block in cut..a.blocks() {
            if block < nc {
                std::mem::swap(&mut x.categorical[block], &mut y.categorical[block]);
            } else {
                std::mem::swap(&mut x.numeric[block - nc], &mut y.numeric[block - nc]);
            }
        }
        (x, y)
    }

    /// Per-gene mutation: bits flip, thresholds take a clamped Gaussian step
    /// with standard deviation 10% of the field range.
    pub fn mutate<R: Rng>(&mut self, schema: &Schema, rate: f64, rng: &mut R) {
        for gene in &mut self.categorical {
            if rng.random_bool(rate) {
                gene.active = !gene.active;
            }
            for level in &mut gene.levels {
                if rng.random_bool(rate) {
                    *level = !*level;
                }
            }
        }
        for (gene, field) in self.numeric.iter_mut().zip(&schema.numeric) {
            if rng.random_bool(rate) {
                gene.active = !gene.active;
            }
            if rng.random_bool(rate) {
                gene.greater = !gene.greater;
            }
            if rng.random_bool(rate) && field.range() > 0.0 {
                let step = Normal::new(0.0, 0.1 * field.range()).expect("positive sigma");
                gene.threshold = (gene.threshold + step.sample(rng)).clamp(field.min, field.max);
            }
        }
    }
}

/// Grid atom on `field` with the given operator whose threshold is nearest
/// to `threshold`; the lower threshold wins ties.
pub fn nearest_grid_atom(universe: &RuleUniverse, field: &str, greater: bool, threshold: f64) -> Option<usize> {
    let mut best: Option<(f64, f64, usize)> = None;
    for (id, t) in universe.numeric_atoms(field, greater) {
        let d = (t - threshold).abs();
        let better = match best {
            None => true,
            Some((bd, bt, _)) => d < bd || (d == bd && t < bt),
        };
        if better {
            best = Some((d, t, id));
        }
    }
    best.map(|(_, _, id)| id)
}

/// How a chromosome's fitness is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaEvaluation {
    /// The decoded rule with continuous thresholds and within-field level disjunction.
    Decoded,
    /// The chromosome's atomic vector, evaluated as a pure conjunction of atoms.
    Atomic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub quotient_aware: bool,
    pub equivalence: EquivalenceConfig,
    pub tournament_size: usize,
    pub evaluation: GaEvaluation,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 60,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            quotient_aware: false,
            equivalence: EquivalenceConfig::default(),
            tournament_size: 3,
            evaluation: GaEvaluation::Decoded,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config("population size must be at least 2".into()));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        for (name, p) in [("crossover", self.crossover_prob), ("mutation", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} probability must lie in [0, 1]")));
            }
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament size must be at least 1".into()));
        }
        self.equivalence.validate()
    }

    pub fn method_name(&self) -> &'static str {
        if self.quotient_aware {
            "ga-quotient"
        } else {
            "ga"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub atoms: BitRule,
    pub eval: Evaluation,
    pub subjects: SubjectSet,
}

/// Stepwise driver for one GA run.
pub struct GaEngine<'o, 'c> {
    objective: &'o Objective<'c>,
    universe: &'o RuleUniverse,
    index: Option<AtomIndex>,
    config: GaConfig,
    rng: ChaCha8Rng,
    population: Vec<Individual>,
    elites: Vec<Individual>,
    generation: usize,
    best: Individual,
    trace: Vec<TraceRow>,
    class_log: Vec<(usize, Vec<ClassSummary>)>,
    evaluations: u64,
}

impl<'o, 'c> GaEngine<'o, 'c> {
    /// Builds and evaluates the random initial population.
    pub fn new(objective: &'o Objective<'c>, universe: &'o RuleUniverse, config: GaConfig) -> Result<Self> {
        config.validate()?;
        let cohort = objective.cohort();
        let index = match config.evaluation {
            GaEvaluation::Atomic => Some(AtomIndex::new(universe, cohort)?),
            GaEvaluation::Decoded => None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let schema = cohort.schema();
        let chromosomes: Vec<Chromosome> = (0..config.population_size)
            .map(|_| Chromosome::random(schema, &mut rng))
            .collect();
        let placeholder = Individual {
            chromosome: Chromosome::inactive(schema),
            atoms: BitRule::zeros(universe.len()),
            eval: Evaluation {
                fitness: objective.config().infeasible_fitness,
                subgroup_size: 0,
                feasible: false,
            },
            subjects: SubjectSet::empty(cohort.subjects().len()),
        };
        let mut engine = GaEngine {
            objective,
            universe,
            index,
            config,
            rng,
            population: Vec::new(),
            elites: Vec::new(),
            generation: 0,
            best: placeholder,
            trace: Vec::new(),
            class_log: Vec::new(),
            evaluations: 0,
        };
        let population: Vec<Individual> = chromosomes.into_iter().map(|c| engine.evaluate(c)).collect();
        engine.best = population[0].clone();
        engine.population = population;
        engine.track(false, None);
        Ok(engine)
    }

    fn evaluate(&mut self, chromosome: Chromosome) -> Individual {
        let schema = self.objective.cohort().schema();
        let atoms = chromosome.to_atomic_vector(schema, self.universe);
        let subjects = match &self.index {
            Some(index) => index.subjects(&atoms).expect("index built from this universe"),
            None => chromosome.subjects(self.objective.cohort()),
        };
        let eval = self.objective.evaluate_set(&subjects);
        self.evaluations += 1;
        Individual {
            chromosome,
            atoms,
            eval,
            subjects,
        }
    }

    fn track(&mut self, detected: bool, class_count: Option<usize>) {
        let mut gen_best = 0;
        for (i, ind) in self.population.iter().enumerate() {
            if ind.eval.fitness > self.population[gen_best].eval.fitness {
                gen_best = i;
            }
        }
        if self.generation == 0 || self.population[gen_best].eval.fitness > self.best.eval.fitness {
            self.best = self.population[gen_best].clone();
        }
        let feasible: Vec<f64> = self
            .population
            .iter()
            .filter(|i| i.eval.feasible)
            .map(|i| i.eval.fitness)
            .collect();
        let mean_fitness = (!feasible.is_empty()).then(|| feasible.iter().sum::<f64>() / feasible.len() as f64);
        self.trace.push(TraceRow::Generation {
            generation: self.generation,
            best_fitness: self.population[gen_best].eval.fitness,
            best_ever: self.best.eval.fitness,
            mean_fitness,
            detected,
            class_count,
            elite_count: self.elites.len(),
        });
    }

    fn tournament(&mut self) -> usize {
        let n = self.population.len();
        let mut best = self.rng.random_range(0..n);
        for _ in 1..self.config.tournament_size {
            let c = self.rng.random_range(0..n);
            if self.population[c].eval.fitness > self.population[best].eval.fitness {
                best = c;
            }
        }
        best
    }

    fn offspring(&mut self, count: usize) -> Vec<Chromosome> {
        let schema = self.objective.cohort().schema();
        let blocks = self.population[0].chromosome.blocks();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let a = self.tournament();
            let b = self.tournament();
            let (pa, pb) = (&self.population[a].chromosome, &self.population[b].chromosome);
            let (mut x, mut y) = if blocks >= 2 && self.rng.random_bool(self.config.crossover_prob) {
                let cut = self.rng.random_range(1..blocks);
                Chromosome::crossover(pa, pb, cut)
            } else {
                (pa.clone(), pb.clone())
            };
            x.mutate(schema, self.config.mutation_prob, &mut self.rng);
            y.mutate(schema, self.config.mutation_prob, &mut self.rng);
            out.push(x);
            if out.len() < count {
                out.push(y);
            }
        }
        out
    }

    /// Runs one generation.
    pub fn step(&mut self) {
        let t = self.generation + 1;
        let mut detected = false;
        let mut class_count = None;
        if self.config.quotient_aware && (t == 1 || t.is_multiple_of(self.config.equivalence.tau)) {
            let fitness: Vec<f64> = self.population.iter().map(|i| i.eval.fitness).collect();
            let valid: Vec<bool> = self
                .population
                .iter()
                .map(|i| i.eval.feasible && !i.atoms.is_identity())
                .collect();
            if let Some(classes) = detect_classes(&fitness, &valid, &self.config.equivalence) {
                detected = true;
                class_count = Some(classes.classes.len());
                let mut elites: Vec<Individual> = Vec::new();
                for &e in &classes.elites {
                    let ind = &self.population[e];
                    if !elites.iter().any(|x| x.chromosome == ind.chromosome) {
                        elites.push(ind.clone());
                    }
                }
                if elites.len() > self.config.population_size {
                    elites.sort_by(|a, b| b.eval.fitness.total_cmp(&a.eval.fitness));
                    elites.truncate(self.config.population_size);
                }
                self.class_log.push((t, classes.summaries(&fitness)));
                self.elites = elites;
            }
        }
        let mut next = if self.config.quotient_aware {
            self.elites.clone()
        } else {
            Vec::new()
        };
        let remaining = self.config.population_size - next.len();
        for c in self.offspring(remaining) {
            let ind = self.evaluate(c);
            next.push(ind);
        }
        self.population = next;
        self.generation = t;
        self.track(detected, class_count);
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn elites(&self) -> &[Individual] {
        &self.elites
    }

    pub fn best(&self) -> &Individual {
        &self.best
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// `(generation, class summaries)` for every detection that ran.
    pub fn class_log(&self) -> &[(usize, Vec<ClassSummary>)] {
        &self.class_log
    }

    pub fn is_done(&self) -> bool {
        self.generation >= self.config.generations
    }

    pub fn into_record(self, wall_s: f64) -> GaRun {
        let schema = self.objective.cohort().schema();
        let rule_text = match self.config.evaluation {
            GaEvaluation::Decoded => self.best.chromosome.describe(schema),
            GaEvaluation::Atomic => self
                .universe
                .decode(&self.best.atoms)
                .expect("atoms built from this universe"),
        };
        let record = RunRecord {
            method: self.config.method_name().to_string(),
            seed: self.config.seed,
            config: serde_json::to_value(&self.config).expect("config serializes"),
            best_fitness: self.best.eval.fitness,
            feasible: self.best.eval.feasible,
            subgroup_size: self.best.eval.subgroup_size,
            rule_text,
            rule_bits: self.best.atoms.to_bit_string(),
            subgroup_digest: self.best.subjects.digest(),
            evaluations: self.evaluations,
            wall_s,
            trace: self.trace,
            flags: Vec::new(),
        };
        GaRun {
            record,
            best: self.best.chromosome,
            class_log: self.class_log,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaRun {
    pub record: RunRecord,
    pub best: Chromosome,
    pub class_log: Vec<(usize, Vec<ClassSummary>)>,
}

/// Runs the GA to completion and returns the best individual seen in any generation.
pub fn run_ga(objective: &Objective<'_>, universe: &RuleUniverse, config: &GaConfig) -> Result<GaRun> {
    let start = Instant::now();
    let mut engine = GaEngine::new(objective, universe, config.clone())?;
    while !engine.is_done() {
        engine.step();
    }
    Ok(engine.into_record(start.elapsed().as_secs_f64()))
}
