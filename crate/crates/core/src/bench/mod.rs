//! Dataset generation, single runs, the benchmark matrix and its statistics.

pub mod stats;

use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{exhaustive_as_record, exhaustive_search, greedy_search, ExhaustiveResult};
use crate::bo::{run_bo, BoConfig};
use crate::cohort::{
    generate_planted_optimum, generate_synthetic, load_csv, random_categorical_plant, Cohort, Schema, SyntheticParams,
};
use crate::error::{Error, Result};
use crate::ga::{run_ga, GaConfig, GaEvaluation};
use crate::objective::{AtomIndex, Objective, ObjectiveConfig};
use crate::quotient::EquivalenceConfig;
use crate::rule::{BitRule, Predicate, RuleUniverse};
use crate::run::RunRecord;
use crate::seed::{derive, label_hash};
use stats::RunLine;

pub const COHORT_FILE: &str = "cohort.csv";
pub const SCHEMA_FILE: &str = "schema.toml";
pub const UNIVERSE_FILE: &str = "universe.txt";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SyntheticDiscrete,
    SyntheticMixed,
    FileDiscrete,
    FileMixed,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SyntheticDiscrete => "synthetic-discrete",
            Scenario::SyntheticMixed => "synthetic-mixed",
            Scenario::FileDiscrete => "file-discrete",
            Scenario::FileMixed => "file-mixed",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Scenario::SyntheticDiscrete | Scenario::FileDiscrete)
    }

    pub fn is_synthetic(self) -> bool {
        matches!(self, Scenario::SyntheticDiscrete | Scenario::SyntheticMixed)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Scenario::SyntheticDiscrete,
            Scenario::SyntheticMixed,
            Scenario::FileDiscrete,
            Scenario::FileMixed,
        ]
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ga,
    GaQuotient,
    Bo,
    BoQuotient,
    Greedy,
    Exhaustive,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ga,
        Method::GaQuotient,
        Method::Bo,
        Method::BoQuotient,
        Method::Greedy,
        Method::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ga => "ga",
            Method::GaQuotient => "ga-quotient",
            Method::Bo => "bo",
            Method::BoQuotient => "bo-quotient",
            Method::Greedy => "greedy",
            Method::Exhaustive => "exhaustive",
        }
    }

    /// Methods sharing a family share their parameter draws.
    fn family(self) -> &'static str {
        match self {
            Method::Ga | Method::GaQuotient => "ga",
            Method::Bo | Method::BoQuotient => "bo",
            Method::Greedy => "greedy",
            Method::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Number of categorical atoms in the planted rule; 0 disables planting.
    pub atoms: usize,
    pub effect: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig { atoms: 2, effect: 1.6 }
    }
}

/// Options for synthesizing one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub scenario: Scenario,
    pub synthetic: SyntheticParams,
    pub plant: PlantConfig,
    /// The planted rule must select at least this many non-HV records.
    pub plant_min_size: usize,
    pub bins: usize,
    pub seed: u64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            scenario: Scenario::SyntheticDiscrete,
            synthetic: SyntheticParams::default(),
            plant: PlantConfig::default(),
            plant_min_size: 30,
            bins: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub bits: String,
    pub atoms: Vec<usize>,
    pub text: String,
    pub subgroup_size: usize,
    pub effect: f64,
    pub min_subgroup_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: String,
    pub seed: u64,
    pub n_records: usize,
    pub hv_fraction: f64,
    pub cohort_hash: String,
    pub universe_hash: String,
    pub planted: Option<PlantedTruth>,
}

/// A cohort with its rule universe.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub cohort: Cohort,
    pub universe: RuleUniverse,
    pub ground_truth: Option<GroundTruth>,
    /// Digest of the cohort's canonical CSV.
    pub hash: String,
}

impl Dataset {
    /// True when the universe has only categorical atoms.
    pub fn is_discrete(&self) -> bool {
        self.universe
            .atoms()
            .iter()
            .all(|a| matches!(a.predicate, Predicate::CategoryEq(_)))
    }

    pub fn schema(&self) -> &Schema {
        self.cohort.schema()
    }
}

fn universe_for(cohort: &Cohort, discrete: bool, bins: usize) -> Result<RuleUniverse> {
    if discrete {
        RuleUniverse::categorical(cohort.schema())
    } else {
        RuleUniverse::from_cohort(cohort, bins)
    }
}

/// Builds a synthetic dataset, with a planted categorical rule when requested.
pub fn synthesize(opts: &GenerateOptions) -> Result<Dataset> {
    if !opts.scenario.is_synthetic() {
        return Err(Error::Config(format!("{} is not a synthetic scenario", opts.scenario)));
    }
    let discrete = opts.scenario.is_discrete();
    let schema = if discrete {
        Schema::dry_eye_discrete()
    } else {
        Schema::dry_eye_mixed()
    };
    let cohort_seed = derive(opts.seed, &[label_hash("cohort")]);
    let (cohort, planted) = if opts.plant.atoms == 0 {
        (generate_synthetic(&schema, &opts.synthetic, cohort_seed)?, None)
    } else {
        let categorical = RuleUniverse::categorical(&schema)?;
        let rule = random_categorical_plant(
            &schema,
            &categorical,
            opts.plant.atoms,
            derive(opts.seed, &[label_hash("plant")]),
        )?;
        let p = generate_planted_optimum(
            &schema,
            &opts.synthetic,
            cohort_seed,
            &categorical,
            &rule,
            opts.plant.effect,
            opts.plant_min_size,
        )?;
        (p.cohort, Some((p.planted, p.planted_size)))
    };
    let universe = universe_for(&cohort, discrete, opts.bins)?;
    let hash = cohort.digest();
    let planted = match planted {
        None => None,
        Some((rule, size)) => {
            // categorical atoms come first in every universe, so ids carry over
            let atoms: Vec<usize> = rule.ones_iter().collect();
            let full = universe.encode(atoms.iter().copied())?;
            Some(PlantedTruth {
                bits: full.to_bit_string(),
                text: universe.decode(&full)?,
                atoms,
                subgroup_size: size,
                effect: opts.plant.effect,
                min_subgroup_size: opts.plant_min_size,
            })
        }
    };
    let ground_truth = GroundTruth {
        scenario: opts.scenario.name().to_string(),
        seed: opts.seed,
        n_records: opts.synthetic.n_records,
        hv_fraction: opts.synthetic.hv_fraction,
        cohort_hash: hash.clone(),
        universe_hash: universe.digest(),
        planted,
    };
    Ok(Dataset {
        cohort,
        universe,
        ground_truth: Some(ground_truth),
        hash,
    })
}

fn check_writable(paths: &[PathBuf], force: bool) -> Result<()> {
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::WouldOverwrite(p.clone()));
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the cohort CSV, schema, universe (tagged with the cohort hash) and ground-truth sidecar.
pub fn write_dataset(dataset: &Dataset, dir: &Path, force: bool) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = [COHORT_FILE, SCHEMA_FILE, UNIVERSE_FILE, GROUND_TRUTH_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    check_writable(&paths, force)?;
    create_dir(dir)?;
    dataset.cohort.save_csv(&paths[0])?;
    write_file(&paths[1], dataset.schema().to_toml())?;
    write_file(&paths[2], dataset.universe.to_text(Some(&dataset.hash)))?;
    let truth = serde_json::to_string_pretty(&dataset.ground_truth)? + "\n";
    write_file(&paths[3], truth)?;
    Ok(paths)
}

/// Synthesizes a dataset and writes it to `dir`.
pub fn cmd_generate(opts: &GenerateOptions, dir: &Path, force: bool) -> Result<Dataset> {
    let dataset = synthesize(opts)?;
    write_dataset(&dataset, dir, force)?;
    Ok(dataset)
}

/// Loads a dataset directory. Without a universe file, a discrete or
/// quantile-grid universe is built according to `discrete`.
pub fn load_dataset(dir: &Path, discrete: bool, bins: usize) -> Result<Dataset> {
    let schema = Schema::load(&dir.join(SCHEMA_FILE))?;
    let cohort = load_csv(&dir.join(COHORT_FILE), &schema)?;
    let hash = cohort.digest();
    let universe_path = dir.join(UNIVERSE_FILE);
    let universe = if universe_path.exists() {
        let (u, source) = RuleUniverse::load(&universe_path)?;
        if let Some(src) = source {
            if src != hash {
                return Err(Error::HashMismatch(format!(
                    "{} was built for cohort {src}, found {hash}",
                    universe_path.display()
                )));
            }
        }
        // binding every atom checks it against the schema
        AtomIndex::new(&u, &cohort)?;
        u
    } else {
        universe_for(&cohort, discrete, bins)?
    };
    let truth_path = dir.join(GROUND_TRUTH_FILE);
    let ground_truth = if truth_path.exists() {
        let text = fs::read_to_string(&truth_path).map_err(|e| Error::io(&truth_path, e))?;
        let truth: Option<GroundTruth> = serde_json::from_str(&text)?;
        if let Some(t) = &truth {
            if t.cohort_hash != hash {
                return Err(Error::HashMismatch(format!(
                    "{} describes cohort {}, found {hash}",
                    truth_path.display(),
                    t.cohort_hash
                )));
            }
        }
        truth
    } else {
        None
    };
    Ok(Dataset {
        cohort,
        universe,
        ground_truth,
        hash,
    })
}

/// Parameters of one optimizer execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub equivalence: EquivalenceConfig,
    pub bo_budget: usize,
    pub bo_initial_design: usize,
    pub exhaustive_cap: usize,
    pub seed: u64,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            population_size: 50,
            generations: 60,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            equivalence: EquivalenceConfig::default(),
            bo_budget: 80,
            bo_initial_design: 10,
            exhaustive_cap: crate::baselines::DEFAULT_EXHAUSTIVE_CAP,
            seed: 0,
        }
    }
}

impl MethodParams {
    pub fn ga_config(&self, quotient_aware: bool, dataset: &Dataset) -> GaConfig {
        GaConfig {
            population_size: self.population_size,
            generations: self.generations,
            crossover_prob: self.crossover_prob,
            mutation_prob: self.mutation_prob,
            quotient_aware,
            equivalence: self.equivalence,
            evaluation: if dataset.is_discrete() {
                GaEvaluation::Atomic
            } else {
                GaEvaluation::Decoded
            },
            seed: self.seed,
            ..GaConfig::default()
        }
    }

    pub fn bo_config(&self, quotient_aware: bool) -> BoConfig {
        BoConfig {
            budget: self.bo_budget,
            initial_design: self.bo_initial_design,
            quotient_aware,
            equivalence: self.equivalence,
            seed: self.seed,
            ..BoConfig::default()
        }
    }
}

/// Runs one method. `oracle` short-circuits the exhaustive method when already known.
pub fn run_method(
    method: Method,
    dataset: &Dataset,
    objective: &Objective<'_>,
    params: &MethodParams,
    oracle: Option<&ExhaustiveResult>,
) -> Result<RunRecord> {
    let universe = &dataset.universe;
    match method {
        Method::Ga | Method::GaQuotient => {
            let cfg = params.ga_config(method == Method::GaQuotient, dataset);
            Ok(run_ga(objective, universe, &cfg)?.record)
        }
        Method::Bo | Method::BoQuotient => run_bo(objective, universe, &params.bo_config(method == Method::BoQuotient)),
        Method::Greedy => greedy_search(objective, universe),
        Method::Exhaustive => {
            let start = Instant::now();
            let result = match oracle {
                Some(r) => r.clone(),
                None => exhaustive_search(objective, universe, params.exhaustive_cap)?,
            };
            exhaustive_as_record(&result, universe, params.exhaustive_cap, start.elapsed().as_secs_f64())
        }
    }
}

fn oracle_key(dataset: &Dataset, objective: &ObjectiveConfig) -> String {
    let mut h = Sha256::new();
    h.update(dataset.hash.as_bytes());
    h.update(b"\n");
    h.update(dataset.universe.digest().as_bytes());
    h.update(format!("\n{}\n{:?}", objective.min_subgroup_size, objective.infeasible_fitness).as_bytes());
    hex::encode(h.finalize())
}

/// Exhaustive optimum, read from or stored in `cache_dir` when given.
pub fn cached_oracle(
    dataset: &Dataset,
    objective: &Objective<'_>,
    cap: usize,
    cache_dir: Option<&Path>,
) -> Result<ExhaustiveResult> {
    let path = cache_dir.map(|d| d.join(format!("{}.json", oracle_key(dataset, objective.config()))));
    if let Some(p) = &path {
        if let Ok(text) = fs::read_to_string(p) {
            if let Ok(r) = serde_json::from_str::<ExhaustiveResult>(&text) {
                if r.n_atoms == dataset.universe.len() {
                    return Ok(r);
                }
            }
        }
    }
    let result = exhaustive_search(objective, &dataset.universe, cap)?;
    if let (Some(p), Some(d)) = (&path, cache_dir) {
        create_dir(d)?;
        write_file(p, serde_json::to_string(&result)?)?;
    }
    Ok(result)
}

/// Writes a single run as one JSONL line and the matching CSV row.
pub fn cmd_run(
    method: Method,
    dataset: &Dataset,
    min_size: usize,
    params: &MethodParams,
    out: &Path,
    force: bool,
    timing: bool,
) -> Result<RunLine> {
    let jsonl = out.join("run.jsonl");
    let csv_path = out.join("run.csv");
    check_writable(&[jsonl.clone(), csv_path.clone()], force)?;
    let objective = Objective::new(&dataset.cohort, ObjectiveConfig::new(min_size)?)?;
    let mut record = run_method(method, dataset, &objective, params, None)?;
    if !timing {
        record = record.without_timing();
    }
    let optimum = (method == Method::Exhaustive && record.feasible).then_some(record.best_fitness);
    let line = RunLine {
        method: method.name().to_string(),
        scenario: if dataset.is_discrete() {
            Scenario::FileDiscrete
        } else {
            Scenario::FileMixed
        }
        .name()
        .to_string(),
        min_size,
        param_idx: 0,
        repeat: 0,
        seed: params.seed,
        dataset_hash: dataset.hash.clone(),
        optimum,
        record: Some(record),
        error: None,
    };
    create_dir(out)?;
    let mut buf = Vec::new();
    stats::write_jsonl(std::slice::from_ref(&line), &mut buf)?;
    write_file(&jsonl, buf)?;
    let mut buf = Vec::new();
    stats::write_runs(std::slice::from_ref(&line), timing, &mut buf)?;
    write_file(&csv_path, buf)?;
    Ok(line)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub scenario: Scenario,
    pub repeats: usize,
    pub min_sizes: Vec<usize>,
    pub param_draws: usize,
    pub methods: Vec<Method>,
    /// Base seed from which every dataset, draw and cell seed is derived.
    pub seed: u64,
    pub workers: usize,
    /// Dataset directory for the file scenarios.
    pub dataset: Option<PathBuf>,
    pub n_records: usize,
    pub hv_fraction: f64,
    pub biomarker_range: [f64; 2],
    pub plant: PlantConfig,
    /// Quantile bins per numeric field in mixed scenarios.
    pub bins: usize,
    pub exhaustive_cap: usize,
    pub population_range: [usize; 2],
    pub generations_range: [usize; 2],
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub bo_budget_range: [usize; 2],
    pub bo_initial_design: usize,
    pub equivalence: EquivalenceConfig,
    /// Leave `wall_s` empty in the run CSV so reruns are byte-identical.
    pub record_timing: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            scenario: Scenario::SyntheticDiscrete,
            repeats: 20,
            min_sizes: vec![10, 20, 30],
            param_draws: 5,
            methods: Method::ALL.to_vec(),
            seed: 0,
            workers: 1,
            dataset: None,
            n_records: 500,
            hv_fraction: 0.2,
            biomarker_range: [0.5, 20.0],
            plant: PlantConfig::default(),
            bins: 10,
            exhaustive_cap: crate::baselines::DEFAULT_EXHAUSTIVE_CAP,
            population_range: [50, 100],
            generations_range: [20, 150],
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            bo_budget_range: [30, 80],
            bo_initial_design: 10,
            equivalence: EquivalenceConfig::default(),
            record_timing: true,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.repeats == 0 {
            return fail("repeats must be at least 1");
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty");
        }
        if self.min_sizes.is_empty() || self.min_sizes.contains(&0) {
            return fail("min_sizes must be non-empty and positive");
        }
        if self.param_draws == 0 {
            return fail("param_draws must be at least 1");
        }
        if self.workers == 0 {
            return fail("workers must be at least 1");
        }
        for (name, [lo, hi]) in [
            ("population_range", self.population_range),
            ("generations_range", self.generations_range),
            ("bo_budget_range", self.bo_budget_range),
        ] {
            if lo > hi || lo == 0 {
                return fail(&format!("{name} must be a positive [low, high] pair"));
            }
        }
        if self.bo_budget_range[0] < self.bo_initial_design {
            return fail("bo_budget_range must not go below bo_initial_design");
        }
        if !self.scenario.is_synthetic() && self.dataset.is_none() {
            return fail("file scenarios need a dataset directory");
        }
        self.equivalence.validate()?;
        self.synthetic_params().validate()
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let cfg: BenchmarkConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn synthetic_params(&self) -> SyntheticParams {
        SyntheticParams {
            n_records: self.n_records,
            hv_fraction: self.hv_fraction,
            biomarker_range: (self.biomarker_range[0], self.biomarker_range[1]),
        }
    }

    pub fn generate_options(&self) -> GenerateOptions {
        GenerateOptions {
            scenario: self.scenario,
            synthetic: self.synthetic_params(),
            plant: self.plant.clone(),
            plant_min_size: self.min_sizes.iter().copied().max().unwrap_or(1),
            bins: self.bins,
            seed: derive(self.seed, &[label_hash("dataset")]),
        }
    }

    pub fn dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            Some(dir) if !self.scenario.is_synthetic() => load_dataset(dir, self.scenario.is_discrete(), self.bins),
            _ => synthesize(&self.generate_options()),
        }
    }

    /// Seed of one cell; a pure function of its coordinates.
    pub fn cell_seed(&self, method: Method, min_size: usize, param_idx: usize, repeat: usize) -> u64 {
        derive(
            self.seed,
            &[
                label_hash(method.name()),
                min_size as u64,
                param_idx as u64,
                repeat as u64,
            ],
        )
    }

    /// Parameter draw `param_idx`, shared by methods of one family.
    pub fn params(&self, method: Method, min_size: usize, param_idx: usize) -> MethodParams {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(
            self.seed,
            &[
                label_hash("params"),
                label_hash(method.family()),
                min_size as u64,
                param_idx as u64,
            ],
        ));
        let [plo, phi] = self.population_range;
        let [glo, ghi] = self.generations_range;
        let [blo, bhi] = self.bo_budget_range;
        MethodParams {
            population_size: rng.random_range(plo..=phi),
            generations: rng.random_range(glo..=ghi),
            crossover_prob: self.crossover_prob,
            mutation_prob: self.mutation_prob,
            equivalence: self.equivalence,
            bo_budget: rng.random_range(blo..=bhi),
            bo_initial_design: self.bo_initial_design,
            exhaustive_cap: self.exhaustive_cap,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub method: Method,
    pub min_size: usize,
    pub param_idx: usize,
    pub repeat: usize,
}

pub fn cells(config: &BenchmarkConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &min_size in &config.min_sizes {
        for &method in &config.methods {
            for param_idx in 0..config.param_draws {
                for repeat in 0..config.repeats {
                    out.push(Cell {
                        method,
                        min_size,
                        param_idx,
                        repeat,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub lines: Vec<RunLine>,
    /// Exhaustive optimum per minimum size, for discrete scenarios.
    pub oracles: Vec<(usize, std::result::Result<ExhaustiveResult, String>)>,
    pub failures: usize,
}

/// Runs the full matrix in memory.
pub fn run_matrix(config: &BenchmarkConfig, dataset: &Dataset, cache_dir: Option<&Path>) -> Result<BenchOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let objectives: Vec<Objective<'_>> = config
        .min_sizes
        .iter()
        .map(|&m| Objective::new(&dataset.cohort, ObjectiveConfig::new(m)?))
        .collect::<Result<_>>()?;

    let oracles: Vec<(usize, std::result::Result<ExhaustiveResult, String>)> = if config.scenario.is_discrete() {
        pool.install(|| {
            config
                .min_sizes
                .iter()
                .zip(&objectives)
                .map(|(&m, obj)| {
                    (
                        m,
                        cached_oracle(dataset, obj, config.exhaustive_cap, cache_dir).map_err(|e| e.to_string()),
                    )
                })
                .collect()
        })
    } else {
        Vec::new()
    };

    let cells = cells(config);
    let lines: Vec<RunLine> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let k = config.min_sizes.iter().position(|&m| m == cell.min_size).unwrap();
                let oracle = oracles.get(k).and_then(|(_, r)| r.as_ref().ok());
                let seed = config.cell_seed(cell.method, cell.min_size, cell.param_idx, cell.repeat);
                let params = MethodParams {
                    seed,
                    ..config.params(cell.method, cell.min_size, cell.param_idx)
                };
                let result = run_method(cell.method, dataset, &objectives[k], &params, oracle).map(|r| {
                    let mut r = if config.record_timing { r } else { r.without_timing() };
                    r.seed = seed;
                    r
                });
                let (record, error) = match result {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                RunLine {
                    method: cell.method.name().to_string(),
                    scenario: config.scenario.name().to_string(),
                    min_size: cell.min_size,
                    param_idx: cell.param_idx,
                    repeat: cell.repeat,
                    seed,
                    dataset_hash: dataset.hash.clone(),
                    optimum: oracle.filter(|o| o.is_feasible()).map(|o| o.best_fitness),
                    record,
                    error,
                }
            })
            .collect()
    });
    let failures = lines.iter().filter(|l| !l.is_ok()).count();
    Ok(BenchOutcome {
        lines,
        oracles,
        failures,
    })
}

pub const RUNS_CSV: &str = "runs.csv";
pub const RUNS_JSONL: &str = "runs.jsonl";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CELLS_CSV: &str = "summary_cells.csv";
pub const CONVERGENCE_CSV: &str = "convergence.csv";

fn write_stats(lines: &[RunLine], out: &Path) -> Result<()> {
    let mut buf = Vec::new();
    stats::write_summary(&stats::summarize(lines), &mut buf)?;
    write_file(&out.join(SUMMARY_CSV), buf)?;
    let mut buf = Vec::new();
    stats::write_cell_summary(&stats::summarize_cells(lines), &mut buf)?;
    write_file(&out.join(CELLS_CSV), buf)?;
    let mut buf = Vec::new();
    stats::write_convergence(lines, &mut buf)?;
    write_file(&out.join(CONVERGENCE_CSV), buf)
}

/// Runs the matrix and writes per-run and summary files into `out`.
pub fn cmd_bench(config: &BenchmarkConfig, out: &Path, force: bool) -> Result<BenchOutcome> {
    config.validate()?;
    let outputs: Vec<PathBuf> = [RUNS_CSV, RUNS_JSONL, SUMMARY_CSV, CELLS_CSV, CONVERGENCE_CSV]
        .iter()
        .map(|f| out.join(f))
        .collect();
    check_writable(&outputs, force)?;
    let dataset = config.dataset()?;
    create_dir(out)?;
    let outcome = run_matrix(config, &dataset, Some(&out.join("oracle-cache")))?;

    let mut buf = Vec::new();
    stats::write_runs(&outcome.lines, config.record_timing, &mut buf)?;
    write_file(&outputs[0], buf)?;
    let mut buf = Vec::new();
    stats::write_jsonl(&outcome.lines, &mut buf)?;
    write_file(&outputs[1], buf)?;
    write_stats(&outcome.lines, out)?;
    write_file(&out.join("config.toml"), config.to_toml())?;
    Ok(outcome)
}

/// Recomputes statistics from run logs; all runs must share one dataset.
pub fn cmd_stats(files: &[PathBuf], out: &Path, force: bool) -> Result<Vec<stats::MethodSummary>> {
    let mut lines = Vec::new();
    for f in files {
        let file = fs::File::open(f).map_err(|e| Error::io(f, e))?;
        lines.extend(stats::read_jsonl(BufReader::new(file), f)?);
    }
    if lines.is_empty() {
        return Err(Error::Config("no run records given".into()));
    }
    if let Some(other) = lines.iter().find(|l| l.dataset_hash != lines[0].dataset_hash) {
        return Err(Error::HashMismatch(format!(
            "runs mix datasets {} and {}",
            lines[0].dataset_hash, other.dataset_hash
        )));
    }
    check_writable(&[SUMMARY_CSV, CELLS_CSV, CONVERGENCE_CSV].map(|f| out.join(f)), force)?;
    create_dir(out)?;
    write_stats(&lines, out)?;
    Ok(stats::summarize(&lines))
}

/// Planted rule of a dataset as a bit rule, if any.
pub fn planted_rule(dataset: &Dataset) -> Option<BitRule> {
    dataset
        .ground_truth
        .as_ref()?
        .planted
        .as_ref()
        .and_then(|p| BitRule::parse_bits(&p.bits))
}
