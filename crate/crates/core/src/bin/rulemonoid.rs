use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rulemonoid::bench::{self, BenchmarkConfig, GenerateOptions, Method, MethodParams, PlantConfig, Scenario};
use rulemonoid::quotient::EquivalenceConfig;
use rulemonoid::screening::{expected_cost, load_filters, optimal_order, write_order};
use rulemonoid::{Error, Result};

/// Exhaustive cap used by `run` unless `--exhaustive-cap` is given.
const CLI_EXHAUSTIVE_CAP: usize = 19;

#[derive(Parser)]
#[command(
    name = "rulemonoid",
    version,
    about = "Conjunctive subgroup rule discovery and benchmarking"
)]
struct Cli {
    /// Base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Benchmark configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset directory.
    Generate(GenerateArgs),
    /// Run one method on a dataset directory.
    Run(RunArgs),
    /// Run the benchmark matrix.
    Bench(BenchArgs),
    /// Recompute statistics from JSONL run logs.
    Stats {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Order screening filters by cost over selectivity.
    OrderFilters { filters: PathBuf },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    records: Option<usize>,
    #[arg(long)]
    hv_fraction: Option<f64>,
    /// Atoms in the planted rule; 0 for none.
    #[arg(long)]
    plant_atoms: Option<usize>,
    #[arg(long)]
    effect: Option<f64>,
    #[arg(long)]
    plant_min_size: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    method: String,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    min_size: usize,
    /// Build a quantile-grid universe when the dataset has no universe file.
    #[arg(long)]
    mixed: bool,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 50)]
    population: usize,
    #[arg(long, default_value_t = 60)]
    generations: usize,
    #[arg(long, default_value_t = 0.8)]
    crossover: f64,
    #[arg(long, default_value_t = 0.1)]
    mutation: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 3)]
    min_pts: usize,
    #[arg(long, default_value_t = 10)]
    tau: usize,
    #[arg(long, default_value_t = 80)]
    budget: usize,
    #[arg(long)]
    exhaustive_cap: Option<usize>,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    no_timing: bool,
}

enum Outcome {
    Done,
    Partial,
}

fn load_config(cli: &Cli) -> Result<BenchmarkConfig> {
    let mut cfg = match &cli.config {
        Some(p) => BenchmarkConfig::load(p)?,
        None => BenchmarkConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("rulemonoid-out"))
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<Outcome> {
    let cfg = load_config(cli)?;
    let mut opts: GenerateOptions = cfg.generate_options();
    if let Some(s) = cli.seed {
        opts.seed = s;
    }
    if let Some(s) = args.scenario {
        opts.scenario = s;
    }
    if let Some(n) = args.records {
        opts.synthetic.n_records = n;
    }
    if let Some(h) = args.hv_fraction {
        opts.synthetic.hv_fraction = h;
    }
    let plant = PlantConfig {
        atoms: args.plant_atoms.unwrap_or(opts.plant.atoms),
        effect: args.effect.unwrap_or(opts.plant.effect),
    };
    opts.plant = plant;
    if let Some(m) = args.plant_min_size {
        opts.plant_min_size = m;
    }
    if let Some(b) = args.bins {
        opts.bins = b;
    }
    let dir = out_dir(cli);
    let d = bench::cmd_generate(&opts, &dir, cli.force)?;
    println!(
        "wrote {} ({} records, {} atoms, cohort {})",
        dir.display(),
        d.cohort.len(),
        d.universe.len(),
        d.hash
    );
    if let Some(p) = d.ground_truth.as_ref().and_then(|t| t.planted.as_ref()) {
        println!("planted {} = {} ({} subjects)", p.bits, p.text, p.subgroup_size);
    }
    Ok(Outcome::Done)
}

fn run(cli: &Cli, args: &RunArgs) -> Result<Outcome> {
    let method: Method = args.method.parse()?;
    let dataset = bench::load_dataset(&args.dataset, !args.mixed, args.bins)?;
    let params = MethodParams {
        population_size: args.population,
        generations: args.generations,
        crossover_prob: args.crossover,
        mutation_prob: args.mutation,
        equivalence: EquivalenceConfig {
            epsilon: args.epsilon,
            min_pts: args.min_pts,
            tau: args.tau,
        },
        bo_budget: args.budget,
        exhaustive_cap: args.exhaustive_cap.unwrap_or(CLI_EXHAUSTIVE_CAP),
        seed: cli.seed.unwrap_or(0),
        ..MethodParams::default()
    };
    let line = bench::cmd_run(
        method,
        &dataset,
        args.min_size,
        &params,
        &out_dir(cli),
        cli.force,
        !args.no_timing,
    )?;
    let r = line.record.expect("successful run");
    println!("{}\t{}\t{}\t{}", r.method, r.best_fitness, r.subgroup_size, r.rule_text);
    Ok(Outcome::Done)
}

fn run_bench(cli: &Cli, args: &BenchArgs) -> Result<Outcome> {
    let mut cfg = load_config(cli)?;
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(r) = args.repeats {
        cfg.repeats = r;
    }
    if args.no_timing {
        cfg.record_timing = false;
    }
    let dir = out_dir(cli);
    let outcome = bench::cmd_bench(&cfg, &dir, cli.force)?;
    for (m, o) in &outcome.oracles {
        match o {
            Ok(r) => println!(
                "oracle min_size={m}: {} {}",
                r.best_fitness,
                r.best.as_deref().unwrap_or("none")
            ),
            Err(e) => println!("oracle min_size={m}: {e}"),
        }
    }
    println!("{} runs written to {}", outcome.lines.len(), dir.display());
    if outcome.failures > 0 {
        eprintln!("{} runs failed and were excluded from the summaries", outcome.failures);
        return Ok(Outcome::Partial);
    }
    Ok(Outcome::Done)
}

fn stats(cli: &Cli, runs: &[PathBuf]) -> Result<Outcome> {
    let dir = out_dir(cli);
    let rows = bench::cmd_stats(runs, &dir, cli.force)?;
    for r in rows {
        println!(
            "{}\t{}\truns={}\tmean={}",
            r.method,
            r.scenario,
            r.stats.runs,
            r.stats.mean_fitness.map(|m| m.to_string()).unwrap_or_default()
        );
    }
    Ok(Outcome::Done)
}

fn order_filters(cli: &Cli, path: &Path) -> Result<Outcome> {
    let order = optimal_order(&load_filters(path)?);
    match &cli.out {
        Some(dir) => {
            let target = dir.join("order.csv");
            if target.exists() && !cli.force {
                return Err(Error::WouldOverwrite(target));
            }
            std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
            let file =
                std::fs::File::create(&target).map_err(|e| Error::Config(format!("{}: {e}", target.display())))?;
            write_order(&order, file)?;
            println!("expected cost {}", expected_cost(&order));
        }
        None => write_order(&order, std::io::stdout())?,
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(&cli, a),
        Command::Run(a) => run(&cli, a),
        Command::Bench(a) => run_bench(&cli, a),
        Command::Stats { runs } => stats(&cli, runs),
        Command::OrderFilters { filters } => order_filters(&cli, filters),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 3 } else { 2 })
        }
    }
}
