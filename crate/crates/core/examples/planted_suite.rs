//! Optimum-hit rates of every method on a suite of planted discrete cohorts.
//!
//! cargo run --release --example planted_suite -- [instances] [seeds] [effect] [min_size] [population] [generations] [with_bo] [epsilon] [tau] [min_pts]

use rulemonoid::bench::{synthesize, GenerateOptions, PlantConfig};
use rulemonoid::bo::BoConfig;
use rulemonoid::ga::{GaConfig, GaEvaluation};
use rulemonoid::{exhaustive_search, greedy_search, run_bo, run_ga, Objective, ObjectiveConfig};

fn main() -> rulemonoid::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let instances = arg(0, 10.0) as u64;
    let seeds = arg(1, 20.0) as u64;
    let effect = arg(2, 1.6);
    let min_size = arg(3, 20.0) as usize;
    let population = arg(4, 50.0) as usize;
    let generations = arg(5, 60.0) as usize;
    let with_bo = arg(6, 1.0) > 0.0;
    let equivalence = rulemonoid::EquivalenceConfig {
        epsilon: arg(7, 0.1),
        tau: arg(8, 10.0) as usize,
        min_pts: arg(9, 3.0) as usize,
    };

    let names = ["ga", "ga-quotient", "bo", "greedy"];
    let mut hits = [0usize; 4];
    let mut ratio = [0f64; 4];
    let mut total = 0usize;
    for inst in 0..instances {
        let opts = GenerateOptions {
            plant: PlantConfig { atoms: 2, effect },
            plant_min_size: min_size,
            seed: inst,
            ..Default::default()
        };
        let d = synthesize(&opts)?;
        let obj = Objective::new(&d.cohort, ObjectiveConfig::new(min_size)?)?;
        let oracle = exhaustive_search(&obj, &d.universe, 20)?;
        let greedy = greedy_search(&obj, &d.universe)?;
        let planted = d.ground_truth.as_ref().and_then(|t| t.planted.clone()).unwrap();
        println!(
            "instance {inst}: optimum {:.4} {:?} planted {} greedy {:.4}",
            oracle.best_fitness, oracle.best, planted.bits, greedy.best_fitness
        );
        for s in 0..seeds {
            let mut fits = [0f64; 4];
            for (k, quotient) in [false, true].into_iter().enumerate() {
                let cfg = GaConfig {
                    quotient_aware: quotient,
                    evaluation: GaEvaluation::Atomic,
                    seed: s,
                    population_size: population,
                    generations,
                    equivalence,
                    ..GaConfig::default()
                };
                fits[k] = run_ga(&obj, &d.universe, &cfg)?.record.best_fitness;
            }
            fits[2] = if !with_bo {
                0.0
            } else {
                run_bo(
                    &obj,
                    &d.universe,
                    &BoConfig {
                        seed: s,
                        ..Default::default()
                    },
                )?
                .best_fitness
            };
            fits[3] = greedy.best_fitness;
            for k in 0..4 {
                if (fits[k] - oracle.best_fitness).abs() <= 1e-9 * oracle.best_fitness.abs() {
                    hits[k] += 1;
                }
                ratio[k] += (fits[k] / oracle.best_fitness).max(0.0);
            }
            total += 1;
        }
    }
    for k in 0..4 {
        println!(
            "{:<12} hit {:>6.2}%  mean ratio {:.4}",
            names[k],
            100.0 * hits[k] as f64 / total as f64,
            ratio[k] / total as f64
        );
    }
    Ok(())
}
