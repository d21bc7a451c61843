//! Exhaustive optimum against greedy forward selection for several minimum sizes.
//!
//! cargo run --release --example oracle_and_greedy -- [seed]

use rulemonoid::bench::{synthesize, GenerateOptions};
use rulemonoid::{exhaustive_search, greedy_search, Objective, ObjectiveConfig};

fn main() -> rulemonoid::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let d = synthesize(&GenerateOptions {
        seed,
        ..Default::default()
    })?;
    for min_size in [5, 10, 20, 30, 60] {
        let obj = Objective::new(&d.cohort, ObjectiveConfig::new(min_size)?)?;
        let oracle = exhaustive_search(&obj, &d.universe, 20)?;
        let greedy = greedy_search(&obj, &d.universe)?;
        let best = oracle.best_rule().map(|r| d.universe.decode(&r)).transpose()?;
        println!(
            "min {min_size:>2}: optimum {:.4} ({} subjects) {}",
            oracle.best_fitness,
            oracle.subgroup_size,
            best.as_deref().unwrap_or("none")
        );
        println!(
            "        greedy  {:.4} ({} subjects) {} ratio {:.4}",
            greedy.best_fitness,
            greedy.subgroup_size,
            greedy.rule_text,
            greedy.best_fitness / oracle.best_fitness
        );
    }
    Ok(())
}
