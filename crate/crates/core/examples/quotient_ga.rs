//! Standard and quotient-aware GA on a mixed cohort, with the detected classes.
//!
//! cargo run --release --example quotient_ga -- [seed]

use rulemonoid::bench::{synthesize, GenerateOptions, Scenario};
use rulemonoid::{run_ga, GaConfig, Objective, ObjectiveConfig};

fn main() -> rulemonoid::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let d = synthesize(&GenerateOptions {
        scenario: Scenario::SyntheticMixed,
        seed,
        ..Default::default()
    })?;
    let obj = Objective::new(&d.cohort, ObjectiveConfig::new(20)?)?;
    for quotient_aware in [false, true] {
        let cfg = GaConfig {
            quotient_aware,
            seed,
            ..Default::default()
        };
        let run = run_ga(&obj, &d.universe, &cfg)?;
        let r = &run.record;
        println!(
            "{}: fitness {:.4}, {} subjects, {} evaluations",
            r.method, r.best_fitness, r.subgroup_size, r.evaluations
        );
        println!("  {}", r.rule_text);
        for (generation, classes) in &run.class_log {
            let desc: Vec<String> = classes
                .iter()
                .map(|c| format!("{}x{:.3}", c.size, c.centroid))
                .collect();
            println!("  t={generation:<3} classes {}", desc.join(" "));
        }
    }
    Ok(())
}
