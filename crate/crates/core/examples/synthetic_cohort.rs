//! A synthetic cohort with a planted high-fold-change subgroup.
//!
//! cargo run --example synthetic_cohort -- [seed]

use rulemonoid::bench::{synthesize, GenerateOptions, Scenario};
use rulemonoid::{evaluate, BitRule, ObjectiveConfig};

fn main() -> rulemonoid::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    for scenario in [Scenario::SyntheticDiscrete, Scenario::SyntheticMixed] {
        let d = synthesize(&GenerateOptions {
            scenario,
            seed,
            ..Default::default()
        })?;
        println!(
            "{}: {} records ({} HV, HV mean {:.3}), {} atoms, cohort {}",
            scenario.name(),
            d.cohort.len(),
            d.cohort.hv_count(),
            d.cohort.hv_mean(),
            d.universe.len(),
            &d.hash[..12]
        );
        let Some(p) = d.ground_truth.as_ref().and_then(|t| t.planted.as_ref()) else {
            continue;
        };
        let rule = BitRule::parse_bits(&p.bits).expect("planted bits");
        let e = evaluate(
            &d.universe,
            &rule,
            &d.cohort,
            ObjectiveConfig::new(p.min_subgroup_size)?,
        )?;
        println!(
            "  planted {} ({} subjects, fold change {:.3})",
            p.text, e.subgroup_size, e.fitness
        );
    }
    let d = synthesize(&GenerateOptions {
        seed,
        ..Default::default()
    })?;
    print!(
        "{}",
        d.cohort.to_csv_string().lines().take(6).collect::<Vec<_>>().join("\n")
    );
    println!();
    Ok(())
}
