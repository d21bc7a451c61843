//! Hamming-kernel GP on a few observed rules, then a full BO run.
//!
//! cargo run --release --example hamming_bo

use rulemonoid::bench::{synthesize, GenerateOptions};
use rulemonoid::{
    expected_improvement, run_bo, BitRule, BoConfig, GpState, HammingKernelParams, Objective, ObjectiveConfig,
};

fn main() -> rulemonoid::Result<()> {
    let observed = ["1000000000", "0100000000", "0100000001", "0001010000"];
    let inputs: Vec<BitRule> = observed.iter().map(|s| BitRule::parse_bits(s).unwrap()).collect();
    let values = vec![0.2, 0.9, 1.4, 0.5];
    let params = HammingKernelParams {
        theta0: 1.0,
        theta1: 0.5,
        theta2: 1e-6,
    };
    let gp = GpState::fit(inputs, values, params)?;
    println!("log marginal likelihood {:.4}", gp.log_marginal_likelihood());
    for q in ["0100000001", "0100000011", "0110000001", "0000001100"] {
        let rule = BitRule::parse_bits(q).unwrap();
        let (mu, var) = gp.posterior(&rule)?;
        println!(
            "{q}: mean {mu:+.4} sd {:.4} EI {:.4}",
            var.sqrt(),
            expected_improvement(mu, var, 1.4)
        );
    }

    let d = synthesize(&GenerateOptions::default())?;
    let obj = Objective::new(&d.cohort, ObjectiveConfig::new(20)?)?;
    for quotient_aware in [false, true] {
        let r = run_bo(
            &obj,
            &d.universe,
            &BoConfig {
                quotient_aware,
                seed: 1,
                ..Default::default()
            },
        )?;
        println!(
            "{}: {:.4} after {} evaluations, {}",
            r.method, r.best_fitness, r.evaluations, r.rule_text
        );
    }
    Ok(())
}
