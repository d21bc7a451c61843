//! A small benchmark matrix in memory, summarized to stdout.
//!
//! cargo run --release --example mini_bench

use rulemonoid::bench::stats::{summarize, write_summary};
use rulemonoid::bench::{run_matrix, BenchmarkConfig};

fn main() -> rulemonoid::Result<()> {
    let cfg = BenchmarkConfig {
        repeats: 5,
        min_sizes: vec![10, 30],
        param_draws: 2,
        record_timing: false,
        ..Default::default()
    };
    let dataset = cfg.dataset()?;
    let outcome = run_matrix(&cfg, &dataset, None)?;
    for (m, o) in &outcome.oracles {
        if let Ok(r) = o {
            println!(
                "oracle min_size={m}: {:.4} {}",
                r.best_fitness,
                r.best.as_deref().unwrap_or("-")
            );
        }
    }
    write_summary(&summarize(&outcome.lines), std::io::stdout())
}
