//! Ordering a virtual-screening cascade by cost over selectivity.
//!
//! cargo run --example filter_order

use rulemonoid::screening::write_order;
use rulemonoid::{expected_cost, optimal_order, FilterProfile};

fn main() -> rulemonoid::Result<()> {
    let filters = vec![
        FilterProfile::new("docking", 120.0, 0.85)?,
        FilterProfile::new("lipinski", 0.5, 0.30)?,
        FilterProfile::new("pains", 1.0, 0.08)?,
        FilterProfile::new("admet-model", 15.0, 0.40)?,
        FilterProfile::new("dedupe", 0.2, 0.0)?,
    ];
    println!("as listed: {:.3}", expected_cost(&filters));
    let order = optimal_order(&filters);
    println!("optimal:   {:.3}", expected_cost(&order));
    write_order(&order, std::io::stdout())
}
