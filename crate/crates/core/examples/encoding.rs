//! Rules as bit vectors on a small categorical universe.
//!
//! cargo run --example encoding

use rulemonoid::{AtomicRule, Predicate, RuleUniverse};

fn main() -> rulemonoid::Result<()> {
    let fields = [
        ("DED", &["healthy", "mild", "moderate", "severe"][..]),
        ("Gender", &["male", "female"]),
        ("MGD", &["absent", "present"]),
    ];
    let mut atoms = Vec::new();
    for (field, levels) in fields {
        for level in levels {
            atoms.push(AtomicRule {
                id: atoms.len(),
                field: field.to_string(),
                predicate: Predicate::CategoryEq(level.to_string()),
            });
        }
    }
    let universe = RuleUniverse::new(atoms)?;
    for a in universe.atoms() {
        println!("a{} = {a}", a.id + 1);
    }

    let r1 = universe.encode([2, 7])?;
    let r2 = universe.encode([5])?;
    let both = r1.compose(&r2)?;
    println!("r1      {}  {}", r1.to_bit_string(), universe.decode(&r1)?);
    println!("r2      {}  {}", r2.to_bit_string(), universe.decode(&r2)?);
    println!("r1 ^ r2 {}  {}", both.to_bit_string(), universe.decode(&both)?);
    println!("hamming(r1, r2) = {}", r1.hamming(&r2)?);
    Ok(())
}
