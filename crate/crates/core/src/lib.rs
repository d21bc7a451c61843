//! Conjunctive rule discovery on the Boolean hypercube.
//!
//! A conjunction of atomic predicates is encoded as the bit vector of its
//! conjuncts, so rule conjunction is bitwise OR and the empty rule is the
//! zero vector. On top of that encoding the crate provides a fold-change
//! subgroup objective, DBSCAN-based approximate equivalence classes, a
//! standard and a quotient-aware genetic algorithm, Hamming-kernel Bayesian
//! optimization, greedy and exhaustive baselines, a screening-filter cost
//! model and a reproducible benchmark harness.
//!
//! ```
//! use rulemonoid::{BitRule, RuleUniverse, Schema};
//!
//! let universe = RuleUniverse::categorical(&Schema::dry_eye_discrete()).unwrap();
//! let r1 = universe.encode([2, 7]).unwrap();
//! let r2 = universe.encode([5]).unwrap();
//! let both = r1.compose(&r2).unwrap();
//! assert_eq!(both.to_string(), "(0,0,1,0,0,1,0,1,0,0)");
//! assert_eq!(r1.hamming(&r2).unwrap(), 3);
//! assert!(BitRule::zeros(10).is_identity());
//! ```

pub mod baselines;
pub mod bench;
pub mod bo;
pub mod cohort;
pub mod error;
pub mod ga;
pub mod objective;
pub mod quotient;
pub mod rule;
pub mod run;
pub mod screening;
pub mod seed;

pub use baselines::{exhaustive_search, greedy_search, ExhaustiveResult};
pub use bo::{expected_improvement, kernel, run_bo, BoConfig, GpState, HammingKernelParams};
pub use cohort::{generate_planted_optimum, generate_synthetic, load_csv, Cohort, Schema, SyntheticParams};
pub use error::{Error, Result};
pub use ga::{run_ga, Chromosome, GaConfig, GaEngine, GaEvaluation};
pub use objective::{apply_rule, evaluate, fold_change, AtomIndex, Evaluation, Objective, ObjectiveConfig};
pub use quotient::{dbscan_1d, detect_classes, EquivalenceClasses, EquivalenceConfig};
pub use rule::{AtomicRule, BitRule, Predicate, RuleUniverse};
pub use run::{RunRecord, TraceRow};
pub use screening::{expected_cost, optimal_order, FilterProfile};
