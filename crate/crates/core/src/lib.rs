//! Lipschitz-continuous approximate-core allocations for matching games and
//! minimum spanning tree games.
//!
//! ```
//! use coregauge::{gen_path_uniform, theorem1_allocate, core_check, CoreTolerance};
//!
//! let path = gen_path_uniform(5).unwrap();
//! let x = theorem1_allocate(&path, 0.25).unwrap();
//! assert!((x.sum() - 2.0).abs() < 1e-9);
//! assert!(core_check(&path, &x, 0.25, CoreTolerance::default()).unwrap().pass);
//! ```

pub mod analysis;
mod dsu;
pub mod error;
pub mod game;
pub mod instances;
pub mod matching;
pub mod mst;
pub mod oracles;
pub mod par;
pub mod rounding;
pub mod shapley;

pub use analysis::{
    core_check, exact_core_solve, lipschitz_scan, AllocatorKind, CoreReport, CoreTolerance, DeltaRule,
    Direction, LipschitzReport,
};
pub use error::{Error, Result};
pub use game::{l1_distance, perturb, validate_instance, Allocation, Coalition, GameInstance, GameKind, Vertex};
pub use instances::{gen_example1_pair, gen_path_uniform, gen_random, gen_theorem3_pair, InstanceSpec};
pub use matching::{integrate_matching, theorem1_allocate};
pub use mst::{auxiliary_tree, integrate_mst, theorem2_allocate, AuxiliaryTree};
pub use oracles::{char_table, char_value, grand_value};
pub use rounding::Base;
pub use shapley::{matching_lower_bound_value, shapley_exact, shapley_sample, ShapleyResult};
