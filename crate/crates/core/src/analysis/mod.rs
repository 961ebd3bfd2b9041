//! Verification engines: approximate-core checks, exact core points for
//! small games, and empirical Lipschitz probes.

mod core_check;
mod exact_core;
mod lipschitz;

pub use core_check::{core_check, core_rows, CoreReport, CoreRow, CoreTolerance, Direction, CORE_CHECK_LIMIT};
pub use exact_core::{exact_core_solve, EXACT_CORE_LIMIT};
pub use lipschitz::{
    lipschitz_scan, pair_ratio, probe_deltas, AllocatorKind, DeltaRule, LipschitzReport, ProbeRow,
};
