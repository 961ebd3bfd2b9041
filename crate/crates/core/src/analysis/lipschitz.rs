use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::exact_core_solve;
use crate::error::{Error, Result};
use crate::game::{l1_distance, Allocation, GameInstance};
use crate::matching::{self, integrate_matching, theorem1_allocate};
use crate::mst::{self, integrate_mst, theorem2_allocate};
use crate::rounding::Base;
use crate::shapley::shapley_exact;
use crate::par;

/// Allocators that can be probed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AllocatorKind {
    Theorem1 { epsilon: f64 },
    Theorem2,
    ShapleyExact,
    RawIntegrateMatching { alpha: f64 },
    RawIntegrateMst,
    ExactCoreSolve,
}

impl AllocatorKind {
    pub fn run(&self, inst: &GameInstance) -> Result<Allocation> {
        match *self {
            AllocatorKind::Theorem1 { epsilon } => theorem1_allocate(inst, epsilon),
            AllocatorKind::Theorem2 => theorem2_allocate(inst),
            AllocatorKind::ShapleyExact => Ok(shapley_exact(inst)?.allocation()),
            AllocatorKind::RawIntegrateMatching { alpha } => integrate_matching(inst, Base::new(alpha)?),
            AllocatorKind::RawIntegrateMst => integrate_mst(inst),
            AllocatorKind::ExactCoreSolve => {
                exact_core_solve(inst)?.ok_or_else(|| Error::Precondition("the core is empty".into()))
            }
        }
    }

    /// Proven Lipschitz constant, where one is known.
    pub fn proven_bound(&self) -> Option<f64> {
        match *self {
            AllocatorKind::Theorem1 { epsilon } => matching::matching_guarantees(epsilon).ok().map(|g| g.lipschitz),
            AllocatorKind::Theorem2 => Some(mst::lipschitz_bound()),
            AllocatorKind::RawIntegrateMatching { alpha } => Some(matching::raw_lipschitz_bound(alpha)),
            AllocatorKind::RawIntegrateMst => Some(mst::raw_lipschitz_bound()),
            AllocatorKind::ShapleyExact | AllocatorKind::ExactCoreSolve => None,
        }
    }
}

impl fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocatorKind::Theorem1 { epsilon } => write!(f, "theorem1:{epsilon}"),
            AllocatorKind::Theorem2 => f.write_str("theorem2"),
            AllocatorKind::ShapleyExact => f.write_str("shapley_exact"),
            AllocatorKind::RawIntegrateMatching { alpha } => write!(f, "raw_integrate_matching:{alpha}"),
            AllocatorKind::RawIntegrateMst => f.write_str("raw_integrate_mst"),
            AllocatorKind::ExactCoreSolve => f.write_str("exact_core_solve"),
        }
    }
}

/// Parses `name` or `name:param`, e.g. `theorem1:0.25`.
impl FromStr for AllocatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let param = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidParameter(format!("{name} needs a {what}, e.g. {name}:0.25")))?
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} in {s:?}")))
        };
        let kind = match name {
            "theorem1" => AllocatorKind::Theorem1 { epsilon: param("epsilon")? },
            "theorem2" => AllocatorKind::Theorem2,
            "shapley_exact" => AllocatorKind::ShapleyExact,
            "raw_integrate_matching" => AllocatorKind::RawIntegrateMatching { alpha: param("alpha")? },
            "raw_integrate_mst" => AllocatorKind::RawIntegrateMst,
            "exact_core_solve" => AllocatorKind::ExactCoreSolve,
            _ => return Err(Error::InvalidParameter(format!("unknown allocator {name:?}"))),
        };
        let takes_arg = matches!(kind, AllocatorKind::Theorem1 { .. } | AllocatorKind::RawIntegrateMatching { .. });
        if arg.is_some() && !takes_arg {
            return Err(Error::InvalidParameter(format!("{name} takes no parameter")));
        }
        Ok(kind)
    }
}

/// Perturbation sizes per edge.
#[derive(Clone, Debug, PartialEq)]
pub enum DeltaRule {
    /// `w_e · 10^{−k}` for `k < levels` when `w_e > 0`, else `10^{−k}`.
    Grid { levels: u32 },
    /// The same absolute deltas on every edge.
    Fixed(Vec<f64>),
}

impl Default for DeltaRule {
    fn default() -> Self {
        DeltaRule::Grid { levels: 4 }
    }
}

pub fn probe_deltas(rule: &DeltaRule, w_e: f64) -> Vec<f64> {
    match rule {
        DeltaRule::Grid { levels } => {
            let scale = if w_e > 0.0 { w_e } else { 1.0 };
            (0..*levels).map(|k| scale * 10f64.powi(-(k as i32))).collect()
        }
        DeltaRule::Fixed(d) => d.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub edge_id: usize,
    pub w_e: f64,
    pub delta: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub allocator: String,
    pub rows: Vec<ProbeRow>,
    pub max_ratio: f64,
    pub claimed_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Probes `allocator` with single-edge increases and compares the largest
/// `‖A(w′) − A(w)‖₁ / δ` with `claimed_bound`.
pub fn lipschitz_scan(
    allocator: AllocatorKind,
    inst: &GameInstance,
    rule: &DeltaRule,
    claimed_bound: f64,
    tol: f64,
) -> Result<LipschitzReport> {
    let base = allocator.run(inst)?;
    let mut probes = Vec::new();
    for (e, &w) in inst.weights().iter().enumerate() {
        for d in probe_deltas(rule, w) {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter(format!("probe delta must be positive, got {d}")));
            }
            probes.push((e, w, d));
        }
    }
    let rows = par::map_slice(&probes, |&(edge, w_e, delta)| {
        let probe = || -> Result<ProbeRow> {
            let moved = allocator.run(&inst.perturbed(edge, delta)?)?;
            Ok(ProbeRow {
                edge_id: edge,
                w_e,
                delta,
                ratio: l1_distance(&base, &moved)? / delta,
            })
        };
        probe().map_err(|source| Error::Probe {
            edge,
            delta,
            source: Box::new(source),
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(LipschitzReport {
        allocator: allocator.to_string(),
        rows,
        max_ratio,
        claimed_bound,
        tolerance: tol,
        pass: max_ratio <= claimed_bound + tol,
    })
}

/// `‖A(a) − A(b)‖₁ / ‖w_a − w_b‖₁` for two weightings of the same graph.
pub fn pair_ratio(allocator: AllocatorKind, a: &GameInstance, b: &GameInstance) -> Result<f64> {
    if a.kind() != b.kind() || a.n() != b.n() || a.edges() != b.edges() {
        return Err(Error::Precondition("instances must share their graph".into()));
    }
    let dw: f64 = a.weights().iter().zip(b.weights()).map(|(x, y)| (x - y).abs()).sum();
    if dw == 0.0 {
        return Err(Error::Precondition("instances have identical weights".into()));
    }
    Ok(l1_distance(&allocator.run(a)?, &allocator.run(b)?)? / dw)
}
