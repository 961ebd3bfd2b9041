//! Greedy allocation for the matching game.
//!
//! At a fixed offset `b` every edge weight is rounded up to a power of `α`
//! (see [`crate::rounding`]); edges are then scanned in decreasing rounded
//! weight, ties broken by edge id, and added greedily to a matching `M`.
//! Both endpoints of an edge in `M` receive its rounded weight. Averaging
//! over `b ∈ [0, 1]` gives a vector that covers every coalition's value and
//! moves by `O(1/(α−1))` per unit of weight change; scaling it to sum to
//! `ν(V)` yields a `(1/2 − ε)`-approximate core allocation.

use crate::error::{Error, Result};
use crate::game::{Allocation, GameInstance, GameKind, Vertex};
use crate::oracles;
use crate::rounding::{self, Base, BreakpointDecomposition, RoundedWeights};

pub use crate::game::normalize as normalize_welfare;

/// Order in which the greedy scan visits edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScanOrder {
    /// Decreasing rounded weight, ties by edge id. The Lipschitz and core
    /// guarantees are stated for this order.
    #[default]
    Rounded,
    /// Decreasing original weight, ties by edge id. Offered for comparison
    /// only; no guarantee is claimed for it.
    Raw,
}

/// Output of one greedy run.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyTrace {
    /// Edge ids in the order they joined the matching.
    pub matching: Vec<usize>,
    /// Per-agent value `z_v`.
    pub raw: Vec<f64>,
    pub rounded: RoundedWeights,
}

impl GreedyTrace {
    pub fn total(&self) -> f64 {
        self.raw.iter().sum()
    }
}

pub fn round_weights_matching(w: &[f64], b: f64, alpha: f64) -> Result<RoundedWeights> {
    rounding::round_weights(w, b, Base::new(alpha)?)
}

pub fn greedy_allocate(inst: &GameInstance, b: f64, base: Base) -> Result<GreedyTrace> {
    greedy_allocate_ordered(inst, b, base, ScanOrder::Rounded)
}

pub fn greedy_allocate_ordered(inst: &GameInstance, b: f64, base: Base, order: ScanOrder) -> Result<GreedyTrace> {
    inst.expect_kind(GameKind::Matching)?;
    let rounded = rounding::round_weights(inst.weights(), b, base)?;
    let hat = &rounded.rounded;
    let w = inst.weights();
    // zero-rounded edges cannot raise any z_v and come last, so they are skipped
    let mut scan: Vec<usize> = (0..inst.num_edges()).filter(|&e| hat[e] > 0.0).collect();
    match order {
        ScanOrder::Rounded => scan.sort_by(|&a, &b| hat[b].total_cmp(&hat[a]).then(a.cmp(&b))),
        ScanOrder::Raw => scan.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b))),
    }
    let n = inst.n();
    let mut covered = vec![false; n];
    let mut raw = vec![0.0; n];
    let mut matching = Vec::new();
    for e in scan {
        let edge = inst.edges()[e];
        let (Vertex::Agent(u), Vertex::Agent(v)) = (edge.u, edge.v) else {
            return Err(Error::Precondition(format!("edge {e} touches the root in a matching game")));
        };
        if !covered[u] && !covered[v] {
            covered[u] = true;
            covered[v] = true;
            raw[u] = hat[e];
            raw[v] = hat[e];
            matching.push(e);
        }
    }
    Ok(GreedyTrace { matching, raw, rounded })
}

pub fn breakpoints_matching(w: &[f64], alpha: f64) -> Result<BreakpointDecomposition> {
    Ok(rounding::breakpoints(w, Base::new(alpha)?))
}

/// `∫₀¹ z(b) db`, computed exactly: on each open breakpoint interval the
/// greedy run is fixed up to the common factor `α^b`.
pub fn integrate_matching(inst: &GameInstance, base: Base) -> Result<Allocation> {
    integrate_matching_ordered(inst, base, ScanOrder::Rounded)
}

pub fn integrate_matching_ordered(inst: &GameInstance, base: Base, order: ScanOrder) -> Result<Allocation> {
    inst.expect_kind(GameKind::Matching)?;
    let decomp = rounding::breakpoints(inst.weights(), base);
    let raw = rounding::integrate_piecewise(inst.n(), &decomp, base, |b| {
        greedy_allocate_ordered(inst, b, base, order).map(|t| t.raw)
    })?;
    Ok(Allocation::new(raw))
}

/// Guarantees carried by [`theorem1_allocate`] for a given `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingGuarantees {
    pub base: f64,
    /// Coalitions receive at least this fraction of their value.
    pub core_factor: f64,
    /// Lipschitz constant of the raw integral.
    pub raw_lipschitz: f64,
    /// Lipschitz constant after normalization.
    pub lipschitz: f64,
}

pub fn matching_guarantees(epsilon: f64) -> Result<MatchingGuarantees> {
    check_epsilon(epsilon)?;
    let alpha = 1.0 + 2.0 * epsilon;
    Ok(MatchingGuarantees {
        base: alpha,
        core_factor: 0.5 - epsilon,
        raw_lipschitz: raw_lipschitz_bound(alpha),
        lipschitz: 2.0 * raw_lipschitz_bound(alpha) + 1.0,
    })
}

/// `12 / (α − 1)`.
pub fn raw_lipschitz_bound(alpha: f64) -> f64 {
    12.0 / (alpha - 1.0)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2], got {epsilon}")))
    }
}

/// `(1/2 − ε)`-approximate core allocation with Lipschitz constant
/// `24/(2ε) + 1`.
pub fn theorem1_allocate(inst: &GameInstance, epsilon: f64) -> Result<Allocation> {
    check_epsilon(epsilon)?;
    inst.expect_kind(GameKind::Matching)?;
    let base = Base::new(1.0 + 2.0 * epsilon)?;
    let raw = integrate_matching(inst, base)?;
    let grand = oracles::grand_value(inst)?;
    normalize_welfare(&raw, grand)
}
