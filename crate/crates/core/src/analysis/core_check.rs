use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Allocation, Coalition, GameInstance, GameKind};
use crate::oracles::{self, CharTable};

pub const CORE_CHECK_LIMIT: usize = 16;

/// Which side of `αν(S)` coalition sums must lie on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `∑_{v∈S} x_v ≥ αν(S)`, `α ≤ 1`.
    WelfareLower,
    /// `∑_{v∈S} x_v ≤ αν(S)`, `α ≥ 1`.
    CostUpper,
}

impl Direction {
    pub fn of(kind: GameKind) -> Self {
        match kind {
            GameKind::Matching => Direction::WelfareLower,
            GameKind::MinSpanningTree => Direction::CostUpper,
        }
    }

    /// Signed margin; negative means the constraint is violated.
    pub fn slack(self, coalition_sum: f64, alpha: f64, value: f64) -> f64 {
        match self {
            Direction::WelfareLower => coalition_sum - alpha * value,
            Direction::CostUpper => alpha * value - coalition_sum,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoreTolerance {
    /// Allowed violation of a coalition constraint.
    pub slack: f64,
    /// Allowed `|∑x − ν(V)|`.
    pub grand: f64,
}

impl Default for CoreTolerance {
    fn default() -> Self {
        CoreTolerance { slack: 1e-6, grand: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreReport {
    pub alpha: f64,
    pub direction: Direction,
    /// Binding proper coalition; empty when `n = 1`.
    pub worst_subset: Coalition,
    pub worst_slack: f64,
    pub grand_value: f64,
    pub grand_residual: f64,
    pub tolerance: CoreTolerance,
    pub pass: bool,
}

/// One coalition constraint, for CSV output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreRow {
    pub subset: String,
    pub value: f64,
    pub coalition_sum: f64,
    pub slack: f64,
}

fn prepare(inst: &GameInstance, x: &Allocation, alpha: f64) -> Result<(Direction, CharTable)> {
    if inst.n() > CORE_CHECK_LIMIT {
        return Err(Error::TooLarge {
            what: "core_check",
            n: inst.n(),
            limit: CORE_CHECK_LIMIT,
        });
    }
    if x.len() != inst.n() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: inst.n(),
        });
    }
    let dir = Direction::of(inst.kind());
    let ok = alpha.is_finite()
        && match dir {
            Direction::WelfareLower => alpha <= 1.0,
            Direction::CostUpper => alpha >= 1.0,
        };
    if !ok {
        return Err(Error::InvalidParameter(format!("alpha {alpha} is on the wrong side of 1 for a {} game", inst.kind())));
    }
    Ok((dir, oracles::char_table(inst)?))
}

/// Checks every proper coalition constraint and grand-coalition efficiency.
pub fn core_check(inst: &GameInstance, x: &Allocation, alpha: f64, tol: CoreTolerance) -> Result<CoreReport> {
    let (dir, table) = prepare(inst, x, alpha)?;
    let full = Coalition::full(inst.n());
    let mut worst_subset = Coalition::EMPTY;
    let mut worst_slack = f64::INFINITY;
    for mask in 1..full.0 {
        let s = Coalition(mask);
        let slack = dir.slack(x.coalition_sum(s), alpha, table.value(s));
        if slack < worst_slack {
            worst_slack = slack;
            worst_subset = s;
        }
    }
    if inst.n() == 1 {
        worst_slack = 0.0;
    }
    let grand_residual = (x.sum() - table.grand()).abs();
    Ok(CoreReport {
        alpha,
        direction: dir,
        worst_subset,
        worst_slack,
        grand_value: table.grand(),
        grand_residual,
        tolerance: tol,
        pass: worst_slack >= -tol.slack && grand_residual <= tol.grand,
    })
}

/// Every nonempty coalition, grand coalition last, with its slack.
pub fn core_rows(inst: &GameInstance, x: &Allocation, alpha: f64) -> Result<Vec<CoreRow>> {
    let (dir, table) = prepare(inst, x, alpha)?;
    let full = Coalition::full(inst.n());
    Ok((1..=full.0)
        .map(|mask| {
            let s = Coalition(mask);
            let sum = x.coalition_sum(s);
            let slack = if s == full {
                -(sum - table.grand()).abs()
            } else {
                dir.slack(sum, alpha, table.value(s))
            };
            CoreRow {
                subset: s.to_string(),
                value: table.value(s),
                coalition_sum: sum,
                slack,
            }
        })
        .collect())
}
