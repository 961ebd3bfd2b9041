//! Exact core points of small games.
//!
//! For a welfare game the core is nonempty iff the balanced-collection LP
//!
//! ```text
//! max ∑_S ν(S) y_S   s.t.  ∑_{S∋v} y_S = 1 for every agent v,  y ≥ 0
//! ```
//!
//! has optimum `ν(V)`, and then its simplex multipliers form a core point.
//! Cost games use `−ν` and flip the sign back. The LP is solved by the revised
//! simplex method in exact rational arithmetic, starting from the basis of
//! singletons and pivoting with Bland's rule.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::game::{Allocation, Coalition, GameInstance, GameKind};
use crate::oracles;

pub const EXACT_CORE_LIMIT: usize = 12;

/// Relative gap between the LP optimum and `ν(V)` still read as a nonempty
/// core.
pub const GRAND_TOL: f64 = 1e-12;

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("non-finite value {x}")))
}

struct Simplex {
    n: usize,
    /// Objective coefficient per coalition mask.
    cost: Vec<BigRational>,
    /// Basic coalition per row.
    basis: Vec<usize>,
    inv: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
}

impl Simplex {
    fn new(n: usize, cost: Vec<BigRational>) -> Self {
        let inv = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        Simplex {
            n,
            cost,
            basis: (0..n).map(|v| 1usize << v).collect(),
            inv,
            rhs: vec![BigRational::one(); n],
        }
    }

    /// `c_B B⁻¹`.
    fn multipliers(&self) -> Vec<BigRational> {
        (0..self.n)
            .map(|j| {
                let mut s = BigRational::zero();
                for i in 0..self.n {
                    if !self.inv[i][j].is_zero() {
                        s += &self.cost[self.basis[i]] * &self.inv[i][j];
                    }
                }
                s
            })
            .collect()
    }

    /// First coalition with positive reduced cost.
    fn entering(&self, pi: &[BigRational]) -> Option<usize> {
        let size = 1usize << self.n;
        let mut sums = vec![BigRational::zero(); size];
        for mask in 1..size {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = &sums[mask & (mask - 1)] + &pi[low];
            if self.cost[mask] > sums[mask] {
                return Some(mask);
            }
        }
        None
    }

    /// `B⁻¹ χ_S`.
    fn column(&self, mask: usize) -> Vec<BigRational> {
        (0..self.n)
            .map(|i| {
                let mut s = BigRational::zero();
                for v in Coalition(mask as u64).members() {
                    s += &self.inv[i][v];
                }
                s
            })
            .collect()
    }

    #[allow(clippy::needless_range_loop)]
    fn pivot(&mut self, enter: usize) {
        let col = self.column(enter);
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..self.n {
            if col[i].is_positive() {
                let ratio = &self.rhs[i] / &col[i];
                let better = match &leave {
                    None => true,
                    Some((l, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // the feasible region is bounded, so some entry is positive
        let (r, _) = leave.expect("bounded LP");
        let p = col[r].clone();
        for j in 0..self.n {
            self.inv[r][j] = &self.inv[r][j] / &p;
        }
        self.rhs[r] = &self.rhs[r] / &p;
        for i in 0..self.n {
            if i == r || col[i].is_zero() {
                continue;
            }
            let f = col[i].clone();
            for j in 0..self.n {
                let d = &f * &self.inv[r][j];
                self.inv[i][j] -= d;
            }
            let d = &f * &self.rhs[r];
            self.rhs[i] -= d;
        }
        self.basis[r] = enter;
    }

    fn solve(&mut self) -> Vec<BigRational> {
        loop {
            let pi = self.multipliers();
            match self.entering(&pi) {
                Some(s) => self.pivot(s),
                None => return pi,
            }
        }
    }
}

/// A core point (exact efficiency, no relaxation), or `None` if the core is
/// empty.
pub fn exact_core_solve(inst: &GameInstance) -> Result<Option<Allocation>> {
    let n = inst.n();
    if n > EXACT_CORE_LIMIT {
        return Err(Error::TooLarge {
            what: "exact_core_solve",
            n,
            limit: EXACT_CORE_LIMIT,
        });
    }
    let table = oracles::char_table(inst)?;
    if n == 1 {
        return Ok(Some(Allocation::new(vec![table.grand()])));
    }
    let sign = match inst.kind() {
        GameKind::Matching => BigRational::one(),
        GameKind::MinSpanningTree => -BigRational::one(),
    };
    let cost = table
        .values()
        .iter()
        .map(|&v| rational(v).map(|r| &sign * r))
        .collect::<Result<Vec<_>>>()?;
    let grand = cost[cost.len() - 1].clone();
    let mut lp = Simplex::new(n, cost);
    let pi = lp.solve();
    let total = pi.iter().fold(BigRational::zero(), |a, b| a + b);
    // ν(S) are float sums, so balanced collections can beat ν(V) by an ulp
    let slack = (total - &grand).to_f64().expect("finite rational");
    let grand = grand.to_f64().expect("finite rational");
    if slack > GRAND_TOL * grand.abs().max(1.0) {
        return Ok(None);
    }
    let x = pi
        .iter()
        .map(|p| (&sign * p).to_f64().expect("finite rational"))
        .collect();
    Ok(Some(Allocation::new(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{core_check, CoreTolerance};
    use crate::game::Vertex;
    use crate::instances::{gen_example1_pair, gen_random};

    #[test]
    fn example1_unique_points() {
        let (w, w2) = gen_example1_pair(5).unwrap();
        assert_eq!(exact_core_solve(&w).unwrap().unwrap().values(), &[0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(exact_core_solve(&w2).unwrap().unwrap().values(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn odd_cycle_has_empty_core() {
        let a = Vertex::Agent;
        let tri = GameInstance::new(GameKind::Matching, 3, vec![(a(0), a(1), 1.0), (a(1), a(2), 1.0), (a(0), a(2), 1.0)]);
        assert_eq!(exact_core_solve(&tri).unwrap(), None);
    }

    #[test]
    fn trivial_games() {
        let one = GameInstance::new(GameKind::MinSpanningTree, 1, vec![(Vertex::Root, Vertex::Agent(0), 2.5)]);
        assert_eq!(exact_core_solve(&one).unwrap().unwrap().values(), &[2.5]);
        let empty = GameInstance::new(GameKind::Matching, 3, vec![]);
        assert_eq!(exact_core_solve(&empty).unwrap().unwrap().values(), &[0.0; 3]);
        let big = GameInstance::new(GameKind::Matching, 13, vec![]);
        assert!(matches!(exact_core_solve(&big), Err(Error::TooLarge { .. })));
    }

    // spanning tree games always have a nonempty core
    #[test]
    fn returned_points_are_in_the_core() {
        for seed in 0..20 {
            let inst = gen_random(GameKind::MinSpanningTree, 6, 0.5, 5.0, seed).unwrap();
            let x = exact_core_solve(&inst).unwrap().expect("mst core is nonempty");
            assert!(core_check(&inst, &x, 1.0, CoreTolerance::default()).unwrap().pass);
        }
        for seed in 0..20 {
            let inst = gen_random(GameKind::Matching, 6, 0.5, 5.0, seed).unwrap();
            if let Some(x) = exact_core_solve(&inst).unwrap() {
                assert!(core_check(&inst, &x, 1.0, CoreTolerance::default()).unwrap().pass);
            }
        }
    }

    #[test]
    fn bipartite_matching_core_is_nonempty() {
        let a = Vertex::Agent;
        for seed in 0..10u64 {
            let w = |k: u64| 1.0 + ((seed * 7 + k * 3) % 5) as f64;
            let inst = GameInstance::new(
                GameKind::Matching,
                4,
                vec![(a(0), a(2), w(0)), (a(0), a(3), w(1)), (a(1), a(2), w(2)), (a(1), a(3), w(3))],
            );
            let x = exact_core_solve(&inst).unwrap().expect("bipartite core is nonempty");
            assert!(core_check(&inst, &x, 1.0, CoreTolerance::default()).unwrap().pass);
        }
    }
}
