//! Randomized geometric rounding and exact integration over the offset `b`.
//!
//! For a base `α ∈ (1, 2]` and offset `b ∈ [0, 1]` a positive weight `w` is
//! snapped up to `ŵ = α^(i+1+b)` where `i` is the unique integer with
//! `α^(i+b) ≤ w < α^(i+1+b)`. As `b` sweeps `[0, 1]` the exponent of an edge
//! only changes at `b_e = frac(log_α w)`, so between consecutive breakpoints
//! every rounded weight is a fixed power of `α` times `α^b`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;

/// Tolerance used to merge breakpoints that coincide up to float noise.
pub const BREAKPOINT_TOL: f64 = 1e-12;

/// Rounding base, restricted to `(1, 2]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct Base(f64);

impl Base {
    pub const TWO: Base = Base(2.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 1.0 && alpha <= 2.0 {
            Ok(Base(alpha))
        } else {
            Err(Error::InvalidParameter(format!("rounding base must lie in (1, 2], got {alpha}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn ln(self) -> f64 {
        self.0.ln()
    }

    pub fn pow(self, x: f64) -> f64 {
        self.0.powf(x)
    }
}

fn check_offset(b: f64) -> Result<()> {
    if (0.0..=1.0).contains(&b) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("offset b must lie in [0, 1], got {b}")))
    }
}

/// Rounded weights for one `(base, offset)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundedWeights {
    pub base: Base,
    pub offset: f64,
    /// `i_e`, absent for zero-weight edges.
    pub exponents: Vec<Option<i64>>,
    /// `ŵ_e`, zero exactly when `w_e` is zero.
    pub rounded: Vec<f64>,
}

/// Exponent and rounded value of one positive weight.
pub fn round_one(w: f64, b: f64, base: Base) -> (i64, f64) {
    debug_assert!(w > 0.0);
    let mut i = (w.ln() / base.ln() - b).floor() as i64;
    // the float estimate can be off by one at exact powers; settle it on the
    // defining inequality itself
    while base.pow(i as f64 + b) > w {
        i -= 1;
    }
    while base.pow((i + 1) as f64 + b) <= w {
        i += 1;
    }
    (i, base.pow((i + 1) as f64 + b))
}

pub fn round_weights(w: &[f64], b: f64, base: Base) -> Result<RoundedWeights> {
    check_offset(b)?;
    let mut exponents = Vec::with_capacity(w.len());
    let mut rounded = Vec::with_capacity(w.len());
    for &x in w {
        if x > 0.0 {
            let (i, r) = round_one(x, b, base);
            exponents.push(Some(i));
            rounded.push(r);
        } else {
            exponents.push(None);
            rounded.push(0.0);
        }
    }
    Ok(RoundedWeights {
        base,
        offset: b,
        exponents,
        rounded,
    })
}

/// Sorted cut points `0 = t_0 < t_1 < … < t_{k+1} = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakpointDecomposition {
    points: Vec<f64>,
}

impl BreakpointDecomposition {
    /// Merges raw offsets in `[0, 1]` into a decomposition.
    pub fn from_offsets(offsets: impl IntoIterator<Item = f64>) -> Self {
        let mut inner: Vec<f64> = offsets
            .into_iter()
            .filter(|&t| t > BREAKPOINT_TOL && t < 1.0 - BREAKPOINT_TOL)
            .collect();
        inner.sort_by(f64::total_cmp);
        let mut points = vec![0.0];
        for t in inner {
            if t - points[points.len() - 1] > BREAKPOINT_TOL {
                points.push(t);
            }
        }
        points.push(1.0);
        BreakpointDecomposition { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn num_intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// Open intervals `(t_i, t_{i+1})`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.windows(2).map(|p| (p[0], p[1]))
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.intervals().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Index of the open interval containing `b`, if `b` is not a cut point.
    pub fn interval_of(&self, b: f64) -> Option<usize> {
        self.intervals().position(|(lo, hi)| lo < b && b < hi)
    }
}

/// `frac(log_α w)` for a positive weight.
pub fn breakpoint_of(w: f64, base: Base) -> f64 {
    let l = w.ln() / base.ln();
    l - l.floor()
}

/// Breakpoints of every positive weight; zero weights contribute none.
pub fn breakpoints(w: &[f64], base: Base) -> BreakpointDecomposition {
    BreakpointDecomposition::from_offsets(w.iter().filter(|&&x| x > 0.0).map(|&x| breakpoint_of(x, base)))
}

/// `∫_lo^hi α^(b−m) db`: the weight that turns a vector evaluated at `m`
/// into its integral over `(lo, hi)` when every entry scales as `α^b`.
pub fn interval_factor(lo: f64, hi: f64, mid: f64, base: Base) -> f64 {
    (base.pow(hi - mid) - base.pow(lo - mid)) / base.ln()
}

/// Integrates a vector-valued function of `b` over `[0, 1]` exactly, given
/// that on every open interval of `decomp` it has the form `α^b · c`.
/// `eval` is called once per interval, at the midpoint.
pub fn integrate_piecewise<F>(len: usize, decomp: &BreakpointDecomposition, base: Base, eval: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync + Send,
{
    let cells: Vec<(f64, f64)> = decomp.intervals().collect();
    let parts = par::map_slice(&cells, |&(lo, hi)| {
        let mid = 0.5 * (lo + hi);
        let factor = interval_factor(lo, hi, mid, base);
        eval(mid).map(|z| z.into_iter().map(|x| x * factor).collect::<Vec<_>>())
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(par::sum_vectors(len, &parts))
}

/// Total length of the offsets `b ∈ [0, 1]` at which `w_f` and `w_f + δ`
/// round differently, read off the joint breakpoint decomposition.
pub fn bad_offset_measure(w_f: f64, delta: f64, base: Base) -> f64 {
    if w_f <= 0.0 {
        // ŵ_f = 0 while ŵ'_f > 0 for every b
        return 1.0;
    }
    let raised = w_f + delta;
    let decomp = BreakpointDecomposition::from_offsets([breakpoint_of(w_f, base), breakpoint_of(raised, base)]);
    decomp
        .intervals()
        .filter(|&(lo, hi)| {
            let m = 0.5 * (lo + hi);
            round_one(w_f, m, base).1 != round_one(raised, m, base).1
        })
        .map(|(lo, hi)| hi - lo)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn base_range() {
        assert!(Base::new(1.0).is_err());
        assert!(Base::new(2.5).is_err());
        assert!(Base::new(2.0).is_ok());
        assert!(Base::new(1.0001).is_ok());
    }

    #[test]
    fn rounding_examples() {
        let r = round_weights(&[1.0], 0.5, Base::TWO).unwrap();
        assert_eq!(r.exponents, vec![Some(-1)]);
        assert!((r.rounded[0] - 2f64.sqrt()).abs() < 1e-12);

        let r = round_weights(&[2.0], 0.0, Base::TWO).unwrap();
        assert_eq!(r.exponents, vec![Some(1)]);
        assert_eq!(r.rounded, vec![4.0]);

        let r = round_weights(&[0.0], 0.3, Base::TWO).unwrap();
        assert_eq!(r.exponents, vec![None]);
        assert_eq!(r.rounded, vec![0.0]);

        // base-2 examples used by the spanning tree allocator
        let r = round_weights(&[1.0, 3.0], 0.0, Base::TWO).unwrap();
        assert_eq!(r.exponents, vec![Some(0), Some(1)]);
        assert_eq!(r.rounded, vec![2.0, 4.0]);

        assert!(round_weights(&[1.0], 1.5, Base::TWO).is_err());
    }

    #[test]
    fn breakpoint_examples() {
        assert_eq!(breakpoints(&[2.0, 1.0], Base::TWO).points(), &[0.0, 1.0]);
        let d = breakpoints(&[3.0], Base::TWO);
        assert_eq!(d.points().len(), 3);
        assert!((d.points()[1] - (3f64.log2() - 1.0)).abs() < 1e-15);
        assert!((d.points()[1] - 0.58496).abs() < 1e-5);
        assert_eq!(breakpoints(&[0.0, 0.0], Base::TWO).points(), &[0.0, 1.0]);
        assert_eq!(breakpoints(&[1.0, 2.0, 4.0], Base::TWO).points(), &[0.0, 1.0]);
        // weights in ratio α^k share a breakpoint
        let a = Base::new(1.5).unwrap();
        assert_eq!(breakpoints(&[1.2, 1.2 * 1.5, 1.2 * 2.25], a).num_intervals(), 2);
    }

    #[test]
    fn integral_of_single_power() {
        let d = breakpoints(&[1.0], Base::TWO);
        let v = integrate_piecewise(1, &d, Base::TWO, |b| Ok(vec![round_one(1.0, b, Base::TWO).1])).unwrap();
        assert!((v[0] - 1.0 / 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bad_measure_matches_log_formula() {
        for (w, d) in [(1.0, 0.5), (3.0, 0.01), (0.7, 0.7), (5.0, 1e-3)] {
            let m = bad_offset_measure(w, d, Base::TWO);
            assert!((m - (1.0 + d / w).log2()).abs() < 1e-9, "w {w} d {d}");
        }
        assert_eq!(bad_offset_measure(0.0, 0.1, Base::TWO), 1.0);
        // the raised weight crosses a full period of α: every offset is bad
        let a = Base::new(1.1).unwrap();
        assert!((bad_offset_measure(1.0, 1.0, a) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rounding_brackets_the_weight(w in 1e-3f64..1e3, b in 0.0f64..=1.0, alpha in 1.01f64..=2.0) {
            let base = Base::new(alpha).unwrap();
            let (i, r) = round_one(w, b, base);
            prop_assert!(base.pow(i as f64 + b) <= w);
            prop_assert!(w < base.pow((i + 1) as f64 + b));
            prop_assert!(w < r);
            prop_assert!(r <= alpha * w * (1.0 + 1e-12));
        }

        #[test]
        fn exponents_are_constant_inside_intervals(
            w in prop::collection::vec(1e-2f64..1e2, 1..6),
            alpha in 1.05f64..=2.0,
            u in 0.0f64..1.0,
            v in 0.0f64..1.0,
        ) {
            let base = Base::new(alpha).unwrap();
            let d = breakpoints(&w, base);
            for (lo, hi) in d.intervals() {
                let b1 = lo + (hi - lo) * (0.01 + 0.98 * u);
                let b2 = lo + (hi - lo) * (0.01 + 0.98 * v);
                let r1 = round_weights(&w, b1, base).unwrap();
                let r2 = round_weights(&w, b2, base).unwrap();
                prop_assert_eq!(r1.exponents, r2.exponents);
            }
        }
    }
}
