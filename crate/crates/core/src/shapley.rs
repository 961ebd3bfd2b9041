//! Shapley values: the average marginal contribution over all agent orders.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Allocation, Coalition, GameInstance};
use crate::oracles::{self, CharTable};
use crate::par;

pub const SHAPLEY_EXACT_LIMIT: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMethod {
    ExactSubsetSum,
    PermutationSample,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapleyResult {
    pub values: Vec<f64>,
    pub method: ShapleyMethod,
    /// Number of sampled orders.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Per-agent standard error of a sampled estimate.
    pub std_errors: Option<Vec<f64>>,
}

impl ShapleyResult {
    pub fn allocation(&self) -> Allocation {
        Allocation::new(self.values.clone())
    }
}

/// `|S|!(n−1−|S|)!/n!` indexed by `|S|`.
pub fn subset_weights(n: usize) -> Vec<f64> {
    // w_0 = 1/n, w_{k+1} = w_k (k+1)/(n−1−k)
    let mut w = Vec::with_capacity(n);
    let mut cur = 1.0 / n as f64;
    for k in 0..n {
        w.push(cur);
        if k + 1 < n {
            cur *= (k + 1) as f64 / (n - 1 - k) as f64;
        }
    }
    w
}

/// Shapley value from a full characteristic-function table.
pub fn shapley_from_table(table: &CharTable) -> Vec<f64> {
    let n = table.n();
    let weights = subset_weights(n);
    let vals = table.values();
    par::map_range(n, |v| {
        let bit = 1usize << v;
        let mut s = 0.0;
        for mask in 0..vals.len() {
            if mask & bit == 0 {
                s += weights[mask.count_ones() as usize] * (vals[mask | bit] - vals[mask]);
            }
        }
        s
    })
}

pub fn shapley_exact(inst: &GameInstance) -> Result<ShapleyResult> {
    if inst.n() > SHAPLEY_EXACT_LIMIT {
        return Err(Error::TooLarge {
            what: "shapley_exact",
            n: inst.n(),
            limit: SHAPLEY_EXACT_LIMIT,
        });
    }
    let table = oracles::char_table(inst)?;
    Ok(ShapleyResult {
        values: shapley_from_table(&table),
        method: ShapleyMethod::ExactSubsetSum,
        samples: None,
        seed: None,
        std_errors: None,
    })
}

/// Marginal vector `x_σ` of one agent order.
pub fn marginal_vector(inst: &GameInstance, order: &[usize]) -> Result<Vec<f64>> {
    check_order(inst.n(), order)?;
    marginals(inst.n(), order, |s| oracles::char_value(inst, s))
}

fn marginals(n: usize, order: &[usize], value: impl Fn(Coalition) -> Result<f64>) -> Result<Vec<f64>> {
    let mut x = vec![0.0; n];
    let mut s = Coalition::EMPTY;
    let mut prev = 0.0;
    for &v in order {
        s = s.with(v);
        let cur = value(s)?;
        x[v] = cur - prev;
        prev = cur;
    }
    Ok(x)
}

fn check_order(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidParameter(format!("{order:?} is not an order of {n} agents")));
        }
    }
    if order.len() != n {
        return Err(Error::InvalidParameter(format!("{order:?} is not an order of {n} agents")));
    }
    Ok(())
}

/// Average of the marginal vectors of the given orders.
pub fn shapley_from_orders(inst: &GameInstance, orders: &[Vec<usize>]) -> Result<ShapleyResult> {
    if orders.is_empty() {
        return Err(Error::InvalidParameter("need at least one order".into()));
    }
    let n = inst.n();
    for o in orders {
        check_order(n, o)?;
    }
    let table = if n <= oracles::CHAR_TABLE_LIMIT {
        Some(oracles::char_table(inst)?)
    } else {
        None
    };
    let vectors = par::map_slice(orders, |o| {
        marginals(n, o, |s| match &table {
            Some(t) => Ok(t.value(s)),
            None => oracles::char_value(inst, s),
        })
    });
    let vectors = vectors.into_iter().collect::<Result<Vec<_>>>()?;
    let k = vectors.len() as f64;
    let mut mean = vec![0.0; n];
    for x in &vectors {
        for (m, xi) in mean.iter_mut().zip(x) {
            *m += xi;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k);
    let std_errors = if vectors.len() > 1 {
        let mut var = vec![0.0; n];
        for x in &vectors {
            for ((s, xi), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (xi - m) * (xi - m);
            }
        }
        Some(var.into_iter().map(|s| (s / (k - 1.0) / k).sqrt()).collect())
    } else {
        None
    };
    Ok(ShapleyResult {
        values: mean,
        method: ShapleyMethod::PermutationSample,
        samples: Some(vectors.len()),
        seed: None,
        std_errors,
    })
}

/// Monte-Carlo estimate from `count` seeded uniform orders.
pub fn shapley_sample(inst: &GameInstance, count: usize, seed: u64) -> Result<ShapleyResult> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders: Vec<Vec<usize>> = (0..count)
        .map(|_| {
            let mut o: Vec<usize> = (0..inst.n()).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();
    let mut res = shapley_from_orders(inst, &orders)?;
    res.seed = Some(seed);
    Ok(res)
}

/// `δ · ∑ 1/(i+1)` over even `i` with `4 ≤ i ≤ n−1`.
pub fn matching_lower_bound_value(n: usize, delta: f64) -> Result<f64> {
    if n < 5 || n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("n must be odd and at least 5, got {n}")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
    }
    Ok(delta * (4..n).step_by(2).map(|i| 1.0 / (i + 1) as f64).sum::<f64>())
}
