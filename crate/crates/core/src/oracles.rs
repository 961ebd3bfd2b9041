//! Exact characteristic functions.
//!
//! `ν(S)` is the maximum matching weight of `G[S]` for matching games and the
//! minimum spanning tree weight of `G[S ∪ {r}]` for spanning tree games. Both
//! are always evaluated on the instance's own weights.

use std::collections::HashMap;

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::game::{Coalition, GameInstance, GameKind, Vertex};
use crate::par;

/// Largest agent count for which a full table of `2^n` values is built.
pub const CHAR_TABLE_LIMIT: usize = 20;

/// Largest agent count a [`Coalition`] bitmask can address.
pub const COALITION_LIMIT: usize = 64;

fn check_subset(inst: &GameInstance, s: Coalition) -> Result<()> {
    if inst.n() > COALITION_LIMIT {
        return Err(Error::TooLarge {
            what: "coalition oracles",
            n: inst.n(),
            limit: COALITION_LIMIT,
        });
    }
    if !s.is_subset_of(Coalition::full(inst.n())) {
        return Err(Error::InvalidParameter(format!("coalition {s} is not a subset of the agents")));
    }
    Ok(())
}

/// Neighbour lists over agents: `(neighbour, weight)`.
fn matching_adjacency(inst: &GameInstance) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); inst.n()];
    for (e, &w) in inst.edges().iter().zip(inst.weights()) {
        if let (Vertex::Agent(a), Vertex::Agent(b)) = (e.u, e.v) {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
    }
    adj
}

/// Maximum total weight of a matching in `G[S]`.
pub fn max_weight_matching(inst: &GameInstance, s: Coalition) -> Result<f64> {
    inst.expect_kind(GameKind::Matching)?;
    check_subset(inst, s)?;
    let adj = matching_adjacency(inst);
    let mut memo = HashMap::new();
    Ok(matching_rec(&adj, s.0, &mut memo))
}

// Lowest agent of `mask` is either unmatched or matched to a neighbour in `mask`.
fn matching_rec(adj: &[Vec<(usize, f64)>], mask: u64, memo: &mut HashMap<u64, f64>) -> f64 {
    if mask.count_ones() < 2 {
        return 0.0;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let v = mask.trailing_zeros() as usize;
    let rest = mask & !(1u64 << v);
    let mut best = matching_rec(adj, rest, memo);
    for &(u, w) in &adj[v] {
        if rest >> u & 1 == 1 {
            let cand = w + matching_rec(adj, rest & !(1u64 << u), memo);
            if cand > best {
                best = cand;
            }
        }
    }
    memo.insert(mask, best);
    best
}

/// Kruskal over a pre-sorted edge list restricted to `S ∪ {r}`.
struct Kruskal {
    n: usize,
    // (u index, v index, weight) with the root at index n, sorted by (weight, id)
    sorted: Vec<(usize, usize, f64)>,
}

impl Kruskal {
    fn new(inst: &GameInstance) -> Self {
        let n = inst.n();
        let mut order: Vec<usize> = (0..inst.num_edges()).collect();
        let w = inst.weights();
        order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
        let sorted = order
            .into_iter()
            .map(|id| {
                let e = inst.edges()[id];
                (e.u.index(n), e.v.index(n), w[id])
            })
            .collect();
        Kruskal { n, sorted }
    }

    fn weight(&self, member: impl Fn(usize) -> bool) -> f64 {
        let inside = |x: usize| x == self.n || member(x);
        let need = (0..self.n).filter(|&v| member(v)).count();
        let mut dsu = DisjointSet::new(self.n + 1);
        let mut joined = 0;
        let mut total = 0.0;
        for &(a, b, w) in &self.sorted {
            if joined == need {
                break;
            }
            if inside(a) && inside(b) && dsu.union(a, b) {
                total += w;
                joined += 1;
            }
        }
        total
    }
}

/// Minimum spanning tree weight of `G[S ∪ {r}]`.
pub fn mst_weight(inst: &GameInstance, s: Coalition) -> Result<f64> {
    inst.expect_kind(GameKind::MinSpanningTree)?;
    check_subset(inst, s)?;
    Ok(Kruskal::new(inst).weight(|v| s.contains(v)))
}

/// Minimum spanning tree weight of the whole graph; no agent-count limit.
pub fn mst_weight_all(inst: &GameInstance) -> Result<f64> {
    inst.expect_kind(GameKind::MinSpanningTree)?;
    Ok(Kruskal::new(inst).weight(|_| true))
}

/// `ν(S)` for either game kind.
pub fn char_value(inst: &GameInstance, s: Coalition) -> Result<f64> {
    if s.is_empty() {
        check_subset(inst, s)?;
        return Ok(0.0);
    }
    match inst.kind() {
        GameKind::Matching => max_weight_matching(inst, s),
        GameKind::MinSpanningTree => mst_weight(inst, s),
    }
}

/// `ν(V)`. Spanning tree games have no size limit here.
pub fn grand_value(inst: &GameInstance) -> Result<f64> {
    match inst.kind() {
        GameKind::Matching => max_weight_matching(inst, Coalition::full(inst.n())),
        GameKind::MinSpanningTree => mst_weight_all(inst),
    }
}

/// `ν(S)` for every coalition, indexed by bitmask.
#[derive(Clone, Debug)]
pub struct CharTable {
    n: usize,
    kind: GameKind,
    values: Vec<f64>,
}

impl CharTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn value(&self, s: Coalition) -> f64 {
        self.values[s.0 as usize]
    }

    pub fn grand(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Builds the full characteristic-function table.
pub fn char_table(inst: &GameInstance) -> Result<CharTable> {
    let n = inst.n();
    if n > CHAR_TABLE_LIMIT {
        return Err(Error::TooLarge {
            what: "char_table",
            n,
            limit: CHAR_TABLE_LIMIT,
        });
    }
    let size = 1usize << n;
    let values = match inst.kind() {
        GameKind::Matching => {
            // Same recursion as `max_weight_matching`, filled bottom-up.
            let adj = matching_adjacency(inst);
            let mut t = vec![0.0f64; size];
            for mask in 1..size {
                let v = mask.trailing_zeros() as usize;
                let rest = mask & !(1 << v);
                let mut best = t[rest];
                for &(u, w) in &adj[v] {
                    if rest >> u & 1 == 1 {
                        best = best.max(w + t[rest & !(1 << u)]);
                    }
                }
                t[mask] = best;
            }
            t
        }
        GameKind::MinSpanningTree => {
            let k = Kruskal::new(inst);
            par::map_range(size, |mask| k.weight(|v| mask >> v & 1 == 1))
        }
    };
    Ok(CharTable {
        n,
        kind: inst.kind(),
        values,
    })
}

/// Executable check of the spanning-tree marginal inequality: raising an
/// edge `f` inside `S` by `delta` can only shrink `v`'s marginal cost,
/// `OPT(S∪{v,r}, w′) − OPT(S∪{v,r}, w) ≤ OPT(S∪{r}, w′) − OPT(S∪{r}, w)`.
///
/// Endpoints of `f` may be agents of `S` or the root.
pub fn marginal_monotonicity_check(
    inst: &GameInstance,
    f: usize,
    delta: f64,
    v: usize,
    s: Coalition,
) -> Result<bool> {
    inst.expect_kind(GameKind::MinSpanningTree)?;
    check_subset(inst, s)?;
    let edge = *inst.edges().get(f).ok_or(Error::UnknownEdge(f))?;
    for x in [edge.u, edge.v] {
        if let Vertex::Agent(a) = x {
            if !s.contains(a) {
                return Err(Error::Precondition(format!("endpoint v{a} of edge {f} is not in {s}")));
            }
        }
    }
    if v >= inst.n() || s.contains(v) {
        return Err(Error::Precondition(format!("agent {v} must be outside {s}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Precondition(format!("delta must be positive, got {delta}")));
    }
    let bumped = inst.perturbed(f, delta)?;
    let with_v = s.with(v);
    let lhs = mst_weight(&bumped, with_v)? - mst_weight(inst, with_v)?;
    let rhs = mst_weight(&bumped, s)? - mst_weight(inst, s)?;
    Ok(lhs <= rhs + 1e-9)
}
