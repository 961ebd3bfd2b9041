//! Game instances, allocations and the JSON instance format.
//!
//! A [`GameInstance`] is a graph with an indexed edge list and a nonnegative
//! weight per edge. Agents are the dense ids `0..n`. Minimum spanning tree
//! games additionally carry a distinguished root vertex that is *not* an
//! agent; it is modelled as [`Vertex::Root`] and never shares an index with
//! an agent.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameKind {
    #[serde(rename = "matching")]
    Matching,
    #[serde(rename = "mst")]
    MinSpanningTree,
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameKind::Matching => f.write_str("matching"),
            GameKind::MinSpanningTree => f.write_str("mst"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Agent(usize),
    Root,
}

impl Vertex {
    /// Dense index into a vertex array of length `n + 1`; the root maps to `n`.
    pub fn index(self, n: usize) -> usize {
        match self {
            Vertex::Agent(v) => v,
            Vertex::Root => n,
        }
    }

    fn wire_id(self) -> i64 {
        match self {
            Vertex::Agent(v) => v as i64,
            Vertex::Root => -1,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Agent(v) => write!(f, "v{v}"),
            Vertex::Root => f.write_str("r"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: usize,
    pub u: Vertex,
    pub v: Vertex,
}

impl Edge {
    pub fn touches_root(&self) -> bool {
        self.u == Vertex::Root || self.v == Vertex::Root
    }
}

/// One broken instance invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoAgents,
    SelfLoop { edge: usize },
    NegativeWeight { edge: usize, weight: f64 },
    NonFiniteWeight { edge: usize },
    BadEdgeId { position: usize, id: usize },
    UnknownVertex { edge: usize, vertex: i64 },
    RootInMatching { edge: usize },
    ParallelEdge { edge: usize, first: usize },
    RootNotAdjacent { agent: usize },
    WeightCountMismatch { edges: usize, weights: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAgents => f.write_str("instance has no agents"),
            Violation::SelfLoop { edge } => write!(f, "self-loop on edge {edge}"),
            Violation::NegativeWeight { edge, weight } => {
                write!(f, "edge {edge} has negative weight {weight}")
            }
            Violation::NonFiniteWeight { edge } => write!(f, "edge {edge} has a non-finite weight"),
            Violation::BadEdgeId { position, id } => {
                write!(f, "edge at position {position} has id {id}; ids must be 0..|E|-1 in order")
            }
            Violation::UnknownVertex { edge, vertex } => {
                write!(f, "edge {edge} references unknown vertex {vertex}")
            }
            Violation::RootInMatching { edge } => {
                write!(f, "edge {edge} uses the root, which only exists in mst games")
            }
            Violation::ParallelEdge { edge, first } => {
                write!(f, "edge {edge} duplicates the endpoints of edge {first}")
            }
            Violation::RootNotAdjacent { agent } => write!(f, "agent v{agent} not adjacent to root"),
            Violation::WeightCountMismatch { edges, weights } => {
                write!(f, "{edges} edges but {weights} weights")
            }
        }
    }
}

/// A graph game: matching game on `G[S]` or minimum spanning tree game on
/// `G[S ∪ {r}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GameInstance {
    kind: GameKind,
    n: usize,
    edges: Vec<Edge>,
    weights: Vec<f64>,
}

impl GameInstance {
    /// Builds an instance from `(u, v, w)` triples; edge ids follow the
    /// order of `edges`. The result is not validated.
    pub fn new(kind: GameKind, n: usize, edges: impl IntoIterator<Item = (Vertex, Vertex, f64)>) -> Self {
        let mut es = Vec::new();
        let mut ws = Vec::new();
        for (id, (u, v, w)) in edges.into_iter().enumerate() {
            es.push(Edge { id, u, v });
            ws.push(w);
        }
        GameInstance {
            kind,
            n,
            edges: es,
            weights: ws,
        }
    }

    /// Like [`GameInstance::new`] but rejects instances that fail validation.
    pub fn try_new(
        kind: GameKind,
        n: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex, f64)>,
    ) -> Result<Self> {
        let inst = Self::new(kind, n, edges);
        inst.ensure_valid()?;
        Ok(inst)
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_root(&self) -> bool {
        self.kind == GameKind::MinSpanningTree
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Same graph with a different weight vector.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::InvalidParameter(format!(
                "weight vector has {} entries, instance has {} edges",
                weights.len(),
                self.edges.len()
            )));
        }
        Ok(GameInstance {
            weights,
            ..self.clone()
        })
    }

    /// Copy with edge `edge` raised by `delta`.
    pub fn perturbed(&self, edge: usize, delta: f64) -> Result<Self> {
        self.with_weights(perturb(&self.weights, edge, delta)?)
    }

    pub fn expect_kind(&self, kind: GameKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind,
                found: self.kind,
            });
        }
        Ok(())
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate_instance(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    /// Id of the root edge `{r, agent}`, if present.
    pub fn root_edge(&self, agent: usize) -> Option<usize> {
        self.edges
            .iter()
            .find(|e| {
                (e.u == Vertex::Root && e.v == Vertex::Agent(agent))
                    || (e.v == Vertex::Root && e.u == Vertex::Agent(agent))
            })
            .map(|e| e.id)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: WireInstance = serde_json::from_str(s)?;
        wire.into_instance()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(WireInstance::from_instance(self)).expect("instance serializes")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }
}

/// Returns every broken invariant; an empty list means the instance is valid.
pub fn validate_instance(inst: &GameInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if inst.n == 0 {
        out.push(Violation::NoAgents);
    }
    if inst.weights.len() != inst.edges.len() {
        out.push(Violation::WeightCountMismatch {
            edges: inst.edges.len(),
            weights: inst.weights.len(),
        });
    }
    let mut seen = std::collections::HashMap::new();
    let mut root_adjacent = HashSet::new();
    for (pos, e) in inst.edges.iter().enumerate() {
        if e.id != pos {
            out.push(Violation::BadEdgeId { position: pos, id: e.id });
        }
        let mut endpoints_ok = true;
        for x in [e.u, e.v] {
            match x {
                Vertex::Agent(a) if a >= inst.n => {
                    out.push(Violation::UnknownVertex {
                        edge: e.id,
                        vertex: a as i64,
                    });
                    endpoints_ok = false;
                }
                Vertex::Root if !inst.has_root() => {
                    out.push(Violation::RootInMatching { edge: e.id });
                    endpoints_ok = false;
                }
                _ => {}
            }
        }
        if e.u == e.v {
            out.push(Violation::SelfLoop { edge: e.id });
            endpoints_ok = false;
        }
        if let Some(&w) = inst.weights.get(pos) {
            if !w.is_finite() {
                out.push(Violation::NonFiniteWeight { edge: e.id });
            } else if w < 0.0 {
                out.push(Violation::NegativeWeight { edge: e.id, weight: w });
            }
        }
        if endpoints_ok {
            let key = (e.u.min(e.v), e.u.max(e.v));
            if let Some(&first) = seen.get(&key) {
                out.push(Violation::ParallelEdge { edge: e.id, first });
            } else {
                seen.insert(key, e.id);
            }
            match (e.u, e.v) {
                (Vertex::Root, Vertex::Agent(a)) | (Vertex::Agent(a), Vertex::Root) => {
                    root_adjacent.insert(a);
                }
                _ => {}
            }
        }
    }
    if inst.has_root() {
        for a in 0..inst.n {
            if !root_adjacent.contains(&a) {
                out.push(Violation::RootNotAdjacent { agent: a });
            }
        }
    }
    out
}

/// Returns `w + delta * 1_edge`. Every other coordinate is copied bit-for-bit.
pub fn perturb(w: &[f64], edge: usize, delta: f64) -> Result<Vec<f64>> {
    if edge >= w.len() {
        return Err(Error::UnknownEdge(edge));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("perturbation must be positive, got {delta}")));
    }
    let mut out = w.to_vec();
    out[edge] += delta;
    Ok(out)
}

/// A real value per agent. Produced allocations are nonnegative; raw
/// pre-normalization vectors use the same type.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Allocation {
    values: Vec<f64>,
}

impl Allocation {
    pub fn new(values: Vec<f64>) -> Self {
        Allocation { values }
    }

    pub fn zeros(n: usize) -> Self {
        Allocation { values: vec![0.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn coalition_sum(&self, s: Coalition) -> f64 {
        s.members().map(|v| self.values[v]).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Allocation::new(self.values.iter().map(|x| x * factor).collect())
    }
}

impl std::ops::Index<usize> for Allocation {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl From<Vec<f64>> for Allocation {
    fn from(values: Vec<f64>) -> Self {
        Allocation::new(values)
    }
}

/// `∑_v |a_v − b_v|`.
pub fn l1_distance(a: &Allocation, b: &Allocation) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum())
}

/// Scales a nonnegative raw vector so that it sums to `grand`.
///
/// A zero raw vector is only legal when `grand` is zero too.
pub fn normalize(raw: &Allocation, grand: f64) -> Result<Allocation> {
    if grand < 0.0 || raw.values.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParameter("normalization expects nonnegative inputs".into()));
    }
    let total = raw.sum();
    if total == 0.0 {
        if grand == 0.0 {
            return Ok(Allocation::zeros(raw.len()));
        }
        return Err(Error::DegenerateNormalization(grand));
    }
    Ok(raw.scaled(grand / total))
}

/// A set of agents as a bitmask; supports up to 64 agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(pub u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn full(n: usize) -> Self {
        assert!(n <= 64, "coalitions hold at most 64 agents");
        if n == 64 {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << n) - 1)
        }
    }

    pub fn singleton(v: usize) -> Self {
        Coalition(1u64 << v)
    }

    pub fn from_agents(agents: impl IntoIterator<Item = usize>) -> Self {
        Coalition(agents.into_iter().fold(0u64, |m, v| m | (1u64 << v)))
    }

    pub fn contains(self, v: usize) -> bool {
        v < 64 && (self.0 >> v) & 1 == 1
    }

    pub fn with(self, v: usize) -> Self {
        Coalition(self.0 | (1u64 << v))
    }

    pub fn without(self, v: usize) -> Self {
        Coalition(self.0 & !(1u64 << v))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let v = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(v)
            }
        })
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.members().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "v{v}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Coalition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.members())
    }
}

#[derive(Serialize, Deserialize)]
struct WireEdge {
    id: usize,
    u: i64,
    v: i64,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct WireInstance {
    kind: GameKind,
    n: usize,
    edges: Vec<WireEdge>,
}

impl WireInstance {
    fn into_instance(self) -> Result<GameInstance> {
        if let Some(e) = self.edges.iter().find(|e| e.u < -1 || e.v < -1) {
            return Err(Error::InvalidParameter(format!(
                "edge {} uses vertex id below -1 (only -1 denotes the root)",
                e.id
            )));
        }
        let mut edges = self.edges;
        // ids define the tie-breaking order; validation flags gaps or duplicates
        edges.sort_by_key(|e| e.id);
        let vertex = |x: i64| {
            if x < 0 {
                Vertex::Root
            } else {
                Vertex::Agent(x as usize)
            }
        };
        let mut es = Vec::with_capacity(edges.len());
        let mut ws = Vec::with_capacity(edges.len());
        for e in edges {
            es.push(Edge {
                id: e.id,
                u: vertex(e.u),
                v: vertex(e.v),
            });
            ws.push(e.w);
        }
        Ok(GameInstance {
            kind: self.kind,
            n: self.n,
            edges: es,
            weights: ws,
        })
    }

    fn from_instance(inst: &GameInstance) -> Self {
        WireInstance {
            kind: inst.kind,
            n: inst.n,
            edges: inst
                .edges
                .iter()
                .zip(&inst.weights)
                .map(|(e, &w)| WireEdge {
                    id: e.id,
                    u: e.u.wire_id(),
                    v: e.v.wire_id(),
                    w,
                })
                .collect(),
        }
    }
}
