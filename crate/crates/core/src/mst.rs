//! Cost sharing for the minimum spanning tree game.
//!
//! Weights are rounded up to powers of two (offset `b`), and Kruskal's
//! algorithm on the rounded weights is replayed as a merge tree: leaves are
//! the agents plus the root `r`, and every merge of components at weight `x`
//! becomes an internal node of height `x`. Each tree edge `(u, u′)` whose
//! subtree avoids `r` splits `h_u` evenly over the agents below `u′`.
//! Integrating over `b` and scaling to `ν(V)` gives a 4-approximate core
//! allocation with Lipschitz constant `20/ln 2 + 1`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::game::{normalize, Allocation, Coalition, GameInstance, GameKind, Vertex};
use crate::oracles;
use crate::rounding::{self, Base, BreakpointDecomposition, RoundedWeights};

/// Rounded weights closer than this are processed as one Kruskal step.
pub const HEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub height: f64,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// Graph vertex for leaves.
    pub leaf: Option<Vertex>,
    /// Number of agent leaves in the subtree.
    pub agents: usize,
    pub contains_root: bool,
}

/// Merge tree of Kruskal's algorithm.
///
/// Node `v` for `v < n` is the leaf of agent `v`, node `n` is the leaf of the
/// root vertex, and internal nodes follow in creation order, so every child
/// has a smaller index than its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryTree {
    n: usize,
    nodes: Vec<TreeNode>,
    top: usize,
}

impl AuxiliaryTree {
    pub fn num_agents(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn agent_leaf(&self, v: usize) -> usize {
        v
    }

    pub fn root_leaf(&self) -> usize {
        self.n
    }

    /// Tree edges `(parent, child)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, node)| node.parent.map(|p| (p, i)))
    }

    /// Agents below `node`.
    pub fn agents_below(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            match self.nodes[u].leaf {
                Some(Vertex::Agent(v)) => out.push(v),
                Some(Vertex::Root) => {}
                None => stack.extend(&self.nodes[u].children),
            }
        }
        out.sort_unstable();
        out
    }

    /// JSON form used by `--dump-tree`.
    pub fn to_json_value(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Node {
            id: usize,
            h: f64,
            children: Vec<usize>,
            leaf: Option<i64>,
        }
        #[derive(Serialize)]
        struct Tree {
            nodes: Vec<Node>,
        }
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| Node {
                id,
                h: node.height,
                children: node.children.clone(),
                leaf: node.leaf.map(|v| match v {
                    Vertex::Agent(a) => a as i64,
                    Vertex::Root => -1,
                }),
            })
            .collect();
        serde_json::to_value(Tree { nodes }).expect("tree serializes")
    }
}

pub fn round_weights_mst(w: &[f64], b: f64) -> Result<RoundedWeights> {
    rounding::round_weights(w, b, Base::TWO)
}

/// Builds the merge tree of Kruskal's algorithm on `weights` over the graph
/// of `inst`.
pub fn auxiliary_tree(inst: &GameInstance, weights: &[f64]) -> Result<AuxiliaryTree> {
    inst.expect_kind(GameKind::MinSpanningTree)?;
    if weights.len() != inst.num_edges() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} edges",
            weights.len(),
            inst.num_edges()
        )));
    }
    let n = inst.n();
    let mut nodes: Vec<TreeNode> = (0..=n)
        .map(|i| TreeNode {
            height: 0.0,
            children: Vec::new(),
            parent: None,
            leaf: Some(if i < n { Vertex::Agent(i) } else { Vertex::Root }),
            agents: usize::from(i < n),
            contains_root: i == n,
        })
        .collect();
    let mut order: Vec<usize> = (0..inst.num_edges()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));

    let mut dsu = DisjointSet::new(n + 1);
    let mut comp_node: Vec<usize> = (0..=n).collect();
    let mut i = 0;
    while i < order.len() {
        let x = weights[order[i]];
        let mut j = i;
        while j < order.len() && weights[order[j]] - x <= HEIGHT_TOL {
            j += 1;
        }
        // components present just below x that this step touches
        let mut touched = Vec::new();
        for &e in &order[i..j] {
            let edge = inst.edges()[e];
            for end in [edge.u.index(n), edge.v.index(n)] {
                let r = dsu.find(end);
                touched.push((r, comp_node[r]));
            }
        }
        for &e in &order[i..j] {
            let edge = inst.edges()[e];
            dsu.union(edge.u.index(n), edge.v.index(n));
        }
        let mut merged: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (old_root, old_node) in touched {
            let r = dsu.find(old_root);
            let kids = merged.entry(r).or_default();
            if !kids.contains(&old_node) {
                kids.push(old_node);
            }
        }
        for (r, mut kids) in merged {
            if kids.len() < 2 {
                continue;
            }
            kids.sort_unstable();
            let id = nodes.len();
            let mut agents = 0;
            let mut contains_root = false;
            for &k in &kids {
                nodes[k].parent = Some(id);
                agents += nodes[k].agents;
                contains_root |= nodes[k].contains_root;
            }
            nodes.push(TreeNode {
                height: x,
                children: kids,
                parent: None,
                leaf: None,
                agents,
                contains_root,
            });
            comp_node[r] = id;
        }
        i = j;
    }
    let top = comp_node[dsu.find(n)];
    if nodes[top].agents != n {
        return Err(Error::Precondition("graph is not connected through the root".into()));
    }
    Ok(AuxiliaryTree { n, nodes, top })
}

/// Per-agent share of a tree: every edge `(u, u′)` with `r ∉ T_{u′}` splits
/// `h_u` evenly over the agents below `u′`.
pub fn tree_allocation(tree: &AuxiliaryTree) -> Vec<f64> {
    let mut z = vec![0.0; tree.n];
    for (v, zv) in z.iter_mut().enumerate() {
        let mut node = tree.agent_leaf(v);
        // once a subtree holds r, every ancestor does too
        while let Some(p) = tree.nodes[node].parent {
            if tree.nodes[node].contains_root {
                break;
            }
            *zv += tree.nodes[p].height / tree.nodes[node].agents as f64;
            node = p;
        }
    }
    z
}

/// One fixed-offset run of the spanning tree allocator.
#[derive(Clone, Debug)]
pub struct MstTrace {
    pub rounded: RoundedWeights,
    pub tree: AuxiliaryTree,
    pub raw: Vec<f64>,
}

pub fn mst_allocate(inst: &GameInstance, b: f64) -> Result<MstTrace> {
    inst.expect_kind(GameKind::MinSpanningTree)?;
    let rounded = round_weights_mst(inst.weights(), b)?;
    let tree = auxiliary_tree(inst, &rounded.rounded)?;
    let raw = tree_allocation(&tree);
    Ok(MstTrace { rounded, tree, raw })
}

/// `∑ (h_u − h_{u′})` over edges `(u, u′)` of the connector of `S ∪ {r}`
/// whose lower subtree avoids `r`.
pub fn connector_sum(tree: &AuxiliaryTree, s: Coalition) -> f64 {
    let mut marked = vec![0usize; tree.nodes.len()];
    for v in s.members() {
        marked[tree.agent_leaf(v)] = 1;
    }
    let mut total = 0.0;
    // children precede parents
    for i in 0..tree.nodes.len() {
        let node = &tree.nodes[i];
        if node.leaf.is_none() {
            marked[i] = node.children.iter().map(|&c| marked[c]).sum();
        }
        if let Some(p) = node.parent {
            if !node.contains_root && marked[i] > 0 {
                total += tree.nodes[p].height - node.height;
            }
        }
    }
    total
}

pub fn breakpoints_mst(w: &[f64]) -> BreakpointDecomposition {
    rounding::breakpoints(w, Base::TWO)
}

/// `∫₀¹ z(b) db`; the tree shape is fixed on every breakpoint interval and
/// all heights scale as `2^b` there.
pub fn integrate_mst(inst: &GameInstance) -> Result<Allocation> {
    inst.expect_kind(GameKind::MinSpanningTree)?;
    let decomp = breakpoints_mst(inst.weights());
    let raw = rounding::integrate_piecewise(inst.n(), &decomp, Base::TWO, |b| mst_allocate(inst, b).map(|t| t.raw))?;
    Ok(Allocation::new(raw))
}

/// `10 / ln 2`.
pub fn raw_lipschitz_bound() -> f64 {
    10.0 / std::f64::consts::LN_2
}

/// `20 / ln 2 + 1`.
pub fn lipschitz_bound() -> f64 {
    2.0 * raw_lipschitz_bound() + 1.0
}

pub const CORE_FACTOR: f64 = 4.0;

/// 4-approximate core allocation: the integral scaled to sum to `ν(V)`.
pub fn theorem2_allocate(inst: &GameInstance) -> Result<Allocation> {
    let raw = integrate_mst(inst)?;
    let grand = oracles::mst_weight_all(inst)?;
    normalize(&raw, grand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{core_check, CoreTolerance};
    use crate::game::l1_distance;
    use crate::instances::gen_random;
    use crate::oracles::{char_table, mst_weight};

    fn agent(v: usize) -> Vertex {
        Vertex::Agent(v)
    }

    fn three_vertex(w: [f64; 3]) -> GameInstance {
        GameInstance::new(
            GameKind::MinSpanningTree,
            2,
            vec![(Vertex::Root, agent(0), w[0]), (agent(0), agent(1), w[1]), (Vertex::Root, agent(1), w[2])],
        )
    }

    #[test]
    fn tree_for_three_vertices() {
        let inst = three_vertex([1.0, 2.0, 4.0]);
        let t = auxiliary_tree(&inst, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(t.nodes().len(), 5);
        let a = t.node(3);
        assert_eq!((a.height, a.children.clone()), (1.0, vec![0, 2]));
        let b = t.node(4);
        assert_eq!((b.height, b.children.clone()), (2.0, vec![1, 3]));
        assert_eq!(t.top(), 4);
        assert_eq!(tree_allocation(&t), vec![1.0, 2.0]);
    }

    #[test]
    fn single_agent_tree() {
        let inst = GameInstance::new(GameKind::MinSpanningTree, 1, vec![(Vertex::Root, agent(0), 3.0)]);
        let t = auxiliary_tree(&inst, &[3.0]).unwrap();
        assert_eq!(t.nodes().len(), 3);
        assert_eq!(t.node(2).height, 3.0);
        assert_eq!(t.node(2).children, vec![0, 1]);
        assert_eq!(tree_allocation(&t), vec![3.0]);
        let trace = mst_allocate(&inst, 0.25).unwrap();
        assert_eq!(trace.raw, vec![trace.rounded.rounded[0]]);
    }

    #[test]
    fn equal_weights_merge_at_once() {
        let inst = gen_random(GameKind::MinSpanningTree, 5, 1.0, 1.0, 3).unwrap();
        let c = vec![2.5; inst.num_edges()];
        let t = auxiliary_tree(&inst, &c).unwrap();
        assert_eq!(t.nodes().len(), 7);
        assert_eq!(t.node(t.top()).children, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(t.node(t.top()).height, 2.5);
    }

    #[test]
    fn zero_weights_form_height_zero_nodes() {
        let inst = three_vertex([0.0, 0.0, 1.0]);
        let t = auxiliary_tree(&inst, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.nodes().len(), 4);
        assert_eq!(t.node(t.top()).height, 0.0);
        assert_eq!(tree_allocation(&t), vec![0.0, 0.0]);
    }

    #[test]
    fn rounding_examples() {
        let r = round_weights_mst(&[1.0, 3.0, 0.0], 0.0).unwrap();
        assert_eq!(r.exponents, vec![Some(0), Some(1), None]);
        assert_eq!(r.rounded, vec![2.0, 4.0, 0.0]);
    }

    #[test]
    fn connector_examples() {
        let inst = three_vertex([1.0, 2.0, 4.0]);
        let hat = [1.0, 2.0, 4.0];
        let t = auxiliary_tree(&inst, &hat).unwrap();
        let ghat = inst.with_weights(hat.to_vec()).unwrap();
        assert_eq!(connector_sum(&t, Coalition::full(2)), 3.0);
        assert_eq!(mst_weight(&ghat, Coalition::full(2)).unwrap(), 3.0);
        assert_eq!(connector_sum(&t, Coalition::EMPTY), 0.0);
        for v in 0..2 {
            let s = Coalition::singleton(v);
            assert!(connector_sum(&t, s) <= mst_weight(&ghat, s).unwrap() + 1e-12);
        }
    }

    #[test]
    fn breakpoint_examples() {
        assert_eq!(breakpoints_mst(&[1.0, 2.0, 4.0]).points(), &[0.0, 1.0]);
        assert_eq!(breakpoints_mst(&[3.0]).points().len(), 3);
        assert_eq!(breakpoints_mst(&[0.0]).points(), &[0.0, 1.0]);
    }

    #[test]
    fn integrate_examples() {
        let inst = GameInstance::new(GameKind::MinSpanningTree, 1, vec![(Vertex::Root, agent(0), 1.0)]);
        let x = integrate_mst(&inst).unwrap();
        assert!((x[0] - 1.0 / 2f64.ln()).abs() < 1e-12);
        let zero = integrate_mst(&three_vertex([0.0, 0.0, 0.0])).unwrap();
        assert_eq!(zero.values(), &[0.0, 0.0]);
    }

    #[test]
    fn theorem2_examples() {
        let single = GameInstance::new(GameKind::MinSpanningTree, 1, vec![(Vertex::Root, agent(0), 2.75)]);
        assert!((theorem2_allocate(&single).unwrap()[0] - 2.75).abs() < 1e-12);

        let inst = three_vertex([1.0, 2.0, 4.0]);
        let x = theorem2_allocate(&inst).unwrap();
        assert!((x.sum() - 3.0).abs() < 1e-9);
        assert!(x[0] <= 4.0 + 1e-9 && x[1] <= 16.0 + 1e-9);
        assert!(core_check(&inst, &x, 4.0, CoreTolerance::default()).unwrap().pass);

        for seed in 0..20 {
            let inst = gen_random(GameKind::MinSpanningTree, 6, 0.4, 10.0, seed).unwrap();
            let x = theorem2_allocate(&inst).unwrap();
            assert!((x.sum() - oracles::mst_weight_all(&inst).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn tree_and_allocation_invariants() {
        for seed in 0..25 {
            let n = 2 + seed as usize % 7;
            let inst = gen_random(GameKind::MinSpanningTree, n, 0.5, 10.0, seed).unwrap();
            let table = char_table(&inst).unwrap();
            for b in [0.0, 0.3, 0.77] {
                let trace = mst_allocate(&inst, b).unwrap();
                let t = &trace.tree;
                let ghat = inst.with_weights(trace.rounded.rounded.clone()).unwrap();
                // leaves and heights
                for (i, node) in t.nodes().iter().enumerate() {
                    if i <= n {
                        assert!(node.leaf.is_some() && node.height == 0.0);
                    } else {
                        assert!(node.children.len() >= 2);
                        for &c in &node.children {
                            let ch = t.node(c).height;
                            if c > n {
                                assert!(node.height > ch);
                            }
                            if ch > 0.0 {
                                assert!(node.height >= 2.0 * ch * (1.0 - 1e-12));
                            }
                        }
                    }
                }
                // connector identity and bound
                for mask in 0..(1u64 << n) {
                    let s = Coalition(mask);
                    let c = connector_sum(t, s);
                    let m = mst_weight(&ghat, s).unwrap();
                    assert!(c <= m + 1e-9);
                    if mask == (1 << n) - 1 {
                        assert!((c - m).abs() < 1e-9);
                    }
                    let zs: f64 = s.members().map(|v| trace.raw[v]).sum();
                    assert!(zs <= 4.0 * table.value(s) + 1e-9);
                }
                assert!(trace.raw.iter().sum::<f64>() >= table.grand() - 1e-9);
            }
        }
    }

    #[test]
    fn fixed_offset_perturbation_structure() {
        for seed in 0..20 {
            let inst = gen_random(GameKind::MinSpanningTree, 5, 0.5, 6.0, seed).unwrap();
            for f in 0..inst.num_edges() {
                let wf = inst.weights()[f];
                for delta in [wf, wf * 0.3, wf * 0.01] {
                    let bumped = inst.perturbed(f, delta).unwrap();
                    for b in [0.05, 0.4, 0.9] {
                        let z = mst_allocate(&inst, b).unwrap();
                        let z2 = mst_allocate(&bumped, b).unwrap();
                        let (hf, hf2) = (z.rounded.rounded[f], z2.rounded.rounded[f]);
                        let d: f64 = z.raw.iter().zip(&z2.raw).map(|(a, c)| (a - c).abs()).sum();
                        if hf == hf2 {
                            assert_eq!(z.raw, z2.raw);
                        } else {
                            assert!(d <= hf + 2.0 * hf2 + 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn integrated_perturbation_ratio() {
        for seed in 0..10 {
            let inst = gen_random(GameKind::MinSpanningTree, 5, 0.5, 6.0, seed).unwrap();
            let x = integrate_mst(&inst).unwrap();
            for f in 0..inst.num_edges() {
                let wf = inst.weights()[f];
                for delta in [wf, wf * 0.1] {
                    let y = integrate_mst(&inst.perturbed(f, delta).unwrap()).unwrap();
                    assert!(l1_distance(&x, &y).unwrap() / delta <= raw_lipschitz_bound() + 1e-6);
                }
            }
        }
    }

    #[test]
    fn tree_json_shape() {
        let inst = three_vertex([1.0, 2.0, 4.0]);
        let t = auxiliary_tree(&inst, &[1.0, 2.0, 4.0]).unwrap();
        let v = t.to_json_value();
        let nodes = v["nodes"].as_array().unwrap();
        assert_eq!(nodes.len(), 5);
        assert_eq!(nodes[2]["leaf"], -1);
        assert_eq!(nodes[4]["children"], serde_json::json!([1, 3]));
        assert!(nodes[4]["leaf"].is_null());
    }
}
