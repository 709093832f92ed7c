//! Stage 1: Steiner relay trunk construction and unit-demand flow routing,
//! plus an exact small-instance Steiner oracle for testing.

use crate::geometry::Point;
use crate::transport_graph::{GraphError, NodeKind, TransportGraph};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

const IMPROVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrunkNode {
    /// Node id in the originating transport graph.
    pub id: usize,
    pub kind: NodeKind,
    pub pos: Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrunkEdge {
    /// Oriented away from the source.
    pub from: usize,
    pub to: usize,
    /// Packages carried across this edge; zero until demands are routed.
    pub flow: u32,
    /// Directed edge cost c(from, to) in seconds.
    pub cost: f64,
}

/// Steiner relay trunk: a tree spanning the source and every goal, with
/// edges oriented away from the source and integer package flows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelayTrunk {
    pub nodes: Vec<TrunkNode>,
    pub edges: Vec<TrunkEdge>,
    pub total_cost: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrunkError {
    #[error("transport graph is disconnected")]
    DisconnectedGraph,
    #[error("goal node {0} is not spanned by the trunk")]
    GoalNotInTrunk(usize),
    #[error("instance too large for the exact solver")]
    InstanceTooLarge,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl RelayTrunk {
    pub fn node_ids(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn node(&self, id: usize) -> Option<&TrunkNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn source_id(&self) -> usize {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::Source)
            .map(|n| n.id)
            .expect("trunk always contains the source")
    }

    /// Parent node id, following edges toward the source.
    pub fn parent(&self, id: usize) -> Option<usize> {
        self.edges.iter().find(|e| e.to == id).map(|e| e.from)
    }

    /// Child node ids in ascending order.
    pub fn children(&self, id: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.from == id)
            .map(|e| e.to)
            .collect();
        c.sort_unstable();
        c
    }

    /// Node ids on the unique source→node path, inclusive.
    pub fn path_from_source(&self, id: usize) -> Vec<usize> {
        let mut rev = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            rev.push(p);
            cur = p;
        }
        rev.reverse();
        rev
    }

    /// Depth-first preorder from the source, children in ascending id order.
    pub fn dfs_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.source_id()];
        while let Some(v) = stack.pop() {
            out.push(v);
            let mut c = self.children(v);
            c.reverse();
            stack.extend(c);
        }
        out
    }

    pub fn edge_mut(&mut self, from: usize, to: usize) -> Option<&mut TrunkEdge> {
        self.edges.iter_mut().find(|e| e.from == from && e.to == to)
    }

    /// Flow arriving at a node (zero for the source).
    pub fn inflow(&self, id: usize) -> u32 {
        self.edges.iter().filter(|e| e.to == id).map(|e| e.flow).sum()
    }

    pub fn outflow(&self, id: usize) -> u32 {
        self.edges.iter().filter(|e| e.from == id).map(|e| e.flow).sum()
    }
}

/// Metric closure over a node subset: shortest-path costs and paths under
/// the symmetric Steiner weight.
struct MetricClosure {
    cost: Vec<Vec<f64>>,
    path: Vec<Vec<Vec<usize>>>,
}

fn metric_closure(g: &TransportGraph) -> MetricClosure {
    let n = g.len();
    let mut cost = vec![vec![0.0; n]; n];
    let mut path = vec![vec![Vec::new(); n]; n];
    for u in 0..n {
        for w in 0..n {
            let (p, c) = g.steiner_shortest_path(u, w);
            cost[u][w] = c;
            path[u][w] = p;
        }
    }
    MetricClosure { cost, path }
}

/// Kruskal MST over `set` with metric-closure weights; ties broken by the
/// lexicographic (u, w) node-id pair. Returns (cost, edges on set members).
fn mst_over(set: &[usize], mc: &MetricClosure) -> (f64, Vec<(usize, usize)>) {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (a, &u) in set.iter().enumerate() {
        for &w in set.iter().skip(a + 1) {
            edges.push((u.min(w), u.max(w)));
        }
    }
    edges.sort_by(|&(a, b), &(c, d)| {
        mc.cost[a][b]
            .partial_cmp(&mc.cost[c][d])
            .unwrap()
            .then((a, b).cmp(&(c, d)))
    });
    let idx: BTreeMap<usize, usize> = set.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::new(set.len());
    let mut out = Vec::with_capacity(set.len().saturating_sub(1));
    let mut total = 0.0;
    for (u, w) in edges {
        if uf.union(idx[&u], idx[&w]) {
            total += mc.cost[u][w];
            out.push((u, w));
        }
    }
    (total, out)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Cost of the terminal-only metric-closure MST (no relay insertion). The
/// trunk heuristic never exceeds this.
pub fn terminal_mst_cost(g: &TransportGraph) -> f64 {
    let mc = metric_closure(g);
    mst_over(&g.terminal_ids(), &mc).0
}

/// Builds the relay trunk: metric-closure MST over the terminals, followed
/// by greedy relay insertion (a relay joins the spanning set while it
/// strictly lowers the MST weight), then expansion of MST edges into
/// shortest paths, cycle repair, leaf pruning, and orientation away from
/// the source. Flows are zero until [`route_demands`] runs.
pub fn build_trunk(g: &TransportGraph) -> Result<RelayTrunk, TrunkError> {
    let terminals = g.terminal_ids();
    if terminals.len() < 2 {
        return Err(GraphError::EmptyGoals.into());
    }
    let mc = metric_closure(g);
    for &t in &terminals {
        if mc.cost[TransportGraph::SOURCE][t].is_infinite() {
            return Err(TrunkError::DisconnectedGraph);
        }
    }

    // Greedy relay insertion: add the relay with the largest MST saving
    // until no relay helps. Ties go to the lowest relay id.
    let relays = g.relay_ids();
    let mut spanning: Vec<usize> = terminals.clone();
    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    let (mut base_cost, mut mst_edges) = mst_over(&spanning, &mc);
    loop {
        let mut best: Option<(f64, usize, Vec<(usize, usize)>)> = None;
        for &r in &relays {
            if chosen.contains(&r) {
                continue;
            }
            let mut trial = spanning.clone();
            trial.push(r);
            trial.sort_unstable();
            let (c, e) = mst_over(&trial, &mc);
            let saving = base_cost - c;
            if saving > IMPROVE_TOL
                && best.as_ref().map_or(true, |(s, _, _)| saving > *s + IMPROVE_TOL)
            {
                best = Some((saving, r, e));
            }
        }
        match best {
            Some((saving, r, e)) => {
                chosen.insert(r);
                spanning.push(r);
                spanning.sort_unstable();
                base_cost -= saving;
                mst_edges = e;
            }
            None => break,
        }
    }

    // Expand each MST edge to its shortest path, introducing any relay
    // nodes the path traverses; dedupe shared edges.
    let mut und_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (u, w) in mst_edges {
        let p = &mc.path[u][w];
        for k in 0..p.len() - 1 {
            let (a, b) = (p[k].min(p[k + 1]), p[k].max(p[k + 1]));
            und_edges.insert((a, b));
        }
    }

    // Cycle repair: the union of expanded paths may contain cycles; a
    // minimum spanning tree of the union removes the maximum-cost edge of
    // each cycle.
    let mut union_nodes: BTreeSet<usize> = BTreeSet::new();
    for &(a, b) in &und_edges {
        union_nodes.insert(a);
        union_nodes.insert(b);
    }
    let union_nodes: Vec<usize> = union_nodes.into_iter().collect();
    let idx: BTreeMap<usize, usize> =
        union_nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut sorted: Vec<(usize, usize)> = und_edges.iter().copied().collect();
    sorted.sort_by(|&(a, b), &(c, d)| {
        g.steiner_weight(a, b)
            .partial_cmp(&g.steiner_weight(c, d))
            .unwrap()
            .then((a, b).cmp(&(c, d)))
    });
    let mut uf = UnionFind::new(union_nodes.len());
    let mut tree_adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (a, b) in sorted {
        if uf.union(idx[&a], idx[&b]) {
            tree_adj.entry(a).or_default().push(b);
            tree_adj.entry(b).or_default().push(a);
        }
    }

    // Prune non-terminal leaves.
    let terminal_set: BTreeSet<usize> = terminals.iter().copied().collect();
    loop {
        let leaf = tree_adj
            .iter()
            .find(|(v, adj)| adj.len() <= 1 && !terminal_set.contains(v))
            .map(|(v, _)| *v);
        match leaf {
            Some(v) => {
                if let Some(adj) = tree_adj.remove(&v) {
                    for a in adj {
                        if let Some(list) = tree_adj.get_mut(&a) {
                            list.retain(|&x| x != v);
                        }
                    }
                }
            }
            None => break,
        }
    }

    // Orient away from the source by BFS, children in ascending id order.
    let mut edges: Vec<TrunkEdge> = Vec::new();
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    let mut queue = std::collections::VecDeque::from([TransportGraph::SOURCE]);
    visited.insert(TransportGraph::SOURCE);
    while let Some(v) = queue.pop_front() {
        let mut adj = tree_adj.get(&v).cloned().unwrap_or_default();
        adj.sort_unstable();
        for a in adj {
            if visited.insert(a) {
                edges.push(TrunkEdge { from: v, to: a, flow: 0, cost: g.cost(v, a) });
                queue.push_back(a);
            }
        }
    }
    for &t in &terminals {
        if !visited.contains(&t) {
            return Err(TrunkError::DisconnectedGraph);
        }
    }

    let mut node_ids: Vec<usize> = visited.into_iter().collect();
    node_ids.sort_unstable();
    let nodes: Vec<TrunkNode> = node_ids
        .iter()
        .map(|&id| TrunkNode { id, kind: g.node(id).kind, pos: g.node(id).pos })
        .collect();
    edges.sort_by_key(|e| (e.from, e.to));
    let total_cost = edges.iter().map(|e| e.cost).sum();
    Ok(RelayTrunk { nodes, edges, total_cost })
}

/// Routes one unit of demand from the source to every goal along its unique
/// tree path, accumulating integer edge flows. Resets any existing flows.
pub fn route_demands(trunk: &mut RelayTrunk) -> Result<(), TrunkError> {
    for e in &mut trunk.edges {
        e.flow = 0;
    }
    let goal_ids: Vec<usize> = trunk
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Goal(_)))
        .map(|n| n.id)
        .collect();
    let source = trunk.source_id();
    for gid in goal_ids {
        let path = trunk.path_from_source(gid);
        if path.first() != Some(&source) {
            return Err(TrunkError::GoalNotInTrunk(gid));
        }
        for k in 0..path.len() - 1 {
            let (from, to) = (path[k], path[k + 1]);
            let e = trunk
                .edge_mut(from, to)
                .ok_or(TrunkError::GoalNotInTrunk(gid))?;
            e.flow += 1;
        }
    }
    Ok(())
}

/// A tree produced by the exact solver.
#[derive(Debug, Clone)]
pub struct SteinerTree {
    pub edges: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Minimum-cost Steiner tree by Dreyfus–Wagner dynamic programming over the
/// symmetric Steiner weight. Test oracle; limited to small instances.
pub fn exact_steiner(g: &TransportGraph) -> Result<SteinerTree, TrunkError> {
    let terminals = g.terminal_ids();
    if terminals.len() > 8 || g.len() > 15 {
        return Err(TrunkError::InstanceTooLarge);
    }
    let n = g.len();
    let mc = metric_closure(g);
    let k = terminals.len();
    if k == 1 {
        return Ok(SteinerTree { edges: vec![], cost: 0.0 });
    }
    // dp[mask][v]: min cost of a tree spanning terminal subset `mask` and
    // node v. Choices recorded for reconstruction.
    #[derive(Clone, Copy)]
    enum Choice {
        Leaf,
        Grow(usize),
        Split(u32),
    }
    let full: u32 = (1 << (k - 1)) - 1; // subsets of terminals[1..], rooted at terminals[0]
    let nonroot: Vec<usize> = terminals[1..].to_vec();
    let mut dp = vec![vec![f64::INFINITY; n]; (full + 1) as usize];
    let mut choice = vec![vec![Choice::Leaf; n]; (full + 1) as usize];
    for (i, &t) in nonroot.iter().enumerate() {
        for v in 0..n {
            dp[1 << i][v] = mc.cost[t][v];
            choice[1 << i][v] = Choice::Grow(t);
        }
    }
    for mask in 1..=full {
        if mask.count_ones() >= 2 {
            for v in 0..n {
                // Split into two nonempty complementary subsets at v.
                let mut sub = (mask - 1) & mask;
                while sub > 0 {
                    if sub < (mask ^ sub) {
                        break; // each unordered split considered once
                    }
                    let c = dp[sub as usize][v] + dp[(mask ^ sub) as usize][v];
                    if c < dp[mask as usize][v] {
                        dp[mask as usize][v] = c;
                        choice[mask as usize][v] = Choice::Split(sub);
                    }
                    sub = (sub - 1) & mask;
                }
            }
        }
        // Relax: grow from u to v via the metric closure.
        for v in 0..n {
            for u in 0..n {
                if u == v {
                    continue;
                }
                let c = dp[mask as usize][u] + mc.cost[u][v];
                if c < dp[mask as usize][v] {
                    dp[mask as usize][v] = c;
                    choice[mask as usize][v] = Choice::Grow(u);
                }
            }
        }
    }
    let root = terminals[0];
    let cost = dp[full as usize][root];

    // Reconstruct edges by unwinding the recorded choices.
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        if mask == 0 {
            continue;
        }
        if mask.count_ones() == 1 {
            let i = mask.trailing_zeros() as usize;
            let t = nonroot[i];
            add_path_edges(&mc.path[t][v], &mut edges);
            continue;
        }
        match choice[mask as usize][v] {
            Choice::Split(sub) => {
                stack.push((sub, v));
                stack.push((mask ^ sub, v));
            }
            Choice::Grow(u) => {
                add_path_edges(&mc.path[u][v], &mut edges);
                stack.push((mask, u));
            }
            Choice::Leaf => {}
        }
    }
    Ok(SteinerTree { edges: edges.into_iter().collect(), cost })
}

fn add_path_edges(path: &[usize], edges: &mut BTreeSet<(usize, usize)>) {
    for k in 0..path.len().saturating_sub(1) {
        let (a, b) = (path[k].min(path[k + 1]), path[k].max(path[k + 1]));
        edges.insert((a, b));
    }
}
