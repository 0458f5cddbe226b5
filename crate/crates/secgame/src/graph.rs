//! Attack-graph data model: directed graphs with per-edge baseline attack
//! probabilities, simple-path enumeration, and minimum edge cuts.
//!
//! Nodes are addressed by dense indices internally; string labels are kept
//! for I/O and error messages. The designated source node is the attacker's
//! entry point and must have no incoming edges.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Default ceiling on the number of simple paths enumerated per target.
/// Path counts can be exponential in graph size; we fail loudly past this
/// rather than silently approximating.
pub const DEFAULT_PATH_CAP: usize = 10_000;

/// A directed edge with its baseline attack success probability (the
/// probability when total investment on the edge is zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Baseline success probability, in (0, 1].
    pub p0: f64,
    /// Dense index used for vector addressing of investments.
    pub index: usize,
}

/// Immutable attack graph. All operations on it are pure functions, so a
/// graph can be freely shared across threads.
#[derive(Debug, Clone)]
pub struct AttackGraph {
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    source: usize,
    edges: Vec<Edge>,
    /// Out-edge indices per node.
    out: Vec<Vec<usize>>,
}

impl AttackGraph {
    /// Builds a graph and checks the structural invariants: known labels,
    /// p0 in (0,1], no self-loops, no duplicate (from, to) pairs, and no
    /// edges into the source.
    pub fn new(labels: Vec<String>, source: &str, edge_list: Vec<(String, String, f64)>) -> Result<Self> {
        let mut label_index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate node id {l:?}")));
            }
        }
        let source = *label_index
            .get(source)
            .ok_or_else(|| Error::UnknownNode(source.to_string()))?;

        let mut edges = Vec::with_capacity(edge_list.len());
        let mut out = vec![Vec::new(); labels.len()];
        let mut seen = HashMap::new();
        for (from, to, p0) in edge_list {
            let f = *label_index.get(&from).ok_or_else(|| Error::UnknownNode(from.clone()))?;
            let t = *label_index.get(&to).ok_or_else(|| Error::UnknownNode(to.clone()))?;
            if f == t {
                return Err(Error::Domain(format!("self-loop on node {from:?}")));
            }
            if seen.insert((f, t), ()).is_some() {
                return Err(Error::Domain(format!("duplicate edge ({from:?}, {to:?})")));
            }
            if !(p0 > 0.0 && p0 <= 1.0) || !p0.is_finite() {
                return Err(Error::Domain(format!("edge ({from:?}, {to:?}): p0 {p0} out of (0,1]")));
            }
            if t == source {
                return Err(Error::Domain(format!("source has incoming edge from {from:?}")));
            }
            let index = edges.len();
            out[f].push(index);
            edges.push(Edge { from: f, to: t, p0, index });
        }
        Ok(Self { labels, label_index, source, edges, out })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn node_id(&self, label: &str) -> Result<usize> {
        self.label_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    /// Nodes reachable from the source (including the source itself).
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.labels.len()];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(u) = stack.pop() {
            for &ei in &self.out[u] {
                let v = self.edges[ei].to;
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// All simple directed paths from the source to one target, as edge-index
/// sequences. `truncated` is set when enumeration hit the cap; consumers
/// that need the exhaustive set must call [`PathSet::require_exhaustive`].
#[derive(Debug, Clone)]
pub struct PathSet {
    pub target: usize,
    pub paths: Vec<Vec<usize>>,
    pub truncated: bool,
}

impl PathSet {
    pub fn require_exhaustive(&self, graph: &AttackGraph, cap: usize) -> Result<()> {
        if self.truncated {
            Err(Error::PathsTruncated { target: graph.label(self.target).to_string(), cap })
        } else {
            Ok(())
        }
    }
}

/// Enumerates simple directed paths from the source to `target`, up to `cap`.
///
/// Restriction to simple paths is lossless for probability computations:
/// every edge probability lies in (0,1], so a walk revisiting a node is
/// dominated by its simple sub-path. `target == source` yields one empty
/// path (vulnerability-1 convention).
pub fn enumerate_paths(graph: &AttackGraph, target: usize, cap: usize) -> PathSet {
    let mut paths = Vec::new();
    let mut truncated = false;
    let mut visited = vec![false; graph.node_count()];
    let mut stack: Vec<usize> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        graph: &AttackGraph,
        u: usize,
        target: usize,
        cap: usize,
        visited: &mut [bool],
        stack: &mut Vec<usize>,
        paths: &mut Vec<Vec<usize>>,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        if u == target {
            if paths.len() == cap {
                *truncated = true;
            } else {
                paths.push(stack.clone());
            }
            return;
        }
        visited[u] = true;
        for &ei in &graph.out[u] {
            let v = graph.edges[ei].to;
            if visited[v] {
                continue;
            }
            stack.push(ei);
            dfs(graph, v, target, cap, visited, stack, paths, truncated);
            stack.pop();
        }
        visited[u] = false;
    }

    dfs(graph, graph.source, target, cap, &mut visited, &mut stack, &mut paths, &mut truncated);
    PathSet { target, paths, truncated }
}

/// Unit-capacity max flow from source to target; returns the number of
/// edge-disjoint source->target paths (Menger).
fn max_flow(graph: &AttackGraph, target: usize, removed: &[bool]) -> usize {
    // BFS augmenting paths on residual graph. Unit capacities; residual
    // back-edges stored as a flow flag per edge.
    let n = graph.node_count();
    let mut flow_on = vec![false; graph.edge_count()];
    // incoming edges per node, for residual traversal
    let mut inc = vec![Vec::new(); n];
    for e in graph.edges() {
        inc[e.to].push(e.index);
    }
    let mut total = 0;
    loop {
        // BFS storing the edge and direction used to reach each node
        let mut prev: Vec<Option<(usize, bool)>> = vec![None; n]; // (edge, forward?)
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        seen[graph.source()] = true;
        queue.push_back(graph.source());
        while let Some(u) = queue.pop_front() {
            if u == target {
                break;
            }
            for &ei in &graph.out[u] {
                if removed[ei] || flow_on[ei] {
                    continue;
                }
                let v = graph.edges[ei].to;
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((ei, true));
                    queue.push_back(v);
                }
            }
            for &ei in &inc[u] {
                if removed[ei] || !flow_on[ei] {
                    continue;
                }
                let v = graph.edges[ei].from;
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((ei, false));
                    queue.push_back(v);
                }
            }
        }
        if !seen[target] {
            break;
        }
        let mut u = target;
        while u != graph.source() {
            let (ei, fwd) = prev[u].unwrap();
            flow_on[ei] = fwd;
            u = if fwd { graph.edges[ei].from } else { graph.edges[ei].to };
        }
        total += 1;
    }
    total
}

/// A minimum-cardinality edge set whose removal disconnects the source from
/// `target`. Ties between min-cuts are broken deterministically by choosing
/// the lexicographically smallest edge-index set: edges are scanned in index
/// order and greedily committed whenever they belong to some min-cut of the
/// remaining graph.
pub fn min_edge_cut(graph: &AttackGraph, target: usize) -> Result<Vec<usize>> {
    let mut removed = vec![false; graph.edge_count()];
    let n = max_flow(graph, target, &removed);
    if n == 0 {
        return Err(Error::Unreachable(graph.label(target).to_string()));
    }
    let mut cut = Vec::with_capacity(n);
    let mut remaining = n;
    for ei in 0..graph.edge_count() {
        if remaining == 0 {
            break;
        }
        removed[ei] = true;
        if max_flow(graph, target, &removed) == remaining - 1 {
            cut.push(ei);
            remaining -= 1;
        } else {
            removed[ei] = false;
        }
    }
    debug_assert_eq!(cut.len(), n);
    Ok(cut)
}
