//! Undirected simple graphs, graph collections, and the text formats they
//! are read from.
//!
//! Two on-disk formats are understood:
//!
//! * plain edge lists: one `u v` pair of 0-based node ids per line, `#`
//!   starts a comment, blank lines are ignored;
//! * the TU multi-graph layout: a `DS_A` file with 1-based `i, j` lines (the
//!   separator may be a comma or whitespace), a `DS_graph_indicator` file
//!   with one graph id per node, and an optional `DS_graph_labels` file.
//!
//! Self-loops are rejected everywhere. Every aggregation in this crate adds
//! the node's own contribution explicitly, so a stored loop would count it
//! twice.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("self-loop on node {node}{}", line_suffix(*.line))]
    SelfLoop { node: usize, line: Option<usize> },
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid synthetic graph: {0}")]
    InvalidSpec(String),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

/// Immutable undirected simple graph with dense node ids `0..n`.
///
/// Neighbor lists are sorted ascending; every aggregation in the crate visits
/// neighbors in that order so floating-point results are reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GraphRepr", try_from = "GraphRepr")]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

/// Canonical serialized form: `{"n": .., "edges": [[u, v], ..]}` with
/// `u < v` and edges sorted.
#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr { n: g.node_count(), edges: g.edges().into_iter().map(|(u, v)| [u, v]).collect() }
    }
}

impl TryFrom<GraphRepr> for Graph {
    type Error = GraphError;

    fn try_from(r: GraphRepr) -> Result<Self, Self::Error> {
        Graph::from_edges(r.n, r.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl Graph {
    /// Builds a graph from an edge iterator. Duplicate edges (in either
    /// direction) are merged; self-loops and out-of-range ids are errors.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut sets = vec![BTreeSet::new(); node_count];
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop { node: u, line: None });
            }
            for node in [u, v] {
                if node >= node_count {
                    return Err(GraphError::NodeOutOfRange { node, node_count });
                }
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        let adjacency: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(Graph { adjacency, edge_count })
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(node_count: usize) -> Self {
        Graph { adjacency: vec![Vec::new(); node_count], edge_count: 0 }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Nodes without neighbors, ascending.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| self.degree(v) == 0).collect()
    }

    /// The closed neighborhood `N(v) ∪ {v}` in ascending order.
    pub fn closed_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let nbrs = &self.adjacency[v];
        let split = nbrs.partition_point(|&u| u < v);
        nbrs[..split].iter().copied().chain(std::iter::once(v)).chain(nbrs[split..].iter().copied())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// All edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    /// Checks the structural invariants: sorted duplicate-free neighbor
    /// lists, no loops, symmetry, and the handshake identity.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.node_count();
        let mut degree_sum = 0;
        for (v, nbrs) in self.adjacency.iter().enumerate() {
            if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("neighbor list of {v} is not strictly ascending"));
            }
            for &u in nbrs {
                if u == v {
                    return Err(format!("self-loop on {v}"));
                }
                if u >= n {
                    return Err(format!("neighbor {u} of {v} out of range"));
                }
                if !self.has_edge(u, v) {
                    return Err(format!("edge {v}-{u} is not symmetric"));
                }
            }
            degree_sum += nbrs.len();
        }
        if degree_sum != 2 * self.edge_count {
            return Err(format!("degree sum {degree_sum} != 2m = {}", 2 * self.edge_count));
        }
        Ok(())
    }

    /// Relabels nodes: old node `v` becomes `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph, GraphError> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(GraphError::Format("relabeling is not a permutation".into()));
        }
        Graph::from_edges(n, self.edges().into_iter().map(|(u, v)| (perm[u], perm[v])))
    }

    /// Serializes to the plain edge-list format. A leading `# n=<count>`
    /// comment records the node count so trailing isolated nodes survive a
    /// round trip through [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n={}\n", self.node_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization is infallible")
    }
}

/// Reads the `# n=<count>` header written by [`Graph::to_edge_list`].
pub fn edge_list_node_count(text: &str) -> Option<usize> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .find_map(|c| c.trim().strip_prefix("n=").and_then(|n| n.trim().parse().ok()))
}

/// Parses a whitespace-separated edge list with 0-based node ids.
///
/// The node count is `max(node_count_hint, 1 + largest id seen)`; a
/// `# n=<count>` comment line counts as an additional hint.
pub fn parse_edge_list(text: &str, node_count_hint: Option<usize>) -> Result<Graph, GraphError> {
    let mut edges = Vec::new();
    let mut n = node_count_hint.unwrap_or(0).max(edge_list_node_count(text).unwrap_or(0));
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("expected two node ids, found {} fields", fields.len()),
            });
        }
        let mut ids = [0usize; 2];
        for (slot, field) in ids.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("'{field}' is not a nonnegative integer"),
            })?;
        }
        let [u, v] = ids;
        if u == v {
            return Err(GraphError::SelfLoop { node: u, line: Some(line_no) });
        }
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v));
    }
    Graph::from_edges(n, edges)
}

/// An ordered collection of graphs whose nodes share one global id space.
///
/// Global ids enumerate the nodes of graph 0 first, then graph 1, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CollectionRepr", try_from = "CollectionRepr")]
pub struct GraphCollection {
    graphs: Vec<Graph>,
    labels: Option<Vec<i64>>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CollectionRepr {
    graphs: Vec<Graph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<i64>>,
}

impl From<GraphCollection> for CollectionRepr {
    fn from(c: GraphCollection) -> Self {
        CollectionRepr { graphs: c.graphs, labels: c.labels }
    }
}

impl TryFrom<CollectionRepr> for GraphCollection {
    type Error = GraphError;

    fn try_from(r: CollectionRepr) -> Result<Self, Self::Error> {
        let c = GraphCollection::new(r.graphs);
        match r.labels {
            Some(labels) => c.with_labels(labels),
            None => Ok(c),
        }
    }
}

impl GraphCollection {
    pub fn new(graphs: Vec<Graph>) -> Self {
        let mut offsets = Vec::with_capacity(graphs.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for g in &graphs {
            acc += g.node_count();
            offsets.push(acc);
        }
        GraphCollection { graphs, labels: None, offsets }
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self, GraphError> {
        if labels.len() != self.graphs.len() {
            return Err(GraphError::Format(format!("{} labels for {} graphs", labels.len(), self.graphs.len())));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Total number of nodes over all member graphs.
    pub fn total_nodes(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn global_id(&self, graph: usize, local: usize) -> usize {
        self.offsets[graph] + local
    }

    /// Maps a global node id to `(graph index, local node id)`.
    pub fn node_origin(&self, global: usize) -> (usize, usize) {
        assert!(global < self.total_nodes(), "global node id {global} out of range");
        let graph = self.offsets.partition_point(|&o| o <= global) - 1;
        (graph, global - self.offsets[graph])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Graph> {
        self.graphs.iter()
    }
}

impl From<Graph> for GraphCollection {
    fn from(g: Graph) -> Self {
        GraphCollection::new(vec![g])
    }
}

impl FromIterator<Graph> for GraphCollection {
    fn from_iter<I: IntoIterator<Item = Graph>>(iter: I) -> Self {
        GraphCollection::new(iter.into_iter().collect())
    }
}

fn parse_usize_field(field: &str, line: usize) -> Result<usize, GraphError> {
    field.parse().map_err(|_| GraphError::Parse { line, message: format!("'{field}' is not a nonnegative integer") })
}

/// Parses the TU multi-graph layout.
///
/// Line `i` of `indicator_text` assigns 1-based node `i` to a graph id;
/// graph ids must cover `1..=G` without gaps. Edges are 1-based, may appear
/// in both directions, and must stay inside one graph.
pub fn parse_tu_collection(
    adjacency_text: &str,
    indicator_text: &str,
    labels_text: Option<&str>,
) -> Result<GraphCollection, GraphError> {
    // node (0-based global) -> (graph index, local id)
    let mut origin: Vec<(usize, usize)> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for (idx, raw) in indicator_text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let gid = parse_usize_field(line, idx + 1)?;
        if gid == 0 {
            return Err(GraphError::Parse { line: idx + 1, message: "graph ids are 1-based".into() });
        }
        let g = gid - 1;
        if g >= sizes.len() {
            sizes.resize(g + 1, 0);
        }
        origin.push((g, sizes[g]));
        sizes[g] += 1;
    }
    if let Some(missing) = sizes.iter().position(|&s| s == 0) {
        return Err(GraphError::Format(format!("graph id {} has no nodes (gap in graph ids)", missing + 1)));
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); sizes.len()];
    for (idx, raw) in adjacency_text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        if fields.len() != 2 {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("expected 'i, j', found {} fields", fields.len()),
            });
        }
        let i = parse_usize_field(fields[0], line_no)?;
        let j = parse_usize_field(fields[1], line_no)?;
        for node in [i, j] {
            if node == 0 || node > origin.len() {
                return Err(GraphError::Format(format!(
                    "line {line_no}: node {node} is not declared in the graph indicator"
                )));
            }
        }
        let (gi, li) = origin[i - 1];
        let (gj, lj) = origin[j - 1];
        if gi != gj {
            return Err(GraphError::Format(format!(
                "line {line_no}: edge {i}-{j} crosses graphs {} and {}",
                gi + 1,
                gj + 1
            )));
        }
        if li == lj {
            return Err(GraphError::SelfLoop { node: i, line: Some(line_no) });
        }
        edges[gi].push((li, lj));
    }

    let graphs = sizes.iter().zip(edges).map(|(&n, e)| Graph::from_edges(n, e)).collect::<Result<Vec<_>, _>>()?;
    let collection = GraphCollection::new(graphs);

    match labels_text {
        None => Ok(collection),
        Some(text) => {
            let labels = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(idx, l)| {
                    l.trim().parse::<i64>().map_err(|_| GraphError::Parse {
                        line: idx + 1,
                        message: format!("'{}' is not an integer label", l.trim()),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            collection.with_labels(labels)
        }
    }
}
