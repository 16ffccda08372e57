//! Deterministic synthetic graphs.
//!
//! Besides the usual families this module ships three small graphs whose
//! node 0 (the "red" node) has exactly ten length-2 walks on the
//! self-loop-augmented graph while having degree 1, 2 and 3 respectively.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, GraphCollection, GraphError};
use crate::rng::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticKind {
    ErdosRenyi {
        n: usize,
        p: f64,
    },
    Path {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Star {
        leaves: usize,
    },
    Complete {
        n: usize,
    },
    /// A leaf hanging off a hub of degree 7; red node = the leaf.
    Fig2LeafOnHub,
    /// A degree-2 node whose neighbors have degrees 2 and 3; red node = it.
    Fig2Deg2Node,
    /// Star with three leaves; red node = the center.
    Fig2Star3,
}

impl SyntheticKind {
    /// The distinguished node of the fig2 constructions.
    pub fn red_node(&self) -> Option<usize> {
        match self {
            SyntheticKind::Fig2LeafOnHub | SyntheticKind::Fig2Deg2Node | SyntheticKind::Fig2Star3 => Some(0),
            _ => None,
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, SyntheticKind::ErdosRenyi { .. })
    }

    pub const FIG2: [SyntheticKind; 3] =
        [SyntheticKind::Fig2LeafOnHub, SyntheticKind::Fig2Deg2Node, SyntheticKind::Fig2Star3];
}

/// A synthetic graph request. `seed` only matters for randomized kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub kind: SyntheticKind,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, seed: u64) -> Self {
        SyntheticSpec { kind, seed }
    }
}

fn star_edges(center: usize, leaves: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    leaves.map(|l| (center, l)).collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<Graph, GraphError> {
    let invalid = |msg: String| Err(GraphError::InvalidSpec(msg));
    match spec.kind {
        SyntheticKind::ErdosRenyi { n, p } => {
            if n == 0 {
                return invalid("erdos-renyi needs n >= 1".into());
            }
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("edge probability {p} outside [0, 1]"));
            }
            let mut rng = Prng::new(spec.seed);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.unit() < p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, edges)
        }
        SyntheticKind::Path { n } => {
            if n == 0 {
                return invalid("path needs n >= 1".into());
            }
            Graph::from_edges(n, (1..n).map(|v| (v - 1, v)))
        }
        SyntheticKind::Cycle { n } => {
            if n < 3 {
                return invalid("cycle needs n >= 3".into());
            }
            Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
        }
        SyntheticKind::Star { leaves } => Graph::from_edges(leaves + 1, star_edges(0, 1..=leaves)),
        SyntheticKind::Complete { n } => {
            if n == 0 {
                return invalid("complete graph needs n >= 1".into());
            }
            Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
        }
        // 0 is the red leaf, 1 the hub, 2..=7 the hub's other leaves
        SyntheticKind::Fig2LeafOnHub => {
            let mut edges = vec![(0, 1)];
            edges.extend(star_edges(1, 2..8));
            Graph::from_edges(8, edges)
        }
        // 3 - 1 - 0 - 2 - {4, 5}
        SyntheticKind::Fig2Deg2Node => Graph::from_edges(6, [(0, 1), (0, 2), (1, 3), (2, 4), (2, 5)]),
        SyntheticKind::Fig2Star3 => Graph::from_edges(4, star_edges(0, 1..4)),
    }
}

/// The three fig2 graphs, in the order leaf-on-hub, deg2-node, star3.
pub fn fig2_collection() -> GraphCollection {
    SyntheticKind::FIG2
        .iter()
        .map(|&kind| generate(&SyntheticSpec::new(kind, 0)).expect("fig2 constructions are valid"))
        .collect()
}

/// Parameters for a corpus of Erdős–Rényi graphs with varying size and
/// density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErCorpus {
    pub count: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub min_p: f64,
    pub max_p: f64,
    /// Resample graphs that contain isolated nodes.
    pub no_isolated: bool,
}

impl Default for ErCorpus {
    fn default() -> Self {
        ErCorpus { count: 20, min_nodes: 5, max_nodes: 40, min_p: 0.1, max_p: 0.5, no_isolated: false }
    }
}

const MAX_RESAMPLES: usize = 10_000;

/// Draws `count` graphs. Each graph's size, density and generator seed come
/// from one master stream seeded with `seed`.
pub fn er_corpus(params: &ErCorpus, seed: u64) -> Result<GraphCollection, GraphError> {
    if params.min_nodes == 0 || params.min_nodes > params.max_nodes {
        return Err(GraphError::InvalidSpec("need 1 <= min_nodes <= max_nodes".into()));
    }
    if !(0.0..=1.0).contains(&params.min_p) || !(params.min_p..=1.0).contains(&params.max_p) {
        return Err(GraphError::InvalidSpec("need 0 <= min_p <= max_p <= 1".into()));
    }
    let mut master = Prng::new(seed);
    let mut graphs = Vec::with_capacity(params.count);
    while graphs.len() < params.count {
        let mut attempts = 0;
        let graph = loop {
            let n = master.int_inclusive(params.min_nodes, params.max_nodes);
            let p = master.real(params.min_p, params.max_p);
            let g = generate(&SyntheticSpec::new(SyntheticKind::ErdosRenyi { n, p }, master.next_u64()))?;
            if !params.no_isolated || g.isolated_nodes().is_empty() {
                break g;
            }
            attempts += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(GraphError::InvalidSpec("could not draw a graph without isolated nodes".into()));
            }
        };
        graphs.push(graph);
    }
    Ok(GraphCollection::new(graphs))
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticKind::ErdosRenyi { n, p } => write!(f, "erdos-renyi:n={n},p={p}"),
            SyntheticKind::Path { n } => write!(f, "path:n={n}"),
            SyntheticKind::Cycle { n } => write!(f, "cycle:n={n}"),
            SyntheticKind::Star { leaves } => write!(f, "star:leaves={leaves}"),
            SyntheticKind::Complete { n } => write!(f, "complete:n={n}"),
            SyntheticKind::Fig2LeafOnHub => f.write_str("fig2-leaf-on-hub"),
            SyntheticKind::Fig2Deg2Node => f.write_str("fig2-deg2-node"),
            SyntheticKind::Fig2Star3 => f.write_str("fig2-star3"),
        }
    }
}

/// Parses `kind[:key=value,...]`, e.g. `erdos-renyi:n=30,p=0.2`, `star:leaves=3`
/// or `fig2-star3`.
impl FromStr for SyntheticKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = Vec::new();
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| GraphError::InvalidSpec(format!("expected key=value, got '{pair}'")))?;
            params.push((k.trim(), v.trim()));
        }
        let take = |key: &str| -> Result<&str, GraphError> {
            params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| GraphError::InvalidSpec(format!("{kind} requires '{key}='")))
        };
        let int = |key: &str| -> Result<usize, GraphError> {
            take(key)?.parse().map_err(|_| GraphError::InvalidSpec(format!("'{key}' must be a nonnegative integer")))
        };
        let allowed: &[&str] = match kind {
            "erdos-renyi" | "er" => &["n", "p"],
            "path" | "cycle" | "complete" => &["n"],
            "star" => &["leaves"],
            _ => &[],
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(GraphError::InvalidSpec(format!("unknown parameter '{k}' for {kind}")));
        }
        Ok(match kind {
            "erdos-renyi" | "er" => SyntheticKind::ErdosRenyi {
                n: int("n")?,
                p: take("p")?.parse().map_err(|_| GraphError::InvalidSpec("'p' must be a real number".into()))?,
            },
            "path" => SyntheticKind::Path { n: int("n")? },
            "cycle" => SyntheticKind::Cycle { n: int("n")? },
            "complete" => SyntheticKind::Complete { n: int("n")? },
            "star" => SyntheticKind::Star { leaves: int("leaves")? },
            "fig2-leaf-on-hub" => SyntheticKind::Fig2LeafOnHub,
            "fig2-deg2-node" => SyntheticKind::Fig2Deg2Node,
            "fig2-star3" => SyntheticKind::Fig2Star3,
            other => return Err(GraphError::InvalidSpec(format!("unknown graph kind '{other}'"))),
        })
    }
}
