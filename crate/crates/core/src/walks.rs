//! Walk censuses on the self-loop-augmented graph.
//!
//! A walk of length `k` from `v` is a sequence `v = v_0, v_1, .., v_k` with
//! `v_{i+1} ∈ N(v_i) ∪ {v_i}`. Two statistics are tabulated per node:
//!
//! * the raw count `w_v^(k) = ((A + I)^k 1)_v`, in checked exact integers;
//! * the normalized sum `w̃_v^(k) = (S^k 1)_v` with
//!   `S = (D + I)^(-1/2) (A + I) (D + I)^(-1/2)`, i.e. every walk weighted by
//!   `1 / ((1 + d(v_1)) .. (1 + d(v_{k-1})) sqrt((1 + d(v_0)) (1 + d(v_k))))`.
//!
//! Both are computed by repeated operator application; the brute-force
//! enumerators at the bottom of the module walk every sequence explicitly
//! and serve as independent oracles.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::fmt_real;
use crate::graph::Graph;
use crate::scalar::{Scalar, WalkCount};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalkError {
    #[error("walk count overflow at node {node}, length {length}")]
    Overflow { node: usize, length: usize },
    #[error("enumeration budget of {limit} walk prefixes exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkKind {
    Raw,
    Normalized,
    Both,
}

impl WalkKind {
    pub fn includes(self, other: WalkKind) -> bool {
        self == WalkKind::Both || self == other
    }
}

/// Per-node walk statistics for lengths `0..=max_length`, indexed `[node][length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkTable<T: Scalar = f64> {
    pub max_length: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<Vec<Vec<u128>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    #[serde(bound(deserialize = "T: Scalar"))]
    pub normalized: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> WalkTable<T> {
    pub fn kind(&self) -> Option<WalkKind> {
        match (&self.counts, &self.normalized) {
            (Some(_), Some(_)) => Some(WalkKind::Both),
            (Some(_), None) => Some(WalkKind::Raw),
            (None, Some(_)) => Some(WalkKind::Normalized),
            (None, None) => None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.counts.as_ref().map(Vec::len).or_else(|| self.normalized.as_ref().map(Vec::len)).unwrap_or(0)
    }

    pub fn count(&self, node: usize, length: usize) -> Option<u128> {
        self.counts.as_ref()?.get(node)?.get(length).copied()
    }

    pub fn normalized(&self, node: usize, length: usize) -> Option<T> {
        self.normalized.as_ref()?.get(node)?.get(length).copied()
    }

    /// The statistic of the given kind as a real number. `Both` is not a
    /// single statistic and yields `None`.
    pub fn statistic(&self, kind: WalkKind, node: usize, length: usize) -> Option<T> {
        match kind {
            WalkKind::Raw => self.count(node, length).and_then(T::from_u128),
            WalkKind::Normalized => self.normalized(node, length),
            WalkKind::Both => None,
        }
    }

    /// Column `length` of the given statistic over all nodes.
    pub fn column(&self, kind: WalkKind, length: usize) -> Option<Vec<T>> {
        (0..self.node_count()).map(|v| self.statistic(kind, v, length)).collect()
    }

    /// Combines a raw and a normalized table of equal shape.
    pub fn merge(self, other: WalkTable<T>) -> WalkTable<T> {
        WalkTable {
            max_length: self.max_length.min(other.max_length),
            counts: self.counts.or(other.counts),
            normalized: self.normalized.or(other.normalized),
        }
    }

    /// CSV with header `node,k,count,normalized`; absent statistics leave
    /// their cell empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,k,count,normalized\n");
        for v in 0..self.node_count() {
            for k in 0..=self.max_length {
                let count = self.count(v, k).map(|c| c.to_string()).unwrap_or_default();
                let norm = self.normalized(v, k).map(fmt_real).unwrap_or_default();
                let _ = writeln!(out, "{v},{k},{count},{norm}");
            }
        }
        out
    }
}

/// Exact walk counts in any checked counting type, indexed `[node][length]`.
pub fn count_walks<C: WalkCount>(graph: &Graph, max_length: usize) -> Result<Vec<Vec<C>>, WalkError> {
    let n = graph.node_count();
    let mut table: Vec<Vec<C>> = (0..n).map(|_| vec![C::one()]).collect();
    for length in 1..=max_length {
        for v in 0..n {
            let mut acc = C::zero();
            for u in graph.closed_neighbors(v) {
                acc = acc.checked_add(&table[u][length - 1]).ok_or(WalkError::Overflow { node: v, length })?;
            }
            table[v].push(acc);
        }
    }
    Ok(table)
}

/// Raw walk counts `w_v^(k)` for `k = 0..=max_length`.
pub fn walk_counts(graph: &Graph, max_length: usize) -> Result<WalkTable, WalkError> {
    Ok(WalkTable { max_length, counts: Some(count_walks::<u128>(graph, max_length)?), normalized: None })
}

/// Normalized walk sums `w̃_v^(k)` for `k = 0..=max_length`.
///
/// Each node's sum runs over its closed neighborhood in ascending order.
pub fn normalized_walk_sums<T: Scalar>(graph: &Graph, max_length: usize) -> WalkTable<T> {
    let n = graph.node_count();
    let scale: Vec<T> =
        (0..n).map(|v| T::one() / T::from_usize(graph.degree(v) + 1).expect("degree fits Scalar").sqrt()).collect();
    let mut table: Vec<Vec<T>> = (0..n).map(|_| vec![T::one()]).collect();
    for length in 1..=max_length {
        for v in 0..n {
            let acc = graph.closed_neighbors(v).fold(T::zero(), |acc, u| acc + scale[u] * table[u][length - 1]);
            table[v].push(scale[v] * acc);
        }
    }
    WalkTable { max_length, counts: None, normalized: Some(table) }
}

/// Both statistics in one table.
pub fn walk_census<T: Scalar>(graph: &Graph, max_length: usize) -> Result<WalkTable<T>, WalkError> {
    let raw = WalkTable::<T> { max_length, counts: Some(count_walks::<u128>(graph, max_length)?), normalized: None };
    Ok(raw.merge(normalized_walk_sums(graph, max_length)))
}

/// Default prefix budget for the brute-force enumerators.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

struct Enumerator<'g, F> {
    graph: &'g Graph,
    target: usize,
    budget: u64,
    visited: u64,
    path: Vec<usize>,
    on_walk: F,
}

impl<F: FnMut(&[usize])> Enumerator<'_, F> {
    fn extend(&mut self) -> Result<(), WalkError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(WalkError::BudgetExceeded { limit: self.budget });
        }
        if self.path.len() == self.target + 1 {
            (self.on_walk)(&self.path);
            return Ok(());
        }
        let last = *self.path.last().expect("path starts non-empty");
        // stay put, then every neighbor
        let graph = self.graph;
        for next in std::iter::once(last).chain(graph.neighbors(last).iter().copied()) {
            self.path.push(next);
            self.extend()?;
            self.path.pop();
        }
        Ok(())
    }
}

fn enumerate<F: FnMut(&[usize])>(
    graph: &Graph,
    start: usize,
    length: usize,
    budget: u64,
    on_walk: F,
) -> Result<(), WalkError> {
    if start >= graph.node_count() {
        return Err(WalkError::NodeOutOfRange { node: start, node_count: graph.node_count() });
    }
    let mut e = Enumerator { graph, target: length, budget, visited: 0, path: vec![start], on_walk };
    e.extend()
}

/// Counts walks of `length` steps from `start` by explicit depth-first
/// enumeration. Intended for small graphs only.
pub fn enumerate_walks_bruteforce(graph: &Graph, start: usize, length: usize, budget: u64) -> Result<u128, WalkError> {
    let mut total = 0u128;
    enumerate(graph, start, length, budget, |_| total += 1)?;
    Ok(total)
}

/// Sums the per-walk normalization weight over every walk of `length` steps
/// from `start`. The empty walk (`length = 0`) has weight 1.
pub fn enumerate_normalized_walks_bruteforce<T: Scalar>(
    graph: &Graph,
    start: usize,
    length: usize,
    budget: u64,
) -> Result<T, WalkError> {
    let plus_one = |v: usize| T::from_usize(graph.degree(v) + 1).expect("degree fits Scalar");
    let mut total = T::zero();
    enumerate(graph, start, length, budget, |walk| {
        if walk.len() == 1 {
            total = total + T::one();
            return;
        }
        let (first, last) = (walk[0], walk[walk.len() - 1]);
        let interior: T = walk[1..walk.len() - 1].iter().fold(T::one(), |acc, &x| acc * plus_one(x));
        total = total + T::one() / (interior * (plus_one(first) * plus_one(last)).sqrt());
    })?;
    Ok(total)
}
