//! Pairwise-distance statistics and the checks built on them: correlation of
//! embedding distances with walk distances, collapse, proportionality,
//! readout census and walk collisions.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::fmt_real;
use crate::generate::{fig2_collection, SyntheticKind};
use crate::graph::GraphCollection;
use crate::mpnn::{forward, readout, EmbeddingTable, ReadoutMode};
use crate::nn::{Model, ModelError, Variant};
use crate::scalar::{distance2, norm2, Scalar};
use crate::walks::{walk_census, walk_counts, WalkError, WalkKind, WalkTable};

/// Variances at or below this make a correlation degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-24;
pub const SUM_READOUT_TOL: f64 = 1e-9;
pub const MEAN_READOUT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// Distances over all unordered node pairs of a collection, `v < u` in
/// lexicographic order of global ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceSet {
    pub pairs: Vec<(usize, usize)>,
    pub values: Vec<f64>,
}

impl DistanceSet {
    fn from_fn(n: usize, mut dist: impl FnMut(usize, usize) -> f64) -> Self {
        let cap = n * n.saturating_sub(1) / 2;
        let mut pairs = Vec::with_capacity(cap);
        let mut values = Vec::with_capacity(cap);
        for v in 0..n {
            for u in v + 1..n {
                pairs.push((v, u));
                values.push(dist(v, u));
            }
        }
        DistanceSet { pairs, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Euclidean distances between layer-`k` rows, across all tables jointly.
pub fn embedding_distances<T: Scalar>(tables: &[EmbeddingTable<T>], k: usize) -> Result<DistanceSet, AnalysisError> {
    let mut rows: Vec<&[T]> = Vec::new();
    for t in tables {
        if k > t.depth() {
            return Err(ModelError::LayerOutOfRange { layer: k, depth: t.depth() }.into());
        }
        rows.extend((0..t.node_count()).map(|v| t.row(k, v)));
    }
    Ok(DistanceSet::from_fn(rows.len(), |v, u| distance2(rows[v], rows[u]).as_f64()))
}

/// `|s_v − s_u|` for the length-`k` walk statistic, across all tables.
/// Raw counts are differenced exactly before conversion.
pub fn walk_distances<T: Scalar>(
    tables: &[WalkTable<T>],
    kind: WalkKind,
    k: usize,
) -> Result<DistanceSet, AnalysisError> {
    let missing = || AnalysisError::Usage(format!("walk tables lack {kind:?} statistics up to length {k}"));
    match kind {
        WalkKind::Raw => {
            let mut counts = Vec::new();
            for t in tables {
                for v in 0..t.node_count() {
                    counts.push(t.count(v, k).ok_or_else(missing)?);
                }
            }
            Ok(DistanceSet::from_fn(counts.len(), |v, u| counts[v].abs_diff(counts[u]) as f64))
        }
        WalkKind::Normalized => {
            let mut sums = Vec::new();
            for t in tables {
                sums.extend(t.column(kind, k).ok_or_else(missing)?);
            }
            Ok(DistanceSet::from_fn(sums.len(), |v, u| (sums[v] - sums[u]).abs().as_f64()))
        }
        WalkKind::Both => Err(AnalysisError::Usage("pick one walk statistic".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "r", rename_all = "kebab-case")]
pub enum Pearson {
    Correlated(f64),
    /// One side has (numerically) zero variance.
    Degenerate,
}

impl Pearson {
    pub fn value(self) -> Option<f64> {
        match self {
            Pearson::Correlated(r) => Some(r),
            Pearson::Degenerate => None,
        }
    }

    pub fn is_degenerate(self) -> bool {
        self == Pearson::Degenerate
    }
}

/// Sample Pearson correlation, two-pass, clamped to `[-1, 1]`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Pearson, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    let n = xs.len();
    if n < 2 {
        return Err(AnalysisError::TooFewSamples(n));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let dof = (n - 1) as f64;
    if sxx / dof <= DEGENERATE_VARIANCE || syy / dof <= DEGENERATE_VARIANCE {
        return Ok(Pearson::Degenerate);
    }
    Ok(Pearson::Correlated((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Scatter data behind a correlation: one row per node pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub pairs: Vec<(usize, usize)>,
    pub walk_dist: Vec<f64>,
    pub embed_dist: Vec<f64>,
}

impl Scatter {
    /// CSV with header `pair_v,pair_u,walk_dist,embed_dist`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_v,pair_u,walk_dist,embed_dist\n");
        for (i, (v, u)) in self.pairs.iter().enumerate() {
            let _ = writeln!(out, "{v},{u},{},{}", fmt_real(self.walk_dist[i]), fmt_real(self.embed_dist[i]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub variant: Variant,
    pub layer: usize,
    pub walk_kind: WalkKind,
    pub pearson_r: Option<f64>,
    pub pair_count: usize,
    pub degenerate: bool,
    #[serde(skip)]
    pub scatter: Scatter,
}

/// Walk statistic an embedding of `variant` is compared against: normalized
/// sums for GCN, raw counts otherwise.
pub fn correlation_walk_kind(variant: Variant) -> WalkKind {
    match variant {
        Variant::Gcn => WalkKind::Normalized,
        _ => WalkKind::Raw,
    }
}

/// Correlates layer-`k` embedding distances with walk distances over every
/// node pair of the collection.
pub fn correlate<T: Scalar>(
    collection: &GraphCollection,
    model: &Model<T>,
    k: usize,
) -> Result<CorrelationReport, AnalysisError> {
    if k == 0 || k > model.depth() {
        return Err(ModelError::LayerOutOfRange { layer: k, depth: model.depth() }.into());
    }
    let kind = correlation_walk_kind(model.variant());
    let mut tables = Vec::with_capacity(collection.len());
    let mut walks = Vec::with_capacity(collection.len());
    for g in collection.iter() {
        tables.push(forward(g, model)?);
        walks.push(walk_census::<T>(g, k)?);
    }
    let embed = embedding_distances(&tables, k)?;
    let walk = walk_distances(&walks, kind, k)?;
    let r = if embed.len() < 2 { Pearson::Degenerate } else { pearson(&walk.values, &embed.values)? };
    Ok(CorrelationReport {
        variant: model.variant(),
        layer: k,
        walk_kind: kind,
        pearson_r: r.value(),
        pair_count: embed.len(),
        degenerate: r.is_degenerate(),
        scatter: Scatter { pairs: embed.pairs, walk_dist: walk.values, embed_dist: embed.values },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub layer: usize,
    pub rel_tol: f64,
    /// Largest pairwise row distance over `1 + max row norm`.
    pub max_deviation: f64,
    pub max_distance: f64,
    pub max_row_norm: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub passed: bool,
}

/// Checks that every node of every table has the same layer-`k` row.
pub fn collapse_check_collection<T: Scalar>(
    tables: &[EmbeddingTable<T>],
    k: usize,
    rel_tol: f64,
) -> Result<CollapseReport, AnalysisError> {
    let mut rows: Vec<&[T]> = Vec::new();
    for t in tables {
        if k > t.depth() {
            return Err(ModelError::LayerOutOfRange { layer: k, depth: t.depth() }.into());
        }
        rows.extend((0..t.node_count()).map(|v| t.row(k, v)));
    }
    let max_row_norm = rows.iter().map(|r| norm2(r).as_f64()).fold(0.0, f64::max);
    let (mut max_distance, mut worst_pair) = (0.0, None);
    for v in 0..rows.len() {
        for u in v + 1..rows.len() {
            let d = distance2(rows[v], rows[u]).as_f64();
            if worst_pair.is_none() || d > max_distance {
                max_distance = d;
                worst_pair = Some((v, u));
            }
        }
    }
    let max_deviation = max_distance / (1.0 + max_row_norm);
    Ok(CollapseReport {
        layer: k,
        rel_tol,
        max_deviation,
        max_distance,
        max_row_norm,
        worst_pair,
        passed: max_deviation <= rel_tol,
    })
}

pub fn collapse_check<T: Scalar>(
    table: &EmbeddingTable<T>,
    k: usize,
    rel_tol: f64,
) -> Result<CollapseReport, AnalysisError> {
    collapse_check_collection(std::slice::from_ref(table), k, rel_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionalityReport {
    pub layer: usize,
    pub walk_kind: WalkKind,
    pub rel_tol: f64,
    /// Largest `max_c |h_v[c]·s_u − h_u[c]·s_v|`, relative to the larger of
    /// the two scaled rows' max norms.
    pub max_violation: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub passed: bool,
}

fn proportionality_violation<T: Scalar>(hv: &[T], hu: &[T], sv: T, su: T) -> f64 {
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (&a, &b) in hv.iter().zip(hu) {
        let (x, y) = ((a * su).as_f64(), (b * sv).as_f64());
        diff = diff.max((x - y).abs());
        scale = scale.max(x.abs()).max(y.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Checks `h_v · s_u = h_u · s_v` for all node pairs across the inputs.
pub fn proportionality_check_collection<T: Scalar>(
    inputs: &[(&EmbeddingTable<T>, &WalkTable<T>)],
    kind: WalkKind,
    k: usize,
    rel_tol: f64,
) -> Result<ProportionalityReport, AnalysisError> {
    if kind == WalkKind::Both {
        return Err(AnalysisError::Usage("pick one walk statistic".into()));
    }
    let mut nodes: Vec<(&[T], T)> = Vec::new();
    for (table, walks) in inputs {
        if k > table.depth() {
            return Err(ModelError::LayerOutOfRange { layer: k, depth: table.depth() }.into());
        }
        let column = walks
            .column(kind, k)
            .ok_or_else(|| AnalysisError::Usage(format!("walk table lacks {kind:?} statistics up to length {k}")))?;
        if column.len() != table.node_count() {
            return Err(AnalysisError::LengthMismatch { left: table.node_count(), right: column.len() });
        }
        nodes.extend(column.into_iter().enumerate().map(|(v, s)| (table.row(k, v), s)));
    }
    let (mut max_violation, mut worst_pair) = (0.0, None);
    for (v, &(hv, sv)) in nodes.iter().enumerate() {
        for (u, &(hu, su)) in nodes.iter().enumerate().skip(v + 1) {
            let x = proportionality_violation(hv, hu, sv, su);
            if worst_pair.is_none() || x > max_violation {
                max_violation = x;
                worst_pair = Some((v, u));
            }
        }
    }
    Ok(ProportionalityReport {
        layer: k,
        walk_kind: kind,
        rel_tol,
        max_violation,
        worst_pair,
        passed: max_violation <= rel_tol,
    })
}

pub fn proportionality_check<T: Scalar>(
    table: &EmbeddingTable<T>,
    walks: &WalkTable<T>,
    kind: WalkKind,
    k: usize,
    rel_tol: f64,
) -> Result<ProportionalityReport, AnalysisError> {
    proportionality_check_collection(&[(table, walks)], kind, k, rel_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub variant: Variant,
    pub mode: ReadoutMode,
    pub tolerance: f64,
    pub graph_sizes: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// For a collapsing model: sum readouts scale with node count, mean
/// readouts coincide. Graphs without nodes are skipped in mean mode.
pub fn readout_census<T: Scalar>(
    collection: &GraphCollection,
    model: &Model<T>,
    mode: ReadoutMode,
) -> Result<ReadoutReport, AnalysisError> {
    if !model.variant().collapses() {
        return Err(AnalysisError::Usage(format!("{:?} does not collapse node representations", model.variant())));
    }
    let mut graph_sizes = Vec::with_capacity(collection.len());
    let mut vectors = Vec::with_capacity(collection.len());
    for g in collection.iter() {
        let table = forward(g, model)?;
        graph_sizes.push(g.node_count());
        vectors.push(readout(&table, mode).into_iter().map(|x| x.as_f64()).collect::<Vec<f64>>());
    }
    let mut max_deviation = 0.0f64;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let dev = match mode {
                ReadoutMode::Sum => {
                    // n_j · r_i against n_i · r_j
                    let (ni, nj) = (graph_sizes[i] as f64, graph_sizes[j] as f64);
                    let (mut diff, mut scale) = (0.0f64, 0.0f64);
                    for (&a, &b) in vectors[i].iter().zip(&vectors[j]) {
                        let (x, y) = (nj * a, ni * b);
                        diff = diff.max((x - y).abs());
                        scale = scale.max(x.abs()).max(y.abs());
                    }
                    if scale == 0.0 {
                        0.0
                    } else {
                        diff / scale
                    }
                }
                ReadoutMode::Mean => {
                    if graph_sizes[i] == 0 || graph_sizes[j] == 0 {
                        continue;
                    }
                    let norm = norm2(&vectors[i]).max(norm2(&vectors[j]));
                    distance2(&vectors[i], &vectors[j]) / (1.0 + norm)
                }
            };
            max_deviation = max_deviation.max(dev);
        }
    }
    let tolerance = match mode {
        ReadoutMode::Sum => SUM_READOUT_TOL,
        ReadoutMode::Mean => MEAN_READOUT_TOL,
    };
    Ok(ReadoutReport {
        variant: model.variant(),
        mode,
        tolerance,
        graph_sizes,
        vectors,
        max_deviation,
        passed: max_deviation <= tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionNode {
    pub graph: usize,
    pub node: usize,
    pub degree: usize,
}

/// Nodes sharing the exact walk count `w^(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionWitness {
    pub length: usize,
    pub count: u128,
    pub nodes: Vec<CollisionNode>,
    pub distinct_degrees: Vec<usize>,
    /// Largest pairwise layer-`length` embedding distance within the group.
    pub embedding_distance: Option<f64>,
}

/// Groups nodes by exact `w^(k)` and returns groups of two or more, in
/// ascending order of the shared count. `restrict_to` limits the search to
/// the given `(graph, node)` pairs.
pub fn find_walk_collisions<T: Scalar>(
    collection: &GraphCollection,
    k: usize,
    require_distinct_degrees: bool,
    model: Option<&Model<T>>,
    restrict_to: Option<&[(usize, usize)]>,
) -> Result<Vec<CollisionWitness>, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::Usage("walk length must be at least 1".into()));
    }
    if let Some(m) = model {
        if k > m.depth() {
            return Err(ModelError::LayerOutOfRange { layer: k, depth: m.depth() }.into());
        }
    }
    let allowed: Option<BTreeSet<(usize, usize)>> = restrict_to.map(|r| r.iter().copied().collect());
    let mut groups: BTreeMap<u128, Vec<(usize, usize)>> = BTreeMap::new();
    for (gi, g) in collection.iter().enumerate() {
        let walks = walk_counts(g, k)?;
        for v in 0..g.node_count() {
            if allowed.as_ref().is_some_and(|a| !a.contains(&(gi, v))) {
                continue;
            }
            let c = walks.count(v, k).expect("table covers length k");
            groups.entry(c).or_default().push((gi, v));
        }
    }

    let mut tables: BTreeMap<usize, EmbeddingTable<T>> = BTreeMap::new();
    let mut witnesses = Vec::new();
    for (count, members) in groups {
        if members.len() < 2 {
            continue;
        }
        let nodes: Vec<CollisionNode> = members
            .iter()
            .map(|&(graph, node)| CollisionNode { graph, node, degree: collection.graphs()[graph].degree(node) })
            .collect();
        let distinct_degrees: Vec<usize> =
            nodes.iter().map(|n| n.degree).collect::<BTreeSet<_>>().into_iter().collect();
        if require_distinct_degrees && distinct_degrees.len() < 2 {
            continue;
        }
        let embedding_distance = match model {
            None => None,
            Some(m) => {
                for &(gi, _) in &members {
                    if let Entry::Vacant(slot) = tables.entry(gi) {
                        slot.insert(forward(&collection.graphs()[gi], m)?);
                    }
                }
                let rows: Vec<&[T]> = members.iter().map(|&(gi, v)| tables[&gi].row(k, v)).collect();
                let mut worst = 0.0f64;
                for a in 0..rows.len() {
                    for b in a + 1..rows.len() {
                        worst = worst.max(distance2(rows[a], rows[b]).as_f64());
                    }
                }
                Some(worst)
            }
        };
        witnesses.push(CollisionWitness { length: k, count, nodes, distinct_degrees, embedding_distance });
    }
    Ok(witnesses)
}

/// Red nodes of the three built-in collision graphs, as `(graph, node)`.
pub fn fig2_red_nodes() -> Vec<(usize, usize)> {
    SyntheticKind::FIG2
        .iter()
        .enumerate()
        .map(|(gi, kind)| (gi, kind.red_node().expect("built-in graphs mark a red node")))
        .collect()
}

/// The built-in length-2 collision among the red nodes.
pub fn fig2_witness<T: Scalar>(model: Option<&Model<T>>) -> Result<Vec<CollisionWitness>, AnalysisError> {
    let red = fig2_red_nodes();
    find_walk_collisions(&fig2_collection(), 2, true, model, Some(&red))
}
