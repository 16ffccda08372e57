//! Spectral norms and the walk-based Lipschitz bounds for GCN and GIN-0.
//!
//! For a bias-free GIN-0 model the representation of every node after `k`
//! layers satisfies
//!
//! ```text
//! ‖h_v − h_u‖₂ ≤ Π_{i ≤ k} L_i · |w_v^(k) − w_u^(k)|
//! ```
//!
//! with `L_i` the Lipschitz constant of the `i`-th MLP; GCN satisfies the
//! same inequality with the normalized walk sums and `L_i` the constant of
//! the `i`-th weight matrix. `L_i` is taken as the product of the spectral
//! norms of the linear sublayers. ReLU is 1-Lipschitz and biases do not
//! change the constant, so this is an upper bound on the true constant and
//! the inequality stays valid.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::fmt_real;
use crate::graph::{Graph, GraphCollection};
use crate::linalg::DenseMatrix;
use crate::mpnn::{forward, EmbeddingTable};
use crate::nn::{LayerParams, LinearLayer, MlpBlock, Model, ModelError, Variant};
use crate::scalar::{distance2, norm2, Scalar};
use crate::walks::{walk_census, WalkError, WalkKind, WalkTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LipschitzError {
    #[error(
        "power iteration did not converge after {iterations} iterations (estimate {estimate}, residual {residual})"
    )]
    NotConverged { iterations: usize, estimate: f64, residual: f64, last_iterate: Vec<f64> },
    #[error("invalid power-iteration settings: {0}")]
    InvalidSettings(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    /// Relative change of the eigenvalue estimate at which to stop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration { tol: 1e-10, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralNorm<T> {
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

fn unit<T: Scalar>(mut x: Vec<T>) -> Option<Vec<T>> {
    let n = norm2(&x);
    if n.is_zero() || !n.is_finite() {
        return None;
    }
    x.iter_mut().for_each(|v| *v = *v / n);
    Some(x)
}

/// Runs power iteration on `WᵀW` from `start`. Returns `(σ², iterations)`.
fn power_run<T: Scalar>(
    w: &DenseMatrix<T>,
    start: Vec<T>,
    opts: &PowerIteration,
) -> Result<(T, usize), LipschitzError> {
    let tol = T::lit(opts.tol);
    let Some(mut x) = unit(start) else {
        return Ok((T::zero(), 0));
    };
    let mut lambda = T::zero();
    for it in 1..=opts.max_iter {
        let z = w.transpose_matvec(&w.matvec(&x).expect("shapes agree")).expect("shapes agree");
        let next = norm2(&z);
        let Some(x_next) = unit(z) else {
            // start vector in the null space of W
            return Ok((T::zero(), it));
        };
        let done = (next - lambda).abs() <= tol * next;
        lambda = next;
        x = x_next;
        if done {
            return Ok((lambda, it));
        }
    }
    let gx = w.transpose_matvec(&w.matvec(&x).expect("shapes agree")).expect("shapes agree");
    let residual: Vec<T> = gx.iter().zip(&x).map(|(&g, &xi)| g - lambda * xi).collect();
    Err(LipschitzError::NotConverged {
        iterations: opts.max_iter,
        estimate: lambda.sqrt().as_f64(),
        residual: norm2(&residual).as_f64(),
        last_iterate: x.iter().map(|v| v.as_f64()).collect(),
    })
}

/// Largest singular value of `w` by power iteration on the Gram operator.
///
/// The run starts from the all-ones vector. Because a start vector
/// orthogonal to the top singular vector stalls on a smaller singular
/// value, a second run starts from a fixed irregular vector and the larger
/// of the two estimates is returned.
pub fn spectral_norm<T: Scalar>(w: &DenseMatrix<T>, opts: &PowerIteration) -> Result<SpectralNorm<T>, LipschitzError> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(LipschitzError::InvalidSettings(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(LipschitzError::InvalidSettings("max_iter must be at least 1".into()));
    }
    if !w.is_finite() {
        return Err(LipschitzError::InvalidSettings("matrix has non-finite entries".into()));
    }
    let n = w.cols();
    if n == 0 || w.rows() == 0 {
        return Ok(SpectralNorm { value: T::zero(), iterations: 0, converged: true });
    }
    let (first, it1) = power_run(w, vec![T::one(); n], opts)?;
    // golden-ratio low-discrepancy offsets with alternating signs
    let irregular = (0..n)
        .map(|i| {
            let x = T::lit(0.5 + ((i + 1) as f64 * 0.618_033_988_749_894_9).fract());
            if i % 2 == 0 {
                x
            } else {
                -x
            }
        })
        .collect();
    let (second, it2) = power_run(w, irregular, opts)?;
    Ok(SpectralNorm { value: first.max(second).sqrt(), iterations: it1 + it2, converged: true })
}

/// Lipschitz upper bounds for layer types (Euclidean norm on both sides).
pub trait LipschitzBound<T: Scalar> {
    fn lipschitz_bound(&self, opts: &PowerIteration) -> Result<T, LipschitzError>;
}

impl<T: Scalar> LipschitzBound<T> for LinearLayer<T> {
    fn lipschitz_bound(&self, opts: &PowerIteration) -> Result<T, LipschitzError> {
        Ok(spectral_norm(self.weight(), opts)?.value)
    }
}

impl<T: Scalar> LipschitzBound<T> for MlpBlock<T> {
    fn lipschitz_bound(&self, opts: &PowerIteration) -> Result<T, LipschitzError> {
        self.layers().iter().try_fold(T::one(), |acc, l| Ok(acc * l.lipschitz_bound(opts)?))
    }
}

/// Single linear layer: its spectral norm. MLP: product over sublayers.
pub fn layer_lipschitz<T: Scalar, L: LipschitzBound<T>>(layer: &L, opts: &PowerIteration) -> Result<T, LipschitzError> {
    layer.lipschitz_bound(opts)
}

/// Per-layer constants `L_i` and their running products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LipschitzProfile<T: Scalar = f64> {
    pub per_layer: Vec<T>,
    pub cumulative: Vec<T>,
}

impl<T: Scalar> LipschitzProfile<T> {
    pub fn from_layers(per_layer: Vec<T>) -> Self {
        let cumulative = per_layer
            .iter()
            .scan(T::one(), |acc, &l| {
                *acc = *acc * l;
                Some(*acc)
            })
            .collect();
        LipschitzProfile { per_layer, cumulative }
    }

    /// `Π_{i ≤ k} L_i`; the empty product for `k = 0` is one.
    pub fn product(&self, k: usize) -> T {
        if k == 0 {
            T::one()
        } else {
            self.cumulative[k - 1]
        }
    }
}

/// Lipschitz profile of a GCN (weight matrices) or GIN (MLPs) model.
pub fn lipschitz_profile<T: Scalar>(
    model: &Model<T>,
    opts: &PowerIteration,
) -> Result<LipschitzProfile<T>, LipschitzError> {
    let per_layer = model
        .layers()
        .iter()
        .map(|layer| match layer {
            LayerParams::Gcn { linear } => linear.lipschitz_bound(opts),
            LayerParams::Gin { mlp, .. } => mlp.lipschitz_bound(opts),
            other => Err(LipschitzError::Usage(format!("no walk bound is defined for {:?} layers", other.variant()))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LipschitzProfile::from_layers(per_layer))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub v: usize,
    pub u: usize,
    /// `‖h_v − h_u‖₂`
    pub lhs: f64,
    /// `Π L_i · |s_v − s_u|`
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub layer: usize,
    pub variant: Variant,
    pub walk_kind: WalkKind,
    pub tolerance: f64,
    pub lipschitz: LipschitzProfile<f64>,
    pub pair_count: usize,
    pub min_slack: f64,
    /// Pairs whose slack is below `-tolerance`.
    pub violations: Vec<PairBound>,
    /// Every evaluated pair, `v < u` in lexicographic order of global ids.
    pub pairs: Vec<PairBound>,
}

impl BoundReport {
    pub fn certified(&self) -> bool {
        self.violations.is_empty()
    }

    /// CSV with header `v,u,lhs,rhs,slack`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("v,u,lhs,rhs,slack\n");
        for p in &self.pairs {
            let _ = writeln!(out, "{},{},{},{},{}", p.v, p.u, fmt_real(p.lhs), fmt_real(p.rhs), fmt_real(p.slack));
        }
        out
    }
}

/// The walk statistic a bound for `model` is stated in.
pub fn bound_walk_kind<T: Scalar>(model: &Model<T>) -> Result<WalkKind, LipschitzError> {
    match model.variant() {
        Variant::Gcn => Ok(WalkKind::Normalized),
        Variant::Gin if model.is_gin0() && model.is_bias_free() => Ok(WalkKind::Raw),
        Variant::Gin => {
            Err(LipschitzError::Usage("the walk-count bound needs GIN with epsilon = 0 and zero biases".into()))
        }
        v => Err(LipschitzError::Usage(format!("no walk bound is defined for {v:?}"))),
    }
}

/// Evaluates one pair.
pub fn pair_bound<T: Scalar>(
    table: (&EmbeddingTable<T>, &EmbeddingTable<T>),
    rows: (usize, usize),
    stats: (T, T),
    k: usize,
    product: T,
) -> PairBound {
    let lhs = distance2(table.0.row(k, rows.0), table.1.row(k, rows.1)).as_f64();
    let rhs = (product * (stats.0 - stats.1).abs()).as_f64();
    PairBound { v: rows.0, u: rows.1, lhs, rhs, slack: rhs - lhs }
}

/// Checks the layer-`k` bound for every pair of nodes of one graph.
pub fn verify_bound<T: Scalar>(
    graph: &Graph,
    model: &Model<T>,
    k: usize,
    walks: &WalkTable<T>,
    tol: f64,
) -> Result<BoundReport, LipschitzError> {
    let table = forward(graph, model)?;
    bound_report(&[(&table, walks)], model, k, tol)
}

/// Checks the layer-`k` bound for every pair of nodes across a collection
/// (global ids), computing the walk statistics internally.
pub fn verify_bound_collection<T: Scalar>(
    collection: &GraphCollection,
    model: &Model<T>,
    k: usize,
    tol: f64,
) -> Result<BoundReport, LipschitzError> {
    let mut tables = Vec::with_capacity(collection.len());
    let mut walks = Vec::with_capacity(collection.len());
    for g in collection.iter() {
        tables.push(forward(g, model)?);
        walks.push(walk_census::<T>(g, k)?);
    }
    let inputs: Vec<_> = tables.iter().zip(&walks).collect();
    bound_report(&inputs, model, k, tol)
}

/// Shared pair loop over already computed embeddings and walk tables.
pub fn bound_report<T: Scalar>(
    inputs: &[(&EmbeddingTable<T>, &WalkTable<T>)],
    model: &Model<T>,
    k: usize,
    tol: f64,
) -> Result<BoundReport, LipschitzError> {
    let kind = bound_walk_kind(model)?;
    if k == 0 || k > model.depth() {
        return Err(ModelError::LayerOutOfRange { layer: k, depth: model.depth() }.into());
    }
    let mut nodes: Vec<(usize, usize, T)> = Vec::new();
    for (gi, (table, walks)) in inputs.iter().enumerate() {
        if table.depth() < k {
            return Err(LipschitzError::Usage(format!("embedding table has only {} layers", table.depth())));
        }
        if walks.max_length < k {
            return Err(LipschitzError::Usage(format!("walk table stops at length {}", walks.max_length)));
        }
        if walks.node_count() != table.node_count() {
            return Err(LipschitzError::Usage("walk table and embeddings disagree on node count".into()));
        }
        let column = walks.column(kind, k).ok_or_else(|| {
            LipschitzError::Usage(format!("{:?} model needs {:?} walk statistics", model.variant(), kind))
        })?;
        nodes.extend(column.into_iter().enumerate().map(|(v, s)| (gi, v, s)));
    }

    let profile = lipschitz_profile(model, &PowerIteration::default())?;
    let product = profile.product(k);
    let mut pairs = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1) / 2);
    for (a, &(ga, va, sa)) in nodes.iter().enumerate() {
        for (b, &(gb, vb, sb)) in nodes.iter().enumerate().skip(a + 1) {
            let mut p = pair_bound((inputs[ga].0, inputs[gb].0), (va, vb), (sa, sb), k, product);
            p.v = a;
            p.u = b;
            pairs.push(p);
        }
    }
    let violations: Vec<PairBound> = pairs.iter().filter(|p| p.slack < -tol).copied().collect();
    let min_slack = pairs.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
    Ok(BoundReport {
        layer: k,
        variant: model.variant(),
        walk_kind: kind,
        tolerance: tol,
        lipschitz: LipschitzProfile {
            per_layer: profile.per_layer.iter().map(|x| x.as_f64()).collect(),
            cumulative: profile.cumulative.iter().map(|x| x.as_f64()).collect(),
        },
        pair_count: pairs.len(),
        min_slack,
        violations,
        pairs,
    })
}
