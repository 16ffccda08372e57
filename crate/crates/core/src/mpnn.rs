//! Forward passes of the four aggregation schemes and graph readout.
//!
//! | variant | row `v` of the next layer |
//! |---------|---------------------------|
//! | GCN     | `ReLU( Σ_{u ∈ N(v) ∪ {v}} W h_u / sqrt((1 + d(v)) (1 + d(u))) )` |
//! | DGCNN   | `f( 1/(d(v) + 1) · Σ_{u ∈ N(v) ∪ {v}} W h_u )` |
//! | GAT     | `σ( Σ_{u ∈ N(v)} α_vu W h_u )` |
//! | GIN-ε   | `MLP( (1 + ε) h_v + Σ_{u ∈ N(v)} h_u )` |
//!
//! GAT aggregates over the open neighborhood only, without a self term.
//! Neighbors are always visited in ascending index order with left-to-right
//! accumulation, so a forward pass is bit-reproducible.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::export::fmt_real;
use crate::graph::Graph;
use crate::linalg::{DenseMatrix, LinalgError};
use crate::nn::{Activation, IsolatedPolicy, LayerParams, LinearLayer, MlpBlock, Model, ModelError};
use crate::scalar::{norm2, Scalar};

/// Node representations `H^(0) .. H^(K)`; `H^(0)` is the all-ones column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct EmbeddingTable<T: Scalar = f64> {
    layers: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn initial(node_count: usize) -> Self {
        EmbeddingTable { layers: vec![DenseMatrix::filled(node_count, 1, T::one())] }
    }

    /// Number of aggregation layers, `K`.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn layer(&self, k: usize) -> Option<&DenseMatrix<T>> {
        self.layers.get(k)
    }

    pub fn last(&self) -> &DenseMatrix<T> {
        self.layers.last().expect("table always holds layer 0")
    }

    pub fn row(&self, k: usize, v: usize) -> &[T] {
        self.layers[k].row(v)
    }

    pub fn layers(&self) -> &[DenseMatrix<T>] {
        &self.layers
    }

    /// CSV with header `node,layer,h0,h1,..`; narrower layers leave
    /// trailing cells empty.
    pub fn to_csv(&self) -> String {
        let width = self.layers.iter().map(DenseMatrix::cols).max().unwrap_or(0);
        let mut out = String::from("node,layer");
        for c in 0..width {
            let _ = write!(out, ",h{c}");
        }
        out.push('\n');
        for (k, h) in self.layers.iter().enumerate() {
            for v in 0..h.rows() {
                let _ = write!(out, "{v},{k}");
                for c in 0..width {
                    out.push(',');
                    if c < h.cols() {
                        out.push_str(&fmt_real(h.get(v, c)));
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

fn check_rows<T: Scalar>(graph: &Graph, h: &DenseMatrix<T>) -> Result<(), ModelError> {
    if h.rows() != graph.node_count() {
        return Err(LinalgError::Shape {
            expected: format!("{} rows", graph.node_count()),
            found: format!("{} rows", h.rows()),
        }
        .into());
    }
    Ok(())
}

/// `W h_u` for every node (bias included when present).
fn transform<T: Scalar>(h: &DenseMatrix<T>, linear: &LinearLayer<T>) -> Result<DenseMatrix<T>, ModelError> {
    let mut z = DenseMatrix::zeros(h.rows(), linear.out_dim());
    for v in 0..h.rows() {
        let y = linear.apply(h.row(v))?;
        z.row_mut(v).copy_from_slice(&y);
    }
    Ok(z)
}

fn axpy<T: Scalar>(acc: &mut [T], a: T, x: &[T]) {
    for (o, &xi) in acc.iter_mut().zip(x) {
        *o = *o + a * xi;
    }
}

fn degree_plus_one<T: Scalar>(graph: &Graph, v: usize) -> T {
    T::from_usize(graph.degree(v) + 1).expect("degree fits Scalar")
}

/// One GCN layer.
pub fn gcn_layer<T: Scalar>(
    graph: &Graph,
    h: &DenseMatrix<T>,
    linear: &LinearLayer<T>,
) -> Result<DenseMatrix<T>, ModelError> {
    check_rows(graph, h)?;
    let z = transform(h, linear)?;
    let inv_sqrt: Vec<T> = (0..graph.node_count()).map(|v| T::one() / degree_plus_one::<T>(graph, v).sqrt()).collect();
    let mut out = DenseMatrix::zeros(h.rows(), z.cols());
    for v in 0..graph.node_count() {
        let row = out.row_mut(v);
        for u in graph.closed_neighbors(v) {
            axpy(row, inv_sqrt[v] * inv_sqrt[u], z.row(u));
        }
        Activation::Relu.apply_all(row);
    }
    Ok(out)
}

/// One DGCNN layer with nonlinearity `f`.
pub fn dgcnn_layer<T: Scalar>(
    graph: &Graph,
    h: &DenseMatrix<T>,
    linear: &LinearLayer<T>,
    f: Activation,
) -> Result<DenseMatrix<T>, ModelError> {
    check_rows(graph, h)?;
    let z = transform(h, linear)?;
    let mut out = DenseMatrix::zeros(h.rows(), z.cols());
    for v in 0..graph.node_count() {
        let scale = T::one() / degree_plus_one::<T>(graph, v);
        let row = out.row_mut(v);
        for u in graph.closed_neighbors(v) {
            axpy(row, T::one(), z.row(u));
        }
        for x in row.iter_mut() {
            *x = f.apply(*x * scale);
        }
    }
    Ok(out)
}

/// Softmax attention of `v` over `N(v)` from already-transformed rows `z`.
fn attention_weights<T: Scalar>(
    graph: &Graph,
    z: &DenseMatrix<T>,
    attention: &[T],
    slope: f64,
    v: usize,
) -> Result<Vec<T>, ModelError> {
    let nbrs = graph.neighbors(v);
    if nbrs.is_empty() {
        return Err(ModelError::IsolatedNode { node: v });
    }
    let width = z.cols();
    if attention.len() != 2 * width {
        return Err(LinalgError::Shape {
            expected: format!("attention vector of length {}", 2 * width),
            found: format!("length {}", attention.len()),
        }
        .into());
    }
    let dot = |a: &[T], x: &[T]| a.iter().zip(x).fold(T::zero(), |acc, (&p, &q)| acc + p * q);
    let own = dot(&attention[..width], z.row(v));
    let ramp = Activation::LeakyRelu { slope };
    let scores: Vec<T> = nbrs.iter().map(|&u| ramp.apply(own + dot(&attention[width..], z.row(u)))).collect();
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Attention coefficients `α_vu` of node `v` over its neighbors (ascending
/// neighbor order). Nonnegative and normalized to sum to one.
pub fn gat_attention<T: Scalar>(
    graph: &Graph,
    h: &DenseMatrix<T>,
    weight: &DenseMatrix<T>,
    attention: &[T],
    slope: f64,
    v: usize,
) -> Result<Vec<T>, ModelError> {
    check_rows(graph, h)?;
    let linear = LinearLayer::without_bias(weight.clone());
    let z = transform(h, &linear)?;
    attention_weights(graph, &z, attention, slope, v)
}

/// One GAT layer with output nonlinearity `sigma`.
pub fn gat_layer<T: Scalar>(
    graph: &Graph,
    h: &DenseMatrix<T>,
    linear: &LinearLayer<T>,
    attention: &[T],
    slope: f64,
    sigma: Activation,
    isolated: IsolatedPolicy,
) -> Result<DenseMatrix<T>, ModelError> {
    check_rows(graph, h)?;
    let z = transform(h, linear)?;
    let mut out = DenseMatrix::zeros(h.rows(), z.cols());
    for v in 0..graph.node_count() {
        if graph.degree(v) == 0 {
            match isolated {
                IsolatedPolicy::Error => return Err(ModelError::IsolatedNode { node: v }),
                IsolatedPolicy::ZeroRow => continue,
            }
        }
        let alpha = attention_weights(graph, &z, attention, slope, v)?;
        let row = out.row_mut(v);
        for (&u, &a) in graph.neighbors(v).iter().zip(&alpha) {
            axpy(row, a, z.row(u));
        }
        sigma.apply_all(row);
    }
    Ok(out)
}

/// One GIN-ε layer.
pub fn gin_layer<T: Scalar>(
    graph: &Graph,
    h: &DenseMatrix<T>,
    mlp: &MlpBlock<T>,
    epsilon: T,
) -> Result<DenseMatrix<T>, ModelError> {
    check_rows(graph, h)?;
    let self_scale = T::one() + epsilon;
    let mut out = DenseMatrix::zeros(h.rows(), mlp.out_dim());
    let mut agg = vec![T::zero(); h.cols()];
    for v in 0..graph.node_count() {
        agg.iter_mut().for_each(|x| *x = T::zero());
        for u in graph.closed_neighbors(v) {
            let a = if u == v { self_scale } else { T::one() };
            axpy(&mut agg, a, h.row(u));
        }
        let y = mlp.apply(&agg)?;
        out.row_mut(v).copy_from_slice(&y);
    }
    Ok(out)
}

/// Applies one layer of any variant.
pub fn apply_layer<T: Scalar>(
    graph: &Graph,
    h: &DenseMatrix<T>,
    layer: &LayerParams<T>,
) -> Result<DenseMatrix<T>, ModelError> {
    match layer {
        LayerParams::Gcn { linear } => gcn_layer(graph, h, linear),
        LayerParams::Dgcnn { linear, activation } => dgcnn_layer(graph, h, linear, *activation),
        LayerParams::Gat { linear, attention, slope, activation, isolated } => {
            gat_layer(graph, h, linear, attention, *slope, *activation, *isolated)
        }
        LayerParams::Gin { mlp, epsilon } => gin_layer(graph, h, mlp, *epsilon),
    }
}

/// Runs every layer of `model` on `graph` from the all-ones input.
pub fn forward<T: Scalar>(graph: &Graph, model: &Model<T>) -> Result<EmbeddingTable<T>, ModelError> {
    let mut table = EmbeddingTable::initial(graph.node_count());
    for layer in model.layers() {
        let next = apply_layer(graph, table.last(), layer)?;
        table.layers.push(next);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutMode {
    Sum,
    Mean,
}

/// Column-wise sum or mean of the final layer. The mean of a graph without
/// nodes is the zero vector.
pub fn readout<T: Scalar>(table: &EmbeddingTable<T>, mode: ReadoutMode) -> Vec<T> {
    let h = table.last();
    let mut acc = vec![T::zero(); h.cols()];
    for v in 0..h.rows() {
        axpy(&mut acc, T::one(), h.row(v));
    }
    if mode == ReadoutMode::Mean && h.rows() > 0 {
        let n = T::from_usize(h.rows()).expect("node count fits Scalar");
        acc.iter_mut().for_each(|x| *x = *x / n);
    }
    acc
}

/// Largest Euclidean norm among the rows of layer `k`.
pub fn max_row_norm<T: Scalar>(table: &EmbeddingTable<T>, k: usize) -> T {
    let h = &table.layers[k];
    (0..h.rows()).map(|v| norm2(h.row(v))).fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, SyntheticKind, SyntheticSpec};
    use crate::graph::parse_edge_list;
    use crate::nn::{init_model, BiasMode, ModelSpec, Variant};
    use crate::walks::{normalized_walk_sums, walk_counts};

    fn build(kind: SyntheticKind) -> Graph {
        generate(&SyntheticSpec::new(kind, 3)).unwrap()
    }

    fn scalar_linear(w: f64) -> LinearLayer<f64> {
        LinearLayer::without_bias(DenseMatrix::filled(1, 1, w))
    }

    fn ones(n: usize) -> DenseMatrix<f64> {
        DenseMatrix::filled(n, 1, 1.0)
    }

    fn max_pairwise(h: &DenseMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for v in 0..h.rows() {
            for u in v + 1..h.rows() {
                worst = worst.max(crate::scalar::distance2(h.row(v), h.row(u)));
            }
        }
        worst
    }

    #[test]
    fn gcn_identity_weight_gives_normalized_walks() {
        for g in [
            parse_edge_list("0 1\n1 2", None).unwrap(),
            build(SyntheticKind::ErdosRenyi { n: 10, p: 0.4 }),
            build(SyntheticKind::Fig2Deg2Node),
        ] {
            let out = gcn_layer(&g, &ones(g.node_count()), &scalar_linear(1.0)).unwrap();
            let walks = normalized_walk_sums::<f64>(&g, 1);
            for v in 0..g.node_count() {
                assert!((out.get(v, 0) - walks.normalized(v, 1).unwrap()).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn gcn_on_regular_graph_is_constant() {
        let g = build(SyntheticKind::Cycle { n: 4 });
        let out = gcn_layer(&g, &ones(4), &scalar_linear(2.5)).unwrap();
        for v in 0..4 {
            assert!((out.get(v, 0) - 2.5).abs() <= 1e-15);
        }
    }

    #[test]
    fn dgcnn_tanh_of_one() {
        let g = build(SyntheticKind::ErdosRenyi { n: 12, p: 0.3 });
        let out = dgcnn_layer(&g, &ones(12), &scalar_linear(1.0), Activation::Tanh).unwrap();
        for v in 0..12 {
            assert!((out.get(v, 0) - 1f64.tanh()).abs() <= 1e-15);
        }
    }

    #[test]
    fn dgcnn_equal_rows_stay_equal() {
        let g = build(SyntheticKind::ErdosRenyi { n: 9, p: 0.4 });
        let h = DenseMatrix::from_fn(9, 3, |_, c| [0.3, -1.2, 2.0][c]);
        let w = DenseMatrix::from_fn(4, 3, |r, c| (r as f64 - c as f64) * 0.7);
        let out = dgcnn_layer(&g, &h, &LinearLayer::without_bias(w), Activation::Tanh).unwrap();
        assert!(max_pairwise(&out) <= 1e-15);
    }

    #[test]
    fn dgcnn_star_collapses_with_random_weights() {
        let g = build(SyntheticKind::Star { leaves: 3 });
        let m: Model = init_model(&ModelSpec::new(Variant::Dgcnn, 3, 8), 21).unwrap();
        let t = forward(&g, &m).unwrap();
        assert!(max_pairwise(t.last()) <= 1e-12);
    }

    #[test]
    fn gat_attention_uniform_for_equal_rows() {
        let g = build(SyntheticKind::ErdosRenyi { n: 8, p: 0.5 });
        let w = DenseMatrix::from_fn(3, 1, |r, _| r as f64 - 1.0);
        let a = vec![0.3, -0.4, 0.9, 1.1, -0.2, 0.5];
        for v in 0..8 {
            if g.degree(v) == 0 {
                continue;
            }
            let alpha = gat_attention(&g, &ones(8), &w, &a, 0.2, v).unwrap();
            let d = g.degree(v) as f64;
            assert!(alpha.iter().all(|x| (x - 1.0 / d).abs() <= 1e-15));
        }
        let p3 = parse_edge_list("0 1\n1 2", None).unwrap();
        assert_eq!(gat_attention(&p3, &ones(3), &w, &a, 0.2, 1).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn gat_attention_is_normalized() {
        let g = build(SyntheticKind::ErdosRenyi { n: 10, p: 0.5 });
        let h = DenseMatrix::from_fn(10, 2, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0);
        let w = DenseMatrix::from_fn(3, 2, |r, c| (r + 2 * c) as f64 * 0.4 - 0.5);
        let a = vec![1.0, -2.0, 0.5, 0.7, 3.0, -1.5];
        for v in (0..10).filter(|&v| g.degree(v) > 0) {
            let alpha = gat_attention(&g, &h, &w, &a, 0.2, v).unwrap();
            assert!(alpha.iter().all(|&x| x >= 0.0));
            assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn gat_isolated_node_policy() {
        let g = parse_edge_list("0 1", Some(3)).unwrap();
        let lin = scalar_linear(2.0);
        let err = gat_layer(&g, &ones(3), &lin, &[0.1, 0.2], 0.2, Activation::Identity, IsolatedPolicy::Error);
        assert_eq!(err.unwrap_err(), ModelError::IsolatedNode { node: 2 });
        let out =
            gat_layer(&g, &ones(3), &lin, &[0.1, 0.2], 0.2, Activation::Identity, IsolatedPolicy::ZeroRow).unwrap();
        assert_eq!(out.to_rows(), vec![vec![2.0], vec![2.0], vec![0.0]]);
    }

    #[test]
    fn gat_identity_sigma_scalar_weight() {
        let g = build(SyntheticKind::Fig2LeafOnHub);
        let out = gat_layer(
            &g,
            &ones(8),
            &scalar_linear(2.0),
            &[0.4, -0.9],
            0.2,
            Activation::Identity,
            IsolatedPolicy::Error,
        )
        .unwrap();
        for v in 0..8 {
            assert!((out.get(v, 0) - 2.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn gat_c5_collapses() {
        let g = build(SyntheticKind::Cycle { n: 5 });
        let m: Model = init_model(&ModelSpec::new(Variant::Gat, 4, 6), 8).unwrap();
        let t = forward(&g, &m).unwrap();
        assert!(max_pairwise(t.last()) <= 1e-12);
    }

    #[test]
    fn gin0_identity_mlp_counts_closed_neighborhood() {
        let g = build(SyntheticKind::ErdosRenyi { n: 11, p: 0.3 });
        let mlp = MlpBlock::new(vec![scalar_linear(1.0)]).unwrap();
        let out = gin_layer(&g, &ones(11), &mlp, 0.0).unwrap();
        let walks = walk_counts(&g, 1).unwrap();
        for v in 0..11 {
            assert_eq!(out.get(v, 0), walks.count(v, 1).unwrap() as f64);
        }
    }

    #[test]
    fn gin_epsilon_scales_self_term() {
        let g = parse_edge_list("0 1\n1 2", None).unwrap();
        let mlp = MlpBlock::new(vec![scalar_linear(1.0)]).unwrap();
        let out = gin_layer(&g, &ones(3), &mlp, 0.5).unwrap();
        assert_eq!(out.to_rows(), vec![vec![2.5], vec![3.5], vec![2.5]]);
    }

    #[test]
    fn gin0_k3_two_layers_positive_weights() {
        // each node of K3 aggregates 3 copies of the (equal) previous rows,
        // and a bias-free 1→1→1 MLP with positive weights multiplies by w1·w2
        let g = build(SyntheticKind::Complete { n: 3 });
        let weights = [0.7, 1.3, 0.4, 2.2];
        let layer = |a: f64, b: f64| LayerParams::Gin {
            mlp: MlpBlock::new(vec![scalar_linear(a), scalar_linear(b)]).unwrap(),
            epsilon: 0.0,
        };
        let m = Model::from_layers(Variant::Gin, vec![layer(weights[0], weights[1]), layer(weights[2], weights[3])])
            .unwrap();
        let t = forward(&g, &m).unwrap();
        let expected = 9.0 * weights.iter().product::<f64>();
        for v in 0..3 {
            assert!((t.row(2, v)[0] - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn gin0_rows_proportional_to_walk_counts_on_p4() {
        let g = build(SyntheticKind::Path { n: 4 });
        let m: Model = init_model(&ModelSpec::gin0(2, 8, BiasMode::Zero), 4).unwrap();
        let t = forward(&g, &m).unwrap();
        let w = walk_counts(&g, 2).unwrap();
        for v in 0..4 {
            for u in 0..4 {
                let (wv, wu) = (w.count(v, 2).unwrap() as f64, w.count(u, 2).unwrap() as f64);
                for c in 0..8 {
                    let (a, b) = (t.row(2, v)[c] * wu, t.row(2, u)[c] * wv);
                    assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300));
                }
            }
        }
    }

    #[test]
    fn forward_depth_zero_and_dimension_errors() {
        let g = build(SyntheticKind::Path { n: 3 });
        let m = Model::<f64>::from_layers(Variant::Gcn, vec![]).unwrap();
        let t = forward(&g, &m).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.last().to_rows(), vec![vec![1.0]; 3]);
        let wrong = DenseMatrix::filled(2, 1, 1.0);
        assert!(gcn_layer(&g, &wrong, &scalar_linear(1.0)).is_err());
        let two_wide = DenseMatrix::filled(3, 2, 1.0);
        assert!(gcn_layer(&g, &two_wide, &scalar_linear(1.0)).is_err());
    }

    #[test]
    fn readout_modes() {
        let g = build(SyntheticKind::Path { n: 5 });
        let m: Model = init_model(&ModelSpec::new(Variant::Dgcnn, 2, 3), 1).unwrap();
        let t = forward(&g, &m).unwrap();
        let r = t.row(2, 0).to_vec();
        let sum = readout(&t, ReadoutMode::Sum);
        let mean = readout(&t, ReadoutMode::Mean);
        for c in 0..3 {
            assert!((sum[c] - 5.0 * r[c]).abs() <= 1e-14);
            assert!((mean[c] - r[c]).abs() <= 1e-15);
        }
    }

    #[test]
    fn dgcnn_sum_readout_counts_nodes() {
        let m: Model = init_model(&ModelSpec::new(Variant::Dgcnn, 3, 4), 2).unwrap();
        let small = forward(&build(SyntheticKind::Path { n: 3 }), &m).unwrap();
        let large = forward(&build(SyntheticKind::ErdosRenyi { n: 6, p: 0.5 }), &m).unwrap();
        let (a, b) = (readout(&small, ReadoutMode::Sum), readout(&large, ReadoutMode::Sum));
        for c in 0..4 {
            assert!((b[c] - 2.0 * a[c]).abs() <= 1e-12 * b[c].abs().max(1.0));
        }
    }

    #[test]
    fn embedding_csv_layout() {
        let g = parse_edge_list("0 1", None).unwrap();
        let m: Model = init_model(&ModelSpec::new(Variant::Gcn, 1, 2), 1).unwrap();
        let csv = forward(&g, &m).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "node,layer,h0,h1");
        assert_eq!(lines[1], "0,0,1.0000000000000000e0,");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn f32_forward_collapses_too() {
        let g = build(SyntheticKind::ErdosRenyi { n: 15, p: 0.3 });
        let m: Model<f32> = init_model(&ModelSpec::new(Variant::Dgcnn, 3, 8), 5).unwrap();
        let t = forward(&g, &m).unwrap();
        let h = t.last();
        for v in 1..h.rows() {
            assert!(crate::scalar::distance2(h.row(0), h.row(v)) <= 1e-5);
        }
    }
}
