//! Layer parameters, model specifications and deterministic initialization.
//!
//! Weights are drawn He-uniform: every entry of a weight matrix with fan-in
//! `f` is uniform in `[-sqrt(6 / f), sqrt(6 / f))`. The GAT attention vector
//! of a layer with output width `w` is treated as a `2w -> 1` map and drawn
//! with bound `sqrt(6 / (2w))`. Random-small biases are uniform in
//! `[-1e-2, 1e-2)`. Draw order is layer by layer; within a layer, weight
//! entries row-major, then the bias, then the attention vector.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::rng::Prng;
use crate::scalar::Scalar;

/// Half-width of the uniform range for random-small biases.
pub const SMALL_BIAS_BOUND: f64 = 1e-2;
/// Default hidden width of the GIN MLPs.
pub const DEFAULT_WIDTH: usize = 8;
/// Default negative slope of the GAT score nonlinearity.
pub const DEFAULT_GAT_SLOPE: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("node {node} has no neighbors; GAT attention is undefined there")]
    IsolatedNode { node: usize },
    #[error("layer {layer} out of range for a model of depth {depth}")]
    LayerOutOfRange { layer: usize, depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    /// Exponential-linear unit with unit scale.
    Elu,
    LeakyRelu {
        slope: f64,
    },
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Elu => {
                if x > T::zero() {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::LeakyRelu { slope } => {
                if x >= T::zero() {
                    x
                } else {
                    x * T::lit(slope)
                }
            }
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    pub fn apply_all<T: Scalar>(self, xs: &mut [T]) {
        for x in xs {
            *x = self.apply(*x);
        }
    }
}

/// A fully-connected map `x -> W x (+ b)`; `weight` is `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LinearLayer<T: Scalar = f64> {
    weight: DenseMatrix<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<T>>,
}

impl<T: Scalar> LinearLayer<T> {
    pub fn new(weight: DenseMatrix<T>, bias: Option<Vec<T>>) -> Result<Self, ModelError> {
        if let Some(b) = &bias {
            if b.len() != weight.rows() {
                return Err(ModelError::Invalid(format!(
                    "bias of length {} for a layer with {} outputs",
                    b.len(),
                    weight.rows()
                )));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::Invalid("bias entries must be finite".into()));
            }
        }
        Ok(LinearLayer { weight, bias })
    }

    pub fn without_bias(weight: DenseMatrix<T>) -> Self {
        LinearLayer { weight, bias: None }
    }

    pub fn weight(&self) -> &DenseMatrix<T> {
        &self.weight
    }

    pub fn bias(&self) -> Option<&[T]> {
        self.bias.as_deref()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn is_bias_free(&self) -> bool {
        self.bias.as_ref().is_none_or(|b| b.iter().all(|x| x.is_zero()))
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>, ModelError> {
        let mut y = self.weight.matvec(x)?;
        if let Some(b) = &self.bias {
            for (yi, &bi) in y.iter_mut().zip(b) {
                *yi = *yi + bi;
            }
        }
        Ok(y)
    }
}

/// Linear layers with a ReLU after every one of them, the last included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct MlpBlock<T: Scalar = f64> {
    layers: Vec<LinearLayer<T>>,
}

impl<T: Scalar> MlpBlock<T> {
    pub fn new(layers: Vec<LinearLayer<T>>) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::Invalid("an MLP needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(ModelError::Invalid(format!(
                    "MLP layer {} outputs {} but layer {} expects {}",
                    i,
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(MlpBlock { layers })
    }

    pub fn layers(&self) -> &[LinearLayer<T>] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn is_bias_free(&self) -> bool {
        self.layers.iter().all(LinearLayer::is_bias_free)
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>, ModelError> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.apply(&h)?;
            Activation::Relu.apply_all(&mut h);
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Gcn,
    Dgcnn,
    Gat,
    Gin,
}

impl Variant {
    /// DGCNN and GAT map every node to the same vector under uniform input.
    pub fn collapses(self) -> bool {
        matches!(self, Variant::Dgcnn | Variant::Gat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasMode {
    Zero,
    RandomSmall,
}

/// What a GAT layer does with a node that has no neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsolatedPolicy {
    #[default]
    Error,
    ZeroRow,
}

/// Architecture description from which [`init_model`] materializes weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    /// Output width of each aggregation layer; the depth is `widths.len()`.
    pub widths: Vec<usize>,
    /// GIN only: `1 + epsilon` scales the node's own term.
    pub epsilon: f64,
    /// GIN only: number of linear layers per MLP.
    pub mlp_layers: usize,
    /// GIN only: width of the inner MLP layers.
    pub hidden: usize,
    /// GIN only; every other variant is bias-free.
    pub bias_mode: BiasMode,
    pub dgcnn_activation: Activation,
    pub gat_activation: Activation,
    pub gat_slope: f64,
    pub isolated: IsolatedPolicy,
}

impl ModelSpec {
    /// `depth` layers of `width` units with the documented defaults.
    pub fn new(variant: Variant, depth: usize, width: usize) -> Self {
        ModelSpec {
            variant,
            widths: vec![width; depth],
            epsilon: 0.0,
            mlp_layers: 2,
            hidden: width,
            bias_mode: BiasMode::Zero,
            dgcnn_activation: Activation::Tanh,
            gat_activation: Activation::Elu,
            gat_slope: DEFAULT_GAT_SLOPE,
            isolated: IsolatedPolicy::Error,
        }
    }

    pub fn gin0(depth: usize, width: usize, bias_mode: BiasMode) -> Self {
        ModelSpec { bias_mode, ..Self::new(Variant::Gin, depth, width) }
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |m: &str| Err(ModelError::Invalid(m.into()));
        if self.widths.contains(&0) {
            return invalid("layer widths must be at least 1");
        }
        if !self.epsilon.is_finite() {
            return invalid("epsilon must be finite");
        }
        if !self.gat_slope.is_finite() {
            return invalid("GAT slope must be finite");
        }
        if self.variant == Variant::Gin && (self.mlp_layers == 0 || self.hidden == 0) {
            return invalid("GIN MLPs need at least one layer and a positive hidden width");
        }
        Ok(())
    }
}

/// Materialized parameters of one aggregation layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
#[serde(bound(deserialize = "T: Scalar"))]
pub enum LayerParams<T: Scalar = f64> {
    Gcn {
        linear: LinearLayer<T>,
    },
    Dgcnn {
        linear: LinearLayer<T>,
        activation: Activation,
    },
    Gat {
        linear: LinearLayer<T>,
        /// Score vector of length `2 * out`: first half scores the target
        /// node, second half the neighbor.
        attention: Vec<T>,
        slope: f64,
        activation: Activation,
        isolated: IsolatedPolicy,
    },
    Gin {
        mlp: MlpBlock<T>,
        epsilon: T,
    },
}

impl<T: Scalar> LayerParams<T> {
    pub fn variant(&self) -> Variant {
        match self {
            LayerParams::Gcn { .. } => Variant::Gcn,
            LayerParams::Dgcnn { .. } => Variant::Dgcnn,
            LayerParams::Gat { .. } => Variant::Gat,
            LayerParams::Gin { .. } => Variant::Gin,
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            LayerParams::Gcn { linear } | LayerParams::Dgcnn { linear, .. } | LayerParams::Gat { linear, .. } => {
                linear.in_dim()
            }
            LayerParams::Gin { mlp, .. } => mlp.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            LayerParams::Gcn { linear } | LayerParams::Dgcnn { linear, .. } | LayerParams::Gat { linear, .. } => {
                linear.out_dim()
            }
            LayerParams::Gin { mlp, .. } => mlp.out_dim(),
        }
    }

    pub fn is_bias_free(&self) -> bool {
        match self {
            LayerParams::Gcn { linear } | LayerParams::Dgcnn { linear, .. } | LayerParams::Gat { linear, .. } => {
                linear.is_bias_free()
            }
            LayerParams::Gin { mlp, .. } => mlp.is_bias_free(),
        }
    }
}

/// A stack of same-variant aggregation layers consuming the scalar input
/// feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Model<T: Scalar = f64> {
    variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec: Option<ModelSpec>,
    layers: Vec<LayerParams<T>>,
}

impl<T: Scalar> Model<T> {
    /// Assembles a model from explicit layers. Layers must share `variant`,
    /// the first must take width-1 input, and dimensions must chain.
    pub fn from_layers(variant: Variant, layers: Vec<LayerParams<T>>) -> Result<Self, ModelError> {
        let mut width = 1;
        for (i, layer) in layers.iter().enumerate() {
            if layer.variant() != variant {
                return Err(ModelError::Invalid(format!(
                    "layer {} is {:?} in a {:?} model",
                    i + 1,
                    layer.variant(),
                    variant
                )));
            }
            if layer.in_dim() != width {
                return Err(ModelError::Invalid(format!(
                    "layer {} expects width {} but receives {}",
                    i + 1,
                    layer.in_dim(),
                    width
                )));
            }
            match layer {
                LayerParams::Gcn { linear } if linear.bias().is_some() => {
                    return Err(ModelError::Invalid("GCN layers are linear and carry no bias".into()));
                }
                LayerParams::Gat { attention, linear, .. } if attention.len() != 2 * linear.out_dim() => {
                    return Err(ModelError::Invalid(format!(
                        "attention vector of length {} for output width {}",
                        attention.len(),
                        linear.out_dim()
                    )));
                }
                _ => {}
            }
            width = layer.out_dim();
        }
        Ok(Model { variant, seed: None, spec: None, layers })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerParams<T>] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> Result<&LayerParams<T>, ModelError> {
        if k == 0 || k > self.layers.len() {
            return Err(ModelError::LayerOutOfRange { layer: k, depth: self.layers.len() });
        }
        Ok(&self.layers[k - 1])
    }

    pub fn is_bias_free(&self) -> bool {
        self.layers.iter().all(LayerParams::is_bias_free)
    }

    /// GIN with `epsilon = 0` in every layer.
    pub fn is_gin0(&self) -> bool {
        self.layers.iter().all(|l| matches!(l, LayerParams::Gin { epsilon, .. } if epsilon.is_zero()))
            && self.variant == Variant::Gin
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }
}

struct Init {
    rng: Prng,
}

impl Init {
    fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> DenseMatrix<T> {
        let bound = (6.0 / cols as f64).sqrt();
        DenseMatrix::from_fn(rows, cols, |_, _| T::lit(self.rng.symmetric(bound)))
    }

    fn linear<T: Scalar>(&mut self, out: usize, inp: usize, bias: BiasMode) -> LinearLayer<T> {
        let weight = self.matrix(out, inp);
        let bias = match bias {
            BiasMode::Zero => None,
            BiasMode::RandomSmall => Some((0..out).map(|_| T::lit(self.rng.symmetric(SMALL_BIAS_BOUND))).collect()),
        };
        LinearLayer { weight, bias }
    }
}

/// Materializes the weights of `spec` deterministically from `seed`.
pub fn init_model<T: Scalar>(spec: &ModelSpec, seed: u64) -> Result<Model<T>, ModelError> {
    spec.validate()?;
    let mut init = Init { rng: Prng::new(seed) };
    let mut layers = Vec::with_capacity(spec.depth());
    let mut width = 1;
    for &out in &spec.widths {
        let layer = match spec.variant {
            Variant::Gcn => LayerParams::Gcn { linear: init.linear(out, width, BiasMode::Zero) },
            Variant::Dgcnn => LayerParams::Dgcnn {
                linear: init.linear(out, width, BiasMode::Zero),
                activation: spec.dgcnn_activation,
            },
            Variant::Gat => {
                let linear = init.linear(out, width, BiasMode::Zero);
                let bound = (6.0 / (2 * out) as f64).sqrt();
                let attention = (0..2 * out).map(|_| T::lit(init.rng.symmetric(bound))).collect();
                LayerParams::Gat {
                    linear,
                    attention,
                    slope: spec.gat_slope,
                    activation: spec.gat_activation,
                    isolated: spec.isolated,
                }
            }
            Variant::Gin => {
                let mut dims = vec![width];
                dims.extend(std::iter::repeat_n(spec.hidden, spec.mlp_layers - 1));
                dims.push(out);
                let sublayers = dims.windows(2).map(|d| init.linear(d[1], d[0], spec.bias_mode)).collect();
                LayerParams::Gin { mlp: MlpBlock::new(sublayers)?, epsilon: T::lit(spec.epsilon) }
            }
        };
        width = out;
        layers.push(layer);
    }
    let mut model = Model::from_layers(spec.variant, layers)?;
    model.seed = Some(seed);
    model.spec = Some(spec.clone());
    Ok(model)
}
