use std::path::PathBuf;

use anyhow::{bail, Result};
use mpnn_walks::{BiasMode, IsolatedPolicy, ModelSpec, Variant};
use serde::Serialize;

use crate::args::{BiasArg, CommonArgs, Format, IsolatedArg, ModelKind};
use crate::input::{self, InputSource};

pub const DEFAULT_K: usize = 3;

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub input: Option<InputSource>,
    pub model_kind: Option<ModelKind>,
    pub model: Option<ModelSpec>,
    pub seed: u64,
    pub k: usize,
    pub tol: Option<f64>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub require_distinct_degrees: bool,
}

fn model_spec(args: &CommonArgs, kind: ModelKind) -> Result<ModelSpec> {
    let m = &args.model;
    let variant = match kind {
        ModelKind::Gcn => Variant::Gcn,
        ModelKind::Dgcnn => Variant::Dgcnn,
        ModelKind::Gat => Variant::Gat,
        ModelKind::Gin0 | ModelKind::Gin => Variant::Gin,
    };
    let is_gin = variant == Variant::Gin;
    let epsilon = match (kind, m.epsilon) {
        (ModelKind::Gin0, Some(e)) if e != 0.0 => bail!("--model gin0 fixes epsilon at 0"),
        (ModelKind::Gin, Some(e)) => e,
        (_, Some(_)) if !is_gin => bail!("--epsilon only applies to GIN models"),
        _ => 0.0,
    };
    if m.bias == BiasArg::RandomSmall && !is_gin {
        bail!("--bias random-small only applies to GIN models; the other variants have no biases");
    }
    let mut spec = ModelSpec::new(variant, m.depth, m.width);
    spec.epsilon = epsilon;
    spec.mlp_layers = m.mlp_layers;
    spec.bias_mode = match m.bias {
        BiasArg::Zero => BiasMode::Zero,
        BiasArg::RandomSmall => BiasMode::RandomSmall,
    };
    spec.isolated = match m.isolated {
        IsolatedArg::Error => IsolatedPolicy::Error,
        IsolatedArg::ZeroRow => IsolatedPolicy::ZeroRow,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn resolve(command: &'static str, args: &CommonArgs) -> Result<RunConfig> {
    let input = input::resolve(&args.input, args.count, args.seed)?;
    let needs_input = command != "lipschitz";
    let needs_model = matches!(command, "embed" | "verify" | "correlate" | "lipschitz");
    if needs_input && input.is_none() {
        bail!("one of --graph, --tu-dir, --synthetic or --builtin-fig2 is required");
    }
    let model = match args.model.model {
        Some(kind) => Some(model_spec(args, kind)?),
        None if needs_model => bail!("--model is required for {command}"),
        None => None,
    };
    if let Some(tol) = args.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            bail!("--tol must be a nonnegative finite number");
        }
    }
    let depth = model.as_ref().map(ModelSpec::depth);
    let k = match (args.k, depth) {
        (Some(k), _) => k,
        (None, Some(d)) if matches!(command, "verify" | "correlate") => DEFAULT_K.min(d),
        (None, _) => DEFAULT_K,
    };
    if matches!(command, "verify" | "correlate" | "collide") && k == 0 {
        bail!("--k must be at least 1");
    }
    if let Some(d) = depth {
        if matches!(command, "verify" | "correlate" | "collide") && k > d {
            bail!("--k {k} exceeds the model depth {d}");
        }
    }
    Ok(RunConfig {
        command,
        input,
        model_kind: args.model.model,
        model,
        seed: args.seed,
        k,
        tol: args.tol,
        out_dir: args.out.clone(),
        format: args.format,
        require_distinct_degrees: args.require_distinct_degrees,
    })
}
