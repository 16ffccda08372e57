use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mpnn_walks::{er_corpus, fig2_collection, generate, parse_edge_list, parse_tu_collection, ErCorpus};
use mpnn_walks::{GraphCollection, SyntheticKind, SyntheticSpec};
use serde::Serialize;

use crate::args::InputArgs;

/// Resolved input source, recorded verbatim in every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InputSource {
    Graph { path: PathBuf },
    TuDir { path: PathBuf, adjacency: String, indicator: String, labels: Option<String> },
    Synthetic { kind: SyntheticKind, count: usize, seed: u64 },
    ErCorpus { params: ErCorpus, seed: u64 },
    BuiltinFig2,
}

pub fn resolve(args: &InputArgs, count: usize, seed: u64) -> Result<Option<InputSource>> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    if count > 1 && args.synthetic.is_none() {
        bail!("--count only applies to --synthetic");
    }
    if let Some(path) = &args.graph {
        return Ok(Some(InputSource::Graph { path: path.clone() }));
    }
    if let Some(dir) = &args.tu_dir {
        return tu_files(dir).map(Some);
    }
    if let Some(spec) = &args.synthetic {
        if let Some(rest) = spec.strip_prefix("er-corpus") {
            if count > 1 {
                bail!("er-corpus takes its size from count=, not --count");
            }
            let params = parse_corpus(rest.strip_prefix(':').unwrap_or(rest))?;
            return Ok(Some(InputSource::ErCorpus { params, seed }));
        }
        let kind: SyntheticKind = spec.parse().with_context(|| format!("invalid --synthetic '{spec}'"))?;
        return Ok(Some(InputSource::Synthetic { kind, count, seed }));
    }
    if args.builtin_fig2 {
        return Ok(Some(InputSource::BuiltinFig2));
    }
    Ok(None)
}

fn parse_corpus(text: &str) -> Result<ErCorpus> {
    let mut c = ErCorpus::default();
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair.split_once('=').with_context(|| format!("expected key=value, got '{pair}'"))?;
        let v = v.trim();
        let bad = || format!("invalid value '{v}' for {k}");
        match k.trim() {
            "count" => c.count = v.parse().with_context(bad)?,
            "min-n" => c.min_nodes = v.parse().with_context(bad)?,
            "max-n" => c.max_nodes = v.parse().with_context(bad)?,
            "min-p" => c.min_p = v.parse().with_context(bad)?,
            "max-p" => c.max_p = v.parse().with_context(bad)?,
            "no-isolated" => c.no_isolated = v.parse().with_context(bad)?,
            other => bail!("unknown er-corpus parameter '{other}'"),
        }
    }
    Ok(c)
}

fn tu_files(dir: &Path) -> Result<InputSource> {
    let mut adjacency = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name == "A.txt" || name.ends_with("_A.txt") {
            adjacency.push(name);
        }
    }
    adjacency.sort();
    let adj = match adjacency.as_slice() {
        [one] => one.clone(),
        [] => bail!("no *_A.txt file in {}", dir.display()),
        many => bail!("several adjacency files in {}: {}", dir.display(), many.join(", ")),
    };
    let prefix = &adj[..adj.len() - "A.txt".len()];
    let indicator = format!("{prefix}graph_indicator.txt");
    if !dir.join(&indicator).is_file() {
        bail!("missing {indicator} in {}", dir.display());
    }
    let labels = format!("{prefix}graph_labels.txt");
    let labels = dir.join(&labels).is_file().then_some(labels);
    Ok(InputSource::TuDir { path: dir.to_path_buf(), adjacency: adj, indicator, labels })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load(source: &InputSource) -> Result<GraphCollection> {
    Ok(match source {
        InputSource::Graph { path } => {
            let g = parse_edge_list(&read(path)?, None).with_context(|| format!("in {}", path.display()))?;
            GraphCollection::from(g)
        }
        InputSource::TuDir { path, adjacency, indicator, labels } => {
            let labels = labels.as_ref().map(|l| read(&path.join(l))).transpose()?;
            parse_tu_collection(&read(&path.join(adjacency))?, &read(&path.join(indicator))?, labels.as_deref())
                .with_context(|| format!("in TU dataset {}", path.display()))?
        }
        InputSource::Synthetic { kind, count, seed } => (0..*count)
            .map(|i| generate(&SyntheticSpec::new(*kind, seed.wrapping_add(i as u64))))
            .collect::<Result<GraphCollection, _>>()?,
        InputSource::ErCorpus { params, seed } => er_corpus(params, *seed)?,
        InputSource::BuiltinFig2 => fig2_collection(),
    })
}
