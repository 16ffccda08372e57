use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    schema_version: u32,
    config: &'a RunConfig,
    result: &'a R,
}

/// A file to be written into the output directory.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn json<R: Serialize>(name: &str, config: &RunConfig, result: &R) -> Result<Artifact> {
    let envelope = Envelope { schema_version: SCHEMA_VERSION, config, result };
    let mut bytes = serde_json::to_vec_pretty(&envelope)?;
    bytes.push(b'\n');
    Ok(Artifact { name: format!("{name}.json"), bytes })
}

/// CSV body preceded by a `#` line carrying the schema version and config.
pub fn csv(name: &str, config: &RunConfig, body: &str) -> Result<Artifact> {
    let mut bytes = format!("# schema_version={SCHEMA_VERSION} config=").into_bytes();
    serde_json::to_writer(&mut bytes, config)?;
    bytes.push(b'\n');
    bytes.extend_from_slice(body.as_bytes());
    Ok(Artifact { name: format!("{name}.csv"), bytes })
}

/// Writes every artifact through a temporary file in the target directory
/// followed by a rename.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let target = dir.join(&a.name);
        let mut tmp =
            tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write into {}", dir.display()))?;
        tmp.write_all(&a.bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).with_context(|| format!("cannot write {}", target.display()))?;
        written.push(target);
    }
    Ok(written)
}
