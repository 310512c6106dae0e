use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use liftlearn_core::dataset::{read_traces, Manifest, ObservedTrace, MANIFEST_SCHEMA};
use liftlearn_core::planning::fixtures::Bundle;
use liftlearn_core::planning::pddl::parse_domain;
use liftlearn_core::planning::{ActionModel, Domain};

use crate::World;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_world(w: &World) -> Result<Bundle> {
    let d = read_text(&w.domain)?;
    let p = read_text(&w.instance)?;
    Bundle::from_sources(&d, &p).with_context(|| format!("loading {} / {}", w.domain.display(), w.instance.display()))
}

pub fn load_domain(path: &Path) -> Result<(Domain, ActionModel)> {
    parse_domain(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// `manifest.json` next to the trace file unless given explicitly.
pub fn manifest_path(traces: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| traces.parent().unwrap_or(Path::new(".")).join("manifest.json"))
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let m: Manifest = serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    anyhow::ensure!(m.schema == MANIFEST_SCHEMA, "{}: unsupported manifest schema `{}`", path.display(), m.schema);
    Ok(m)
}

/// Observed traces whose ids are listed in `ids`, in file order.
pub fn load_split(b: &Bundle, traces: &Path, ids: &[usize]) -> Result<Vec<ObservedTrace>> {
    let all = read_traces(open(traces)?, &b.index).with_context(|| format!("reading {}", traces.display()))?;
    let keep: std::collections::HashSet<usize> = ids.iter().copied().collect();
    let out: Vec<_> = all.into_iter().filter(|t| keep.contains(&t.id)).collect();
    anyhow::ensure!(out.len() == keep.len(), "{} lacks traces listed in the manifest", traces.display());
    Ok(out)
}
