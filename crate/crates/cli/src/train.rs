//! Training entry point. Reads only the observed part of the trace file.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use liftlearn_core::dump::ModelDump;
use liftlearn_core::planning::pddl::write_domain;
use liftlearn_core::trainer::{EpochMetrics, TrainConfig, Trainer};

use crate::io::{create, load_manifest, load_split, load_world, manifest_path, write_json};
use crate::World;

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    world: World,
    /// Trace file written by `generate`.
    #[arg(long)]
    traces: PathBuf,
    /// Split manifest; defaults to manifest.json next to the trace file.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Flat TOML file of training settings; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured fixer time limit, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Overrides the configured fixer objective (state | state+action | all).
    #[arg(long)]
    objective_mask: Option<String>,
    /// Overrides the configured number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Also write a checkpoint every N epochs (0: only at the end).
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    /// Output directory: metrics.csv, checkpoint.json, model.json, model.pddl.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: TrainArgs) -> Result<ExitCode> {
    let b = load_world(&a.world)?;
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => TrainConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.time_limit {
        cfg.fix_time_limit = Some(t);
    }
    if let Some(m) = a.objective_mask {
        cfg.objective_mask = m;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;

    let manifest = load_manifest(&manifest_path(&a.traces, a.manifest.as_deref()))?;
    let train = load_split(&b, &a.traces, &manifest.train)?;
    let width = b.index.num_props() * cfg.features;
    if let Some(t) = train.iter().find(|t| t.obs.iter().any(|o| o.len() != width)) {
        anyhow::bail!(
            "trace {} has observations that do not match {} propositions × {} features",
            t.id,
            b.index.num_props(),
            cfg.features
        );
    }

    let mut trainer = match &a.resume {
        Some(p) => {
            let ckpt = Trainer::load_checkpoint(p).with_context(|| format!("loading {}", p.display()))?;
            Trainer::resume(&b.domain, &b.index, cfg.clone(), ckpt)?
        }
        None => Trainer::new(&b.domain, &b.index, cfg.clone())?,
    };

    let mut csv = create(&a.out.join("metrics.csv"))?;
    writeln!(csv, "{}", EpochMetrics::CSV_HEADER)?;
    let ckpt_path = a.out.join("checkpoint.json");
    while trainer.epoch() < cfg.epochs {
        let m = trainer.run_epoch(&train)?;
        writeln!(csv, "{}", m.csv_row())?;
        if m.epoch % 50 == 0 {
            log::info!("epoch {}: loss {:.4}, {} labelled traces", m.epoch, m.loss, m.labelled);
        }
        if a.checkpoint_every > 0 && m.epoch % a.checkpoint_every == 0 {
            trainer.save(&ckpt_path)?;
        }
    }
    csv.flush()?;
    trainer.save(&ckpt_path)?;

    let decoded = trainer.params().model.decode();
    write_json(&a.out.join("model.json"), &ModelDump::from_decoded(&b.domain, &decoded))?;
    let mut pddl = create(&a.out.join("model.pddl"))?;
    pddl.write_all(write_domain(&b.domain, &decoded.threshold(&b.domain)).as_bytes())?;
    pddl.flush()?;
    Ok(ExitCode::SUCCESS)
}
