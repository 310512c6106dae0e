//! Evaluation and export. This is the only command that reads the ground
//! truth stored alongside the observations.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use liftlearn_core::dataset::read_ground_truth;
use liftlearn_core::dump::ModelDump;
use liftlearn_core::eval::{evaluate, score_model};
use liftlearn_core::fixer::ModelObs;
use liftlearn_core::planning::pddl::write_domain;
use liftlearn_core::planning::{ActionModel, Domain, Flags};
use liftlearn_core::trainer::{decoded_obs, Checkpoint, Trainer};
use serde_json::json;

use crate::io::{create, load_domain, load_manifest, load_split, load_world, manifest_path, open};
use crate::World;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Train,
    Test,
    All,
}

/// Learned model to read: a training checkpoint or a model dump.
#[derive(Args, Debug)]
#[group(required = false, multiple = false)]
struct Learned {
    /// Checkpoint written by `train`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Model dump (model.json) written by `train`, or any file of that form.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// PDDL domain file holding the reference model.
    #[arg(long)]
    domain: PathBuf,
    /// PDDL problem file; needed with --checkpoint.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Trace file with ground truth; needed with --checkpoint.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Split manifest; defaults to manifest.json next to the trace file
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Which traces to score
    #[arg(long, value_enum, default_value_t = Split::Test)]
    split: Split,
    #[command(flatten)]
    learned: Learned,
    /// Probability clamp used when predicting actions
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Largest number of model renamings searched.
    #[arg(long, default_value_t = 100_000)]
    permutation_cap: u64,
    /// Also write the metrics as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_checkpoint(path: &Path, domain: &Domain) -> Result<Checkpoint> {
    let ckpt = Trainer::load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
    anyhow::ensure!(
        ckpt.params.model.num_pairs() == domain.num_pairs(),
        "{} was trained on a different domain",
        path.display()
    );
    Ok(ckpt)
}

fn load_dump(path: &Path, domain: &Domain) -> Result<ModelObs> {
    let dump: ModelDump =
        serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(dump.to_obs(domain)?)
}

pub fn run(a: EvalArgs) -> Result<ExitCode> {
    let (domain, truth) = load_domain(&a.domain)?;
    let cap = a.permutation_cap as u128;
    let metrics = match (&a.learned.checkpoint, &a.learned.model) {
        (Some(ck), _) => {
            let (Some(instance), Some(traces)) = (&a.instance, &a.traces) else {
                anyhow::bail!("--checkpoint needs --instance and --traces");
            };
            let b = load_world(&World { domain: a.domain.clone(), instance: instance.clone() })?;
            let ckpt = load_checkpoint(ck, &b.domain)?;
            let manifest = load_manifest(&manifest_path(traces, a.manifest.as_deref()))?;
            let ids: Vec<usize> = match a.split {
                Split::Train => manifest.train.clone(),
                Split::Test => manifest.test.clone(),
                Split::All => manifest.train.iter().chain(&manifest.test).copied().collect(),
            };
            let observed = load_split(&b, traces, &ids)?;
            let mut gt: HashMap<usize, _> = read_ground_truth(open(traces)?, &b.index)?.into_iter().collect();
            let test = observed
                .into_iter()
                .map(|t| {
                    let g = gt.remove(&t.id).with_context(|| format!("no ground truth for trace {}", t.id))?;
                    Ok((t, g))
                })
                .collect::<Result<Vec<_>>>()?;
            let m = evaluate(&b.domain, &b.index, &ckpt.params, &test, &b.model, a.delta, cap)?;
            json!({ "err": m.err, "agree": m.agree, "state_acc": m.state_acc, "action_acc": m.action_acc, "traces": test.len() })
        }
        (None, Some(path)) => {
            let s = score_model(&domain, &load_dump(path, &domain)?, &truth, cap);
            json!({ "err": s.err, "agree": s.agree })
        }
        (None, None) => anyhow::bail!("give --checkpoint or --model"),
    };
    let text = serde_json::to_string_pretty(&metrics)?;
    println!("{text}");
    if let Some(p) = &a.out {
        let mut f = create(p)?;
        writeln!(f, "{text}")?;
        f.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// PDDL domain file supplying the vocabulary.
    #[arg(long)]
    domain: PathBuf,
    /// Without a learned model the domain's own model is printed.
    #[command(flatten)]
    learned: Learned,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Thresholds per-pair probabilities at 0.5.
fn threshold(domain: &Domain, obs: &ModelObs) -> Result<ActionModel> {
    let mut m = ActionModel::empty(domain);
    for (k, (s, b)) in domain.pairs().enumerate() {
        m.set(s, b, Flags { pre: obs.pre[k] > 0.5, add: obs.add[k] > 0.5, del: obs.del[k] > 0.5 });
    }
    m.validate(domain)?;
    Ok(m)
}

pub fn export(a: ExportArgs) -> Result<ExitCode> {
    let (domain, reference) = load_domain(&a.domain)?;
    let model = match (&a.learned.checkpoint, &a.learned.model) {
        (Some(ck), _) => threshold(&domain, &decoded_obs(&load_checkpoint(ck, &domain)?.params.model.decode()))?,
        (None, Some(path)) => threshold(&domain, &load_dump(path, &domain)?)?,
        (None, None) => reference,
    };
    let text = write_domain(&domain, &model);
    match &a.out {
        Some(p) => {
            let mut f = create(p)?;
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}
