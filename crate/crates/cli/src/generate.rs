use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use liftlearn_core::dataset::{generate, split_ids, write_traces, GenerateSpec, Manifest, MANIFEST_SCHEMA};
use liftlearn_core::perception::{ChannelParams, DEFAULT_FEATURES};
use liftlearn_core::planning::GroundModel;

use crate::io::{create, load_world, write_json};
use crate::World;

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    world: World,
    /// Number of traces.
    #[arg(long, default_value_t = 2000)]
    traces: usize,
    /// Transitions per trace.
    #[arg(long, default_value_t = 3)]
    length: usize,
    /// Maximum length of the walk that scrambles each initial state.
    #[arg(long, default_value_t = 20)]
    scramble: usize,
    /// Probability of flipping each feature's sign.
    #[arg(long, default_value_t = 0.05)]
    flip_rate: f64,
    /// Standard deviation of additive Gaussian feature noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Features per proposition.
    #[arg(long, default_value_t = DEFAULT_FEATURES)]
    features: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives traces.jsonl and manifest.json.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: GenerateArgs) -> Result<ExitCode> {
    let b = load_world(&a.world)?;
    let gm = GroundModel::new(&b.model, &b.index);
    let spec = GenerateSpec {
        traces: a.traces,
        length: a.length,
        scramble: a.scramble,
        channel: ChannelParams { flip_rate: a.flip_rate, noise: a.noise, features: a.features },
        seed: a.seed,
    };
    let data = generate(&gm, &b.init_state(), &spec)?;
    let (traces, truth): (Vec<_>, Vec<_>) = data.into_iter().unzip();

    let path = a.out.join("traces.jsonl");
    let mut f = create(&path)?;
    write_traces(&mut f, &traces, Some(&truth), &b.index)?;
    f.flush()?;

    let (train, test) = split_ids(a.traces, a.seed);
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.into(),
        domain: b.domain.name.clone(),
        instance: b.instance.name.clone(),
        spec,
        train,
        test,
    };
    write_json(&a.out.join("manifest.json"), &manifest)?;
    log::info!("wrote {} traces to {}", traces.len(), path.display());
    Ok(ExitCode::SUCCESS)
}
