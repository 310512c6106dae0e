//! Parallel vs. sequential throughput of the data-parallel hot paths: a
//! training epoch (per-trace gradients) and dataset generation. The
//! "sequential" variant runs the same code inside a one-thread pool; build
//! with `--no-default-features` to compile the rayon path out entirely.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use liftlearn_core::dataset::{generate, GenerateSpec, ObservedTrace};
use liftlearn_core::perception::ChannelParams;
use liftlearn_core::planning::{fixtures, GroundModel};
use liftlearn_core::trainer::{TrainConfig, Trainer};

fn spec(traces: usize) -> GenerateSpec {
    GenerateSpec {
        traces,
        length: 3,
        scramble: 10,
        channel: ChannelParams { flip_rate: 0.05, noise: 0.0, features: 3 },
        seed: 1,
    }
}

fn modes() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let par = if liftlearn_core::par::is_parallel() { "parallel" } else { "sequential-build" };
    vec![(par, all), ("sequential", one)]
}

fn epoch(c: &mut Criterion) {
    let b = fixtures::bundle("blocksworld-3").unwrap();
    let gm = GroundModel::new(&b.model, &b.index);
    let train: Vec<ObservedTrace> =
        generate(&gm, &b.init_state(), &spec(512)).unwrap().into_iter().map(|(t, _)| t).collect();
    // warmup-only epochs: no fixer in the loop, so timings reflect the gradients
    let cfg = TrainConfig { epochs: 1, warmup: 1, batch_size: 64, ..TrainConfig::default() };
    let mut g = c.benchmark_group("epoch/blocksworld-3/512");
    for (name, pool) in modes() {
        g.bench_function(name, |bch| {
            bch.iter_batched(
                || Trainer::new(&b.domain, &b.index, cfg.clone()).unwrap(),
                |mut tr| pool.install(|| tr.run_epoch(&train).unwrap()),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn generation(c: &mut Criterion) {
    let b = fixtures::bundle("gripper-3-1-2").unwrap();
    let gm = GroundModel::new(&b.model, &b.index);
    let init = b.init_state();
    let s = spec(2000);
    let mut g = c.benchmark_group("generate/gripper-3-1-2/2000");
    for (name, pool) in modes() {
        g.bench_function(name, |bch| bch.iter(|| pool.install(|| generate(&gm, &init, &s).unwrap())));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = epoch, generation
}
criterion_main!(benches);
