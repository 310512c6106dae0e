#![allow(dead_code)]

use rand::Rng;

/// Relative error with a floor on the denominator so that gradients that
/// are numerically zero are compared absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Largest relative error between `analytic` and central differences of `f`
/// over the coordinates in `coords` (all when `None`).
pub fn check_grad(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    analytic: &[f64],
    coords: Option<&[usize]>,
) -> f64 {
    let h = 1e-6;
    let all: Vec<usize> = (0..x.len()).collect();
    let coords = coords.unwrap_or(&all);
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for &i in coords {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        let num = (fp - fm) / (2.0 * h);
        worst = worst.max(rel_err(analytic[i], num));
    }
    worst
}

/// Up to `n` distinct random coordinates below `len`.
pub fn sample_coords<R: Rng>(len: usize, n: usize, rng: &mut R) -> Vec<usize> {
    if len <= n {
        return (0..len).collect();
    }
    rand::seq::index::sample(rng, len, n).into_vec()
}

pub fn random_probs<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.02..0.98)).collect()
}

use liftlearn_core::action::{cross_entropy, expected_loss, step_loss, step_weights, ActionPredictor};
use liftlearn_core::lifted::{action_loss, action_loss_backward, case_cross_entropy, CaseTable, DecodedGrad, LossWeights};
use liftlearn_core::perception::{bce, StatePredictor};
use liftlearn_core::planning::{fixtures, Case, State};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Worst relative finite-difference error per loss over `configs` random
/// configurations.
pub fn gradient_suite(configs: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let bundles = [fixtures::bundle("blocksworld-2").unwrap(), fixtures::bundle("gripper-3-1-2").unwrap()];
    let mut worst = vec![
        ("single-action", 0.0f64),
        ("expected", 0.0),
        ("step", 0.0),
        ("state-bce", 0.0),
        ("case-ce", 0.0),
        ("action-ce", 0.0),
    ];
    let mut bump = |i: usize, v: f64| worst[i].1 = worst[i].1.max(v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..configs {
        let b = &bundles[c % bundles.len()];
        let (np, na) = (b.index.num_props(), b.index.num_actions());
        let table = CaseTable::random(&b.domain, 1.0, &mut rng);
        let nl = table.logits.len();
        let x = random_probs(np, &mut rng);
        let y = random_probs(np, &mut rng);
        let lambda = rng.random_range(0.0..1.0);
        let w = LossWeights { pred: rng.random_range(0.5..3.0), app: rng.random_range(0.5..3.0), bias: lambda };
        let a = rng.random_range(0..na);

        // packed input: logits ++ x ++ y
        let mut packed: Vec<f64> = table.logits.iter().chain(&x).chain(&y).copied().collect();
        let unpack = |v: &[f64]| {
            let mut t = table.clone();
            t.logits.copy_from_slice(&v[..nl]);
            (t, v[nl..nl + np].to_vec(), v[nl + np..].to_vec())
        };

        // single action
        {
            let d = table.decode();
            let mut dm = DecodedGrad::zeros(d.num_pairs());
            let (mut dx, mut dy) = (vec![0.0; np], vec![0.0; np]);
            action_loss_backward(&x, &y, &d, &b.index, a, w, 1.0, &mut dx, &mut dy, &mut dm);
            let mut g = vec![0.0; nl];
            table.backward(&d, &dm, &mut g);
            g.extend(dx);
            g.extend(dy);
            let mut f = |v: &[f64]| {
                let (t, x, y) = unpack(v);
                w.combine(&action_loss(&x, &y, &t.decode(), &b.index, a))
            };
            let coords = sample_coords(packed.len(), 40, &mut rng);
            bump(0, check_grad(&mut f, &packed, &g, Some(&coords)));
        }

        // expected loss, with logits of the action distribution appended
        {
            let z: Vec<f64> = (0..na).map(|_| rng.random_range(-2.0..2.0)).collect();
            packed.extend(&z);
            let d = table.decode();
            let mut dm = DecodedGrad::zeros(d.num_pairs());
            let (mut dx, mut dy) = (vec![0.0; np], vec![0.0; np]);
            let ex = expected_loss(&x, &y, &z, &d, &b.index, w, 1.0, &mut dx, &mut dy, &mut dm);
            let mut g = vec![0.0; nl];
            table.backward(&d, &dm, &mut g);
            g.extend(dx);
            g.extend(dy);
            g.extend(&ex.dz);
            let mut f = |v: &[f64]| {
                let (t, x, y) = unpack(&v[..nl + 2 * np]);
                let z = &v[nl + 2 * np..];
                let (mut a, mut b2, mut c) = (vec![0.0; np], vec![0.0; np], DecodedGrad::zeros(t.num_pairs()));
                expected_loss(&x, &y, z, &t.decode(), &b.index, w, 1.0, &mut a, &mut b2, &mut c).value
            };
            let coords = sample_coords(packed.len(), 40, &mut rng);
            bump(1, check_grad(&mut f, &packed, &g, Some(&coords)));
            packed.truncate(nl + 2 * np);

            let (v, gz) = cross_entropy(&z, a);
            let _ = v;
            let mut f = |z: &[f64]| cross_entropy(z, a).0;
            bump(5, check_grad(&mut f, &z, &gz, None));
        }

        // full step loss, with action predictor parameters appended
        {
            let pred = ActionPredictor::random(na, np, 0.5, &mut rng);
            let steps = rng.random_range(1..4);
            let t = rng.random_range(0..steps);
            let sw = step_weights(t, steps, 10.0, lambda);
            let ce_w = rng.random_range(0.1..2.0);
            packed.extend(&pred.params);
            let d = table.decode();
            let mut dm = DecodedGrad::zeros(d.num_pairs());
            let (mut dx, mut dy) = (vec![0.0; np], vec![0.0; np]);
            let mut ga = vec![0.0; pred.num_params()];
            step_loss(&x, &y, &pred, &d, &b.index, sw, a, ce_w, 1.0, &mut ga, &mut dx, &mut dy, &mut dm).unwrap();
            let mut g = vec![0.0; nl];
            table.backward(&d, &dm, &mut g);
            g.extend(dx);
            g.extend(dy);
            g.extend(ga);
            let mut f = |v: &[f64]| {
                let (t, x, y) = unpack(&v[..nl + 2 * np]);
                let mut p = pred.clone();
                p.params.copy_from_slice(&v[nl + 2 * np..]);
                let mut ga = vec![0.0; p.num_params()];
                let (mut a1, mut a2, mut dm) = (vec![0.0; np], vec![0.0; np], DecodedGrad::zeros(t.num_pairs()));
                step_loss(&x, &y, &p, &t.decode(), &b.index, sw, a, ce_w, 1.0, &mut ga, &mut a1, &mut a2, &mut dm)
                    .unwrap()
                    .value
            };
            let coords = sample_coords(packed.len(), 60, &mut rng);
            bump(2, check_grad(&mut f, &packed, &g, Some(&coords)));
        }

        // state predictor through binary cross-entropy
        {
            let sp = StatePredictor::random(np, 3, 0.7, &mut rng);
            let obs: Vec<f64> = (0..np * 3).map(|_| rng.random_range(-1.5..1.5)).collect();
            let target = State::from_bits((0..np).map(|_| rng.random_bool(0.5)).collect());
            let ps = sp.predict(&obs).unwrap();
            let (_, dps) = bce(ps.as_slice(), &target, 1e-3);
            let mut g = vec![0.0; sp.num_params()];
            sp.backward(&obs, &ps, &dps, &mut g);
            let mut f = |v: &[f64]| {
                let mut s = sp.clone();
                s.params.copy_from_slice(v);
                bce(s.predict(&obs).unwrap().as_slice(), &target, 1e-3).0
            };
            bump(3, check_grad(&mut f, &sp.params, &g, None));
        }

        // case cross-entropy
        {
            let targets: Vec<Case> = (0..table.num_pairs()).map(|_| Case::from_index(rng.random_range(0..4))).collect();
            let mut g = vec![0.0; nl];
            case_cross_entropy(&table, &targets, 1.0, &mut g);
            let mut f = |v: &[f64]| {
                let mut t = table.clone();
                t.logits.copy_from_slice(v);
                case_cross_entropy(&t, &targets, 1.0, &mut vec![0.0; nl])
            };
            let coords = sample_coords(nl, 40, &mut rng);
            bump(4, check_grad(&mut f, &table.logits, &g, Some(&coords)));
        }
    }
    worst
}

use liftlearn_core::fixer::{FixProblem, ModelObs, ObjectiveMask, TraceObs};
use liftlearn_core::planning::fixtures::Bundle;
use liftlearn_core::planning::{random_walk, sample_initial_state, GroundModel, StateTrace};

/// Random walks of `len` steps from scrambled initial states.
pub fn walks(b: &Bundle, n: usize, len: usize, seed: u64) -> Vec<StateTrace> {
    let gm = GroundModel::new(&b.model, &b.index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let s = sample_initial_state(&gm, &b.init_state(), 6, &mut rng).unwrap();
            random_walk(&gm, s, len, &mut rng).unwrap()
        })
        .collect()
}

fn soften(bit: bool, u: f64) -> f64 {
    if bit { 1.0 - u } else { u }
}

/// Ground truth observed through uniform noise of magnitude at most `noise`,
/// pushing every probability towards one half.
pub fn noisy_problem<R: Rng>(b: &Bundle, walks: &[StateTrace], noise: f64, mask: ObjectiveMask, rng: &mut R) -> FixProblem {
    let mut u = || if noise > 0.0 { rng.random_range(0.0..noise) } else { 0.0 };
    let truth = ModelObs::from_model(&b.domain, &b.model);
    let model = ModelObs {
        pre: truth.pre.iter().map(|&v| soften(v > 0.5, u())).collect(),
        add: truth.add.iter().map(|&v| soften(v > 0.5, u())).collect(),
        del: truth.del.iter().map(|&v| soften(v > 0.5, u())).collect(),
    };
    let traces = walks
        .iter()
        .enumerate()
        .map(|(id, w)| {
            let acts = w.actions.clone().unwrap();
            TraceObs {
                id,
                initial: w.states[0].clone(),
                final_state: w.states[acts.len()].clone(),
                state_obs: w.states.iter().map(|s| s.bits().iter().map(|&x| soften(x, u())).collect()).collect(),
                action_obs: acts
                    .iter()
                    .map(|&a| (0..b.index.num_actions()).map(|x| soften(x == a, u())).collect())
                    .collect(),
            }
        })
        .collect();
    FixProblem { traces, model, lambda: 0.4, mask }
}

/// Uniformly random predictions around real trace endpoints.
pub fn random_problem<R: Rng>(b: &Bundle, walks: &[StateTrace], rng: &mut R) -> FixProblem {
    let (np, na, nk) = (b.index.num_props(), b.index.num_actions(), b.domain.num_pairs());
    let mut row = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>()).collect() };
    let model = ModelObs { pre: row(nk), add: row(nk), del: row(nk) };
    let traces = walks
        .iter()
        .enumerate()
        .map(|(id, w)| {
            let steps = w.actions.as_ref().unwrap().len();
            TraceObs {
                id,
                initial: w.states[0].clone(),
                final_state: w.states[steps].clone(),
                state_obs: (0..=steps).map(|_| row(np)).collect(),
                action_obs: (0..steps).map(|_| row(na)).collect(),
            }
        })
        .collect();
    FixProblem { traces, model, lambda: 0.4, mask: ObjectiveMask::ALL }
}

/// Solver output validated by the independent checker, the explicit program
/// rows, the objective evaluator and successor semantics.
pub fn assert_sound(b: &Bundle, p: &FixProblem, r: &liftlearn_core::fixer::FixResult) {
    use liftlearn_core::fixer::{build, check_assignment, objective_value};
    let Some(a) = &r.assignment else { return };
    if let Err(v) = check_assignment(p, &b.domain, &b.index, a) {
        panic!("constraint violated: {v}");
    }
    let prog = build(p, &b.domain, &b.index);
    let x = prog.values(a, &b.domain, &b.index);
    assert!(prog.violations(&x).is_empty(), "program rows violated");
    let obj = r.objective.unwrap();
    assert!((objective_value(p, &b.domain, a) - obj).abs() < 1e-9);
    assert!((prog.evaluate(&x) - obj).abs() < 1e-9);
    let gm = GroundModel::new(&a.model, &b.index);
    for t in &a.traces {
        let trace = StateTrace::new(t.states.clone());
        let witness = gm.trace_consistent(&trace).expect("repaired trace is executable");
        assert_eq!(witness.len(), t.actions.len());
        for (i, &act) in t.actions.iter().enumerate() {
            assert_eq!(gm.successor(&t.states[i], act).unwrap(), t.states[i + 1]);
        }
    }
}

use liftlearn_core::dataset::{generate, split_ids, GenerateSpec, GroundTruth, ObservedTrace};
use liftlearn_core::eval::{evaluate, Metrics};
use liftlearn_core::perception::ChannelParams;
use liftlearn_core::trainer::{EpochMetrics, TrainConfig, Trainer};

/// Generated train/test split of an instance's random walks.
pub struct Experiment {
    pub bundle: Bundle,
    pub train: Vec<ObservedTrace>,
    pub test: Vec<(ObservedTrace, GroundTruth)>,
}

pub fn experiment(instance: &str, traces: usize, length: usize, flip: f64, seed: u64) -> Experiment {
    let bundle = fixtures::bundle(instance).unwrap();
    let gm = GroundModel::new(&bundle.model, &bundle.index);
    let spec = GenerateSpec {
        traces,
        length,
        scramble: 10,
        channel: ChannelParams { flip_rate: flip, noise: 0.0, features: 3 },
        seed,
    };
    let data = generate(&gm, &bundle.init_state(), &spec).unwrap();
    let (train_ids, test_ids) = split_ids(traces, seed);
    let train = train_ids.iter().map(|&i| data[i].0.clone()).collect();
    let test = test_ids.iter().map(|&i| data[i].clone()).collect();
    Experiment { bundle, train, test }
}

/// Trains for `cfg.epochs` epochs, stopping early once `stop` holds for the
/// held-out metrics (checked every `every` epochs after the warmup).
pub fn train_run(
    ex: &Experiment,
    cfg: TrainConfig,
    every: usize,
    stop: impl Fn(&Metrics) -> bool,
) -> (Metrics, Vec<EpochMetrics>) {
    let b = &ex.bundle;
    let mut tr = Trainer::new(&b.domain, &b.index, cfg.clone()).unwrap();
    let mut log = Vec::new();
    let eval = |tr: &Trainer| evaluate(&b.domain, &b.index, tr.params(), &ex.test, &b.model, cfg.delta, 100_000).unwrap();
    for e in 1..=cfg.epochs {
        log.push(tr.run_epoch(&ex.train).unwrap());
        if e > cfg.warmup && e % every == 0 && stop(&eval(&tr)) {
            break;
        }
    }
    (eval(&tr), log)
}
