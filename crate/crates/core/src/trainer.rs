//! Two-phase training: the predictors are first trained on consistency
//! losses alone; after the warmup, every epoch repairs the predictions on a
//! few sampled traces with the exact fixer and turns the repaired bits into
//! aging pseudo-labels.
//!
//! Nothing here looks at how a trace was generated: the trainer sees the
//! observed endpoints and feature vectors only.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::action::{locally_best_action, step_loss, step_weights, ActionPredictor};
use crate::dataset::{item_rng, ObservedTrace};
use crate::error::{Error, Result};
use crate::fixer::{
    align_permutation, extract_pseudo_labels, BranchAndBound, FixProblem, FixSolver, ModelObs, ObjectiveMask,
    PseudoLabelSet, SolverOptions, Status, TraceObs,
};
use crate::lifted::{case_cross_entropy, CaseTable, Decoded, DecodedGrad};
use crate::perception::{bce, lift_endpoints, ProbState, StatePredictor, DEFAULT_FEATURES};
use crate::planning::{Domain, GroundIndex};

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_FIX: u64 = 2;

fn epoch_stream(epoch: usize, purpose: u64) -> u64 {
    ((epoch as u64) << 8) | purpose
}

/// Training hyperparameters. Read from a flat TOML file whose keys are the
/// field names; unknown keys are rejected and missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the precondition prior.
    pub lambda: f64,
    /// Emphasis of the first and last step of every trace.
    pub gamma: f64,
    /// Per-epoch decay of pseudo-label weights.
    pub psi: f64,
    /// Epochs trained without the fixer.
    pub warmup: usize,
    /// Traces per fixer call; one call per epoch after the warmup.
    pub fix_traces: usize,
    /// Seconds; omitted means unlimited.
    pub fix_time_limit: Option<f64>,
    /// Omitted means unlimited. A node limit keeps runs reproducible.
    pub fix_node_limit: Option<u64>,
    /// `state`, `state+action` or `all`.
    pub objective_mask: String,
    /// Disables the fixer entirely (ablation).
    pub use_fixer: bool,
    pub seed: u64,
    /// Probability clamp for logarithms and lifted endpoints.
    pub delta: f64,
    /// Features per proposition expected in the observations.
    pub features: usize,
    /// Standard deviation of the initial predictor weights.
    pub init_std: f64,
    /// Standard deviation of the initial case logits.
    pub case_init_std: f64,
    /// Largest number of model renamings searched when aligning.
    pub permutation_cap: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 32,
            learning_rate: 0.01,
            lambda: 0.4,
            gamma: 10.0,
            psi: 0.99,
            warmup: 50,
            fix_traces: 3,
            fix_time_limit: None,
            fix_node_limit: Some(200_000),
            objective_mask: "all".into(),
            use_fixer: true,
            seed: 0,
            delta: 1e-3,
            features: DEFAULT_FEATURES,
            init_std: 0.1,
            case_init_std: 0.01,
            permutation_cap: 100_000,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn mask(&self) -> Result<ObjectiveMask> {
        self.objective_mask.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return bad("gamma must be at least 1");
        }
        if !(self.psi > 0.0 && self.psi < 1.0) {
            return bad("psi must lie in (0, 1)");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad("delta must lie in (0, 0.5)");
        }
        if self.features == 0 {
            return bad("features must be positive");
        }
        if self.fix_time_limit.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return bad("fix_time_limit must be a non-negative number of seconds");
        }
        if !(self.init_std >= 0.0 && self.case_init_std >= 0.0) {
            return bad("initial standard deviations must be non-negative");
        }
        self.mask()?;
        Ok(())
    }

    fn solver(&self) -> BranchAndBound {
        BranchAndBound::new(SolverOptions {
            time_limit: self.fix_time_limit.map(Duration::from_secs_f64),
            node_limit: self.fix_node_limit,
        })
    }
}

/// Learnable parameters of the three predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub state: StatePredictor,
    pub action: ActionPredictor,
    pub model: CaseTable,
}

impl Params {
    pub fn init(domain: &Domain, idx: &GroundIndex, cfg: &TrainConfig) -> Self {
        let mut rng = item_rng(cfg.seed, STREAM_INIT);
        let (np, na) = (idx.num_props(), idx.num_actions());
        Params {
            state: StatePredictor::random(np, cfg.features, cfg.init_std, &mut rng),
            action: ActionPredictor::random(na, np, cfg.init_std, &mut rng),
            model: CaseTable::random(domain, cfg.case_init_std, &mut rng),
        }
    }

    /// Predicted proposition probabilities for states `1..=T+1` of a trace:
    /// lifted endpoints around the perceived intermediate states.
    pub fn trace_states(&self, trace: &ObservedTrace, delta: f64) -> Result<Vec<ProbState>> {
        let (first, last) = lift_endpoints(&trace.initial, &trace.final_state, delta);
        let mut ps = Vec::with_capacity(trace.steps() + 1);
        ps.push(first);
        for o in &trace.obs {
            ps.push(self.state.predict(o)?);
        }
        ps.push(last);
        Ok(ps)
    }

    /// Predicted action distribution of every step.
    pub fn trace_actions(&self, ps: &[ProbState]) -> Result<Vec<Vec<f64>>> {
        ps.windows(2).map(|w| self.action.predict(w[0].as_slice(), w[1].as_slice())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Latest pseudo-labels per trace id; a re-fixed trace replaces its labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelStore {
    labels: BTreeMap<usize, PseudoLabelSet>,
}

impl LabelStore {
    pub fn insert(&mut self, set: PseudoLabelSet) {
        self.labels.insert(set.trace, set);
    }

    pub fn get(&self, trace: usize) -> Option<&PseudoLabelSet> {
        self.labels.get(&trace)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Summary of one fixer call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixStats {
    pub traces: Vec<usize>,
    pub status: Status,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean per-trace loss.
    pub loss: f64,
    pub expected: f64,
    pub action_ce: f64,
    pub state_bce: f64,
    pub case_ce: f64,
    /// Training traces that carried pseudo-labels this epoch.
    pub labelled: usize,
    pub fix: Option<FixStats>,
}

impl EpochMetrics {
    pub const CSV_HEADER: &'static str =
        "epoch,loss,expected,action_ce,state_bce,case_ce,labelled,fix_status,fix_objective,fix_gap,fix_nodes,fix_seconds";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let (status, obj, gap, nodes, secs) = match &self.fix {
            Some(f) => (
                serde_json::to_value(f.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                opt(f.objective),
                opt(f.gap),
                f.nodes.to_string(),
                f.seconds.to_string(),
            ),
            None => Default::default(),
        };
        format!(
            "{},{},{},{},{},{},{},{status},{obj},{gap},{nodes},{secs}",
            self.epoch, self.loss, self.expected, self.action_ce, self.state_bce, self.case_ce, self.labelled
        )
    }
}

/// Everything needed to continue a run: parameters, optimizer moments,
/// pseudo-labels and the number of completed epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    pub params: Params,
    adam: [Adam; 3],
    pub labels: LabelStore,
}

#[derive(Default)]
struct Parts {
    loss: f64,
    expected: f64,
    action_ce: f64,
    state_bce: f64,
    case_ce: f64,
}

struct TraceGrad {
    parts: Parts,
    state: Vec<f64>,
    action: Vec<f64>,
    model: DecodedGrad,
    logits: Vec<f64>,
}

pub struct Trainer<'a> {
    domain: &'a Domain,
    idx: &'a GroundIndex,
    cfg: TrainConfig,
    ckpt: Checkpoint,
}

impl<'a> Trainer<'a> {
    pub fn new(domain: &'a Domain, idx: &'a GroundIndex, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let params = Params::init(domain, idx, &cfg);
        let adam = [
            Adam::new(params.state.num_params()),
            Adam::new(params.action.num_params()),
            Adam::new(params.model.logits.len()),
        ];
        Ok(Trainer { domain, idx, cfg, ckpt: Checkpoint { epoch: 0, params, adam, labels: LabelStore::default() } })
    }

    pub fn resume(domain: &'a Domain, idx: &'a GroundIndex, cfg: TrainConfig, ckpt: Checkpoint) -> Result<Self> {
        cfg.validate()?;
        let fresh = Params::init(domain, idx, &cfg);
        let p = &ckpt.params;
        if p.state.num_params() != fresh.state.num_params()
            || p.action.num_params() != fresh.action.num_params()
            || p.model.logits.len() != fresh.model.logits.len()
        {
            return Err(Error::Config("checkpoint does not match the domain, instance or feature count".into()));
        }
        Ok(Trainer { domain, idx, cfg, ckpt })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params {
        &self.ckpt.params
    }

    pub fn labels(&self) -> &LabelStore {
        &self.ckpt.labels
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.ckpt.epoch
    }

    pub fn checkpoint(&self) -> &Checkpoint {
        &self.ckpt
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut f, &self.ckpt)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }

    /// Runs one epoch: a fixer call once past the warmup, then one pass of
    /// mini-batch updates over `train`.
    pub fn run_epoch(&mut self, train: &[ObservedTrace]) -> Result<EpochMetrics> {
        let e = self.ckpt.epoch + 1;
        let fix = if self.cfg.use_fixer && e > self.cfg.warmup && !train.is_empty() {
            let (stats, labels) = self.run_fix(train, e)?;
            for l in labels {
                self.ckpt.labels.insert(l);
            }
            Some(stats)
        } else {
            None
        };

        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut item_rng(self.cfg.seed, epoch_stream(e, STREAM_SHUFFLE)));
        let mut total = Parts::default();
        let mut labelled = 0;
        for batch in order.chunks(self.cfg.batch_size) {
            let decoded = self.ckpt.params.model.decode();
            let scale = 1.0 / batch.len() as f64;
            let grads = crate::par::map_slice(batch, |&i| self.trace_grad(&train[i], &decoded, e, scale));
            let np = &self.ckpt.params;
            let mut gs = vec![0.0; np.state.num_params()];
            let mut ga = vec![0.0; np.action.num_params()];
            let mut gl = vec![0.0; np.model.logits.len()];
            let mut gm = DecodedGrad::zeros(decoded.num_pairs());
            for (g, &i) in grads.into_iter().zip(batch) {
                let g = g?;
                labelled += self.ckpt.labels.get(train[i].id).is_some() as usize;
                add_into(&mut gs, &g.state);
                add_into(&mut ga, &g.action);
                add_into(&mut gl, &g.logits);
                add_into(&mut gm.pre, &g.model.pre);
                add_into(&mut gm.add, &g.model.add);
                add_into(&mut gm.del, &g.model.del);
                total.loss += g.parts.loss;
                total.expected += g.parts.expected;
                total.action_ce += g.parts.action_ce;
                total.state_bce += g.parts.state_bce;
                total.case_ce += g.parts.case_ce;
            }
            np.model.backward(&decoded, &gm, &mut gl);
            let lr = self.cfg.learning_rate;
            let [a_s, a_a, a_m] = &mut self.ckpt.adam;
            let p = &mut self.ckpt.params;
            a_s.step(&mut p.state.params, &gs, lr);
            a_a.step(&mut p.action.params, &ga, lr);
            a_m.step(&mut p.model.logits, &gl, lr);
        }
        self.ckpt.epoch = e;
        let n = train.len().max(1) as f64;
        Ok(EpochMetrics {
            epoch: e,
            loss: total.loss / n,
            expected: total.expected / n,
            action_ce: total.action_ce / n,
            state_bce: total.state_bce / n,
            case_ce: total.case_ce / n,
            labelled,
            fix,
        })
    }

    /// Loss of one trace and its gradients, all scaled by `scale`.
    fn trace_grad(&self, trace: &ObservedTrace, decoded: &Decoded, epoch: usize, scale: f64) -> Result<TraceGrad> {
        let p = &self.ckpt.params;
        let cfg = &self.cfg;
        let steps = trace.steps();
        let ps = p.trace_states(trace, cfg.delta)?;
        let np = self.idx.num_props();
        let mut dps = vec![vec![0.0; np]; steps + 1];
        let mut g = TraceGrad {
            parts: Parts::default(),
            state: vec![0.0; p.state.num_params()],
            action: vec![0.0; p.action.num_params()],
            model: DecodedGrad::zeros(decoded.num_pairs()),
            logits: vec![0.0; p.model.logits.len()],
        };
        let labels = self.ckpt.labels.get(trace.id).filter(|l| l.actions.len() == steps);
        let lw = labels.map_or(0.0, |l| l.weight(epoch, cfg.psi));

        for t in 0..steps {
            let w = step_weights(t, steps, cfg.gamma, cfg.lambda);
            let (x, y) = (ps[t].as_slice(), ps[t + 1].as_slice());
            let (target, ce_w) = match labels {
                Some(l) => (l.actions[t], lw),
                None => (locally_best_action(x, y, decoded, self.idx, cfg.delta), 1.0),
            };
            let (head, tail) = dps.split_at_mut(t + 1);
            let sl = step_loss(
                x,
                y,
                &p.action,
                decoded,
                self.idx,
                w,
                target,
                ce_w,
                scale,
                &mut g.action,
                &mut head[t],
                &mut tail[0],
                &mut g.model,
            )?;
            g.parts.expected += sl.expected;
            g.parts.action_ce += ce_w * sl.ce;
            g.parts.loss += sl.value;
        }

        if let Some(l) = labels {
            for t in 1..steps {
                let (v, d) = bce(ps[t].as_slice(), &l.states[t], cfg.delta);
                g.parts.state_bce += lw * v;
                for (a, b) in dps[t].iter_mut().zip(d) {
                    *a += scale * lw * b;
                }
            }
            let v = case_cross_entropy(&p.model, &l.cases, scale * lw, &mut g.logits);
            g.parts.case_ce += lw * v;
            g.parts.loss += g.parts.state_bce + g.parts.case_ce;
        }

        for t in 1..steps {
            p.state.backward(&trace.obs[t - 1], &ps[t], &dps[t], &mut g.state);
        }
        Ok(g)
    }

    /// The fixer problem for the given traces under the current parameters.
    pub fn fix_problem(&self, traces: &[&ObservedTrace]) -> Result<FixProblem> {
        let p = &self.ckpt.params;
        let decoded = p.model.decode();
        let obs = traces
            .iter()
            .map(|tr| {
                let ps = p.trace_states(tr, self.cfg.delta)?;
                Ok(TraceObs {
                    id: tr.id,
                    initial: tr.initial.clone(),
                    final_state: tr.final_state.clone(),
                    action_obs: p.trace_actions(&ps)?,
                    state_obs: ps.into_iter().map(|s| s.0).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FixProblem {
            traces: obs,
            model: decoded_obs(&decoded),
            lambda: self.cfg.lambda,
            mask: self.cfg.mask()?,
        })
    }

    /// Samples `fix_traces` training traces for epoch `epoch`, repairs their
    /// predictions and returns aligned pseudo-labels born at `epoch`.
    pub fn run_fix(&self, train: &[ObservedTrace], epoch: usize) -> Result<(FixStats, Vec<PseudoLabelSet>)> {
        let mut rng = item_rng(self.cfg.seed, epoch_stream(epoch, STREAM_FIX));
        let k = self.cfg.fix_traces.min(train.len());
        let mut picked: Vec<&ObservedTrace> = train.choose_multiple(&mut rng, k).collect();
        picked.sort_by_key(|t| t.id);
        let problem = self.fix_problem(&picked)?;
        let result = self.cfg.solver().solve(&problem, self.domain, self.idx)?;
        let (aligned, _) =
            align_permutation(&result, &problem, self.domain, self.idx, self.cfg.permutation_cap as u128);
        let stats = FixStats {
            traces: picked.iter().map(|t| t.id).collect(),
            status: result.status,
            objective: result.objective,
            gap: result.gap(),
            nodes: result.stats.nodes,
            seconds: result.stats.seconds,
        };
        log::debug!("epoch {epoch}: fix {:?} after {} nodes", stats.status, stats.nodes);
        Ok((stats, extract_pseudo_labels(&problem, &aligned, epoch)))
    }
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

/// Decoded model probabilities in the fixer's per-pair layout.
pub fn decoded_obs(d: &Decoded) -> ModelObs {
    ModelObs { pre: d.pre.clone(), add: d.add.clone(), del: d.del.clone() }
}
