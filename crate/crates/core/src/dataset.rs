//! Observed traces, their line-delimited JSON form, and synthetic dataset
//! generation.
//!
//! A record carries the fully observed endpoint states, one feature vector
//! per intermediate state and, optionally, a ground-truth block used only
//! for evaluation. Training readers use [`read_traces`], whose record type
//! has no field for that block, so it is never deserialized.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::{emit_observation, ChannelParams};
use crate::planning::{random_walk, sample_initial_state, GroundIndex, GroundModel, State};

pub const TRACE_SCHEMA: &str = "liftlearn.trace/v1";
pub const MANIFEST_SCHEMA: &str = "liftlearn.manifest/v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedTrace {
    pub id: usize,
    pub initial: State,
    pub final_state: State,
    /// Feature vectors of states `2..=T`; a trace with `T` transitions has `T-1`.
    pub obs: Vec<Vec<f64>>,
}

impl ObservedTrace {
    /// Number of transitions.
    pub fn steps(&self) -> usize {
        self.obs.len() + 1
    }
}

/// Ground truth behind an observed trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub states: Vec<State>,
    pub actions: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TruthRecord {
    states: Vec<Vec<String>>,
    actions: Vec<String>,
}

#[derive(Serialize)]
struct WriteRecord<'a> {
    schema: &'a str,
    id: usize,
    initial: Vec<String>,
    #[serde(rename = "final")]
    final_state: Vec<String>,
    obs: &'a [Vec<f64>],
    #[serde(skip_serializing_if = "Option::is_none")]
    hidden: Option<TruthRecord>,
}

#[derive(Deserialize)]
struct TraceRecord {
    schema: String,
    id: usize,
    initial: Vec<String>,
    #[serde(rename = "final")]
    final_state: Vec<String>,
    obs: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct EvalRecord {
    id: usize,
    hidden: Option<TruthRecord>,
}

fn names(s: &State, idx: &GroundIndex) -> Vec<String> {
    s.true_props().map(|p| idx.prop_name(p).to_string()).collect()
}

fn parse_state(names: &[String], idx: &GroundIndex, line: usize) -> Result<State> {
    let mut s = State::empty(idx.num_props());
    for n in names {
        let p = idx
            .prop_id(n)
            .ok_or_else(|| Error::Data(format!("line {line}: unknown proposition `{n}`")))?;
        s.set(p, true);
    }
    Ok(s)
}

pub fn write_traces<W: Write>(
    mut out: W,
    traces: &[ObservedTrace],
    truth: Option<&[GroundTruth]>,
    idx: &GroundIndex,
) -> Result<()> {
    for (i, t) in traces.iter().enumerate() {
        let hidden = truth.map(|g| TruthRecord {
            states: g[i].states.iter().map(|s| names(s, idx)).collect(),
            actions: g[i].actions.iter().map(|&a| idx.action_name(a).to_string()).collect(),
        });
        let rec = WriteRecord {
            schema: TRACE_SCHEMA,
            id: t.id,
            initial: names(&t.initial, idx),
            final_state: names(&t.final_state, idx),
            obs: &t.obs,
            hidden,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads observed traces, skipping any ground-truth block.
pub fn read_traces<R: BufRead>(input: R, idx: &GroundIndex) -> Result<Vec<ObservedTrace>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line)?;
        if rec.schema != TRACE_SCHEMA {
            return Err(Error::Data(format!("line {}: unsupported schema `{}`", n + 1, rec.schema)));
        }
        let width = rec.obs.first().map(Vec::len);
        if rec.obs.iter().any(|o| Some(o.len()) != width) {
            return Err(Error::Data(format!("line {}: ragged observation rows", n + 1)));
        }
        out.push(ObservedTrace {
            id: rec.id,
            initial: parse_state(&rec.initial, idx, n + 1)?,
            final_state: parse_state(&rec.final_state, idx, n + 1)?,
            obs: rec.obs,
        });
    }
    Ok(out)
}

/// Reads the ground-truth blocks, keyed by trace id, for evaluation.
pub fn read_ground_truth<R: BufRead>(input: R, idx: &GroundIndex) -> Result<Vec<(usize, GroundTruth)>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EvalRecord = serde_json::from_str(&line)?;
        let Some(h) = rec.hidden else {
            return Err(Error::Data(format!("line {}: trace {} has no ground truth", n + 1, rec.id)));
        };
        let states = h.states.iter().map(|s| parse_state(s, idx, n + 1)).collect::<Result<Vec<_>>>()?;
        let actions = h
            .actions
            .iter()
            .map(|a| idx.action_id(a).ok_or_else(|| Error::Data(format!("line {}: unknown action `{a}`", n + 1))))
            .collect::<Result<Vec<_>>>()?;
        if states.len() != actions.len() + 1 {
            return Err(Error::Data(format!("line {}: {} states for {} actions", n + 1, states.len(), actions.len())));
        }
        out.push((rec.id, GroundTruth { states, actions }));
    }
    Ok(out)
}

/// Generation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub traces: usize,
    pub length: usize,
    /// Upper bound on the length of the scrambling walk that picks each
    /// trace's initial state.
    pub scramble: usize,
    pub channel: ChannelParams,
    pub seed: u64,
}

/// Per-item generator seeded from `(seed, stream)`; items are reproducible
/// regardless of evaluation order.
pub fn item_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples `spec.traces` random walks and renders their intermediate states
/// through the channel. Traces are generated in parallel, each from its own
/// generator, and returned in id order.
pub fn generate(
    model: &GroundModel<'_>,
    init: &State,
    spec: &GenerateSpec,
) -> Result<Vec<(ObservedTrace, GroundTruth)>> {
    spec.channel.validate()?;
    if spec.length == 0 {
        return Err(Error::Config("trace length must be at least 1".into()));
    }
    crate::par::map_range(spec.traces, |i| {
        let mut rng = item_rng(spec.seed, i as u64 + 1);
        let start = sample_initial_state(model, init, spec.scramble, &mut rng)?;
        let walk = random_walk(model, start, spec.length, &mut rng)?;
        let obs = walk.states[1..spec.length]
            .iter()
            .map(|s| emit_observation(s, &spec.channel, &mut rng))
            .collect();
        let trace = ObservedTrace {
            id: i,
            initial: walk.states[0].clone(),
            final_state: walk.states[spec.length].clone(),
            obs,
        };
        let actions = walk.actions.expect("walks record their actions");
        Ok((trace, GroundTruth { states: walk.states, actions }))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub domain: String,
    pub instance: String,
    pub spec: GenerateSpec,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled 90:10 split of `0..n`, each part sorted.
pub fn split_ids(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut item_rng(seed, 0));
    let n_test = (n as f64 * 0.1).round() as usize;
    let mut test = ids[..n_test].to_vec();
    let mut train = ids[n_test..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}
