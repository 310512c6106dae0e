//! Line-delimited JSON for problems and results. States and actions are
//! written by name; per-pair values follow the domain's pair order and are
//! checked against the pair descriptions stored alongside.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Assignment, FixProblem, FixResult, ModelObs, ObjectiveMask, SolverStats, Status, TraceAssignment, TraceObs};
use crate::error::{Error, Result};
use crate::planning::{ActionModel, Case, Domain, GroundIndex, State};

pub const PROBLEM_SCHEMA: &str = "liftlearn.fix-problem/v1";
pub const RESULT_SCHEMA: &str = "liftlearn.fix-result/v1";

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ProblemRecord {
    Header { schema: String, lambda: f64, mask: ObjectiveMask, pairs: Vec<String>, pre: Vec<f64>, add: Vec<f64>, del: Vec<f64> },
    Trace { id: usize, initial: Vec<String>, #[serde(rename = "final")] final_state: Vec<String>, state_obs: Vec<Vec<f64>>, action_obs: Vec<Vec<f64>> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ResultRecord {
    Summary { schema: String, status: Status, objective: Option<f64>, bound: f64, gap: Option<f64>, nodes: u64, seconds: f64 },
    Model { pairs: Vec<String>, cases: Vec<u8> },
    Trace { index: usize, states: Vec<Vec<String>>, actions: Vec<String> },
}

fn pair_names(domain: &Domain) -> Vec<String> {
    domain.pairs().map(|(s, b)| domain.describe_bound(s, b)).collect()
}

fn state_names(s: &State, idx: &GroundIndex) -> Vec<String> {
    s.true_props().map(|p| idx.prop_name(p).to_string()).collect()
}

pub(crate) fn parse_state(names: &[String], idx: &GroundIndex) -> Result<State> {
    let mut s = State::empty(idx.num_props());
    for n in names {
        s.set(idx.prop_id(n).ok_or_else(|| Error::Data(format!("unknown proposition `{n}`")))?, true);
    }
    Ok(s)
}

pub(crate) fn parse_action(name: &str, idx: &GroundIndex) -> Result<usize> {
    idx.action_id(name).ok_or_else(|| Error::Data(format!("unknown action `{name}`")))
}

fn check_pairs(found: &[String], domain: &Domain) -> Result<()> {
    if found != pair_names(domain).as_slice() {
        return Err(Error::Data("pair list does not match the domain".into()));
    }
    Ok(())
}

fn line<W: Write, T: Serialize>(out: &mut W, rec: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, rec)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_problem<W: Write>(mut out: W, p: &FixProblem, domain: &Domain, idx: &GroundIndex) -> Result<()> {
    line(
        &mut out,
        &ProblemRecord::Header {
            schema: PROBLEM_SCHEMA.into(),
            lambda: p.lambda,
            mask: p.mask,
            pairs: pair_names(domain),
            pre: p.model.pre.clone(),
            add: p.model.add.clone(),
            del: p.model.del.clone(),
        },
    )?;
    for t in &p.traces {
        line(
            &mut out,
            &ProblemRecord::Trace {
                id: t.id,
                initial: state_names(&t.initial, idx),
                final_state: state_names(&t.final_state, idx),
                state_obs: t.state_obs.clone(),
                action_obs: t.action_obs.clone(),
            },
        )?;
    }
    Ok(())
}

pub fn read_problem<R: BufRead>(input: R, domain: &Domain, idx: &GroundIndex) -> Result<FixProblem> {
    let mut header = None;
    let mut traces = Vec::new();
    for l in input.lines() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ProblemRecord>(&l)? {
            ProblemRecord::Header { schema, lambda, mask, pairs, pre, add, del } => {
                if schema != PROBLEM_SCHEMA {
                    return Err(Error::Data(format!("unsupported schema `{schema}`")));
                }
                check_pairs(&pairs, domain)?;
                header = Some((lambda, mask, ModelObs { pre, add, del }));
            }
            ProblemRecord::Trace { id, initial, final_state, state_obs, action_obs } => traces.push(TraceObs {
                id,
                initial: parse_state(&initial, idx)?,
                final_state: parse_state(&final_state, idx)?,
                state_obs,
                action_obs,
            }),
        }
    }
    let (lambda, mask, model) = header.ok_or_else(|| Error::Data("missing header record".into()))?;
    let p = FixProblem { traces, model, lambda, mask };
    p.validate(domain, idx)?;
    Ok(p)
}

pub fn write_result<W: Write>(mut out: W, r: &FixResult, domain: &Domain, idx: &GroundIndex) -> Result<()> {
    line(
        &mut out,
        &ResultRecord::Summary {
            schema: RESULT_SCHEMA.into(),
            status: r.status,
            objective: r.objective,
            bound: r.bound,
            gap: r.gap(),
            nodes: r.stats.nodes,
            seconds: r.stats.seconds,
        },
    )?;
    if let Some(a) = &r.assignment {
        line(
            &mut out,
            &ResultRecord::Model { pairs: pair_names(domain), cases: a.cases().iter().map(|c| c.label()).collect() },
        )?;
        for (i, t) in a.traces.iter().enumerate() {
            line(
                &mut out,
                &ResultRecord::Trace {
                    index: i,
                    states: t.states.iter().map(|s| state_names(s, idx)).collect(),
                    actions: t.actions.iter().map(|&x| idx.action_name(x).to_string()).collect(),
                },
            )?;
        }
    }
    Ok(())
}

pub fn read_result<R: BufRead>(input: R, domain: &Domain, idx: &GroundIndex) -> Result<FixResult> {
    let mut summary = None;
    let mut model = None;
    let mut traces = Vec::new();
    for l in input.lines() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ResultRecord>(&l)? {
            ResultRecord::Summary { status, objective, bound, nodes, seconds, .. } => {
                summary = Some((status, objective, bound, SolverStats { nodes, seconds }))
            }
            ResultRecord::Model { pairs, cases } => {
                check_pairs(&pairs, domain)?;
                let mut m = ActionModel::empty(domain);
                for ((s, b), c) in domain.pairs().zip(cases) {
                    if !(1..=4).contains(&c) {
                        return Err(Error::Data(format!("bad case label {c}")));
                    }
                    m.set(s, b, Case::from_index(c as usize - 1).flags());
                }
                model = Some(m);
            }
            ResultRecord::Trace { states, actions, .. } => traces.push(TraceAssignment {
                states: states.iter().map(|s| parse_state(s, idx)).collect::<Result<_>>()?,
                actions: actions.iter().map(|a| parse_action(a, idx)).collect::<Result<_>>()?,
            }),
        }
    }
    let (status, objective, bound, stats) = summary.ok_or_else(|| Error::Data("missing summary record".into()))?;
    Ok(FixResult { status, assignment: model.map(|model| Assignment { traces, model }), objective, bound, stats })
}
