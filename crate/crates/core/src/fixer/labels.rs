use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{FixProblem, FixResult};
use crate::error::{Error, Result};
use crate::planning::{Case, Domain, GroundIndex, State};

/// Supervision targets extracted from one trace of a repaired solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    pub trace: usize,
    /// Epoch at which the labels were produced.
    pub epoch: usize,
    /// Target states `1..=T+1`.
    pub states: Vec<State>,
    pub actions: Vec<usize>,
    /// Target case per flat pair.
    pub cases: Vec<Case>,
}

impl PseudoLabelSet {
    /// Weight `ψ^(epoch - birth)` of these labels at `epoch`.
    pub fn weight(&self, epoch: usize, psi: f64) -> f64 {
        psi.powi(epoch.saturating_sub(self.epoch) as i32)
    }
}

/// One label set per trace, or nothing when the solver found no assignment.
pub fn extract_pseudo_labels(problem: &FixProblem, result: &FixResult, epoch: usize) -> Vec<PseudoLabelSet> {
    let Some(a) = &result.assignment else {
        return Vec::new();
    };
    let cases = a.cases();
    problem
        .traces
        .iter()
        .zip(&a.traces)
        .map(|(tr, ta)| PseudoLabelSet {
            trace: tr.id,
            epoch,
            states: ta.states.clone(),
            actions: ta.actions.clone(),
            cases: cases.clone(),
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    trace: usize,
    epoch: usize,
    states: Vec<Vec<String>>,
    actions: Vec<String>,
    cases: Vec<u8>,
}

pub fn write_labels<W: Write>(mut out: W, labels: &[PseudoLabelSet], idx: &GroundIndex) -> Result<()> {
    for l in labels {
        let rec = LabelRecord {
            trace: l.trace,
            epoch: l.epoch,
            states: l.states.iter().map(|s| s.true_props().map(|p| idx.prop_name(p).to_string()).collect()).collect(),
            actions: l.actions.iter().map(|&a| idx.action_name(a).to_string()).collect(),
            cases: l.cases.iter().map(|c| c.label()).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(input: R, domain: &Domain, idx: &GroundIndex) -> Result<Vec<PseudoLabelSet>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabelRecord = serde_json::from_str(&line)?;
        if rec.cases.len() != domain.num_pairs() || rec.cases.iter().any(|&c| !(1..=4).contains(&c)) {
            return Err(Error::Data(format!("trace {}: bad case labels", rec.trace)));
        }
        out.push(PseudoLabelSet {
            trace: rec.trace,
            epoch: rec.epoch,
            states: rec.states.iter().map(|s| super::io::parse_state(s, idx)).collect::<Result<_>>()?,
            actions: rec.actions.iter().map(|a| super::io::parse_action(a, idx)).collect::<Result<_>>()?,
            cases: rec.cases.iter().map(|&c| Case::from_index(c as usize - 1)).collect(),
        });
    }
    Ok(out)
}
