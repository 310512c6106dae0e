use std::collections::BTreeSet;

use super::domain::ActionModel;
use super::ground::GroundIndex;
use super::state::{State, StateTrace};
use crate::error::{Error, Result};

/// Grounded preconditions and effects of one action, as sorted proposition
/// indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundEffects {
    pub pre: Vec<usize>,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
}

pub fn ground_action_model(model: &ActionModel, idx: &GroundIndex, action: usize) -> GroundEffects {
    let schema = idx.action(action).schema;
    let mut out = GroundEffects::default();
    for (b, f) in model.schema_flags(schema).iter().enumerate() {
        let p = idx.lift(action, b);
        if f.pre {
            out.pre.push(p);
        }
        if f.add {
            out.add.push(p);
        }
        if f.del {
            out.del.push(p);
        }
    }
    out.pre.sort_unstable();
    out.add.sort_unstable();
    out.del.sort_unstable();
    out
}

/// An action model grounded over every action of an index.
#[derive(Debug, Clone)]
pub struct GroundModel<'a> {
    idx: &'a GroundIndex,
    effects: Vec<GroundEffects>,
}

impl<'a> GroundModel<'a> {
    pub fn new(model: &ActionModel, idx: &'a GroundIndex) -> Self {
        let effects = (0..idx.num_actions())
            .map(|a| ground_action_model(model, idx, a))
            .collect();
        GroundModel { idx, effects }
    }

    pub fn index(&self) -> &'a GroundIndex {
        self.idx
    }

    pub fn effects(&self, action: usize) -> &GroundEffects {
        &self.effects[action]
    }

    pub fn applicable(&self, s: &State, action: usize) -> bool {
        self.effects[action].pre.iter().all(|&p| s.get(p))
    }

    pub fn applicable_actions(&self, s: &State) -> Vec<usize> {
        (0..self.effects.len()).filter(|&a| self.applicable(s, a)).collect()
    }

    /// `(s \ Del(a)) ∪ Add(a)`, defined only for applicable actions.
    pub fn successor(&self, s: &State, action: usize) -> Result<State> {
        if s.len() != self.idx.num_props() {
            return Err(Error::Width { expected: self.idx.num_props(), got: s.len() });
        }
        if !self.applicable(s, action) {
            return Err(Error::NotApplicable(self.idx.action_name(action).to_string()));
        }
        Ok(self.apply_unchecked(s, action))
    }

    pub(crate) fn apply_unchecked(&self, s: &State, action: usize) -> State {
        let mut next = s.clone();
        let e = &self.effects[action];
        for &p in &e.del {
            next.set(p, false);
        }
        for &p in &e.add {
            next.set(p, true);
        }
        next
    }

    /// Checks every transition against the model. On success returns one
    /// witness action per step, choosing the lowest index when several fit.
    pub fn trace_consistent(&self, trace: &StateTrace) -> Option<Vec<usize>> {
        let mut witness = Vec::with_capacity(trace.len());
        for w in trace.states.windows(2) {
            let a = (0..self.effects.len())
                .find(|&a| self.applicable(&w[0], a) && self.apply_unchecked(&w[0], a) == w[1])?;
            witness.push(a);
        }
        Some(witness)
    }

    /// Every `k`-step state sequence from `start` consistent with the model.
    /// Refuses when `|A_I|^k` exceeds `cap`.
    pub fn enumerate_consistent_traces(
        &self,
        start: &State,
        k: usize,
        cap: u128,
    ) -> Result<BTreeSet<Vec<State>>> {
        let n = self.effects.len() as u128;
        let needed = (0..k).try_fold(1u128, |acc, _| acc.checked_mul(n)).unwrap_or(u128::MAX);
        if needed > cap {
            return Err(Error::CapExceeded { needed, cap });
        }
        let mut out = BTreeSet::new();
        let mut prefix = vec![start.clone()];
        self.extend(&mut prefix, k, &mut out);
        Ok(out)
    }

    fn extend(&self, prefix: &mut Vec<State>, remaining: usize, out: &mut BTreeSet<Vec<State>>) {
        if remaining == 0 {
            out.insert(prefix.clone());
            return;
        }
        let cur = prefix.last().expect("non-empty prefix").clone();
        for a in 0..self.effects.len() {
            if self.applicable(&cur, a) {
                prefix.push(self.apply_unchecked(&cur, a));
                self.extend(prefix, remaining - 1, out);
                prefix.pop();
            }
        }
    }
}
