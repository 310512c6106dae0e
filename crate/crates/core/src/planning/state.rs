use serde::{Deserialize, Serialize};

/// Truth assignment over the propositions of a ground index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State(Vec<bool>);

impl State {
    pub fn empty(width: usize) -> Self {
        State(vec![false; width])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        State(bits)
    }

    pub fn from_true(width: usize, props: impl IntoIterator<Item = usize>) -> Self {
        let mut s = State::empty(width);
        for p in props {
            s.0[p] = true;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, p: usize) -> bool {
        self.0[p]
    }

    pub fn set(&mut self, p: usize, v: bool) {
        self.0[p] = v;
    }

    pub fn flip(&mut self, p: usize) {
        self.0[p] = !self.0[p];
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn true_props(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }
}

/// State sequence `s_1 .. s_{k+1}`, with the generating actions when known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTrace {
    pub states: Vec<State>,
    pub actions: Option<Vec<usize>>,
}

impl StateTrace {
    pub fn new(states: Vec<State>) -> Self {
        StateTrace { states, actions: None }
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.states.first().map_or(0, State::len)
    }
}
