//! Exact repair of predicted states, actions and model into a logically
//! consistent explanation of a few traces.
//!
//! [`build`] spells the 0/1 program out explicitly (variables, linear rows,
//! objective); [`BranchAndBound`] solves it with a search specialised to its
//! structure; [`check_assignment`] and [`objective_value`] re-derive every
//! constraint and objective term independently of both.

mod align;
mod check;
mod enumerate;
mod io;
mod labels;
mod program;
mod solve;

pub use align::{align_permutation, model_agreement};
pub use check::{check_assignment, objective_value, Violation};
pub use enumerate::enumerate_optimum;
pub use io::{read_problem, read_result, write_problem, write_result};
pub use labels::{extract_pseudo_labels, read_labels, write_labels, PseudoLabelSet};
pub use program::{build, Program, Row, Sense, Var};
pub use solve::{BranchAndBound, FixSolver, SolverOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planning::{ActionModel, Case, Domain, GroundIndex, State};

/// Which objective terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectiveMask {
    pub state: bool,
    pub action: bool,
    /// Model agreement terms together with the precondition prior.
    pub model: bool,
}

impl ObjectiveMask {
    pub const STATE: Self = ObjectiveMask { state: true, action: false, model: false };
    pub const STATE_ACTION: Self = ObjectiveMask { state: true, action: true, model: false };
    pub const ALL: Self = ObjectiveMask { state: true, action: true, model: true };
    pub const NONE: Self = ObjectiveMask { state: false, action: false, model: false };

    pub fn name(&self) -> &'static str {
        match (self.state, self.action, self.model) {
            (true, false, false) => "state",
            (true, true, false) => "state+action",
            (true, true, true) => "all",
            (false, false, false) => "none",
            _ => "custom",
        }
    }
}

impl std::str::FromStr for ObjectiveMask {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(Self::STATE),
            "state+action" => Ok(Self::STATE_ACTION),
            "all" => Ok(Self::ALL),
            _ => Err(Error::Config(format!("unknown objective mask `{s}` (state | state+action | all)"))),
        }
    }
}

/// Predictions for one trace with `T` transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceObs {
    pub id: usize,
    pub initial: State,
    pub final_state: State,
    /// `T+1` rows of proposition probabilities, endpoints included.
    pub state_obs: Vec<Vec<f64>>,
    /// `T` rows of action probabilities.
    pub action_obs: Vec<Vec<f64>>,
}

impl TraceObs {
    pub fn steps(&self) -> usize {
        self.action_obs.len()
    }
}

/// Model predictions per flat pair index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelObs {
    pub pre: Vec<f64>,
    pub add: Vec<f64>,
    pub del: Vec<f64>,
}

impl ModelObs {
    /// Exact binary predictions of a known model.
    pub fn from_model(domain: &Domain, model: &ActionModel) -> Self {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        let fl: Vec<_> = domain.pairs().map(|(s, k)| model.flags(s, k)).collect();
        ModelObs {
            pre: fl.iter().map(|f| b(f.pre)).collect(),
            add: fl.iter().map(|f| b(f.add)).collect(),
            del: fl.iter().map(|f| b(f.del)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixProblem {
    pub traces: Vec<TraceObs>,
    pub model: ModelObs,
    pub lambda: f64,
    pub mask: ObjectiveMask,
}

impl FixProblem {
    pub fn validate(&self, domain: &Domain, idx: &GroundIndex) -> Result<()> {
        let (np, na, nk) = (idx.num_props(), idx.num_actions(), domain.num_pairs());
        let prob = |v: &f64| (0.0..=1.0).contains(v);
        for v in [&self.model.pre, &self.model.add, &self.model.del] {
            if v.len() != nk || !v.iter().all(prob) {
                return Err(Error::Data(format!("model predictions need {nk} values in [0, 1]")));
            }
        }
        for t in &self.traces {
            let steps = t.steps();
            if steps == 0 {
                return Err(Error::Data(format!("trace {} has no steps", t.id)));
            }
            if t.initial.len() != np || t.final_state.len() != np {
                return Err(Error::Width { expected: np, got: t.initial.len().min(t.final_state.len()) });
            }
            if t.state_obs.len() != steps + 1 || t.state_obs.iter().any(|r| r.len() != np || !r.iter().all(prob)) {
                return Err(Error::Data(format!("trace {}: need {} state rows of {np} probabilities", t.id, steps + 1)));
            }
            if t.action_obs.iter().any(|r| r.len() != na || !r.iter().all(prob)) {
                return Err(Error::Data(format!("trace {}: action rows need {na} probabilities", t.id)));
            }
        }
        if !self.lambda.is_finite() {
            return Err(Error::Data("lambda must be finite".into()));
        }
        Ok(())
    }
}

/// Values of the decision variables for one trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceAssignment {
    /// `hol[·, t]` for `t = 1..=T+1`.
    pub states: Vec<State>,
    /// The action with `act[·, t] = 1` for each step.
    pub actions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub traces: Vec<TraceAssignment>,
    pub model: ActionModel,
}

impl Assignment {
    pub fn cases(&self) -> Vec<Case> {
        let n = self.model.num_schemas();
        (0..n)
            .flat_map(|s| {
                self.model.schema_flags(s).iter().map(|f| Case::from_flags(*f).expect("valid model"))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    /// Limit reached with an incumbent.
    Feasible,
    Infeasible,
    TimeoutNoSolution,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub nodes: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixResult {
    pub status: Status,
    pub assignment: Option<Assignment>,
    pub objective: Option<f64>,
    /// Upper bound on the optimum.
    pub bound: f64,
    pub stats: SolverStats,
}

impl FixResult {
    pub fn gap(&self) -> Option<f64> {
        self.objective.map(|o| self.bound - o)
    }
}

/// Objective weight of each case for one pair: `[0, 2A-1, 2P-1+λ, 2P-1+λ+2D-1]`.
pub(crate) fn case_values(model: &ModelObs, k: usize, lambda: f64) -> [f64; 4] {
    let p = 2.0 * model.pre[k] - 1.0 + lambda;
    [0.0, 2.0 * model.add[k] - 1.0, p, p + 2.0 * model.del[k] - 1.0]
}
