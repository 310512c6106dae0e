//! Constraint and objective re-evaluation written directly from the
//! constraint families, sharing nothing with the builder or the solver.

use std::fmt;

use super::{Assignment, FixProblem};
use crate::planning::{Domain, GroundIndex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub family: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.family, self.detail)
    }
}

fn v(family: &'static str, detail: String) -> Violation {
    Violation { family, detail }
}

/// Checks every constraint family. Step indicators are not part of an
/// [`Assignment`]; the linking and step-off constraints determine them
/// uniquely, and a conflict between the values they force is reported.
pub fn check_assignment(
    problem: &FixProblem,
    domain: &Domain,
    idx: &GroundIndex,
    a: &Assignment,
) -> Result<(), Violation> {
    let np = idx.num_props();
    if a.traces.len() != problem.traces.len() {
        return Err(v("shape", format!("{} traces assigned, {} expected", a.traces.len(), problem.traces.len())));
    }
    for s in 0..domain.schemas.len() {
        for (b, f) in a.model.schema_flags(s).iter().enumerate() {
            if f.pre as u8 + f.add as u8 > 1 {
                return Err(v("pre-add-disjoint", domain.describe_bound(s, b)));
            }
            if (f.pre as u8) < f.del as u8 {
                return Err(v("del-implies-pre", domain.describe_bound(s, b)));
            }
        }
    }
    for (j, (tr, ta)) in problem.traces.iter().zip(&a.traces).enumerate() {
        let steps = tr.steps();
        if ta.states.len() != steps + 1 || ta.actions.len() != steps {
            return Err(v("shape", format!("trace {j}: wrong number of states or actions")));
        }
        if ta.states.iter().any(|s| s.len() != np) {
            return Err(v("shape", format!("trace {j}: state width")));
        }
        for p in 0..np {
            if ta.states[0].get(p) != tr.initial.get(p) {
                return Err(v("initial-state", format!("trace {j}: {}", idx.prop_name(p))));
            }
            if ta.states[steps].get(p) != tr.final_state.get(p) {
                return Err(v("final-state", format!("trace {j}: {}", idx.prop_name(p))));
            }
        }
        for t in 0..steps {
            let chosen = ta.actions[t];
            if chosen >= idx.num_actions() {
                return Err(v("one-action", format!("trace {j} step {t}: no action")));
            }
            for p in 0..np {
                let h0 = ta.states[t].get(p) as i32;
                let h1 = ta.states[t + 1].get(p) as i32;
                let mut step: Option<(i32, i32, i32)> = None;
                for actor in idx.actors(p) {
                    if actor.action != chosen {
                        continue;
                    }
                    let f = a.model.flags(idx.action(actor.action).schema, actor.bound);
                    let forced = (f.add as i32, f.del as i32, f.pre as i32);
                    if let Some(prev) = step {
                        if prev != forced {
                            return Err(v("step-linking", format!("trace {j} step {t}: {}", idx.prop_name(p))));
                        }
                    }
                    step = Some(forced);
                }
                // nothing touching p ran (or p has no actors): indicators are 0
                let (sa, sd, sp) = step.unwrap_or((0, 0, 0));
                let at = |fam: &'static str| v(fam, format!("trace {j} step {t}: {}", idx.prop_name(p)));
                if h1 < sa {
                    return Err(at("add-makes-true"));
                }
                if 1 - h1 < sd {
                    return Err(at("del-makes-false"));
                }
                if h0 < sp {
                    return Err(at("pre-holds"));
                }
                if sa < h1 - h0 {
                    return Err(at("frame-add"));
                }
                if sd < h0 - h1 {
                    return Err(at("frame-del"));
                }
            }
        }
    }
    Ok(())
}

/// Objective of an assignment under the problem's mask.
pub fn objective_value(problem: &FixProblem, domain: &Domain, a: &Assignment) -> f64 {
    let mut total = 0.0;
    for (tr, ta) in problem.traces.iter().zip(&a.traces) {
        if problem.mask.state {
            for (row, s) in tr.state_obs.iter().zip(&ta.states) {
                for (p, &o) in row.iter().enumerate() {
                    if s.get(p) {
                        total += 2.0 * o - 1.0;
                    }
                }
            }
        }
        if problem.mask.action {
            for (row, &act) in tr.action_obs.iter().zip(&ta.actions) {
                total += 2.0 * row[act] - 1.0;
            }
        }
    }
    if problem.mask.model {
        let m = &problem.model;
        for (k, (s, b)) in domain.pairs().enumerate() {
            let f = a.model.flags(s, b);
            if f.pre {
                total += 2.0 * m.pre[k] - 1.0 + problem.lambda;
            }
            if f.add {
                total += 2.0 * m.add[k] - 1.0;
            }
            if f.del {
                total += 2.0 * m.del[k] - 1.0;
            }
        }
    }
    total
}
