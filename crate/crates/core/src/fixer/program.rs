use std::collections::HashMap;

use super::{Assignment, FixProblem};
use crate::planning::{Domain, GroundIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Pre(usize),
    Add(usize),
    Del(usize),
    Hol { trace: usize, prop: usize, t: usize },
    Act { trace: usize, action: usize, t: usize },
    StepAdd { trace: usize, prop: usize, t: usize },
    StepDel { trace: usize, prop: usize, t: usize },
    StepPre { trace: usize, prop: usize, t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `Σ coef·x  sense  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, i32)>,
    pub sense: Sense,
    pub rhs: i32,
}

impl Row {
    fn holds(&self, x: &[bool]) -> bool {
        let lhs: i32 = self.terms.iter().map(|&(v, c)| if x[v] { c } else { 0 }).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
            Sense::Eq => lhs == self.rhs,
        }
    }
}

/// The 0/1 program in explicit form.
#[derive(Debug, Clone)]
pub struct Program {
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    /// Linear objective to maximise.
    pub objective: Vec<(usize, f64)>,
    ids: HashMap<Var, usize>,
}

impl Program {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_id(&self, v: Var) -> Option<usize> {
        self.ids.get(&v).copied()
    }

    /// Indices of violated rows.
    pub fn violations(&self, x: &[bool]) -> Vec<usize> {
        self.rows.iter().enumerate().filter(|(_, r)| !r.holds(x)).map(|(i, _)| i).collect()
    }

    pub fn evaluate(&self, x: &[bool]) -> f64 {
        self.objective.iter().map(|&(v, c)| if x[v] { c } else { 0.0 }).sum()
    }

    /// Variable values of an assignment; step indicators take the values
    /// of the chosen action's lifted bits.
    pub fn values(&self, a: &Assignment, domain: &Domain, idx: &GroundIndex) -> Vec<bool> {
        let mut x = vec![false; self.vars.len()];
        let pairs: Vec<(usize, usize)> = domain.pairs().collect();
        let mut offsets = vec![0];
        for s in 0..domain.schemas.len() {
            offsets.push(offsets[s] + domain.bound_predicates(s).len());
        }
        for (i, v) in self.vars.iter().enumerate() {
            x[i] = match *v {
                Var::Pre(k) => a.model.flags(pairs[k].0, pairs[k].1).pre,
                Var::Add(k) => a.model.flags(pairs[k].0, pairs[k].1).add,
                Var::Del(k) => a.model.flags(pairs[k].0, pairs[k].1).del,
                Var::Hol { trace, prop, t } => a.traces[trace].states[t].get(prop),
                Var::Act { trace, action, t } => a.traces[trace].actions[t] == action,
                Var::StepAdd { trace, prop, t } | Var::StepDel { trace, prop, t } | Var::StepPre { trace, prop, t } => {
                    let act = a.traces[trace].actions[t];
                    let s = idx.action(act).schema;
                    match idx.lift_row(act).iter().position(|&p| p == prop) {
                        None => false,
                        Some(b) => {
                            let f = a.model.flags(s, b);
                            match v {
                                Var::StepAdd { .. } => f.add,
                                Var::StepDel { .. } => f.del,
                                _ => f.pre,
                            }
                        }
                    }
                }
            };
        }
        x
    }
}

struct Builder {
    vars: Vec<Var>,
    ids: HashMap<Var, usize>,
    rows: Vec<Row>,
}

impl Builder {
    fn var(&mut self, v: Var) -> usize {
        let id = self.vars.len();
        self.vars.push(v);
        self.ids.insert(v, id);
        id
    }

    fn row(&mut self, terms: Vec<(usize, i32)>, sense: Sense, rhs: i32) {
        self.rows.push(Row { terms, sense, rhs });
    }
}

/// Spells out the program: shared model variables, then per trace the state,
/// action and step-indicator variables with every constraint family.
pub fn build(problem: &FixProblem, domain: &Domain, idx: &GroundIndex) -> Program {
    let mut b = Builder { vars: Vec::new(), ids: HashMap::new(), rows: Vec::new() };
    let mut obj = Vec::new();
    let nk = domain.num_pairs();
    let (np, na) = (idx.num_props(), idx.num_actions());
    let mut offsets = vec![0];
    for s in 0..domain.schemas.len() {
        offsets.push(offsets[s] + domain.bound_predicates(s).len());
    }

    let pre: Vec<usize> = (0..nk).map(|k| b.var(Var::Pre(k))).collect();
    let add: Vec<usize> = (0..nk).map(|k| b.var(Var::Add(k))).collect();
    let del: Vec<usize> = (0..nk).map(|k| b.var(Var::Del(k))).collect();
    for k in 0..nk {
        b.row(vec![(pre[k], 1), (add[k], 1)], Sense::Le, 1);
        b.row(vec![(pre[k], 1), (del[k], -1)], Sense::Ge, 0);
        if problem.mask.model {
            let m = &problem.model;
            obj.push((pre[k], 2.0 * m.pre[k] - 1.0 + problem.lambda));
            obj.push((add[k], 2.0 * m.add[k] - 1.0));
            obj.push((del[k], 2.0 * m.del[k] - 1.0));
        }
    }

    for (j, tr) in problem.traces.iter().enumerate() {
        let steps = tr.steps();
        let hol: Vec<Vec<usize>> = (0..=steps)
            .map(|t| (0..np).map(|p| b.var(Var::Hol { trace: j, prop: p, t })).collect())
            .collect();
        let act: Vec<Vec<usize>> = (0..steps)
            .map(|t| (0..na).map(|a| b.var(Var::Act { trace: j, action: a, t })).collect())
            .collect();
        for t in 0..=steps {
            for p in 0..np {
                if problem.mask.state {
                    obj.push((hol[t][p], 2.0 * tr.state_obs[t][p] - 1.0));
                }
            }
        }
        for p in 0..np {
            b.row(vec![(hol[0][p], 1)], Sense::Eq, tr.initial.get(p) as i32);
            b.row(vec![(hol[steps][p], 1)], Sense::Eq, tr.final_state.get(p) as i32);
        }
        for t in 0..steps {
            b.row(act[t].iter().map(|&v| (v, 1)).collect(), Sense::Eq, 1);
            if problem.mask.action {
                for a in 0..na {
                    obj.push((act[t][a], 2.0 * tr.action_obs[t][a] - 1.0));
                }
            }
            for p in 0..np {
                let (h0, h1) = (hol[t][p], hol[t + 1][p]);
                let actors = idx.actors(p);
                if actors.is_empty() {
                    // frame axioms with the step indicators fixed at zero
                    b.row(vec![(h1, -1), (h0, 1)], Sense::Ge, 0);
                    b.row(vec![(h0, -1), (h1, 1)], Sense::Ge, 0);
                    continue;
                }
                let sa = b.var(Var::StepAdd { trace: j, prop: p, t });
                let sd = b.var(Var::StepDel { trace: j, prop: p, t });
                let sp = b.var(Var::StepPre { trace: j, prop: p, t });
                for actor in actors {
                    let k = offsets[idx.action(actor.action).schema] + actor.bound;
                    let x = act[t][actor.action];
                    for (step, lifted) in [(sa, add[k]), (sd, del[k]), (sp, pre[k])] {
                        b.row(vec![(step, 1), (lifted, -1), (x, 1)], Sense::Le, 1);
                        b.row(vec![(step, 1), (lifted, -1), (x, -1)], Sense::Ge, -1);
                    }
                }
                for step in [sa, sd, sp] {
                    let mut terms = vec![(step, 1)];
                    terms.extend(actors.iter().map(|ac| (act[t][ac.action], -1)));
                    b.row(terms, Sense::Le, 0);
                }
                b.row(vec![(h1, 1), (sa, -1)], Sense::Ge, 0);
                b.row(vec![(h1, 1), (sd, 1)], Sense::Le, 1);
                b.row(vec![(h0, 1), (sp, -1)], Sense::Ge, 0);
                b.row(vec![(sa, 1), (h1, -1), (h0, 1)], Sense::Ge, 0);
                b.row(vec![(sd, 1), (h0, -1), (h1, 1)], Sense::Ge, 0);
            }
        }
    }
    Program { vars: b.vars, rows: b.rows, objective: obj, ids: b.ids }
}
