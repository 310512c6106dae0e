//! Brute-force optimum for tiny problems: every action sequence and every
//! intermediate state is tried; for each, the admissible (pre, add, del)
//! bit triples of every pair are found by testing the constraint
//! inequalities directly, and the best admissible triple is taken per pair.

use super::FixProblem;
use crate::error::{Error, Result};
use crate::planning::{Domain, GroundIndex};

struct Ctx<'a> {
    problem: &'a FixProblem,
    idx: &'a GroundIndex,
    offsets: Vec<usize>,
    nk: usize,
    /// chosen (trace, t) → action; states as bit rows
    actions: Vec<Vec<usize>>,
    states: Vec<Vec<Vec<bool>>>,
    best: Option<f64>,
}

fn triples() -> impl Iterator<Item = (i32, i32, i32)> {
    (0..8).map(|m| ((m >> 2) & 1, (m >> 1) & 1, m & 1))
}

impl Ctx<'_> {
    fn evaluate(&mut self) {
        let pr = self.problem;
        let np = self.idx.num_props();
        // allowed[k][m] for triple m
        let mut valid = [true; 8];
        for (m, (pre, add, del)) in triples().enumerate() {
            valid[m] = pre + add <= 1 && pre >= del;
        }
        let mut allowed = vec![valid; self.nk];
        let mut value = 0.0;
        for (j, tr) in pr.traces.iter().enumerate() {
            for t in 0..tr.steps() {
                let a = self.actions[j][t];
                for p in 0..np {
                    let h0 = self.states[j][t][p] as i32;
                    let h1 = self.states[j][t + 1][p] as i32;
                    let via = self.idx.actors(p).iter().find(|ac| ac.action == a);
                    match via {
                        None => {
                            if h1 - h0 > 0 || h0 - h1 > 0 {
                                return;
                            }
                        }
                        Some(ac) => {
                            let k = self.offsets[self.idx.action(a).schema] + ac.bound;
                            for (m, (pre, add, del)) in triples().enumerate() {
                                let (sa, sd, sp) = (add, del, pre);
                                let ok = h1 >= sa && 1 - h1 >= sd && h0 >= sp && sa >= h1 - h0 && sd >= h0 - h1;
                                if !ok {
                                    allowed[k][m] = false;
                                }
                            }
                        }
                    }
                }
                if pr.mask.action {
                    value += 2.0 * tr.action_obs[t][a] - 1.0;
                }
            }
            if pr.mask.state {
                for (t, row) in tr.state_obs.iter().enumerate() {
                    for p in 0..np {
                        if self.states[j][t][p] {
                            value += 2.0 * row[p] - 1.0;
                        }
                    }
                }
            }
        }
        for (k, row) in allowed.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for (m, (pre, add, del)) in triples().enumerate() {
                if !row[m] {
                    continue;
                }
                let v = if pr.mask.model {
                    let mo = &pr.model;
                    pre as f64 * (2.0 * mo.pre[k] - 1.0 + pr.lambda)
                        + add as f64 * (2.0 * mo.add[k] - 1.0)
                        + del as f64 * (2.0 * mo.del[k] - 1.0)
                } else {
                    0.0
                };
                best = best.max(v);
            }
            if best == f64::NEG_INFINITY {
                return;
            }
            value += best;
        }
        if self.best.is_none_or(|b| value > b) {
            self.best = Some(value);
        }
    }

    fn rec(&mut self, j: usize, t: usize) {
        let pr = self.problem;
        if j == pr.traces.len() {
            self.evaluate();
            return;
        }
        let steps = pr.traces[j].steps();
        if t == steps {
            self.rec(j + 1, 0);
            return;
        }
        let np = self.idx.num_props();
        for a in 0..self.idx.num_actions() {
            self.actions[j][t] = a;
            if t + 1 == steps {
                self.rec(j, t + 1);
            } else {
                for bits in 0u64..(1u64 << np) {
                    for p in 0..np {
                        self.states[j][t + 1][p] = bits >> p & 1 == 1;
                    }
                    self.rec(j, t + 1);
                }
            }
        }
    }
}

/// Optimal objective by exhaustive enumeration, or `None` if infeasible.
/// Refuses problems with more than `cap` (action, state) assignments.
pub fn enumerate_optimum(problem: &FixProblem, domain: &Domain, idx: &GroundIndex, cap: u128) -> Result<Option<f64>> {
    problem.validate(domain, idx)?;
    let (np, na) = (idx.num_props() as u32, idx.num_actions() as u128);
    let mut total: u128 = 1;
    for tr in &problem.traces {
        let steps = tr.steps() as u32;
        total = total
            .saturating_mul(na.saturating_pow(steps))
            .saturating_mul(2u128.saturating_pow(np * (steps - 1)));
    }
    if total > cap {
        return Err(Error::CapExceeded { needed: total, cap });
    }
    let mut offsets = vec![0];
    for s in 0..domain.schemas.len() {
        offsets.push(offsets[s] + domain.bound_predicates(s).len());
    }
    let mut ctx = Ctx {
        problem,
        idx,
        offsets,
        nk: domain.num_pairs(),
        actions: problem.traces.iter().map(|t| vec![0; t.steps()]).collect(),
        states: problem
            .traces
            .iter()
            .map(|t| {
                let mut s = vec![vec![false; idx.num_props()]; t.steps() + 1];
                s[0] = t.initial.bits().to_vec();
                s[t.steps()] = t.final_state.bits().to_vec();
                s
            })
            .collect(),
        best: None,
    };
    ctx.rec(0, 0);
    Ok(ctx.best)
}
