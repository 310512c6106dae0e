//! Depth-first branch and bound.
//!
//! Traces are searched one after another and each trace step by step. At a
//! step the executed action is chosen first; the propositions it touches
//! then branch on their next value, while every other proposition keeps its
//! value (the frame axioms). Each (previous, next) value pair of a touched
//! proposition admits only some of the four cases of the responsible bound
//! predicate, so the shared model is tracked as a per-pair set of
//! admissible cases and contributes the best admissible case value. The
//! model terms are separable per pair, which makes this exact.
//!
//! The bound adds, for everything undecided, the best action term of each
//! remaining step and the positive state terms of remaining intermediate
//! states. Children are visited best-estimate first.

use std::time::{Duration, Instant};

use super::{case_values, Assignment, FixProblem, FixResult, SolverStats, Status, TraceAssignment};
use crate::error::Result;
use crate::planning::{ActionModel, Case, Domain, GroundIndex, State};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
}

/// Anything that can solve a [`FixProblem`].
pub trait FixSolver {
    fn solve(&self, problem: &FixProblem, domain: &Domain, idx: &GroundIndex) -> Result<FixResult>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound {
    pub options: SolverOptions,
}

impl BranchAndBound {
    pub fn new(options: SolverOptions) -> Self {
        BranchAndBound { options }
    }
}

const EPS: f64 = 1e-9;

/// Cases admitted by a proposition going from `v` to `w`, as a bitmask over
/// case indices: unchanged false → irrelevant; made true → add; unchanged
/// true → irrelevant, add or prevail precondition; made false → deleted
/// precondition.
const ADMITS: [[u8; 2]; 2] = [[0b0001, 0b0010], [0b1000, 0b0111]];

fn best_case(mask: u8, cv: &[f64; 4]) -> (usize, f64) {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (c, &val) in cv.iter().enumerate() {
        if mask & (1 << c) != 0 && val > best.1 {
            best = (c, val);
        }
    }
    best
}

struct TraceData {
    steps: usize,
    cs: Vec<Vec<f64>>,
    ca: Vec<Vec<f64>>,
    final_bits: Vec<bool>,
    /// `future[t]`: bound on undecided terms at the start of step `t`.
    future: Vec<f64>,
}

struct Search<'a> {
    idx: &'a GroundIndex,
    touch: Vec<Vec<(usize, usize)>>,
    max_touch: usize,
    traces: Vec<TraceData>,
    cv: Vec<[f64; 4]>,
    masks: Vec<u8>,
    model_val: f64,
    value: f64,
    states: Vec<Vec<Vec<bool>>>,
    actions: Vec<Vec<usize>>,
    best: f64,
    incumbent: Option<(Vec<Vec<Vec<bool>>>, Vec<Vec<usize>>, Vec<u8>)>,
    nodes: u64,
    start: Instant,
    options: SolverOptions,
    aborted: bool,
}

impl Search<'_> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.aborted {
            return false;
        }
        if let Some(n) = self.options.node_limit {
            if self.nodes > n {
                self.aborted = true;
            }
        }
        if self.nodes.is_multiple_of(256) {
            if let Some(tl) = self.options.time_limit {
                if self.start.elapsed() >= tl {
                    self.aborted = true;
                }
            }
        }
        !self.aborted
    }

    fn future_after(&self, j: usize, t: usize) -> f64 {
        let tr = &self.traces[j];
        if t < tr.steps {
            tr.future[t]
        } else if j + 1 < self.traces.len() {
            self.traces[j + 1].future[0]
        } else {
            0.0
        }
    }

    /// Objective of the complete current path, summed from scratch so that
    /// the reported value carries no incremental rounding.
    fn exact_total(&self) -> f64 {
        let mut total = 0.0;
        for (tr, (st, ac)) in self.traces.iter().zip(self.states.iter().zip(&self.actions)) {
            for (row, s) in tr.cs.iter().zip(st) {
                total += row.iter().zip(s).filter(|(_, &b)| b).map(|(c, _)| c).sum::<f64>();
            }
            total += ac.iter().zip(&tr.ca).map(|(&a, row)| row[a]).sum::<f64>();
        }
        total + self.masks.iter().zip(&self.cv).map(|(&m, c)| best_case(m, c).1).sum::<f64>()
    }

    fn record(&mut self) {
        let total = self.exact_total();
        if total > self.best {
            self.best = total;
            self.incumbent = Some((self.states.clone(), self.actions.clone(), self.masks.clone()));
        }
    }

    fn step(&mut self, j: usize, t: usize) {
        if j == self.traces.len() {
            self.record();
            return;
        }
        if t == self.traces[j].steps {
            self.step(j + 1, 0);
            return;
        }
        if !self.tick() {
            return;
        }
        if self.value + self.model_val + self.traces[j].future[t] <= self.best + EPS {
            return;
        }
        let steps = self.traces[j].steps;
        let last = t + 1 == steps;
        let v = self.states[j][t].clone();
        let tr = &self.traces[j];
        let diff: Vec<bool> = v.iter().zip(&tr.final_bits).map(|(a, b)| a != b).collect();
        let n_diff = diff.iter().filter(|&&d| d).count();
        if n_diff > (steps - t) * self.max_touch {
            return;
        }
        let next_row: Option<&Vec<f64>> = if last { None } else { Some(&tr.cs[t + 1]) };
        let base: f64 = next_row.map_or(0.0, |r| r.iter().zip(&v).filter(|(_, &b)| b).map(|(c, _)| c).sum());

        // (estimate, untouched contribution, action)
        let mut cands: Vec<(f64, f64, usize)> = Vec::new();
        for a in 0..self.idx.num_actions() {
            let touch = &self.touch[a];
            if last && touch.iter().filter(|&&(p, _)| diff[p]).count() != n_diff {
                continue;
            }
            let mut untouched = base;
            let mut est = tr.ca[t][a];
            let mut feasible = true;
            for &(p, k) in touch {
                let vp = v[p] as usize;
                let c = next_row.map_or(0.0, |r| r[p]);
                untouched -= c * v[p] as u8 as f64;
                let ws: &[usize] = if last { if tr.final_bits[p] { &[1] } else { &[0] } } else { &[0, 1] };
                let mut best_w = f64::NEG_INFINITY;
                for &w in ws {
                    if ADMITS[vp][w] & self.masks[k] != 0 {
                        best_w = best_w.max(c * w as f64);
                    }
                }
                if best_w == f64::NEG_INFINITY {
                    feasible = false;
                    break;
                }
                est += best_w;
            }
            if feasible {
                cands.push((est + untouched, untouched, a));
            }
        }
        cands.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.2.cmp(&y.2)));

        let after = self.future_after(j, t + 1);
        for (est, untouched, a) in cands {
            if self.value + self.model_val + est + after <= self.best + EPS || self.aborted {
                break;
            }
            let gain = self.traces[j].ca[t][a] + untouched;
            let saved = self.value;
            self.value += gain;
            self.actions[j][t] = a;
            self.states[j][t + 1].clone_from(&v);
            let touch = self.touch[a].clone();
            let rem: Vec<f64> = {
                let mut r = vec![0.0; touch.len() + 1];
                for i in (0..touch.len()).rev() {
                    let c = if last { 0.0 } else { self.traces[j].cs[t + 1][touch[i].0] };
                    r[i] = r[i + 1] + c.max(0.0);
                }
                r
            };
            self.outcome(j, t, &touch, &rem, 0, after);
            self.value = saved;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn outcome(&mut self, j: usize, t: usize, touch: &[(usize, usize)], rem: &[f64], i: usize, after: f64) {
        if i == touch.len() {
            self.step(j, t + 1);
            return;
        }
        if !self.tick() {
            return;
        }
        let (p, k) = touch[i];
        let last = t + 1 == self.traces[j].steps;
        let vp = self.states[j][t][p] as usize;
        let c = if last { 0.0 } else { self.traces[j].cs[t + 1][p] };
        let order: &[usize] = if last {
            if self.traces[j].final_bits[p] { &[1] } else { &[0] }
        } else if c > 0.0 {
            &[1, 0]
        } else {
            &[0, 1]
        };
        for &w in order {
            let old = self.masks[k];
            let new = ADMITS[vp][w] & old;
            if new == 0 {
                continue;
            }
            let delta = best_case(new, &self.cv[k]).1 - best_case(old, &self.cv[k]).1;
            let gain = c * w as f64;
            if self.value + gain + self.model_val + delta + rem[i + 1] + after <= self.best + EPS {
                continue;
            }
            let saved = (self.value, self.model_val);
            self.masks[k] = new;
            self.model_val += delta;
            self.value += gain;
            self.states[j][t + 1][p] = w == 1;
            self.outcome(j, t, touch, rem, i + 1, after);
            (self.value, self.model_val) = saved;
            self.masks[k] = old;
            self.states[j][t + 1][p] = vp == 1;
            if self.aborted {
                return;
            }
        }
    }
}

impl FixSolver for BranchAndBound {
    fn solve(&self, problem: &FixProblem, domain: &Domain, idx: &GroundIndex) -> Result<FixResult> {
        problem.validate(domain, idx)?;
        let start = Instant::now();
        let mut offsets = vec![0];
        for s in 0..domain.schemas.len() {
            offsets.push(offsets[s] + domain.bound_predicates(s).len());
        }
        let touch: Vec<Vec<(usize, usize)>> = (0..idx.num_actions())
            .map(|a| {
                let off = offsets[idx.action(a).schema];
                idx.lift_row(a).iter().enumerate().map(|(b, &p)| (p, off + b)).collect()
            })
            .collect();
        let max_touch = touch.iter().map(Vec::len).max().unwrap_or(0);
        let mask = problem.mask;
        let cv: Vec<[f64; 4]> = (0..domain.num_pairs())
            .map(|k| if mask.model { case_values(&problem.model, k, problem.lambda) } else { [0.0; 4] })
            .collect();

        let mut constant = 0.0;
        let mut traces: Vec<TraceData> = problem
            .traces
            .iter()
            .map(|tr| {
                let steps = tr.steps();
                let cs: Vec<Vec<f64>> = tr
                    .state_obs
                    .iter()
                    .map(|r| r.iter().map(|&o| if mask.state { 2.0 * o - 1.0 } else { 0.0 }).collect())
                    .collect();
                let ca: Vec<Vec<f64>> = tr
                    .action_obs
                    .iter()
                    .map(|r| r.iter().map(|&o| if mask.action { 2.0 * o - 1.0 } else { 0.0 }).collect())
                    .collect();
                for (row, s) in [(&cs[0], &tr.initial), (&cs[steps], &tr.final_state)] {
                    constant += row.iter().enumerate().filter(|(p, _)| s.get(*p)).map(|(_, c)| c).sum::<f64>();
                }
                TraceData { steps, cs, ca, final_bits: tr.final_state.bits().to_vec(), future: vec![0.0; steps] }
            })
            .collect();
        let mut carry = 0.0;
        for tr in traces.iter_mut().rev() {
            for t in (0..tr.steps).rev() {
                let act = tr.ca[t].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let states: f64 = if t + 1 < tr.steps { tr.cs[t + 1].iter().map(|c| c.max(0.0)).sum() } else { 0.0 };
                carry += act + states;
                tr.future[t] = carry;
            }
        }

        let masks = vec![0b1111u8; domain.num_pairs()];
        let model_val: f64 = cv.iter().map(|c| best_case(0b1111, c).1).sum();
        let root_bound = constant + model_val + traces.first().map_or(0.0, |t| t.future[0]);
        let states: Vec<Vec<Vec<bool>>> = problem
            .traces
            .iter()
            .map(|tr| {
                let mut s = vec![vec![false; idx.num_props()]; tr.steps() + 1];
                s[0] = tr.initial.bits().to_vec();
                s[tr.steps()] = tr.final_state.bits().to_vec();
                s
            })
            .collect();
        let actions = problem.traces.iter().map(|tr| vec![0; tr.steps()]).collect();

        let mut search = Search {
            idx,
            touch,
            max_touch,
            traces,
            cv,
            masks,
            model_val,
            value: constant,
            states,
            actions,
            best: f64::NEG_INFINITY,
            incumbent: None,
            nodes: 0,
            start,
            options: self.options,
            aborted: self.options.time_limit == Some(Duration::ZERO) || self.options.node_limit == Some(0),
        };
        if !search.aborted {
            search.step(0, 0);
        }
        let stats = SolverStats { nodes: search.nodes, seconds: start.elapsed().as_secs_f64() };
        let Some((states, actions, masks)) = search.incumbent.take() else {
            let status = if search.aborted { Status::TimeoutNoSolution } else { Status::Infeasible };
            return Ok(FixResult { status, assignment: None, objective: None, bound: root_bound, stats });
        };
        let mut model = ActionModel::empty(domain);
        for (k, (s, b)) in domain.pairs().enumerate() {
            let (c, _) = best_case(masks[k], &search.cv[k]);
            model.set(s, b, Case::from_index(c).flags());
        }
        let traces = states
            .into_iter()
            .zip(actions)
            .map(|(st, ac)| TraceAssignment { states: st.into_iter().map(State::from_bits).collect(), actions: ac })
            .collect();
        let (status, bound) =
            if search.aborted { (Status::Feasible, root_bound.max(search.best)) } else { (Status::Optimal, search.best) };
        Ok(FixResult {
            status,
            assignment: Some(Assignment { traces, model }),
            objective: Some(search.best),
            bound,
            stats,
        })
    }
}
