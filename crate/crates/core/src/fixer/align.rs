use super::{objective_value, Assignment, FixProblem, FixResult, ModelObs, TraceAssignment};
use crate::planning::{ActionModel, Domain, GroundIndex};
use crate::symmetry::{enumerate_permutations, Permutation};

/// Linear agreement `Σ (2·P-1)·pre + (2·A-1)·add + (2·D-1)·del` of a binary
/// model with model predictions.
pub fn model_agreement(domain: &Domain, model: &ActionModel, obs: &ModelObs) -> f64 {
    domain
        .pairs()
        .enumerate()
        .map(|(k, (s, b))| {
            let f = model.flags(s, b);
            let t = |on: bool, p: f64| if on { 2.0 * p - 1.0 } else { 0.0 };
            t(f.pre, obs.pre[k]) + t(f.add, obs.add[k]) + t(f.del, obs.del[k])
        })
        .sum()
}

/// Renames the result's model and actions by the valid permutation whose
/// model agrees best with the problem's model predictions
/// (lexicographically smallest on ties). The objective is re-evaluated for
/// the renamed assignment; status and bound still describe the solve.
/// Falls back to the identity when there are more than `cap` permutations.
pub fn align_permutation(
    result: &FixResult,
    problem: &FixProblem,
    domain: &Domain,
    idx: &GroundIndex,
    cap: u128,
) -> (FixResult, Permutation) {
    let obs = &problem.model;
    let identity = Permutation::identity(domain);
    let Some(a) = &result.assignment else {
        return (result.clone(), identity);
    };
    let Some(perms) = enumerate_permutations(domain, cap) else {
        log::warn!("more than {cap} model permutations; keeping the solver's naming");
        return (result.clone(), identity);
    };
    let mut best: Option<(f64, Permutation)> = None;
    for p in perms {
        let score = model_agreement(domain, &p.apply_model(domain, &a.model), obs);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, p));
        }
    }
    let (_, perm) = best.expect("at least the identity");
    if perm.is_identity() {
        return (result.clone(), perm);
    }
    let amap = perm.action_map(idx);
    let aligned = Assignment {
        model: perm.apply_model(domain, &a.model),
        traces: a
            .traces
            .iter()
            .map(|t| TraceAssignment { states: t.states.clone(), actions: t.actions.iter().map(|&x| amap[x]).collect() })
            .collect(),
    };
    let objective = Some(objective_value(problem, domain, &aligned));
    (FixResult { assignment: Some(aligned), objective, ..result.clone() }, perm)
}
