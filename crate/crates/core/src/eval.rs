//! Model scoring up to renaming of schemas and parameters.

use serde::Serialize;

use crate::dataset::{GroundTruth, ObservedTrace};
use crate::error::{Error, Result};
use crate::fixer::ModelObs;
use crate::planning::{ActionModel, Domain, GroundIndex};
use crate::trainer::Params;
use crate::symmetry::{enumerate_permutations, Permutation};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    /// Mismatched (pair, label) bits after thresholding at 0.5, minimised
    /// over permutations.
    pub err: usize,
    /// `1/(3N)·Σ[v·y + (1-v)(1-y)]`, maximised over permutations.
    pub agree: f64,
    /// Permutation attaining `err` (best agreement, then lexicographically
    /// smallest, among ties). Maps learned names onto ground-truth names.
    #[serde(skip)]
    pub perm: Permutation,
}

fn truth_bits(domain: &Domain, truth: &ActionModel) -> Vec<[f64; 3]> {
    domain
        .pairs()
        .map(|(s, b)| {
            let f = truth.flags(s, b);
            [f.pre as u8 as f64, f.add as u8 as f64, f.del as u8 as f64]
        })
        .collect()
}

/// Scores predicted per-pair probabilities against a ground-truth model.
/// With more than `cap` permutations only the identity is considered.
pub fn score_model(domain: &Domain, learned: &ModelObs, truth: &ActionModel, cap: u128) -> ModelScore {
    let y = truth_bits(domain, truth);
    let n = y.len();
    let perms = enumerate_permutations(domain, cap).unwrap_or_else(|| {
        log::warn!("more than {cap} model permutations; scoring without renaming");
        vec![Permutation::identity(domain)]
    });
    let mut best: Option<(usize, f64, Permutation)> = None;
    let mut max_agree = f64::NEG_INFINITY;
    for p in perms {
        let map = p.pair_map(domain);
        let mut err = 0;
        let mut agree = 0.0;
        for k in 0..n {
            let t = &y[map[k]];
            for (j, v) in [learned.pre[k], learned.add[k], learned.del[k]].into_iter().enumerate() {
                if (v > 0.5) != (t[j] > 0.5) {
                    err += 1;
                }
                agree += v * t[j] + (1.0 - v) * (1.0 - t[j]);
            }
        }
        let agree = if n == 0 { 1.0 } else { agree / (3 * n) as f64 };
        max_agree = max_agree.max(agree);
        let better = match &best {
            None => true,
            Some((e, a, _)) => err < *e || (err == *e && agree > *a),
        };
        if better {
            best = Some((err, agree, p));
        }
    }
    let (err, _, perm) = best.expect("at least the identity");
    ModelScore { err, agree: max_agree, perm }
}

/// Score of a binary model.
pub fn score_binary(domain: &Domain, learned: &ActionModel, truth: &ActionModel, cap: u128) -> ModelScore {
    score_model(domain, &ModelObs::from_model(domain, learned), truth, cap)
}

/// Held-out metrics of a trained run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub err: usize,
    pub agree: f64,
    /// Proposition-wise accuracy of thresholded intermediate states.
    pub state_acc: f64,
    /// Accuracy of the most probable action per step, after renaming by the
    /// permutation that minimises `err`.
    pub action_acc: f64,
}

/// Scores trained parameters on test traces against their ground truth and
/// the true model.
pub fn evaluate(
    domain: &Domain,
    idx: &GroundIndex,
    params: &Params,
    test: &[(ObservedTrace, GroundTruth)],
    truth: &ActionModel,
    delta: f64,
    cap: u128,
) -> Result<Metrics> {
    let decoded = params.model.decode();
    let score = score_model(domain, &crate::trainer::decoded_obs(&decoded), truth, cap);
    let amap = score.perm.action_map(idx);
    let per_trace = crate::par::map_slice(test, |(tr, gt)| -> Result<(usize, usize, usize, usize)> {
        if gt.states.len() != tr.steps() + 1 || gt.actions.len() != tr.steps() {
            return Err(Error::Data(format!("ground truth of trace {} has the wrong length", tr.id)));
        }
        let ps = params.trace_states(tr, delta)?;
        let (mut sc, mut sn) = (0, 0);
        for t in 1..tr.steps() {
            let s = ps[t].threshold();
            sn += s.len();
            sc += (0..s.len()).filter(|&p| s.get(p) == gt.states[t].get(p)).count();
        }
        let mut ac = 0;
        for (t, pa) in params.trace_actions(&ps)?.iter().enumerate() {
            ac += (amap[crate::action::argmax(pa)] == gt.actions[t]) as usize;
        }
        Ok((sc, sn, ac, tr.steps()))
    });
    let (mut sc, mut sn, mut ac, mut an) = (0, 0, 0, 0);
    for r in per_trace {
        let (a, b, c, d) = r?;
        sc += a;
        sn += b;
        ac += c;
        an += d;
    }
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok(Metrics { err: score.err, agree: score.agree, state_acc: ratio(sc, sn), action_acc: ratio(ac, an) })
}
