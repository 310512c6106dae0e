//! Probabilistic lifted action model.
//!
//! Every (schema, bound predicate) pair carries four logits whose softmax
//! is a distribution over [`Case`]s. Decoding takes expectations:
//! `pre = pr·(0,0,1,1)`, `add = pr·(0,1,0,0)`, `del = pr·(0,0,0,1)`, so
//! `add + pre ≤ 1` and `del ≤ pre` hold for every parameter value.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::planning::{ActionModel, Case, Domain, Flags, GroundIndex};

pub(crate) fn softmax4(l: &[f64]) -> [f64; 4] {
    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = [(l[0] - m).exp(), (l[1] - m).exp(), (l[2] - m).exp(), (l[3] - m).exp()];
    let s: f64 = e.iter().sum();
    [e[0] / s, e[1] / s, e[2] / s, e[3] / s]
}

/// `(pre, add, del)` expectations of a case distribution.
pub fn decode_probs(pr: [f64; 4]) -> (f64, f64, f64) {
    (pr[2] + pr[3], pr[1], pr[3])
}

/// Per-pair case logits, stored flat in schema-major pair order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTable {
    pub logits: Vec<f64>,
    offsets: Vec<usize>,
}

impl CaseTable {
    pub fn zeros(domain: &Domain) -> Self {
        let mut offsets = Vec::with_capacity(domain.schemas.len() + 1);
        let mut acc = 0;
        for s in 0..domain.schemas.len() {
            offsets.push(acc);
            acc += domain.bound_predicates(s).len();
        }
        offsets.push(acc);
        CaseTable { logits: vec![0.0; acc * 4], offsets }
    }

    /// Logits drawn from `N(0, std²)`.
    pub fn random<R: Rng + ?Sized>(domain: &Domain, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("valid std");
        let mut t = Self::zeros(domain);
        for l in t.logits.iter_mut() {
            *l = normal.sample(rng);
        }
        t
    }

    /// A table whose argmax is `model`, with `margin` between the chosen
    /// logit and the others. Panics if the model breaks the case constraints.
    pub fn from_model(domain: &Domain, model: &ActionModel, margin: f64) -> Self {
        let mut t = Self::zeros(domain);
        for (s, b) in domain.pairs() {
            let c = model.case(s, b).expect("model satisfies the case constraints");
            let k = t.pair(s, b);
            t.logits[4 * k + c.index()] = margin;
        }
        t
    }

    pub fn num_pairs(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn pair(&self, schema: usize, bound: usize) -> usize {
        self.offsets[schema] + bound
    }

    pub fn schema_range(&self, schema: usize) -> std::ops::Range<usize> {
        self.offsets[schema]..self.offsets[schema + 1]
    }

    pub fn probs(&self, pair: usize) -> [f64; 4] {
        softmax4(&self.logits[4 * pair..4 * pair + 4])
    }

    pub fn decode(&self) -> Decoded {
        let n = self.num_pairs();
        let mut d = Decoded {
            probs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            add: Vec::with_capacity(n),
            del: Vec::with_capacity(n),
            offsets: self.offsets.clone(),
        };
        for k in 0..n {
            let pr = self.probs(k);
            let (pre, add, del) = decode_probs(pr);
            d.probs.push(pr);
            d.pre.push(pre);
            d.add.push(add);
            d.del.push(del);
        }
        d
    }

    /// Chain rule from gradients on the decoded vectors (and optionally on
    /// the case probabilities) to logits, accumulated into `grad`.
    pub fn backward(&self, decoded: &Decoded, dvec: &DecodedGrad, grad: &mut [f64]) {
        for k in 0..self.num_pairs() {
            let pr = decoded.probs[k];
            let mut dp = dvec.probs.get(k).copied().unwrap_or([0.0; 4]);
            dp[1] += dvec.add[k];
            dp[2] += dvec.pre[k];
            dp[3] += dvec.pre[k] + dvec.del[k];
            let dot: f64 = (0..4).map(|j| pr[j] * dp[j]).sum();
            for j in 0..4 {
                grad[4 * k + j] += pr[j] * (dp[j] - dot);
            }
        }
    }
}

/// Decoded lifted vectors, indexed by pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub probs: Vec<[f64; 4]>,
    pub pre: Vec<f64>,
    pub add: Vec<f64>,
    pub del: Vec<f64>,
    offsets: Vec<usize>,
}

impl Decoded {
    pub fn num_pairs(&self) -> usize {
        self.pre.len()
    }

    pub fn pair(&self, schema: usize, bound: usize) -> usize {
        self.offsets[schema] + bound
    }

    pub fn schema_offset(&self, schema: usize) -> usize {
        self.offsets[schema]
    }

    /// Thresholds the decoded vectors at 0.5. The result always satisfies the
    /// case constraints because `pre + add ≤ 1` and `del ≤ pre`.
    pub fn threshold(&self, domain: &Domain) -> ActionModel {
        let mut m = ActionModel::empty(domain);
        for (s, b) in domain.pairs() {
            let k = self.pair(s, b);
            m.set(
                s,
                b,
                Flags { pre: self.pre[k] > 0.5, add: self.add[k] > 0.5, del: self.del[k] > 0.5 },
            );
        }
        m
    }

    /// Most probable case per pair (lowest case on ties).
    pub fn argmax_cases(&self) -> Vec<Case> {
        self.probs
            .iter()
            .map(|pr| {
                let mut best = 0;
                for j in 1..4 {
                    if pr[j] > pr[best] {
                        best = j;
                    }
                }
                Case::from_index(best)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedGrad {
    pub pre: Vec<f64>,
    pub add: Vec<f64>,
    pub del: Vec<f64>,
    /// Direct gradient on case probabilities; empty when unused.
    pub probs: Vec<[f64; 4]>,
}

impl DecodedGrad {
    pub fn zeros(n: usize) -> Self {
        DecodedGrad { pre: vec![0.0; n], add: vec![0.0; n], del: vec![0.0; n], probs: Vec::new() }
    }
}

/// Dense grounded vectors of one action.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedEffectVectors {
    pub pre: Vec<f64>,
    pub add: Vec<f64>,
    pub del: Vec<f64>,
}

/// Copies lifted values onto the propositions each bound predicate reaches
/// for `action`; unreached propositions get 0. Should two bound predicates
/// reach one proposition they are combined by noisy-or. With injective
/// bindings this cannot happen, so in practice every entry is a plain copy.
pub fn ground_vectors(decoded: &Decoded, idx: &GroundIndex, action: usize) -> GroundedEffectVectors {
    let n = idx.num_props();
    let mut keep = [vec![1.0; n], vec![1.0; n], vec![1.0; n]];
    let schema = idx.action(action).schema;
    let off = decoded.schema_offset(schema);
    for (b, &p) in idx.lift_row(action).iter().enumerate() {
        let k = off + b;
        keep[0][p] *= 1.0 - decoded.pre[k];
        keep[1][p] *= 1.0 - decoded.add[k];
        keep[2][p] *= 1.0 - decoded.del[k];
    }
    let [pre, add, del] = keep.map(|v| v.into_iter().map(|k| 1.0 - k).collect());
    GroundedEffectVectors { pre, add, del }
}

/// `ps ⊙ (1 − del_a) + (1 − ps) ⊙ add_a`.
pub fn prob_successor(ps: &[f64], decoded: &Decoded, idx: &GroundIndex, action: usize) -> Vec<f64> {
    let mut out = ps.to_vec();
    let off = decoded.schema_offset(idx.action(action).schema);
    for (b, &p) in idx.lift_row(action).iter().enumerate() {
        let k = off + b;
        out[p] = ps[p] * (1.0 - decoded.del[k]) + (1.0 - ps[p]) * decoded.add[k];
    }
    out
}

/// Multipliers for the three loss components of one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub pred: f64,
    pub app: f64,
    pub bias: f64,
}

impl LossWeights {
    pub fn plain(lambda: f64) -> Self {
        LossWeights { pred: 1.0, app: 1.0, bias: lambda }
    }

    pub fn combine(&self, l: &ActionLoss) -> f64 {
        self.pred * l.pred + self.app * l.app + self.bias * l.bias
    }
}

/// Unweighted loss components of one action (means over propositions).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionLoss {
    pub pred: f64,
    pub app: f64,
    pub bias: f64,
}

/// Prediction, applicability and prior-bias losses of `action` between
/// `ps_t` and `ps_next`, computed densely.
pub fn action_loss(
    ps_t: &[f64],
    ps_next: &[f64],
    decoded: &Decoded,
    idx: &GroundIndex,
    action: usize,
) -> ActionLoss {
    let n = ps_t.len() as f64;
    let g = ground_vectors(decoded, idx, action);
    let mut l = ActionLoss::default();
    for i in 0..ps_t.len() {
        let x = ps_t[i];
        let hat = x * (1.0 - g.del[i]) + (1.0 - x) * g.add[i];
        l.pred += (hat - ps_next[i]).powi(2);
        l.app += (g.pre[i] * (1.0 - x)).powi(2);
        l.bias += (g.pre[i] - 1.0).powi(2);
    }
    l.pred /= n;
    l.app /= n;
    l.bias /= n;
    l
}

/// Accumulates `scale · ∂(w·loss)/∂·` for one action into the state
/// gradients and the decoded-vector gradients.
#[allow(clippy::too_many_arguments)]
pub fn action_loss_backward(
    ps_t: &[f64],
    ps_next: &[f64],
    decoded: &Decoded,
    idx: &GroundIndex,
    action: usize,
    w: LossWeights,
    scale: f64,
    d_t: &mut [f64],
    d_next: &mut [f64],
    dmodel: &mut DecodedGrad,
) {
    let n = ps_t.len() as f64;
    let c = 2.0 * scale / n;
    let row = idx.lift_row(action);
    let off = decoded.schema_offset(idx.action(action).schema);
    let mut touched = vec![usize::MAX; ps_t.len()];
    for (b, &p) in row.iter().enumerate() {
        touched[p] = off + b;
    }
    for i in 0..ps_t.len() {
        let x = ps_t[i];
        let y = ps_next[i];
        let k = touched[i];
        if k == usize::MAX {
            let r = x - y;
            d_t[i] += c * w.pred * r;
            d_next[i] -= c * w.pred * r;
            continue;
        }
        let (pre, add, del) = (decoded.pre[k], decoded.add[k], decoded.del[k]);
        let hat = x * (1.0 - del) + (1.0 - x) * add;
        let r = hat - y;
        d_t[i] += c * (w.pred * r * (1.0 - del - add) - w.app * pre * pre * (1.0 - x));
        d_next[i] -= c * w.pred * r;
        dmodel.del[k] += c * w.pred * r * (-x);
        dmodel.add[k] += c * w.pred * r * (1.0 - x);
        dmodel.pre[k] += c * (w.app * pre * (1.0 - x) * (1.0 - x) + w.bias * (pre - 1.0));
    }
}

/// Cross-entropy of every pair's case distribution against a target case,
/// averaged over pairs. Accumulates `scale·∂/∂logits` into `grad`.
pub fn case_cross_entropy(table: &CaseTable, targets: &[Case], scale: f64, grad: &mut [f64]) -> f64 {
    let n = table.num_pairs();
    assert_eq!(targets.len(), n, "one target per pair");
    if n == 0 {
        return 0.0;
    }
    let mut value = 0.0;
    for (k, c) in targets.iter().enumerate() {
        let l = &table.logits[4 * k..4 * k + 4];
        let pr = softmax4(l);
        let t = c.index();
        let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        value += m + l.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - l[t];
        for j in 0..4 {
            let onehot = if j == t { 1.0 } else { 0.0 };
            grad[4 * k + j] += scale * (pr[j] - onehot) / n as f64;
        }
    }
    value / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::fixtures;

    #[test]
    fn decode_examples() {
        assert_eq!(decode_probs([1.0, 0.0, 0.0, 0.0]), (0.0, 0.0, 0.0));
        assert_eq!(decode_probs([0.0, 0.0, 0.0, 1.0]), (1.0, 0.0, 1.0));
        assert_eq!(decode_probs([0.25; 4]), (0.5, 0.25, 0.25));
    }

    #[test]
    fn grounded_copy_rule() {
        let b = fixtures::bundle("blocksworld-2").unwrap();
        let mut t = CaseTable::zeros(&b.domain);
        let pickup = b.domain.schema_id("pickup").unwrap();
        let holding = b.domain.predicate_id("holding").unwrap();
        let bound = b
            .domain
            .bound_predicates(pickup)
            .iter()
            .position(|bp| bp.predicate == holding)
            .unwrap();
        // pr = (0.05, 0.05, 0.45, 0.45) → pre = 0.9
        let k = t.pair(pickup, bound);
        let l = (9.0f64).ln();
        t.logits[4 * k..4 * k + 4].copy_from_slice(&[0.0, 0.0, l, l]);
        let d = t.decode();
        assert!((d.pre[k] - 0.9).abs() < 1e-12);
        let a = b.index.action_id("(pickup b1)").unwrap();
        let g = ground_vectors(&d, &b.index, a);
        let h1 = b.index.prop_id("(holding b1)").unwrap();
        let h2 = b.index.prop_id("(holding b2)").unwrap();
        assert!((g.pre[h1] - 0.9).abs() < 1e-12);
        assert_eq!(g.pre[h2], 0.0);
        assert_eq!(g.add[h2], 0.0);
        assert_eq!(g.del[h2], 0.0);
    }

    #[test]
    fn hanoi_bindings_reach_distinct_propositions() {
        let b = fixtures::bundle("hanoi-4-3").unwrap();
        for a in 0..b.index.num_actions() {
            let row = b.index.lift_row(a);
            let mut seen = row.to_vec();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), row.len());
        }
        let d = CaseTable::random(&b.domain, 1.0, &mut rand::rng()).decode();
        let a = b.index.action_id("(move d1 d2 p1)").unwrap();
        let g = ground_vectors(&d, &b.index, a);
        let on = b.domain.predicate_id("on").unwrap();
        let mv = b.index.action(a).schema;
        for (bi, bp) in b.domain.bound_predicates(mv).iter().enumerate() {
            if bp.predicate == on {
                let p = b.index.lift(a, bi);
                assert!((g.pre[p] - d.pre[d.pair(mv, bi)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn successor_identity_and_addition() {
        let b = fixtures::bundle("blocksworld-1").unwrap();
        let d = CaseTable::from_model(&b.domain, &crate::planning::ActionModel::empty(&b.domain), 50.0).decode();
        let ps = vec![0.3, 0.7, 0.1, 0.9];
        for a in 0..b.index.num_actions() {
            let out = prob_successor(&ps, &d, &b.index, a);
            for (o, p) in out.iter().zip(&ps) {
                assert!((o - p).abs() < 1e-12);
            }
        }
        // add = 1 at one entry, nothing deleted: 0.5·1 + 0.5·1 = 1
        let mut t = CaseTable::zeros(&b.domain);
        let pickup = b.domain.schema_id("pickup").unwrap();
        for bi in 0..b.domain.bound_predicates(pickup).len() {
            let k = t.pair(pickup, bi);
            t.logits[4 * k..4 * k + 4].copy_from_slice(&[0.0, 0.0, 0.0, 0.0]);
            t.logits[4 * k] = 800.0;
        }
        let k = t.pair(pickup, 0);
        t.logits[4 * k..4 * k + 4].copy_from_slice(&[0.0, 800.0, 0.0, 0.0]);
        let d = t.decode();
        let a = b.index.action_id("(pickup b1)").unwrap();
        let out = prob_successor(&[0.5; 4], &d, &b.index, a);
        let p = b.index.lift(a, 0);
        assert!((out[p] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        let b = fixtures::bundle("blocksworld-1").unwrap();
        let gm = crate::planning::GroundModel::new(&b.model, &b.index);
        let d = CaseTable::from_model(&b.domain, &b.model, 800.0).decode();
        let s = b.init_state();
        let a = b.index.action_id("(pickup b1)").unwrap();
        let next = gm.successor(&s, a).unwrap();
        let x: Vec<f64> = s.bits().iter().map(|&v| v as u8 as f64).collect();
        let y: Vec<f64> = next.bits().iter().map(|&v| v as u8 as f64).collect();
        let l = action_loss(&x, &y, &d, &b.index, a);
        assert!(l.pred.abs() < 1e-12);
        assert!(l.app.abs() < 1e-12);

        // all-precondition model in an all-true state: no applicability loss
        let all_pre: Vec<Vec<Case>> = (0..b.domain.schemas.len())
            .map(|s| vec![Case::PreOnly; b.domain.bound_predicates(s).len()])
            .collect();
        let d = CaseTable::from_model(&b.domain, &ActionModel::from_cases(&all_pre), 800.0).decode();
        let l = action_loss(&[1.0; 4], &[1.0; 4], &d, &b.index, a);
        assert!(l.app.abs() < 1e-12);

        // no preconditions at all: bias = mean of 1² = 1
        let d = CaseTable::from_model(&b.domain, &ActionModel::empty(&b.domain), 800.0).decode();
        let l = action_loss(&[0.4; 4], &[0.6; 4], &d, &b.index, a);
        assert!((l.bias - 1.0).abs() < 1e-12);
    }
}
