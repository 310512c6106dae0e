//! Action prediction from consecutive probabilistic states, the expected
//! model loss under that prediction, and locally best actions.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifted::{ActionLoss, Decoded, DecodedGrad, LossWeights};
use crate::planning::GroundIndex;

/// Linear softmax over grounded actions. Inputs are `[ps_t ; ps_next]`.
/// Parameters are stored flat: `A·2P` weights (action-major), then `A` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPredictor {
    pub actions: usize,
    pub props: usize,
    pub params: Vec<f64>,
}

impl ActionPredictor {
    pub fn zeros(actions: usize, props: usize) -> Self {
        ActionPredictor { actions, props, params: vec![0.0; actions * 2 * props + actions] }
    }

    pub fn random<R: Rng + ?Sized>(actions: usize, props: usize, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("valid std");
        let mut p = Self::zeros(actions, props);
        for w in p.params.iter_mut() {
            *w = normal.sample(rng);
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn row(&self, a: usize) -> &[f64] {
        let w = 2 * self.props;
        &self.params[a * w..(a + 1) * w]
    }

    fn bias(&self, a: usize) -> f64 {
        self.params[self.actions * 2 * self.props + a]
    }

    pub fn logits(&self, ps_t: &[f64], ps_next: &[f64]) -> Result<Vec<f64>> {
        if ps_t.len() != self.props || ps_next.len() != self.props {
            return Err(Error::Width { expected: self.props, got: ps_t.len().max(ps_next.len()) });
        }
        let p = self.props;
        Ok((0..self.actions)
            .map(|a| {
                let r = self.row(a);
                let mut z = self.bias(a);
                for i in 0..p {
                    z += r[i] * ps_t[i] + r[p + i] * ps_next[i];
                }
                z
            })
            .collect())
    }

    pub fn predict(&self, ps_t: &[f64], ps_next: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(ps_t, ps_next)?))
    }

    /// Accumulates parameter and input gradients given `∂L/∂logits`.
    pub fn backward(
        &self,
        ps_t: &[f64],
        ps_next: &[f64],
        dz: &[f64],
        grad: &mut [f64],
        d_t: &mut [f64],
        d_next: &mut [f64],
    ) {
        let p = self.props;
        let bo = self.actions * 2 * p;
        for (a, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let r = self.row(a);
            let base = a * 2 * p;
            for i in 0..p {
                grad[base + i] += g * ps_t[i];
                grad[base + p + i] += g * ps_next[i];
                d_t[i] += g * r[i];
                d_next[i] += g * r[p + i];
            }
            grad[bo + a] += g;
        }
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `-log softmax(z)[target]` and its gradient wrt `z`.
pub fn cross_entropy(z: &[f64], target: usize) -> (f64, Vec<f64>) {
    let value = log_sum_exp(z) - z[target];
    let mut g = softmax(z);
    g[target] -= 1.0;
    (value, g)
}

/// Loss components of every grounded action between two states, computed
/// from a shared baseline plus corrections on the propositions each action
/// touches.
pub fn all_action_losses(ps_t: &[f64], ps_next: &[f64], decoded: &Decoded, idx: &GroundIndex) -> Vec<ActionLoss> {
    let n = ps_t.len() as f64;
    let base_pred: f64 = ps_t.iter().zip(ps_next).map(|(x, y)| (x - y).powi(2)).sum();
    (0..idx.num_actions())
        .map(|a| {
            let off = decoded.schema_offset(idx.action(a).schema);
            let row = idx.lift_row(a);
            let mut pred = base_pred;
            let mut app = 0.0;
            let mut bias = n - row.len() as f64;
            for (b, &i) in row.iter().enumerate() {
                let k = off + b;
                let (x, y) = (ps_t[i], ps_next[i]);
                let hat = x * (1.0 - decoded.del[k]) + (1.0 - x) * decoded.add[k];
                pred += (hat - y).powi(2) - (x - y).powi(2);
                app += (decoded.pre[k] * (1.0 - x)).powi(2);
                bias += (decoded.pre[k] - 1.0).powi(2);
            }
            ActionLoss { pred: pred / n, app: app / n, bias: bias / n }
        })
        .collect()
}

/// Gradients of a weighted expected loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLossGrad {
    pub value: f64,
    /// Per-action weighted losses `L_a`.
    pub losses: Vec<f64>,
    /// `∂value/∂logits` of the action predictor.
    pub dz: Vec<f64>,
}

/// `Σ_a π_a·L_a` where `π = softmax(z)`; accumulates `scale·∂/∂ps` and
/// `scale·∂/∂decoded` and returns the value (unscaled) with `∂/∂z` (scaled).
#[allow(clippy::too_many_arguments)]
pub fn expected_loss(
    ps_t: &[f64],
    ps_next: &[f64],
    z: &[f64],
    decoded: &Decoded,
    idx: &GroundIndex,
    w: LossWeights,
    scale: f64,
    d_t: &mut [f64],
    d_next: &mut [f64],
    dmodel: &mut DecodedGrad,
) -> ExpectedLossGrad {
    let pi = softmax(z);
    let losses: Vec<f64> =
        all_action_losses(ps_t, ps_next, decoded, idx).iter().map(|l| w.combine(l)).collect();
    let value: f64 = pi.iter().zip(&losses).map(|(p, l)| p * l).sum();
    let dz: Vec<f64> = pi.iter().zip(&losses).map(|(p, l)| scale * p * (l - value)).collect();

    let n = ps_t.len() as f64;
    let c = 2.0 * scale / n;
    // Untouched propositions behave like the identity for every action.
    for i in 0..ps_t.len() {
        let r = ps_t[i] - ps_next[i];
        d_t[i] += c * w.pred * r;
        d_next[i] -= c * w.pred * r;
    }
    for (a, &pa) in pi.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let ca = c * pa;
        let off = decoded.schema_offset(idx.action(a).schema);
        for (b, &i) in idx.lift_row(a).iter().enumerate() {
            let k = off + b;
            let (x, y) = (ps_t[i], ps_next[i]);
            let (pre, add, del) = (decoded.pre[k], decoded.add[k], decoded.del[k]);
            let hat = x * (1.0 - del) + (1.0 - x) * add;
            let r = hat - y;
            let r0 = x - y;
            d_t[i] += ca * (w.pred * (r * (1.0 - del - add) - r0) - w.app * pre * pre * (1.0 - x));
            d_next[i] -= ca * w.pred * (r - r0);
            dmodel.del[k] -= ca * w.pred * r * x;
            dmodel.add[k] += ca * w.pred * r * (1.0 - x);
            dmodel.pre[k] += ca * (w.app * pre * (1.0 - x) * (1.0 - x) + w.bias * (pre - 1.0));
        }
    }
    ExpectedLossGrad { value, losses, dz }
}

/// Per-action `log Pr_pred + log Pr_app` with both states clamped to `[δ, 1-δ]`.
pub fn action_scores(ps_t: &[f64], ps_next: &[f64], decoded: &Decoded, idx: &GroundIndex, delta: f64) -> Vec<f64> {
    let x: Vec<f64> = ps_t.iter().map(|v| v.clamp(delta, 1.0 - delta)).collect();
    let y: Vec<f64> = ps_next.iter().map(|v| v.clamp(delta, 1.0 - delta)).collect();
    let match_term = |hat: f64, y: f64| (hat * y + (1.0 - hat) * (1.0 - y)).ln();
    let base: f64 = x.iter().zip(&y).map(|(&a, &b)| match_term(a, b)).sum();
    (0..idx.num_actions())
        .map(|a| {
            let off = decoded.schema_offset(idx.action(a).schema);
            let mut s = base;
            for (b, &i) in idx.lift_row(a).iter().enumerate() {
                let k = off + b;
                let hat = x[i] * (1.0 - decoded.del[k]) + (1.0 - x[i]) * decoded.add[k];
                s += match_term(hat, y[i]) - match_term(x[i], y[i]);
                s += (1.0 - decoded.pre[k] * (1.0 - x[i])).ln();
            }
            s
        })
        .collect()
}

/// `Σ_i log[p̂·y + (1-p̂)(1-y)]` for one action.
pub fn log_pr_pred(ps_t: &[f64], ps_next: &[f64], decoded: &Decoded, idx: &GroundIndex, a: usize, delta: f64) -> f64 {
    let x: Vec<f64> = ps_t.iter().map(|v| v.clamp(delta, 1.0 - delta)).collect();
    let hat = crate::lifted::prob_successor(&x, decoded, idx, a);
    hat.iter()
        .zip(ps_next)
        .map(|(&h, &y)| {
            let y = y.clamp(delta, 1.0 - delta);
            (h * y + (1.0 - h) * (1.0 - y)).ln()
        })
        .sum()
}

/// `Σ_i log[1 - pre_a·(1-x)]` for one action.
pub fn log_pr_app(ps_t: &[f64], decoded: &Decoded, idx: &GroundIndex, a: usize, delta: f64) -> f64 {
    let g = crate::lifted::ground_vectors(decoded, idx, a);
    ps_t.iter()
        .zip(&g.pre)
        .map(|(&x, &pre)| (1.0 - pre * (1.0 - x.clamp(delta, 1.0 - delta))).ln())
        .sum()
}

/// Index of the highest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Action maximising `log Pr_pred + log Pr_app`, lowest index on ties.
pub fn locally_best_action(ps_t: &[f64], ps_next: &[f64], decoded: &Decoded, idx: &GroundIndex, delta: f64) -> usize {
    argmax(&action_scores(ps_t, ps_next, decoded, idx, delta))
}

/// Loss of one transition: the expected model loss plus a cross-entropy
/// pull of the action distribution towards a fixed target.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLoss {
    pub expected: f64,
    pub ce: f64,
    pub value: f64,
}

/// Evaluates a step loss and accumulates `scale·gradients` into the action
/// predictor, the two state vectors and the decoded model.
#[allow(clippy::too_many_arguments)]
pub fn step_loss(
    ps_t: &[f64],
    ps_next: &[f64],
    predictor: &ActionPredictor,
    decoded: &Decoded,
    idx: &GroundIndex,
    w: LossWeights,
    target: usize,
    ce_weight: f64,
    scale: f64,
    grad_a: &mut [f64],
    d_t: &mut [f64],
    d_next: &mut [f64],
    dmodel: &mut DecodedGrad,
) -> Result<StepLoss> {
    let z = predictor.logits(ps_t, ps_next)?;
    let ex = expected_loss(ps_t, ps_next, &z, decoded, idx, w, scale, d_t, d_next, dmodel);
    let (ce, dce) = cross_entropy(&z, target);
    let dz: Vec<f64> = ex.dz.iter().zip(&dce).map(|(a, b)| a + scale * ce_weight * b).collect();
    predictor.backward(ps_t, ps_next, &dz, grad_a, d_t, d_next);
    Ok(StepLoss { expected: ex.value, ce, value: ex.value + ce_weight * ce })
}

/// Loss weights of step `t` (0-based) of a trace with `steps` transitions:
/// `gamma` scales the applicability loss of the first step and the
/// prediction loss of the last.
pub fn step_weights(t: usize, steps: usize, gamma: f64, lambda: f64) -> LossWeights {
    let mut w = LossWeights::plain(lambda);
    if t == 0 {
        w.app *= gamma;
    }
    if t + 1 == steps {
        w.pred *= gamma;
    }
    w
}
