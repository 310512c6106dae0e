//! Synthetic observation channel and the per-proposition state predictor.
//!
//! Each proposition is observed through `F` features. A feature is centred
//! at `+1` when its (independently flipped) bit is true and `-1` otherwise,
//! then Gaussian noise is added. With zero flip rate and zero noise the
//! features determine the state exactly.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planning::State;

pub const DEFAULT_FEATURES: usize = 3;
pub const DEFAULT_CLAMP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Probability that a feature reports the flipped bit.
    pub flip_rate: f64,
    /// Standard deviation of the additive feature noise.
    pub noise: f64,
    pub features: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams { flip_rate: 0.0, noise: 0.0, features: DEFAULT_FEATURES }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.flip_rate) {
            return Err(Error::Config(format!("flip rate {} not in [0, 0.5)", self.flip_rate)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(format!("noise {} must be finite and >= 0", self.noise)));
        }
        if self.features == 0 {
            return Err(Error::Config("need at least one feature per proposition".into()));
        }
        Ok(())
    }
}

/// Feature vector for `s`, laid out proposition-major (`p * F + f`).
pub fn emit_observation<R: Rng + ?Sized>(s: &State, ch: &ChannelParams, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, ch.noise.max(0.0)).expect("valid std");
    let mut out = Vec::with_capacity(s.len() * ch.features);
    for &bit in s.bits() {
        for _ in 0..ch.features {
            let flipped = ch.flip_rate > 0.0 && rng.random_bool(ch.flip_rate);
            let centre = if bit != flipped { 1.0 } else { -1.0 };
            let noise = if ch.noise > 0.0 { normal.sample(rng) } else { 0.0 };
            out.push(centre + noise);
        }
    }
    out
}

/// Per-proposition marginal truth probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbState(pub Vec<f64>);

impl ProbState {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn clamped(&self, delta: f64) -> ProbState {
        ProbState(self.0.iter().map(|v| v.clamp(delta, 1.0 - delta)).collect())
    }

    pub fn threshold(&self) -> State {
        State::from_bits(self.0.iter().map(|&v| v > 0.5).collect())
    }
}

/// Embeds a known binary state as `{δ, 1-δ}` probabilities.
pub fn lift_state(s: &State, delta: f64) -> ProbState {
    ProbState(s.bits().iter().map(|&b| if b { 1.0 - delta } else { delta }).collect())
}

/// Initial and final states of a trace as constant probability vectors.
pub fn lift_endpoints(initial: &State, last: &State, delta: f64) -> (ProbState, ProbState) {
    (lift_state(initial, delta), lift_state(last, delta))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Logistic map per proposition: `ps_p = σ(Σ_f w[p,f]·x[p,f] + b[p])`.
///
/// Parameters are stored flat: `P·F` weights followed by `P` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePredictor {
    pub props: usize,
    pub features: usize,
    pub params: Vec<f64>,
}

impl StatePredictor {
    pub fn zeros(props: usize, features: usize) -> Self {
        StatePredictor { props, features, params: vec![0.0; props * features + props] }
    }

    pub fn random<R: Rng + ?Sized>(props: usize, features: usize, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("valid std");
        let mut p = Self::zeros(props, features);
        for w in p.params.iter_mut() {
            *w = normal.sample(rng);
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn bias_offset(&self) -> usize {
        self.props * self.features
    }

    fn check(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.props * self.features {
            return Err(Error::Width { expected: self.props * self.features, got: obs.len() });
        }
        Ok(())
    }

    pub fn predict(&self, obs: &[f64]) -> Result<ProbState> {
        self.check(obs)?;
        let f = self.features;
        let bo = self.bias_offset();
        Ok(ProbState(
            (0..self.props)
                .map(|p| {
                    let z: f64 = (0..f).map(|k| self.params[p * f + k] * obs[p * f + k]).sum::<f64>()
                        + self.params[bo + p];
                    sigmoid(z)
                })
                .collect(),
        ))
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂ps` at the prediction `ps`.
    pub fn backward(&self, obs: &[f64], ps: &ProbState, dps: &[f64], grad: &mut [f64]) {
        let f = self.features;
        let bo = self.bias_offset();
        for p in 0..self.props {
            let v = ps.0[p];
            let dz = dps[p] * v * (1.0 - v);
            if dz == 0.0 {
                continue;
            }
            for k in 0..f {
                grad[p * f + k] += dz * obs[p * f + k];
            }
            grad[bo + p] += dz;
        }
    }
}

/// Mean binary cross-entropy of `ps` against a binary target, with `ps`
/// clamped to `[δ, 1-δ]`. Returns the value and `∂/∂ps`.
pub fn bce(ps: &[f64], target: &State, delta: f64) -> (f64, Vec<f64>) {
    let n = ps.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; ps.len()];
    for (i, &raw) in ps.iter().enumerate() {
        let v = raw.clamp(delta, 1.0 - delta);
        let inside = raw > delta && raw < 1.0 - delta;
        if target.get(i) {
            value -= v.ln();
            if inside {
                grad[i] = -1.0 / (v * n);
            }
        } else {
            value -= (1.0 - v).ln();
            if inside {
                grad[i] = 1.0 / ((1.0 - v) * n);
            }
        }
    }
    (value / n, grad)
}
