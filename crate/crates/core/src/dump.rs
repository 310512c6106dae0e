//! JSON dump of a probabilistic lifted model, keyed by schema name and
//! rendered bound predicate so that it stays readable and order-independent.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixer::ModelObs;
use crate::lifted::Decoded;
use crate::planning::{ActionModel, Domain};

pub const MODEL_SCHEMA: &str = "liftlearn.model/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub schema: String,
    pub bound: String,
    pub pre: f64,
    pub add: f64,
    pub del: f64,
    /// Probabilities of irrelevant, add, pre, pre+del; absent for binary
    /// models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub schema: String,
    pub domain: String,
    pub pairs: Vec<PairRecord>,
}

impl ModelDump {
    pub fn from_decoded(domain: &Domain, d: &Decoded) -> Self {
        Self::build(domain, |k| (d.pre[k], d.add[k], d.del[k], Some(d.probs[k])))
    }

    pub fn from_model(domain: &Domain, model: &ActionModel) -> Self {
        let obs = ModelObs::from_model(domain, model);
        Self::build(domain, |k| (obs.pre[k], obs.add[k], obs.del[k], None))
    }

    fn build(domain: &Domain, f: impl Fn(usize) -> (f64, f64, f64, Option<[f64; 4]>)) -> Self {
        let pairs = domain
            .pairs()
            .enumerate()
            .map(|(k, (s, b))| {
                let (pre, add, del, cases) = f(k);
                PairRecord {
                    schema: domain.schemas[s].name.clone(),
                    bound: domain.describe_bound(s, b),
                    pre,
                    add,
                    del,
                    cases,
                }
            })
            .collect();
        ModelDump { schema: MODEL_SCHEMA.into(), domain: domain.name.clone(), pairs }
    }

    /// Per-pair probabilities in the domain's pair order. Every pair must be
    /// present exactly once.
    pub fn to_obs(&self, domain: &Domain) -> Result<ModelObs> {
        if self.schema != MODEL_SCHEMA {
            return Err(Error::Data(format!("unsupported model schema `{}`", self.schema)));
        }
        let mut at: HashMap<(&str, &str), &PairRecord> = HashMap::new();
        for r in &self.pairs {
            if at.insert((&r.schema, &r.bound), r).is_some() {
                return Err(Error::Data(format!("{} {} listed twice", r.schema, r.bound)));
            }
        }
        if at.len() != domain.num_pairs() {
            return Err(Error::Data(format!("model lists {} pairs, domain has {}", at.len(), domain.num_pairs())));
        }
        let mut obs = ModelObs { pre: Vec::new(), add: Vec::new(), del: Vec::new() };
        for (s, b) in domain.pairs() {
            let name = &domain.schemas[s].name;
            let bound = domain.describe_bound(s, b);
            let r = at
                .get(&(name.as_str(), bound.as_str()))
                .ok_or_else(|| Error::Data(format!("model lacks {name} {bound}")))?;
            for v in [r.pre, r.add, r.del] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Data(format!("{name} {bound}: {v} is not a probability")));
                }
            }
            obs.pre.push(r.pre);
            obs.add.push(r.add);
            obs.del.push(r.del);
        }
        Ok(obs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::fixtures;

    #[test]
    fn binary_round_trip() {
        let (d, m) = fixtures::domain("gripper").unwrap();
        let dump = ModelDump::from_model(&d, &m);
        let text = serde_json::to_string(&dump).unwrap();
        let back: ModelDump = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_obs(&d).unwrap(), ModelObs::from_model(&d, &m));
    }

    #[test]
    fn missing_pairs_are_rejected() {
        let (d, m) = fixtures::domain("gripper").unwrap();
        let mut dump = ModelDump::from_model(&d, &m);
        dump.pairs.pop();
        assert!(dump.to_obs(&d).is_err());
    }
}
