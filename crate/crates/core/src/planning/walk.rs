use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::semantics::GroundModel;
use super::state::{State, StateTrace};
use crate::error::{Error, Result};

/// Walks `k` steps from `start`, drawing uniformly among applicable actions.
/// The generating actions are recorded on the returned trace.
pub fn random_walk<R: Rng + ?Sized>(
    model: &GroundModel<'_>,
    start: State,
    k: usize,
    rng: &mut R,
) -> Result<StateTrace> {
    let mut states = vec![start];
    let mut actions = Vec::with_capacity(k);
    for _ in 0..k {
        let cur = states.last().expect("non-empty");
        let choices = model.applicable_actions(cur);
        let Some(&a) = choices.choose(rng) else {
            return Err(Error::DeadEnd {
                prefix: StateTrace { states, actions: Some(actions) },
            });
        };
        let next = model.apply_unchecked(cur, a);
        states.push(next);
        actions.push(a);
    }
    Ok(StateTrace { states, actions: Some(actions) })
}

pub fn random_walk_seeded(
    model: &GroundModel<'_>,
    start: State,
    k: usize,
    seed: u64,
) -> Result<StateTrace> {
    random_walk(model, start, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Samples a random reachable state by scrambling `init` with a random walk
/// whose length is drawn uniformly from `0..=max_steps`.
pub fn sample_initial_state<R: Rng + ?Sized>(
    model: &GroundModel<'_>,
    init: &State,
    max_steps: usize,
    rng: &mut R,
) -> Result<State> {
    let steps = rng.random_range(0..=max_steps);
    let trace = random_walk(model, init.clone(), steps, rng)?;
    Ok(trace.states.into_iter().last().expect("non-empty"))
}
