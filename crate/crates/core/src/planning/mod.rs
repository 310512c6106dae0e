//! Typed STRIPS semantics: types, predicates, schemas, grounding, and the
//! exact successor and consistency checks used as oracles elsewhere.

mod domain;
pub mod fixtures;
mod ground;
pub mod pddl;
mod semantics;
mod state;
mod types;
mod walk;

pub use domain::{
    enumerate_param_bindings, ActionModel, ActionSchema, BoundPredicate, Case, Domain, Flags,
    ParamBinding, Predicate,
};
pub use ground::{Actor, GroundAction, GroundIndex, Instance, Proposition};
pub use semantics::{ground_action_model, GroundEffects, GroundModel};
pub use state::{State, StateTrace};
pub use types::{TypeId, TypeTree};
pub use walk::{random_walk, random_walk_seeded, sample_initial_state};
