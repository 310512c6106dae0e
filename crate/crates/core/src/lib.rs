//! Learning lifted STRIPS action models from traces of noisy state
//! observations without action labels.
//!
//! Differentiable predictors for states, actions and a four-case lifted
//! model are trained on consistency losses; periodically an exact 0/1
//! program repairs their predictions on a few traces into a logically
//! consistent explanation whose bits are fed back as pseudo-labels.

pub mod action;
pub mod dataset;
pub mod dump;
pub mod error;
pub mod eval;
pub mod fixer;
pub mod lifted;
pub mod par;
pub mod perception;
pub mod planning;
pub mod symmetry;
pub mod trainer;

pub use error::{Error, Result};
