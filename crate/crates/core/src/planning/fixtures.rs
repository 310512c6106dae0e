//! Built-in copies of the five benchmark domains and their instances.

use super::domain::{ActionModel, Domain};
use super::ground::Instance;
use super::pddl::{parse_domain, parse_problem};
use super::state::State;
use super::GroundIndex;
use crate::error::{Error, Result};

pub const DOMAINS: &[(&str, &str)] = &[
    ("blocksworld", include_str!("../../fixtures/domains/blocksworld.pddl")),
    ("gripper", include_str!("../../fixtures/domains/gripper.pddl")),
    ("logistics", include_str!("../../fixtures/domains/logistics.pddl")),
    ("hanoi", include_str!("../../fixtures/domains/hanoi.pddl")),
    ("8-puzzle", include_str!("../../fixtures/domains/8-puzzle.pddl")),
];

pub const INSTANCES: &[(&str, &str, &str)] = &[
    ("blocksworld-1", "blocksworld", include_str!("../../fixtures/instances/blocksworld-1.pddl")),
    ("blocksworld-2", "blocksworld", include_str!("../../fixtures/instances/blocksworld-2.pddl")),
    ("blocksworld-3", "blocksworld", include_str!("../../fixtures/instances/blocksworld-3.pddl")),
    ("blocksworld-5", "blocksworld", include_str!("../../fixtures/instances/blocksworld-5.pddl")),
    ("gripper-3-1-2", "gripper", include_str!("../../fixtures/instances/gripper-3-1-2.pddl")),
    ("gripper-6-2-2", "gripper", include_str!("../../fixtures/instances/gripper-6-2-2.pddl")),
    ("logistics-6", "logistics", include_str!("../../fixtures/instances/logistics-6.pddl")),
    ("hanoi-4-3", "hanoi", include_str!("../../fixtures/instances/hanoi-4-3.pddl")),
    ("8-puzzle", "8-puzzle", include_str!("../../fixtures/instances/8-puzzle.pddl")),
];

/// A parsed domain, one of its instances, the grounding, and the reference
/// model, bundled for tests and tools.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub domain: Domain,
    pub model: ActionModel,
    pub instance: Instance,
    pub index: GroundIndex,
}

impl Bundle {
    pub fn from_sources(domain_src: &str, problem_src: &str) -> Result<Self> {
        let (domain, model) = parse_domain(domain_src)?;
        let instance = parse_problem(problem_src, &domain)?;
        let index = GroundIndex::new(&domain, &instance);
        Ok(Bundle { domain, model, instance, index })
    }

    /// The instance's `:init` facts as a state.
    pub fn init_state(&self) -> State {
        let mut s = State::empty(self.index.num_props());
        for (p, args) in &self.instance.init {
            let name = render_fact(&self.domain, &self.instance, *p, args);
            if let Some(i) = self.index.prop_id(&name) {
                s.set(i, true);
            }
        }
        s
    }
}

fn render_fact(domain: &Domain, inst: &Instance, p: usize, args: &[usize]) -> String {
    let mut s = format!("({}", domain.predicates[p].name);
    for &a in args {
        s.push(' ');
        s.push_str(inst.object_name(a));
    }
    s.push(')');
    s
}

pub fn domain_source(name: &str) -> Option<&'static str> {
    DOMAINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn domain(name: &str) -> Result<(Domain, ActionModel)> {
    parse_domain(domain_source(name).ok_or_else(|| Error::Data(format!("no built-in domain `{name}`")))?)
}

/// Loads a built-in instance together with its domain.
pub fn bundle(instance: &str) -> Result<Bundle> {
    let (_, dom, src) = INSTANCES
        .iter()
        .find(|(n, _, _)| *n == instance)
        .ok_or_else(|| Error::Data(format!("no built-in instance `{instance}`")))?;
    Bundle::from_sources(domain_source(dom).expect("listed domain"), src)
}
