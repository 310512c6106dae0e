use std::collections::HashMap;

use super::domain::Domain;
use super::types::TypeId;
use crate::error::{Error, Result};

/// A set of typed objects for a domain, plus the facts of the problem's
/// initial state (used to seed random initial states).
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    objects: Vec<(String, TypeId)>,
    ids: HashMap<String, usize>,
    /// `(predicate, object indices)` facts.
    pub init: Vec<(usize, Vec<usize>)>,
}

impl Instance {
    /// Objects are sorted by name so that grounding is independent of
    /// declaration order. Every object must carry a leaf type.
    pub fn new(
        name: impl Into<String>,
        domain: &Domain,
        mut objects: Vec<(String, TypeId)>,
    ) -> Result<Self> {
        objects.sort();
        for w in objects.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Instance(format!("duplicate object `{}`", w[0].0)));
            }
        }
        for (o, t) in &objects {
            if *t >= domain.types.len() {
                return Err(Error::Instance(format!("object `{o}` has an unknown type")));
            }
            if !domain.types.is_leaf(*t) {
                return Err(Error::Instance(format!(
                    "object `{o}` has non-leaf type `{}`",
                    domain.types.name(*t)
                )));
            }
        }
        let ids = objects
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i))
            .collect();
        Ok(Instance {
            name: name.into(),
            objects,
            ids,
            init: Vec::new(),
        })
    }

    pub fn objects(&self) -> &[(String, TypeId)] {
        &self.objects
    }

    pub fn object_id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn object_name(&self, id: usize) -> &str {
        &self.objects[id].0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proposition {
    pub predicate: usize,
    pub args: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundAction {
    pub schema: usize,
    pub args: Vec<usize>,
}

/// A grounded action that can touch a proposition, and the bound predicate
/// of its schema through which it does so.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Actor {
    pub action: usize,
    pub bound: usize,
}

/// Enumerated propositions and actions of an instance with the lookup tables
/// linking lifted bound predicates to grounded propositions.
///
/// Bindings are injective throughout: a proposition or action never repeats
/// an object. Both lists are sorted by name and then by argument names, so
/// indices are stable across runs.
#[derive(Debug, Clone)]
pub struct GroundIndex {
    props: Vec<Proposition>,
    acts: Vec<GroundAction>,
    prop_names: Vec<String>,
    act_names: Vec<String>,
    prop_ids: HashMap<String, usize>,
    act_ids: HashMap<String, usize>,
    actors: Vec<Vec<Actor>>,
    lift: Vec<Vec<usize>>,
    by_schema: Vec<Vec<usize>>,
}

fn injective_bindings(domain: &Domain, inst: &Instance, params: &[TypeId]) -> Vec<Vec<usize>> {
    fn rec(
        domain: &Domain,
        inst: &Instance,
        params: &[TypeId],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == params.len() {
            out.push(cur.clone());
            return;
        }
        let want = params[cur.len()];
        for (o, (_, t)) in inst.objects().iter().enumerate() {
            if cur.contains(&o) || !domain.types.subsumes(want, *t) {
                continue;
            }
            cur.push(o);
            rec(domain, inst, params, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(domain, inst, params, &mut Vec::new(), &mut out);
    out
}

fn render(name: &str, args: &[usize], inst: &Instance) -> String {
    let mut s = format!("({name}");
    for &a in args {
        s.push(' ');
        s.push_str(inst.object_name(a));
    }
    s.push(')');
    s
}

impl GroundIndex {
    pub fn new(domain: &Domain, inst: &Instance) -> Self {
        let sort_key = |name: &str, args: &[usize]| -> (String, Vec<String>) {
            (
                name.to_string(),
                args.iter().map(|&a| inst.object_name(a).to_string()).collect(),
            )
        };

        let mut props: Vec<Proposition> = domain
            .predicates
            .iter()
            .enumerate()
            .flat_map(|(pi, p)| {
                injective_bindings(domain, inst, &p.params)
                    .into_iter()
                    .map(move |args| Proposition { predicate: pi, args })
            })
            .collect();
        props.sort_by_cached_key(|p| sort_key(&domain.predicates[p.predicate].name, &p.args));

        let mut acts: Vec<GroundAction> = domain
            .schemas
            .iter()
            .enumerate()
            .flat_map(|(si, s)| {
                injective_bindings(domain, inst, &s.params)
                    .into_iter()
                    .map(move |args| GroundAction { schema: si, args })
            })
            .collect();
        acts.sort_by_cached_key(|a| sort_key(&domain.schemas[a.schema].name, &a.args));

        let prop_names: Vec<String> = props
            .iter()
            .map(|p| render(&domain.predicates[p.predicate].name, &p.args, inst))
            .collect();
        let act_names: Vec<String> = acts
            .iter()
            .map(|a| render(&domain.schemas[a.schema].name, &a.args, inst))
            .collect();
        let prop_ids: HashMap<String, usize> =
            prop_names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let act_ids = act_names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let prop_lookup: HashMap<&Proposition, usize> =
            props.iter().enumerate().map(|(i, p)| (p, i)).collect();

        let mut actors = vec![Vec::new(); props.len()];
        let mut lift = Vec::with_capacity(acts.len());
        let mut by_schema = vec![Vec::new(); domain.schemas.len()];
        for (ai, a) in acts.iter().enumerate() {
            by_schema[a.schema].push(ai);
            let row: Vec<usize> = domain
                .bound_predicates(a.schema)
                .iter()
                .enumerate()
                .map(|(bi, bp)| {
                    let prop = Proposition {
                        predicate: bp.predicate,
                        args: bp.binding.0.iter().map(|&j| a.args[j]).collect(),
                    };
                    let pi = prop_lookup[&prop];
                    actors[pi].push(Actor { action: ai, bound: bi });
                    pi
                })
                .collect();
            lift.push(row);
        }

        GroundIndex {
            props,
            acts,
            prop_names,
            act_names,
            prop_ids,
            act_ids,
            actors,
            lift,
            by_schema,
        }
    }

    pub fn num_props(&self) -> usize {
        self.props.len()
    }

    pub fn num_actions(&self) -> usize {
        self.acts.len()
    }

    pub fn props(&self) -> &[Proposition] {
        &self.props
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.acts
    }

    pub fn action(&self, a: usize) -> &GroundAction {
        &self.acts[a]
    }

    pub fn prop_name(&self, p: usize) -> &str {
        &self.prop_names[p]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.act_names[a]
    }

    pub fn prop_id(&self, name: &str) -> Option<usize> {
        self.prop_ids.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.act_ids.get(name).copied()
    }

    pub fn action_id_of(&self, schema: usize, args: &[usize]) -> Option<usize> {
        self.by_schema[schema]
            .iter()
            .copied()
            .find(|&a| self.acts[a].args == args)
    }

    /// Grounded actions (with the bound predicate used) that can touch `prop`.
    pub fn actors(&self, prop: usize) -> &[Actor] {
        &self.actors[prop]
    }

    /// Proposition reached by bound predicate `bound` of `action`'s schema.
    pub fn lift(&self, action: usize, bound: usize) -> usize {
        self.lift[action][bound]
    }

    /// Row of `lift` for an action, indexed by bound predicate.
    pub fn lift_row(&self, action: usize) -> &[usize] {
        &self.lift[action]
    }

    pub fn actions_of_schema(&self, schema: usize) -> &[usize] {
        &self.by_schema[schema]
    }
}
