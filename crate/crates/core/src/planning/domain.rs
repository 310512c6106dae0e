use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::types::{TypeId, TypeTree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub params: Vec<TypeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypeId>,
}

/// Injective map from predicate parameter positions to schema parameter
/// positions: `self.0[i]` is the schema parameter bound to predicate
/// parameter `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamBinding(pub Vec<usize>);

impl ParamBinding {
    pub fn is_injective(&self) -> bool {
        self.0.iter().all_unique()
    }
}

/// A predicate together with a parameter binding into a particular schema.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundPredicate {
    pub predicate: usize,
    pub binding: ParamBinding,
}

/// All injective, type-respecting bindings of `pred`'s parameters into
/// `schema`'s parameters, in lexicographic order.
pub fn enumerate_param_bindings(
    types: &TypeTree,
    pred: &Predicate,
    schema: &ActionSchema,
) -> Vec<ParamBinding> {
    let k = pred.params.len();
    let m = schema.params.len();
    if k > m {
        return Vec::new();
    }
    (0..m)
        .permutations(k)
        .filter(|map| {
            map.iter()
                .enumerate()
                .all(|(i, &j)| types.subsumes(pred.params[i], schema.params[j]))
        })
        .map(ParamBinding)
        .collect()
}

/// Typed STRIPS vocabulary: types, predicates and schema signatures. The
/// parameter-bound predicates of every schema are enumerated once here and
/// addressed by position afterwards.
#[derive(Debug, Clone)]
pub struct Domain {
    pub name: String,
    pub types: TypeTree,
    pub predicates: Vec<Predicate>,
    pub schemas: Vec<ActionSchema>,
    bound: Vec<Vec<BoundPredicate>>,
    bound_ids: Vec<HashMap<BoundPredicate, usize>>,
    predicate_ids: HashMap<String, usize>,
    schema_ids: HashMap<String, usize>,
}

impl Domain {
    pub fn new(
        name: impl Into<String>,
        types: TypeTree,
        predicates: Vec<Predicate>,
        schemas: Vec<ActionSchema>,
    ) -> Result<Self> {
        let mut predicate_ids = HashMap::new();
        for (i, p) in predicates.iter().enumerate() {
            if p.params.iter().any(|&t| t >= types.len()) {
                return Err(Error::Domain(format!("predicate `{}` has an unknown type", p.name)));
            }
            if predicate_ids.insert(p.name.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate predicate `{}`", p.name)));
            }
        }
        let mut schema_ids = HashMap::new();
        for (i, s) in schemas.iter().enumerate() {
            if s.params.iter().any(|&t| t >= types.len()) {
                return Err(Error::Domain(format!("schema `{}` has an unknown type", s.name)));
            }
            if schema_ids.insert(s.name.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate action schema `{}`", s.name)));
            }
        }
        let bound: Vec<Vec<BoundPredicate>> = schemas
            .iter()
            .map(|s| {
                predicates
                    .iter()
                    .enumerate()
                    .flat_map(|(pi, p)| {
                        enumerate_param_bindings(&types, p, s)
                            .into_iter()
                            .map(move |binding| BoundPredicate { predicate: pi, binding })
                    })
                    .collect()
            })
            .collect();
        let bound_ids = bound
            .iter()
            .map(|bs| bs.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect())
            .collect();
        Ok(Domain {
            name: name.into(),
            types,
            predicates,
            schemas,
            bound,
            bound_ids,
            predicate_ids,
            schema_ids,
        })
    }

    pub fn predicate_id(&self, name: &str) -> Option<usize> {
        self.predicate_ids.get(name).copied()
    }

    pub fn schema_id(&self, name: &str) -> Option<usize> {
        self.schema_ids.get(name).copied()
    }

    /// Parameter-bound predicates of `schema`, ordered by predicate then binding.
    pub fn bound_predicates(&self, schema: usize) -> &[BoundPredicate] {
        &self.bound[schema]
    }

    pub fn bound_id(&self, schema: usize, bp: &BoundPredicate) -> Option<usize> {
        self.bound_ids[schema].get(bp).copied()
    }

    /// Total number of (schema, parameter-bound predicate) pairs.
    pub fn num_pairs(&self) -> usize {
        self.bound.iter().map(Vec::len).sum()
    }

    /// Iterates `(schema, bound index)` over every pair in schema-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bound
            .iter()
            .enumerate()
            .flat_map(|(s, bs)| (0..bs.len()).map(move |b| (s, b)))
    }

    /// Renders a bound predicate using `?x{j}` for schema parameter `j`.
    pub fn describe_bound(&self, schema: usize, bound: usize) -> String {
        let bp = &self.bound[schema][bound];
        let p = &self.predicates[bp.predicate];
        let mut s = format!("({}", p.name);
        for j in &bp.binding.0 {
            s.push_str(&format!(" ?x{j}"));
        }
        s.push(')');
        s
    }
}

/// One of the four mutually exclusive roles a bound predicate can play in a
/// schema when add effects may not be preconditions and only preconditions
/// may be deleted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    Irrelevant = 0,
    AddOnly = 1,
    PreOnly = 2,
    PreDel = 3,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Irrelevant, Case::AddOnly, Case::PreOnly, Case::PreDel];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Case {
        Case::ALL[i]
    }

    /// 1-based label used for pseudo-label targets.
    pub fn label(self) -> u8 {
        self as u8 + 1
    }

    pub fn flags(self) -> Flags {
        match self {
            Case::Irrelevant => Flags::default(),
            Case::AddOnly => Flags { pre: false, add: true, del: false },
            Case::PreOnly => Flags { pre: true, add: false, del: false },
            Case::PreDel => Flags { pre: true, add: false, del: true },
        }
    }

    pub fn from_flags(f: Flags) -> Option<Case> {
        match (f.pre, f.add, f.del) {
            (false, false, false) => Some(Case::Irrelevant),
            (false, true, false) => Some(Case::AddOnly),
            (true, false, false) => Some(Case::PreOnly),
            (true, false, true) => Some(Case::PreDel),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flags {
    pub pre: bool,
    pub add: bool,
    pub del: bool,
}

/// Binary lifted action model: pre/add/del membership for every
/// (schema, bound predicate) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionModel {
    flags: Vec<Vec<Flags>>,
}

impl ActionModel {
    pub fn empty(domain: &Domain) -> Self {
        ActionModel {
            flags: (0..domain.schemas.len())
                .map(|s| vec![Flags::default(); domain.bound_predicates(s).len()])
                .collect(),
        }
    }

    pub fn from_cases(cases: &[Vec<Case>]) -> Self {
        ActionModel {
            flags: cases
                .iter()
                .map(|row| row.iter().map(|c| c.flags()).collect())
                .collect(),
        }
    }

    pub fn flags(&self, schema: usize, bound: usize) -> Flags {
        self.flags[schema][bound]
    }

    pub fn set(&mut self, schema: usize, bound: usize, flags: Flags) {
        self.flags[schema][bound] = flags;
    }

    pub fn schema_flags(&self, schema: usize) -> &[Flags] {
        &self.flags[schema]
    }

    pub fn num_schemas(&self) -> usize {
        self.flags.len()
    }

    /// Checks `Add ∩ Pre = ∅` and `Del ⊆ Pre` for every schema.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for (s, row) in self.flags.iter().enumerate() {
            for (b, f) in row.iter().enumerate() {
                if f.add && f.pre {
                    return Err(Error::Domain(format!(
                        "{}: {} is both a precondition and an add effect",
                        domain.schemas[s].name,
                        domain.describe_bound(s, b)
                    )));
                }
                if f.del && !f.pre {
                    return Err(Error::Domain(format!(
                        "{}: {} is deleted but not a precondition",
                        domain.schemas[s].name,
                        domain.describe_bound(s, b)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn case(&self, schema: usize, bound: usize) -> Option<Case> {
        Case::from_flags(self.flags[schema][bound])
    }

    pub fn cases(&self) -> Option<Vec<Vec<Case>>> {
        self.flags
            .iter()
            .map(|row| row.iter().map(|f| Case::from_flags(*f)).collect())
            .collect()
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::Irrelevant => "irrelevant",
            Case::AddOnly => "add",
            Case::PreOnly => "pre",
            Case::PreDel => "pre+del",
        };
        f.write_str(s)
    }
}
