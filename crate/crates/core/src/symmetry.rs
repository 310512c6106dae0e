//! Renamings that leave an action model's meaning unchanged: permuting
//! schemas that share a signature, and permuting same-typed parameters
//! within a schema.

use itertools::Itertools;

use crate::planning::{ActionModel, BoundPredicate, Domain, GroundIndex, ParamBinding};

/// `schema[α]` is the schema that α is renamed to; `params[α][i]` is the
/// parameter position in `schema[α]` that α's parameter `i` moves to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation {
    pub schema: Vec<usize>,
    pub params: Vec<Vec<usize>>,
}

impl Permutation {
    pub fn identity(domain: &Domain) -> Self {
        Permutation {
            schema: (0..domain.schemas.len()).collect(),
            params: domain.schemas.iter().map(|s| (0..s.params.len()).collect()).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.schema.iter().enumerate().all(|(i, &s)| i == s)
            && self.params.iter().all(|p| p.iter().enumerate().all(|(i, &j)| i == j))
    }

    /// Flattened form used for lexicographic tie-breaking.
    pub fn key(&self) -> Vec<usize> {
        self.schema.iter().chain(self.params.iter().flatten()).copied().collect()
    }

    /// Image of every (schema, bound) pair as a flat pair index
    /// (schema-major, as in [`Domain::pairs`]).
    pub fn pair_map(&self, domain: &Domain) -> Vec<usize> {
        let mut offsets = vec![0];
        for s in 0..domain.schemas.len() {
            offsets.push(offsets[s] + domain.bound_predicates(s).len());
        }
        let mut out = Vec::with_capacity(domain.num_pairs());
        for (s, b) in domain.pairs() {
            let bp = &domain.bound_predicates(s)[b];
            let to = self.schema[s];
            let moved = BoundPredicate {
                predicate: bp.predicate,
                binding: ParamBinding(bp.binding.0.iter().map(|&i| self.params[s][i]).collect()),
            };
            let nb = domain.bound_id(to, &moved).expect("renaming preserves bound predicates");
            out.push(offsets[to] + nb);
        }
        out
    }

    /// Image of every grounded action.
    pub fn action_map(&self, idx: &GroundIndex) -> Vec<usize> {
        idx.actions()
            .iter()
            .map(|ga| {
                let mut args = vec![0; ga.args.len()];
                for (i, &o) in ga.args.iter().enumerate() {
                    args[self.params[ga.schema][i]] = o;
                }
                idx.action_id_of(self.schema[ga.schema], &args).expect("renaming preserves actions")
            })
            .collect()
    }

    pub fn apply_model(&self, domain: &Domain, model: &ActionModel) -> ActionModel {
        let map = self.pair_map(domain);
        let pairs: Vec<(usize, usize)> = domain.pairs().collect();
        let mut out = ActionModel::empty(domain);
        for (k, &(s, b)) in pairs.iter().enumerate() {
            let (ts, tb) = pairs[map[k]];
            out.set(ts, tb, model.flags(s, b));
        }
        out
    }

    /// Moves per-pair values: `out[map[k]] = values[k]`.
    pub fn apply_pairs<T: Clone>(&self, map: &[usize], values: &[T]) -> Vec<T> {
        let mut out = values.to_vec();
        for (k, v) in values.iter().enumerate() {
            out[map[k]] = v.clone();
        }
        out
    }
}

fn signature_groups(domain: &Domain) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, s) in domain.schemas.iter().enumerate() {
        match groups.iter_mut().find(|g| domain.schemas[g[0]].params == s.params) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Type-preserving permutations of one schema's parameters, in lexicographic order.
fn param_perms(domain: &Domain, schema: usize) -> Vec<Vec<usize>> {
    let ps = &domain.schemas[schema].params;
    (0..ps.len())
        .permutations(ps.len())
        .filter(|p| p.iter().enumerate().all(|(i, &j)| ps[i] == ps[j]))
        .collect()
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Number of valid permutations.
pub fn count_permutations(domain: &Domain) -> u128 {
    let names: u128 = signature_groups(domain).iter().map(|g| factorial(g.len())).product();
    let params: u128 = (0..domain.schemas.len())
        .map(|s| {
            let ps = &domain.schemas[s].params;
            ps.iter().counts().values().map(|&c| factorial(c)).product::<u128>()
        })
        .product();
    names.saturating_mul(params)
}

/// All valid permutations in lexicographic order of [`Permutation::key`],
/// or `None` when there are more than `cap`.
pub fn enumerate_permutations(domain: &Domain, cap: u128) -> Option<Vec<Permutation>> {
    if count_permutations(domain) > cap {
        return None;
    }
    let n = domain.schemas.len();
    let groups = signature_groups(domain);
    // renamings of each group, combined so that the flattened schema vector
    // comes out in lexicographic order
    let mut renamings: Vec<Vec<usize>> = Vec::new();
    let per_group: Vec<Vec<Vec<usize>>> =
        groups.iter().map(|g| g.iter().copied().permutations(g.len()).collect()).collect();
    for choice in per_group.iter().multi_cartesian_product() {
        let mut sigma = vec![0; n];
        for (g, img) in groups.iter().zip(choice) {
            for (&from, &to) in g.iter().zip(img) {
                sigma[from] = to;
            }
        }
        renamings.push(sigma);
    }
    renamings.sort();
    let per_schema: Vec<Vec<Vec<usize>>> = (0..n).map(|s| param_perms(domain, s)).collect();
    let mut out = Vec::new();
    for sigma in renamings {
        for params in per_schema.iter().multi_cartesian_product() {
            out.push(Permutation { schema: sigma.clone(), params: params.into_iter().cloned().collect() });
        }
    }
    Some(out)
}
