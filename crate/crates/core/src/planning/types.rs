use std::collections::HashMap;

use crate::error::{Error, Result};

pub type TypeId = usize;

/// Type hierarchy rooted at `object`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeTree {
    names: Vec<String>,
    parent: Vec<Option<TypeId>>,
    ids: HashMap<String, TypeId>,
}

impl TypeTree {
    pub const ROOT: &'static str = "object";

    pub fn new() -> Self {
        let mut ids = HashMap::new();
        ids.insert(Self::ROOT.to_string(), 0);
        TypeTree {
            names: vec![Self::ROOT.to_string()],
            parent: vec![None],
            ids,
        }
    }

    /// Builds a tree from `(name, parent)` declarations in any order. Parents
    /// that are never declared themselves hang off the root.
    pub fn from_declarations(decls: &[(String, Option<String>)]) -> Result<Self> {
        let mut tree = TypeTree::new();
        let mut wanted: Vec<(TypeId, Option<String>)> = Vec::new();
        for (name, parent) in decls {
            let id = tree.intern(name);
            if name == Self::ROOT {
                if parent.is_some() {
                    return Err(Error::TypeHierarchy("`object` cannot have a parent".into()));
                }
                continue;
            }
            if let Some((_, prev)) = wanted.iter().find(|(i, _)| *i == id) {
                if prev != parent {
                    return Err(Error::TypeHierarchy(format!(
                        "type `{name}` declared with two parents"
                    )));
                }
                continue;
            }
            wanted.push((id, parent.clone()));
        }
        for (id, parent) in wanted {
            let p = parent.as_deref().unwrap_or(Self::ROOT);
            let pid = tree.intern(p);
            tree.parent[id] = Some(pid);
        }
        // undeclared parents default to the root
        for id in 1..tree.names.len() {
            if tree.parent[id].is_none() {
                tree.parent[id] = Some(0);
            }
        }
        for id in 0..tree.names.len() {
            let mut seen = 0;
            let mut cur = tree.parent[id];
            while let Some(p) = cur {
                seen += 1;
                if p == id || seen > tree.names.len() {
                    return Err(Error::TypeHierarchy(format!(
                        "cycle through type `{}`",
                        tree.names[id]
                    )));
                }
                cur = tree.parent[p];
            }
        }
        Ok(tree)
    }

    fn intern(&mut self, name: &str) -> TypeId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.parent.push(None);
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Result<TypeId> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn name(&self, id: TypeId) -> &str {
        &self.names[id]
    }

    pub fn parent(&self, id: TypeId) -> Option<TypeId> {
        self.parent[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_leaf(&self, id: TypeId) -> bool {
        !self.parent.contains(&Some(id))
    }

    /// True iff `ancestor` is `t` or lies on the parent chain of `t`.
    pub fn subsumes(&self, ancestor: TypeId, t: TypeId) -> bool {
        let mut cur = Some(t);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }

    pub fn subsumes_named(&self, ancestor: &str, t: &str) -> Result<bool> {
        Ok(self.subsumes(self.id(ancestor)?, self.id(t)?))
    }

    /// Declared types other than the root, in declaration order.
    pub fn declared(&self) -> impl Iterator<Item = (TypeId, &str)> {
        self.names.iter().enumerate().skip(1).map(|(i, n)| (i, n.as_str()))
    }
}

impl Default for TypeTree {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistics() -> TypeTree {
        let d = |n: &str, p: &str| (n.to_string(), Some(p.to_string()));
        TypeTree::from_declarations(&[
            d("movable", "object"),
            d("location", "object"),
            d("city", "object"),
            d("obj", "movable"),
            d("transport", "movable"),
            d("truck", "transport"),
            d("airplane", "transport"),
            d("airport", "location"),
        ])
        .unwrap()
    }

    #[test]
    fn subsumption_in_logistics() {
        let t = logistics();
        assert!(t.subsumes_named("object", "truck").unwrap());
        assert!(t.subsumes_named("transport", "airplane").unwrap());
        assert!(t.subsumes_named("truck", "truck").unwrap());
        assert!(!t.subsumes_named("truck", "airplane").unwrap());
        assert!(!t.subsumes_named("truck", "transport").unwrap());
        assert!(matches!(
            t.subsumes_named("ship", "truck"),
            Err(Error::UnknownType(_))
        ));
    }

    #[test]
    fn leaves() {
        let t = logistics();
        assert!(t.is_leaf(t.id("truck").unwrap()));
        assert!(!t.is_leaf(t.id("location").unwrap()));
    }

    #[test]
    fn rejects_cycles_and_conflicts() {
        let d = |n: &str, p: &str| (n.to_string(), Some(p.to_string()));
        assert!(TypeTree::from_declarations(&[d("a", "b"), d("b", "a")]).is_err());
        assert!(TypeTree::from_declarations(&[d("a", "object"), d("a", "b")]).is_err());
    }
}
