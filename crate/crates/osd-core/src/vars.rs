//! Variable interning.
//!
//! Every variable is an index into a [`VarTable`]. Equality of variables is
//! integer equality, and the table remembers whether a variable came from the
//! input problem or was invented by a solver. Fresh variables get names with
//! a leading underscore, which the problem-file grammar does not allow for
//! user identifiers, so the two namespaces cannot collide.

use std::collections::HashMap;
use std::fmt;

/// An interned variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Registry of variables for one problem.
///
/// Ids are handed out in interning order, so a lower id always means an
/// older variable. Solvers use this to orient variable-variable equations
/// deterministically.
#[derive(Debug, Clone, Default)]
pub struct VarTable {
    names: Vec<String>,
    fresh: Vec<bool>,
    by_name: HashMap<String, VarId>,
    fresh_counter: u32,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns a user-supplied identifier, returning the existing id if the
    /// name was seen before.
    pub fn intern(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = VarId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.fresh.push(false);
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// Creates a fresh solver-invented variable with a reserved `_n` name.
    pub fn fresh(&mut self) -> VarId {
        let name = format!("_{}", self.fresh_counter);
        self.fresh_counter += 1;
        let id = VarId(self.names.len() as u32);
        self.names.push(name.clone());
        self.fresh.push(true);
        self.by_name.insert(name, id);
        id
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn is_fresh(&self, v: VarId) -> bool {
        self.fresh[v.index()]
    }

    pub fn is_original(&self, v: VarId) -> bool {
        !self.fresh[v.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// All ids in interning order.
    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.names.len() as u32).map(VarId)
    }
}
