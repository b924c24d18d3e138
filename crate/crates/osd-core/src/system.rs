//! Standard-form equation systems.
//!
//! Every equation has a variable on the left and a right side of depth at
//! most one: another variable, a sum of two variables, or a product of two
//! variables. [`decompose`] flattens arbitrary term equations into this
//! shape, naming each non-variable subterm once.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::term::{Term, TermNode};
use crate::vars::{VarId, VarTable};

/// Right side of a standard-form equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rhs {
    Var(VarId),
    Sum(VarId, VarId),
    Prod(VarId, VarId),
}

impl Rhs {
    pub fn vars(self) -> Vec<VarId> {
        match self {
            Rhs::Var(v) => vec![v],
            Rhs::Sum(a, b) | Rhs::Prod(a, b) => vec![a, b],
        }
    }

    pub fn map(self, f: impl Fn(VarId) -> VarId) -> Rhs {
        match self {
            Rhs::Var(v) => Rhs::Var(f(v)),
            Rhs::Sum(a, b) => Rhs::Sum(f(a), f(b)),
            Rhs::Prod(a, b) => Rhs::Prod(f(a), f(b)),
        }
    }

    pub fn term(self) -> Term {
        match self {
            Rhs::Var(v) => Term::var(v),
            Rhs::Sum(a, b) => Term::plus(Term::var(a), Term::var(b)),
            Rhs::Prod(a, b) => Term::times(Term::var(a), Term::var(b)),
        }
    }
}

/// One standard-form equation `lhs = rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equation {
    pub lhs: VarId,
    pub rhs: Rhs,
}

/// A standard-form system together with its variable registry.
#[derive(Debug, Clone, Default)]
pub struct StandardSystem {
    pub vars: VarTable,
    pub eqs: Vec<Equation>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormError {
    #[error("equation {0}: left side equals right side variable")]
    TrivialVarEquation(usize),
    #[error("equation {0}: variable not in registry")]
    UnknownVariable(usize),
}

impl StandardSystem {
    pub fn new(vars: VarTable) -> Self {
        StandardSystem { vars, eqs: Vec::new() }
    }

    pub fn push(&mut self, lhs: VarId, rhs: Rhs) {
        self.eqs.push(Equation { lhs, rhs });
    }

    /// The label variables: everything occurring as the left factor of a
    /// product.
    pub fn label_vars(&self) -> BTreeSet<VarId> {
        self.eqs
            .iter()
            .filter_map(|eq| match eq.rhs {
                Rhs::Prod(l, _) => Some(l),
                _ => None,
            })
            .collect()
    }

    /// All variables mentioned by some equation.
    pub fn used_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for eq in &self.eqs {
            out.insert(eq.lhs);
            out.extend(eq.rhs.vars());
        }
        out
    }

    /// Checks the standard-form invariants.
    pub fn validate(&self) -> Result<(), FormError> {
        let n = self.vars.len() as u32;
        for (i, eq) in self.eqs.iter().enumerate() {
            if eq.lhs.0 >= n || eq.rhs.vars().iter().any(|v| v.0 >= n) {
                return Err(FormError::UnknownVariable(i));
            }
            if let Rhs::Var(v) = eq.rhs {
                if v == eq.lhs {
                    return Err(FormError::TrivialVarEquation(i));
                }
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for eq in &self.eqs {
            out.push_str(&format!("{}\n", display_eq(eq, &self.vars)));
        }
        out
    }
}

pub fn display_eq(eq: &Equation, vars: &VarTable) -> String {
    let lhs = vars.name(eq.lhs);
    match eq.rhs {
        Rhs::Var(v) => format!("{} = {}", lhs, vars.name(v)),
        Rhs::Sum(a, b) => format!("{} = {} + {}", lhs, vars.name(a), vars.name(b)),
        Rhs::Prod(a, b) => format!("{} = {} * {}", lhs, vars.name(a), vars.name(b)),
    }
}

impl fmt::Display for StandardSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Flattens term equations into an equisatisfiable standard-form system.
///
/// Each non-variable subterm is named by exactly one variable; structurally
/// identical subterms share their name. When the left side of an input
/// equation is a variable and the right side is compound, the variable names
/// the right side directly instead of going through a fresh name.
pub fn decompose(problem: &[(Term, Term)], vars: VarTable) -> StandardSystem {
    let mut sys = StandardSystem::new(vars);
    let mut names: HashMap<Term, VarId> = HashMap::new();

    fn name_of(
        t: &Term,
        sys: &mut StandardSystem,
        names: &mut HashMap<Term, VarId>,
    ) -> VarId {
        if let Some(v) = t.as_var() {
            return v;
        }
        if let Some(&v) = names.get(t) {
            return v;
        }
        let (op_rhs, l, r) = match t.node() {
            TermNode::App(op, l, r) => (*op, l, r),
            TermNode::Var(_) => unreachable!(),
        };
        let lv = name_of(l, sys, names);
        let rv = name_of(r, sys, names);
        let fresh = sys.vars.fresh();
        names.insert(t.clone(), fresh);
        let rhs = match op_rhs {
            crate::term::Op::Plus => Rhs::Sum(lv, rv),
            crate::term::Op::Times => Rhs::Prod(lv, rv),
        };
        sys.push(fresh, rhs);
        fresh
    }

    for (s, t) in problem {
        match (s.as_var(), t.as_var()) {
            (Some(x), Some(y)) => {
                if x != y {
                    sys.push(x, Rhs::Var(y));
                }
            }
            (Some(x), None) | (None, Some(x)) => {
                let compound = if s.as_var().is_some() { t } else { s };
                // Name the compound's children, then define x by its top.
                let (op, l, r) = match compound.node() {
                    TermNode::App(op, l, r) => (*op, l, r),
                    TermNode::Var(_) => unreachable!(),
                };
                let lv = name_of(l, &mut sys, &mut names);
                let rv = name_of(r, &mut sys, &mut names);
                let rhs = match op {
                    crate::term::Op::Plus => Rhs::Sum(lv, rv),
                    crate::term::Op::Times => Rhs::Prod(lv, rv),
                };
                sys.push(x, rhs);
            }
            (None, None) => {
                let a = name_of(s, &mut sys, &mut names);
                let b = name_of(t, &mut sys, &mut names);
                if a != b {
                    sys.push(a, Rhs::Var(b));
                }
            }
        }
    }
    sys
}

/// Whether the equations can be listed with pairwise distinct left
/// variables such that no left variable occurs in any later right side.
///
/// Equivalently: left sides are distinct and the graph from each left
/// variable to the variables of its right side is acyclic.
pub fn is_dag_solved(sys: &StandardSystem) -> bool {
    let mut lhs_seen = BTreeSet::new();
    for eq in &sys.eqs {
        if !lhs_seen.insert(eq.lhs) {
            return false;
        }
        if let Rhs::Var(v) = eq.rhs {
            if v == eq.lhs {
                return false;
            }
        }
    }
    let edges: Vec<(VarId, VarId)> = sys
        .eqs
        .iter()
        .flat_map(|eq| eq.rhs.vars().into_iter().map(move |v| (eq.lhs, v)))
        .collect();
    !crate::graph::has_cycle(sys.vars.len(), edges.iter().map(|&(a, b)| (a.index(), b.index())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subst::{extract_unifier, verify_unifier, Substitution, DEFAULT_CAP};
    use crate::term::Term;

    fn sys(defs: &[(&str, &str)]) -> StandardSystem {
        // "X" = lhs, rhs like "Y+Z", "Y*Z", "Y"
        let mut sys = StandardSystem::new(VarTable::new());
        for (l, r) in defs {
            let lhs = sys.vars.intern(l);
            let rhs = if let Some((a, b)) = r.split_once('+') {
                Rhs::Sum(sys.vars.intern(a.trim()), sys.vars.intern(b.trim()))
            } else if let Some((a, b)) = r.split_once('*') {
                Rhs::Prod(sys.vars.intern(a.trim()), sys.vars.intern(b.trim()))
            } else {
                Rhs::Var(sys.vars.intern(r.trim()))
            };
            sys.push(lhs, rhs);
        }
        sys
    }

    #[test]
    fn decompose_flattens_nested_product() {
        let mut vars = VarTable::new();
        let a = vars.intern("A");
        let b = vars.intern("b");
        let c = vars.intern("c");
        let d = vars.intern("d");
        let problem = vec![(
            Term::var(a),
            Term::times(Term::var(b), Term::plus(Term::var(c), Term::var(d))),
        )];
        let sys = decompose(&problem, vars);
        assert_eq!(sys.eqs.len(), 2);
        // A = b * E, E = c + d with E fresh
        let fresh = match sys.eqs.iter().find(|e| e.lhs == a).unwrap().rhs {
            Rhs::Prod(l, r) => {
                assert_eq!(l, b);
                r
            }
            _ => panic!("expected product"),
        };
        assert!(sys.vars.is_fresh(fresh));
        assert!(sys
            .eqs
            .iter()
            .any(|e| e.lhs == fresh && e.rhs == Rhs::Sum(c, d)));
        sys.validate().unwrap();
    }

    #[test]
    fn decompose_keeps_var_equations() {
        let mut vars = VarTable::new();
        let x = vars.intern("X");
        let y = vars.intern("Y");
        let sys = decompose(&[(Term::var(x), Term::var(y))], vars);
        assert_eq!(sys.eqs, vec![Equation { lhs: x, rhs: Rhs::Var(y) }]);
    }

    #[test]
    fn decompose_round_trip_under_a_sampled_unifier() {
        // {A = (b*c)+(b*d)}: a unifier of the decomposition restricted to the
        // input variables must solve the input, and conversely.
        let mut vars = VarTable::new();
        let a = vars.intern("A");
        let b = vars.intern("b");
        let c = vars.intern("c");
        let d = vars.intern("d");
        let input = Term::plus(
            Term::times(Term::var(b), Term::var(c)),
            Term::times(Term::var(b), Term::var(d)),
        );
        let problem = vec![(Term::var(a), input.clone())];
        let sys = decompose(&problem, vars);
        sys.validate().unwrap();

        // The decomposition itself is dag-solved here; extract its mgu and
        // check it against the original equation.
        assert!(is_dag_solved(&sys));
        let subst = extract_unifier(&sys, DEFAULT_CAP).unwrap();
        let lhs = subst.apply(&Term::var(a));
        let rhs = subst.apply(&input);
        assert!(crate::term::e_equal(&lhs, &rhs));

        // And a unifier of the input extends to one of the decomposition by
        // giving each fresh name the subterm it stands for.
        let mut direct = Substitution::new();
        direct.bind(a, input.clone());
        let bc = Term::times(Term::var(b), Term::var(c));
        let bd = Term::times(Term::var(b), Term::var(d));
        for eq in &sys.eqs {
            match eq.rhs {
                Rhs::Prod(l, r) if l == b && r == c => direct.bind(eq.lhs, bc.clone()),
                Rhs::Prod(l, r) if l == b && r == d => direct.bind(eq.lhs, bd.clone()),
                _ => {}
            }
        }
        assert!(verify_unifier(&sys, &direct, DEFAULT_CAP).is_ok());
    }

    #[test]
    fn dag_solved_examples() {
        let s = sys(&[("X", "Y+Z")]);
        assert!(is_dag_solved(&s));

        let s = sys(&[("X", "Y+Z"), ("X", "W+V")]);
        assert!(!is_dag_solved(&s));

        let s = sys(&[("X", "Y+Z"), ("Y", "X*W")]);
        assert!(!is_dag_solved(&s));
    }
}
