//! Terms over the signature `{+, ×}` and variables, and the rewrite
//! `X × (Y + Z) → X×Y + X×Z`.
//!
//! The theory is elementary: terms contain no constants and no uninterpreted
//! function symbols, which the [`Term`] type enforces by construction.
//! Subterms are shared through `Rc`, so distributing a factor over a sum
//! duplicates a pointer, not a tree.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::vars::{VarId, VarTable};

/// The two binary operators of the theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Plus,
    Times,
}

impl Op {
    pub fn symbol(self) -> char {
        match self {
            Op::Plus => '+',
            Op::Times => '*',
        }
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum TermNode {
    Var(VarId),
    App(Op, Term, Term),
}

/// A term: a variable or a strictly binary application node. Equality is
/// structural; shared nodes compare by pointer first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term(Rc<TermNode>);

impl Term {
    pub fn var(v: VarId) -> Term {
        Term(Rc::new(TermNode::Var(v)))
    }

    pub fn plus(l: Term, r: Term) -> Term {
        Term(Rc::new(TermNode::App(Op::Plus, l, r)))
    }

    pub fn times(l: Term, r: Term) -> Term {
        Term(Rc::new(TermNode::App(Op::Times, l, r)))
    }

    pub fn app(op: Op, l: Term, r: Term) -> Term {
        Term(Rc::new(TermNode::App(op, l, r)))
    }

    pub fn node(&self) -> &TermNode {
        &self.0
    }

    pub(crate) fn node_rc(&self) -> &Rc<TermNode> {
        &self.0
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self.node() {
            TermNode::Var(v) => Some(*v),
            TermNode::App(..) => None,
        }
    }

    /// Number of nodes in the term tree. Shared subtrees are counted once
    /// per occurrence but visited once, so this stays cheap on dag-shaped
    /// terms.
    pub fn size(&self) -> u64 {
        fn go(t: &Term, memo: &mut HashMap<*const TermNode, u64>) -> u64 {
            let key = Rc::as_ptr(&t.0);
            if let Some(&n) = memo.get(&key) {
                return n;
            }
            let n = match t.node() {
                TermNode::Var(_) => 1,
                TermNode::App(_, l, r) => {
                    1u64.saturating_add(go(l, memo)).saturating_add(go(r, memo))
                }
            };
            memo.insert(key, n);
            n
        }
        go(self, &mut HashMap::new())
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        fn go(t: &Term, seen: &mut std::collections::BTreeSet<VarId>, out: &mut Vec<VarId>) {
            match t.node() {
                TermNode::Var(v) => {
                    if seen.insert(*v) {
                        out.push(*v);
                    }
                }
                TermNode::App(_, l, r) => {
                    go(l, seen, out);
                    go(r, seen, out);
                }
            }
        }
        go(self, &mut seen, &mut out);
        out
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        match self.node() {
            TermNode::Var(w) => *w == v,
            TermNode::App(_, l, r) => l.contains_var(v) || r.contains_var(v),
        }
    }

    /// Fully parenthesized rendering, e.g. `((a * b) + c)`.
    pub fn display<'a>(&'a self, vars: &'a VarTable) -> TermDisplay<'a> {
        TermDisplay { term: self, vars }
    }
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    vars: &'a VarTable,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.term.node() {
            TermNode::Var(v) => write!(f, "{}", self.vars.name(*v)),
            TermNode::App(op, l, r) => write!(
                f,
                "({} {} {})",
                l.display(self.vars),
                op.symbol(),
                r.display(self.vars)
            ),
        }
    }
}

/// Whether `t` contains no redex, i.e. no subterm of shape `X × (Y + Z)`.
pub fn is_normal(t: &Term) -> bool {
    match t.node() {
        TermNode::Var(_) => true,
        TermNode::App(op, l, r) => {
            if *op == Op::Times {
                if let TermNode::App(Op::Plus, _, _) = r.node() {
                    return false;
                }
            }
            is_normal(l) && is_normal(r)
        }
    }
}

/// The unique normal form of `t` under exhaustive application of
/// `X × (Y + Z) → X×Y + X×Z`.
///
/// The rule is applied outermost-first while sharing the duplicated factor,
/// so each node of the result is built exactly once.
pub fn normalize(t: &Term) -> Term {
    match t.node() {
        TermNode::Var(_) => t.clone(),
        TermNode::App(Op::Plus, l, r) => Term::plus(normalize(l), normalize(r)),
        TermNode::App(Op::Times, l, r) => {
            let ln = normalize(l);
            let rn = normalize(r);
            distribute(&ln, &rn)
        }
    }
}

// `x × rn` where both arguments are normal: push x below every `+` of rn.
fn distribute(x: &Term, rn: &Term) -> Term {
    match rn.node() {
        TermNode::App(Op::Plus, a, b) => Term::plus(distribute(x, a), distribute(x, b)),
        _ => Term::times(x.clone(), rn.clone()),
    }
}

/// Equality modulo the theory: both sides normalize to the same term.
pub fn e_equal(t1: &Term, t2: &Term) -> bool {
    if t1 == t2 {
        return true;
    }
    normalize(t1) == normalize(t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn table() -> (VarTable, Vec<Term>) {
        let mut t = VarTable::new();
        let vars = ["a", "b", "c", "d", "x", "y"]
            .iter()
            .map(|n| Term::var(t.intern(n)))
            .collect();
        (t, vars)
    }

    #[test]
    fn normalize_distributes_once() {
        let (_, v) = table();
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        let t = Term::times(a.clone(), Term::plus(b.clone(), c.clone()));
        let expect = Term::plus(
            Term::times(a.clone(), b.clone()),
            Term::times(a.clone(), c.clone()),
        );
        assert_eq!(normalize(&t), expect);
    }

    #[test]
    fn normalize_on_variable_is_identity() {
        let (_, v) = table();
        assert_eq!(normalize(&v[4]), v[4]);
    }

    #[test]
    fn normalize_nested_sum_matches_positionwise_oracle() {
        let (_, v) = table();
        let (a, b, c, d) = (&v[0], &v[1], &v[2], &v[3]);
        // a*(b+(c+d)) -> (a*b)+((a*c)+(a*d))
        let t = Term::times(
            a.clone(),
            Term::plus(b.clone(), Term::plus(c.clone(), d.clone())),
        );
        let expect = Term::plus(
            Term::times(a.clone(), b.clone()),
            Term::plus(
                Term::times(a.clone(), c.clone()),
                Term::times(a.clone(), d.clone()),
            ),
        );
        let got = normalize(&t);
        assert_eq!(got, expect);
        assert_eq!(got, oracle::rewrite_to_fixpoint(&t));
    }

    #[test]
    fn e_equal_examples() {
        let (_, v) = table();
        let (a, b, c, d, x, y) = (&v[0], &v[1], &v[2], &v[3], &v[4], &v[5]);
        let lhs = Term::times(a.clone(), Term::plus(b.clone(), c.clone()));
        let rhs = Term::plus(
            Term::times(a.clone(), b.clone()),
            Term::times(a.clone(), c.clone()),
        );
        assert!(e_equal(&lhs, &rhs));
        assert!(!e_equal(x, y));

        // a*((b+c)+d) vs ((a*b)+(a*c))+(a*d), checked against the oracle too
        let t1 = Term::times(
            a.clone(),
            Term::plus(Term::plus(b.clone(), c.clone()), d.clone()),
        );
        let t2 = Term::plus(
            Term::plus(
                Term::times(a.clone(), b.clone()),
                Term::times(a.clone(), c.clone()),
            ),
            Term::times(a.clone(), d.clone()),
        );
        assert!(e_equal(&t1, &t2));
        assert_eq!(oracle::rewrite_to_fixpoint(&t1), normalize(&t2));
    }

    fn arb_term(depth: u32) -> BoxedStrategy<Term> {
        let leaf = (0u32..6).prop_map(|i| Term::var(VarId(i)));
        leaf.prop_recursive(depth, 64, 2, |inner| {
            (any::<bool>(), inner.clone(), inner).prop_map(|(plus, l, r)| {
                if plus {
                    Term::plus(l, r)
                } else {
                    Term::times(l, r)
                }
            })
        })
        .boxed()
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(t in arb_term(6)) {
            let n = normalize(&t);
            prop_assert_eq!(normalize(&n), n);
        }

        #[test]
        fn normalize_output_has_no_redex(t in arb_term(6)) {
            prop_assert!(is_normal(&normalize(&t)));
        }

        #[test]
        fn normalize_preserves_e_class(t in arb_term(6)) {
            prop_assert!(e_equal(&t, &normalize(&t)));
        }

        #[test]
        fn normalize_agrees_with_rewriting_oracle(t in arb_term(5)) {
            prop_assert_eq!(normalize(&t), oracle::rewrite_to_fixpoint(&t));
        }
    }
}
