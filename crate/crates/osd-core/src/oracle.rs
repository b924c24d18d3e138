//! Independent reference implementations used by the test suites.
//!
//! Everything in here is deliberately naive: single-step positionwise
//! rewriting, exhaustive term enumeration, depth-bounded search for
//! asymmetric unifiers. None of it shares code with the solvers it checks.

use std::collections::BTreeMap;

use crate::asym::{AsymEquation, Side};
use crate::term::{is_normal, Op, Term, TermNode};
use crate::vars::VarId;

/// Applies `X × (Y + Z) → X×Y + X×Z` at the leftmost-outermost redex, or
/// returns `None` if `t` is already normal.
pub fn rewrite_step(t: &Term) -> Option<Term> {
    if let TermNode::App(Op::Times, x, r) = t.node() {
        if let TermNode::App(Op::Plus, y, z) = r.node() {
            return Some(Term::plus(
                Term::times(x.clone(), y.clone()),
                Term::times(x.clone(), z.clone()),
            ));
        }
    }
    match t.node() {
        TermNode::Var(_) => None,
        TermNode::App(op, l, r) => {
            if let Some(l2) = rewrite_step(l) {
                return Some(Term::app(*op, l2, r.clone()));
            }
            rewrite_step(r).map(|r2| Term::app(*op, l.clone(), r2))
        }
    }
}

/// Rewrites one position at a time until no redex remains.
pub fn rewrite_to_fixpoint(t: &Term) -> Term {
    let mut cur = t.clone();
    while let Some(next) = rewrite_step(&cur) {
        cur = next;
    }
    cur
}

/// All terms of depth at most `depth` over the given base variables.
/// Depth 0 terms are the variables themselves.
pub fn enumerate_terms(base: &[VarId], depth: u32) -> Vec<Term> {
    let mut layers: Vec<Vec<Term>> = vec![base.iter().map(|&v| Term::var(v)).collect()];
    for _ in 0..depth {
        let prev: Vec<Term> = layers.iter().flatten().cloned().collect();
        let mut next = Vec::new();
        for l in &prev {
            for r in &prev {
                next.push(Term::plus(l.clone(), r.clone()));
                next.push(Term::times(l.clone(), r.clone()));
            }
        }
        layers.push(next);
    }
    let mut all: Vec<Term> = layers.into_iter().flatten().collect();
    // Drop duplicates introduced by the layered construction.
    let mut seen = std::collections::HashSet::new();
    all.retain(|t| seen.insert(t.clone()));
    all
}

/// Whether `subst` is an asymmetric unifier of `eqs`: it unifies every
/// equation modulo the theory and instantiating the (already normal) right
/// side yields an irreducible term.
pub fn is_asym_unifier(eqs: &[AsymEquation], subst: &BTreeMap<VarId, Term>) -> bool {
    let apply = |side: &Side| -> Term {
        let var_term = |v: VarId| subst.get(&v).cloned().unwrap_or_else(|| Term::var(v));
        match side {
            Side::Var(v) => var_term(*v),
            Side::Sum(a, b) => Term::plus(var_term(*a), var_term(*b)),
            Side::Prod(a, b) => Term::times(var_term(*a), var_term(*b)),
        }
    };
    eqs.iter().all(|eq| {
        let l = apply(&eq.left);
        let r = apply(&eq.right);
        crate::term::e_equal(&l, &r) && is_normal(&r)
    })
}

/// Exhaustive search for asymmetric unifiers of a small system.
///
/// Assigns every variable of `eqs` a term from `universe`, pruning equation
/// by equation, and returns the set of solutions restricted to
/// `report_vars`. Exponential; callers keep systems tiny.
pub fn asym_unifiers_bounded(
    eqs: &[AsymEquation],
    universe: &[Term],
    report_vars: &[VarId],
) -> std::collections::HashSet<Vec<(VarId, Term)>> {
    let mut vars: Vec<VarId> = Vec::new();
    for eq in eqs {
        for v in eq.left.vars().into_iter().chain(eq.right.vars()) {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let mut results = std::collections::HashSet::new();
    let mut binding: BTreeMap<VarId, Term> = BTreeMap::new();
    search(eqs, universe, &vars, 0, &mut binding, &mut results, report_vars);
    results
}

fn search(
    eqs: &[AsymEquation],
    universe: &[Term],
    vars: &[VarId],
    i: usize,
    binding: &mut BTreeMap<VarId, Term>,
    results: &mut std::collections::HashSet<Vec<(VarId, Term)>>,
    report_vars: &[VarId],
) {
    // Equations become checkable as soon as all their variables are bound;
    // checking early prunes most of the space.
    let ready = |eq: &AsymEquation, binding: &BTreeMap<VarId, Term>| {
        eq.left
            .vars()
            .into_iter()
            .chain(eq.right.vars())
            .all(|v| binding.contains_key(&v))
    };
    let ok = eqs
        .iter()
        .filter(|eq| ready(eq, binding))
        .all(|eq| is_asym_unifier(std::slice::from_ref(eq), binding));
    if !ok {
        return;
    }
    if i == vars.len() {
        let key: Vec<(VarId, Term)> = report_vars
            .iter()
            .map(|v| (*v, binding.get(v).cloned().unwrap_or_else(|| Term::var(*v))))
            .collect();
        results.insert(key);
        return;
    }
    let v = vars[i];
    for cand in universe {
        binding.insert(v, cand.clone());
        search(eqs, universe, vars, i + 1, binding, results, report_vars);
    }
    binding.remove(&v);
}

/// The four premise shapes that the asymmetric failure rules reject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailurePremise {
    /// `U =↓ V×W, U =↓ X+Y`
    ProductAndSumBothConstrained,
    /// `U =↓ V×W, W =↓ X+Y`
    SumUnderConstrainedFactor,
    /// `U =↓ V×W, X+Y =↓ U`
    SumIntoConstrainedProduct,
    /// `U =↓ V×W, X+Y =↓ W`
    SumIntoConstrainedFactor,
}

/// All terms of depth at most 3 over three base variables, the search
/// space quoted by the failure-rule soundness checks.
pub fn depth3_universe() -> Vec<Term> {
    let mut vars = crate::vars::VarTable::new();
    let base: Vec<VarId> = ["x", "y", "z"].iter().map(|n| vars.intern(n)).collect();
    enumerate_terms(&base, 3)
}

/// Searches the space of substitutions with bindings drawn from `universe`
/// (see [`depth3_universe`]) for an asymmetric unifier of the given failure
/// premise. Returns `true` if any candidate survives.
///
/// The sweep enumerates the binding of the variable shared by the two
/// equations and filters it through conditions that are *necessary* for any
/// in-space solution, so a `false` answer covers the whole space:
///
/// - an equation `A =↓ s×t` forces `normalize(σA)` to be ×-rooted (the
///   instantiated right side is irreducible and equal to `σA` modulo the
///   theory, and two irreducible equal terms coincide);
/// - an equation `A =↓ s+t` forces `normalize(σA)` to be +-rooted;
/// - an equation `s+t =↓ A` forces `σA` to be normal and +-rooted
///   (normalizing a sum keeps `+` at the root);
/// - a product `s×t` that must stay irreducible forces `σt` to be normal
///   and not +-rooted.
pub fn failure_premise_has_depth3_unifier(which: FailurePremise, universe: &[Term]) -> bool {
    let plus_rooted = |t: &Term| matches!(t.node(), TermNode::App(Op::Plus, _, _));
    let times_rooted = |t: &Term| matches!(t.node(), TermNode::App(Op::Times, _, _));
    universe.iter().any(|shared| {
        let n = crate::term::normalize(shared);
        match which {
            FailurePremise::ProductAndSumBothConstrained => {
                // shared = U
                times_rooted(&n) && plus_rooted(&n)
            }
            FailurePremise::SumUnderConstrainedFactor => {
                // shared = W: normal and not +-rooted from the product,
                // +-rooted from the sum equation.
                is_normal(shared) && !plus_rooted(shared) && plus_rooted(&n)
            }
            FailurePremise::SumIntoConstrainedProduct => {
                // shared = U: ×-rooted from eq1, normal +-rooted from eq2.
                times_rooted(&n) && is_normal(shared) && plus_rooted(shared)
            }
            FailurePremise::SumIntoConstrainedFactor => {
                // shared = W: as the right factor it is normal and not
                // +-rooted; as the right side of the sum it is +-rooted.
                is_normal(shared) && !plus_rooted(shared) && plus_rooted(shared)
            }
        }
    })
}
