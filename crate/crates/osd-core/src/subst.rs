//! Substitutions, unifier extraction from dag-solved systems, and unifier
//! verification.
//!
//! Bindings are either plain terms or compressed chains `(π, Y)` standing
//! for `s1×(s2×(…×(sk×Y)…))` where `s1…sk` is the string produced by the
//! program `π`. Verification materializes instantiated equations when they
//! fit under the configured cap and otherwise falls back to a compressed
//! comparison that keeps chains as programs.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::slp::{SlpId, SlpStore};
use crate::system::{Rhs, StandardSystem};
use crate::term::{e_equal, Term, TermNode};
use crate::vars::{VarId, VarTable};

/// Default materialization cap, in term nodes.
pub const DEFAULT_CAP: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub enum Binding {
    Term(Term),
    /// `(π, Y)`: the product chain of π's symbols ending in variable `Y`.
    Chain(SlpId, VarId),
}

/// A finite map from variables to terms, possibly with compressed chains.
#[derive(Debug, Clone, Default)]
pub struct Substitution {
    pub map: BTreeMap<VarId, Binding>,
    pub store: Option<SlpStore>,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("system is not in dag-solved form")]
    NotDagSolved,
    #[error("binding for a variable would exceed the materialization cap of {cap} nodes")]
    TooLarge { cap: u64 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("equation {index} is not unified by the substitution")]
    NotUnified { index: usize },
    #[error("equation {index}: instantiated right side is reducible")]
    RhsReducible { index: usize },
    #[error("equation {index}: not materializable under the cap")]
    NotMaterializable { index: usize },
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, v: VarId, t: Term) {
        self.map.insert(v, Binding::Term(t));
    }

    pub fn bind_chain(&mut self, v: VarId, label: SlpId, tail: VarId) {
        self.map.insert(v, Binding::Chain(label, tail));
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn term_binding(&self, v: VarId) -> Option<&Term> {
        match self.map.get(&v) {
            Some(Binding::Term(t)) => Some(t),
            _ => None,
        }
    }

    /// Applies the substitution once (no iteration) to `t`. All bindings
    /// that `t` touches must be plain terms.
    pub fn apply(&self, t: &Term) -> Term {
        match t.node() {
            TermNode::Var(v) => match self.map.get(v) {
                None => t.clone(),
                Some(Binding::Term(b)) => b.clone(),
                Some(Binding::Chain(..)) => {
                    panic!("apply on a compressed binding; materialize first")
                }
            },
            TermNode::App(op, l, r) => Term::app(*op, self.apply(l), self.apply(r)),
        }
    }

    /// Node count of `apply(t)` without building it.
    pub fn instantiated_size(&self, t: &Term) -> BigUint {
        match t.node() {
            TermNode::Var(v) => match self.map.get(v) {
                None => BigUint::one(),
                Some(Binding::Term(b)) => BigUint::from(b.size()),
                Some(Binding::Chain(label, _)) => {
                    let store = self.store.as_ref().expect("chain binding without store");
                    // k symbols: k product nodes, k symbol leaves, one tail.
                    BigUint::from(2u32) * store.len(*label) + BigUint::one()
                }
            },
            TermNode::App(_, l, r) => {
                self.instantiated_size(l) + self.instantiated_size(r) + BigUint::one()
            }
        }
    }

    /// Converts every chain binding into its term form, refusing any that
    /// would exceed `cap` nodes.
    pub fn materialize(&mut self, cap: u64) -> Result<(), ExtractError> {
        let Some(store) = &self.store else { return Ok(()) };
        let mut new_bindings = Vec::new();
        for (&v, b) in &self.map {
            if let Binding::Chain(label, tail) = b {
                let symbols = store
                    .expand(*label, cap / 2)
                    .map_err(|_| ExtractError::TooLarge { cap })?;
                new_bindings.push((v, chain_term(&symbols, *tail)));
            }
        }
        for (v, t) in new_bindings {
            self.map.insert(v, Binding::Term(t));
        }
        Ok(())
    }

    /// σ restricted to the given variables.
    pub fn restrict(&self, keep: impl Fn(VarId) -> bool) -> Substitution {
        Substitution {
            map: self.map.iter().filter(|(v, _)| keep(**v)).map(|(v, b)| (*v, b.clone())).collect(),
            store: self.store.clone(),
        }
    }

    /// Whether σσ = σ on all plain-term bindings.
    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|b| match b {
            Binding::Term(t) => self.apply(t) == *t,
            Binding::Chain(..) => true,
        })
    }

    /// One binding per line, `X -> term` or `X -> [slp:Nk] * Y`, followed by
    /// an `SLP:` section when chains are present.
    pub fn render(&self, vars: &VarTable) -> String {
        let mut out = String::new();
        let mut roots = Vec::new();
        for (v, b) in &self.map {
            match b {
                Binding::Term(t) => {
                    out.push_str(&format!("{} -> {}\n", vars.name(*v), t.display(vars)));
                }
                Binding::Chain(label, tail) => {
                    out.push_str(&format!(
                        "{} -> [slp:N{}] * {}\n",
                        vars.name(*v),
                        label.0,
                        vars.name(*tail)
                    ));
                    roots.push(*label);
                }
            }
        }
        if !roots.is_empty() {
            let store = self.store.as_ref().expect("chain binding without store");
            out.push_str("SLP:\n");
            out.push_str(&store.render(&roots, |v| vars.name(v).to_string()));
        }
        out
    }
}

/// `s1×(s2×(…×(sk×tail)…))`.
pub fn chain_term(symbols: &[VarId], tail: VarId) -> Term {
    chain_term_over(symbols, Term::var(tail))
}

fn chain_term_over(symbols: &[VarId], tail: Term) -> Term {
    let mut t = tail;
    for &s in symbols.iter().rev() {
        t = Term::times(Term::var(s), t);
    }
    t
}

#[derive(Debug, Error)]
pub enum ClosureError {
    #[error("bindings form a cycle through a variable")]
    Cyclic(VarId),
    #[error("closing the bindings exceeds the cap of {cap} nodes")]
    TooLarge { cap: u64 },
}

impl Substitution {
    /// Back-substitutes the bindings into each other, turning a dag-solved
    /// form (where a binding may mention later-bound variables) into the
    /// idempotent unifier it denotes. Fails on cyclic bindings or when the
    /// result would exceed `cap` nodes.
    pub fn closed(&self, cap: u64) -> Result<Substitution, ClosureError> {
        #[derive(Clone, Copy, PartialEq)]
        enum State {
            InProgress,
            Done,
        }
        struct Ctx<'a> {
            subst: &'a Substitution,
            memo: HashMap<VarId, Term>,
            state: HashMap<VarId, State>,
            budget: u64,
            cap: u64,
        }
        impl Ctx<'_> {
            fn spend(&mut self, n: u64) -> Result<(), ClosureError> {
                if self.budget < n {
                    return Err(ClosureError::TooLarge { cap: self.cap });
                }
                self.budget -= n;
                Ok(())
            }

            fn resolve(&mut self, v: VarId) -> Result<Term, ClosureError> {
                if let Some(t) = self.memo.get(&v) {
                    return Ok(t.clone());
                }
                match self.state.get(&v) {
                    Some(State::InProgress) => return Err(ClosureError::Cyclic(v)),
                    Some(State::Done) | None => {}
                }
                let Some(binding) = self.subst.map.get(&v) else {
                    return Ok(Term::var(v));
                };
                self.state.insert(v, State::InProgress);
                let t = match binding.clone() {
                    Binding::Term(t) => self.subst_rec(&t)?,
                    Binding::Chain(label, tail) => {
                        let store = self.subst.store.as_ref().expect("chain without store");
                        let symbols = store
                            .expand(label, self.cap / 2)
                            .map_err(|_| ClosureError::TooLarge { cap: self.cap })?;
                        self.spend(2 * symbols.len() as u64)?;
                        // Chain symbols can themselves be bound (a label
                        // variable may have a definition of its own).
                        let mut t = self.resolve(tail)?;
                        for &s in symbols.iter().rev() {
                            let factor = self.resolve(s)?;
                            t = Term::times(factor, t);
                        }
                        t
                    }
                };
                self.state.insert(v, State::Done);
                self.memo.insert(v, t.clone());
                Ok(t)
            }

            fn subst_rec(&mut self, t: &Term) -> Result<Term, ClosureError> {
                self.spend(1)?;
                Ok(match t.node() {
                    TermNode::Var(v) => self.resolve(*v)?,
                    TermNode::App(op, l, r) => {
                        Term::app(*op, self.subst_rec(l)?, self.subst_rec(r)?)
                    }
                })
            }
        }
        let mut ctx = Ctx { subst: self, memo: HashMap::new(), state: HashMap::new(), budget: cap, cap };
        let mut out = Substitution::new();
        for &v in self.map.keys() {
            out.bind(v, ctx.resolve(v)?);
        }
        out.store = self.store.clone();
        debug_assert!(out.is_idempotent());
        Ok(out)
    }
}

/// Back-substitutes a dag-solved system into its unique idempotent most
/// general unifier. Bindings whose expansion would exceed `cap` nodes make
/// the extraction fail.
pub fn extract_unifier(sys: &StandardSystem, cap: u64) -> Result<Substitution, ExtractError> {
    if !crate::system::is_dag_solved(sys) {
        return Err(ExtractError::NotDagSolved);
    }
    // Expanded sizes first, so we never build an over-cap term.
    let mut size: HashMap<VarId, BigUint> = HashMap::new();
    let rhs_of: BTreeMap<VarId, Rhs> = sys.eqs.iter().map(|eq| (eq.lhs, eq.rhs)).collect();
    fn size_of(
        v: VarId,
        rhs_of: &BTreeMap<VarId, Rhs>,
        size: &mut HashMap<VarId, BigUint>,
    ) -> BigUint {
        if let Some(s) = size.get(&v) {
            return s.clone();
        }
        let s = match rhs_of.get(&v) {
            None => BigUint::one(),
            Some(rhs) => rhs
                .vars()
                .into_iter()
                .map(|w| size_of(w, rhs_of, size))
                .sum::<BigUint>()
                + match rhs {
                    Rhs::Var(_) => BigUint::from(0u32),
                    _ => BigUint::one(),
                },
        };
        size.insert(v, s.clone());
        s
    }
    for eq in &sys.eqs {
        if size_of(eq.lhs, &rhs_of, &mut size) > BigUint::from(cap) {
            return Err(ExtractError::TooLarge { cap });
        }
    }

    let mut subst = Substitution::new();
    let mut built: HashMap<VarId, Term> = HashMap::new();
    fn term_of(
        v: VarId,
        rhs_of: &BTreeMap<VarId, Rhs>,
        built: &mut HashMap<VarId, Term>,
    ) -> Term {
        if let Some(t) = built.get(&v) {
            return t.clone();
        }
        let t = match rhs_of.get(&v) {
            None => Term::var(v),
            Some(Rhs::Var(w)) => term_of(*w, rhs_of, built),
            Some(Rhs::Sum(a, b)) => Term::plus(
                term_of(*a, rhs_of, built),
                term_of(*b, rhs_of, built),
            ),
            Some(Rhs::Prod(a, b)) => Term::times(
                term_of(*a, rhs_of, built),
                term_of(*b, rhs_of, built),
            ),
        };
        built.insert(v, t.clone());
        t
    }
    for eq in &sys.eqs {
        let t = term_of(eq.lhs, &rhs_of, &mut built);
        subst.bind(eq.lhs, t);
    }
    debug_assert!(subst.is_idempotent());
    Ok(subst)
}

/// Checks that σ unifies every equation of `sys` modulo the theory.
///
/// Equations whose instantiation fits under `cap` are compared by
/// normalization; larger ones are compared compressed when the substitution
/// carries a program store, and otherwise reported not materializable.
pub fn verify_unifier(
    sys: &StandardSystem,
    subst: &Substitution,
    cap: u64,
) -> Result<(), VerifyError> {
    for (index, eq) in sys.eqs.iter().enumerate() {
        let lhs = Term::var(eq.lhs);
        let rhs = eq.rhs.term();
        let total = subst.instantiated_size(&lhs) + subst.instantiated_size(&rhs);
        let has_chain = |t: &Term| {
            t.vars()
                .iter()
                .any(|v| matches!(subst.map.get(v), Some(Binding::Chain(..))))
        };
        if total <= BigUint::from(cap) && !has_chain(&lhs) && !has_chain(&rhs) {
            if !e_equal(&subst.apply(&lhs), &subst.apply(&rhs)) {
                return Err(VerifyError::NotUnified { index });
            }
        } else {
            let Some(store) = &subst.store else {
                return Err(VerifyError::NotMaterializable { index });
            };
            let mut store = store.clone();
            match cterm_equal(&lhs, &rhs, subst, &mut store, cap) {
                Some(true) => {}
                Some(false) => return Err(VerifyError::NotUnified { index }),
                None => return Err(VerifyError::NotMaterializable { index }),
            }
        }
    }
    Ok(())
}

/// Like [`verify_unifier`], but reads the substitution as a dag-solved form
/// whose bindings may mention later-bound variables: bindings are resolved
/// through each other while product chains stay compressed. Used when the
/// closed form of the substitution does not fit under the cap.
pub fn verify_unifier_as_solved_form(
    sys: &StandardSystem,
    subst: &Substitution,
    cap: u64,
) -> Result<(), VerifyError> {
    let Some(store) = &subst.store else {
        return verify_unifier(sys, subst, cap);
    };
    let mut store = store.clone();
    let mut ctx = ResolveCtx {
        subst,
        ctx: CtermCtx::new(&mut store, cap),
        memo: HashMap::new(),
        res_memo: HashMap::new(),
        in_progress: std::collections::BTreeSet::new(),
    };
    // Memo tables are keyed by node address; every node that has served as
    // a key must outlive the context, so the per-equation roots are kept.
    let mut term_roots: Vec<Term> = Vec::new();
    let mut cterm_roots: Vec<CRef> = Vec::new();
    let mut eqctx_memo: HashMap<(usize, usize), bool> = HashMap::new();
    let mut slp_memo: HashMap<(SlpId, SlpId), bool> = HashMap::new();
    for (index, eq) in sys.eqs.iter().enumerate() {
        let lhs_term = Term::var(eq.lhs);
        let rhs_term = eq.rhs.term();
        let lhs = ctx.cterm_of(&lhs_term);
        let rhs = ctx.cterm_of(&rhs_term);
        term_roots.push(lhs_term);
        term_roots.push(rhs_term);
        let (Some(l), Some(r)) = (lhs, rhs) else {
            return Err(VerifyError::NotMaterializable { index });
        };
        let ln = ctx.ctx.normalize(&l);
        let rn = ctx.ctx.normalize(&r);
        cterm_roots.push(l);
        cterm_roots.push(r);
        let (Some(ln), Some(rn)) = (ln, rn) else {
            return Err(VerifyError::NotMaterializable { index });
        };
        let mut eqctx = EqCtx {
            store: ctx.ctx.store,
            memo: std::mem::take(&mut eqctx_memo),
            slp_memo: std::mem::take(&mut slp_memo),
        };
        let equal = cterm_eq(&ln, &rn, &mut eqctx);
        eqctx_memo = eqctx.memo;
        slp_memo = eqctx.slp_memo;
        cterm_roots.push(ln);
        cterm_roots.push(rn);
        if !equal {
            return Err(VerifyError::NotUnified { index });
        }
    }
    Ok(())
}

struct ResolveCtx<'a, 'b> {
    subst: &'a Substitution,
    ctx: CtermCtx<'b>,
    memo: HashMap<VarId, CRef>,
    res_memo: HashMap<usize, CRef>,
    in_progress: std::collections::BTreeSet<VarId>,
}

impl ResolveCtx<'_, '_> {
    fn resolve(&mut self, v: VarId) -> Option<CRef> {
        if let Some(t) = self.memo.get(&v) {
            return Some(t.clone());
        }
        if !self.subst.map.contains_key(&v) {
            return Some(Rc::new(CTerm::Var(v)));
        }
        // A cycle never denotes a finite unifier; give up rather than spin.
        if !self.in_progress.insert(v) {
            return None;
        }
        let out = match self.subst.map.get(&v).cloned().unwrap() {
            Binding::Term(t) => self.cterm_of(&t),
            Binding::Chain(label, tail) => {
                // Comparing labels as strings is only sound when their
                // terminals are free.
                let bound_terminal = self
                    .ctx
                    .store
                    .terminals(label)
                    .iter()
                    .any(|t| self.subst.map.contains_key(t));
                if bound_terminal {
                    None
                } else {
                    self.resolve(tail)
                        .map(|t| Rc::new(CTerm::Mul(label, t)))
                }
            }
        };
        self.in_progress.remove(&v);
        if let Some(t) = &out {
            self.memo.insert(v, t.clone());
        }
        out
    }

    fn cterm_of(&mut self, t: &Term) -> Option<CRef> {
        let key = Rc::as_ptr(t.node_rc()) as usize;
        if let Some(r) = self.res_memo.get(&key) {
            return Some(r.clone());
        }
        self.ctx.spend()?;
        let out: CRef = match t.node() {
            TermNode::Var(v) => self.resolve(*v)?,
            TermNode::App(op, l, r) => {
                let l = self.cterm_of(l)?;
                let r = self.cterm_of(r)?;
                Rc::new(match op {
                    crate::term::Op::Plus => CTerm::Sum(l, r),
                    crate::term::Op::Times => CTerm::Times(l, r),
                })
            }
        };
        self.res_memo.insert(key, out.clone());
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Compressed terms: instantiated equation sides with chains kept as programs.
// ---------------------------------------------------------------------------

type CRef = Rc<CTerm>;

/// A term whose product chains are compressed: `Mul(π, t)` is the chain of
/// π's symbols ending in `t`. Substituted bindings are shared, so the
/// structure is a dag; all traversals memoize on node identity.
#[derive(Debug)]
enum CTerm {
    Var(VarId),
    Sum(CRef, CRef),
    Times(CRef, CRef),
    Mul(SlpId, CRef),
}

fn ptr(t: &CRef) -> usize {
    Rc::as_ptr(t) as usize
}

struct CtermCtx<'a> {
    store: &'a mut SlpStore,
    budget: u64,
    of_memo: HashMap<usize, CRef>,
    norm_memo: HashMap<usize, CRef>,
    mul_memo: HashMap<(SlpId, usize), CRef>,
    times_memo: HashMap<(usize, usize), CRef>,
}

impl<'a> CtermCtx<'a> {
    fn new(store: &'a mut SlpStore, cap: u64) -> Self {
        CtermCtx {
            store,
            budget: cap.saturating_mul(4),
            of_memo: HashMap::new(),
            norm_memo: HashMap::new(),
            mul_memo: HashMap::new(),
            times_memo: HashMap::new(),
        }
    }

    fn spend(&mut self) -> Option<()> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        Some(())
    }

    /// Term to compressed term, no substitution.
    fn of_plain(&mut self, t: &Term) -> Option<CRef> {
        let key = Rc::as_ptr(t.node_rc()) as usize;
        if let Some(r) = self.of_memo.get(&key) {
            return Some(r.clone());
        }
        self.spend()?;
        let out: CRef = match t.node() {
            TermNode::Var(v) => Rc::new(CTerm::Var(*v)),
            TermNode::App(op, l, r) => {
                let l = self.of_plain(l)?;
                let r = self.of_plain(r)?;
                Rc::new(match op {
                    crate::term::Op::Plus => CTerm::Sum(l, r),
                    crate::term::Op::Times => CTerm::Times(l, r),
                })
            }
        };
        self.of_memo.insert(key, out.clone());
        Some(out)
    }

    /// One application of the substitution, like [`Substitution::apply`].
    fn of_single_application(&mut self, t: &Term, subst: &Substitution) -> Option<CRef> {
        self.spend()?;
        Some(match t.node() {
            TermNode::Var(v) => match subst.map.get(v) {
                None => Rc::new(CTerm::Var(*v)),
                Some(Binding::Term(b)) => self.of_plain(b)?,
                Some(Binding::Chain(label, tail)) => {
                    Rc::new(CTerm::Mul(*label, Rc::new(CTerm::Var(*tail))))
                }
            },
            TermNode::App(op, l, r) => {
                let l = self.of_single_application(l, subst)?;
                let r = self.of_single_application(r, subst)?;
                Rc::new(match op {
                    crate::term::Op::Plus => CTerm::Sum(l, r),
                    crate::term::Op::Times => CTerm::Times(l, r),
                })
            }
        })
    }

    /// Normal form: sums of chains, with nested chains collapsed by program
    /// concatenation and products distributed over sums.
    fn normalize(&mut self, t: &CRef) -> Option<CRef> {
        if let Some(r) = self.norm_memo.get(&ptr(t)) {
            return Some(r.clone());
        }
        self.spend()?;
        let out = match &**t {
            CTerm::Var(_) => t.clone(),
            CTerm::Sum(a, b) => {
                let a = self.normalize(a)?;
                let b = self.normalize(b)?;
                Rc::new(CTerm::Sum(a, b))
            }
            CTerm::Mul(pi, inner) => {
                let inner = self.normalize(inner)?;
                self.mul(*pi, &inner)?
            }
            CTerm::Times(l, r) => {
                let l = self.normalize(l)?;
                let r = self.normalize(r)?;
                match &*l {
                    CTerm::Var(v) => {
                        let atom = self.store.atom(*v);
                        self.mul(atom, &r)?
                    }
                    _ => self.times(&l, &r)?,
                }
            }
        };
        self.norm_memo.insert(ptr(t), out.clone());
        Some(out)
    }

    /// `π × t` with `t` normal.
    fn mul(&mut self, pi: SlpId, t: &CRef) -> Option<CRef> {
        if let Some(r) = self.mul_memo.get(&(pi, ptr(t))) {
            return Some(r.clone());
        }
        self.spend()?;
        let out = match &**t {
            CTerm::Sum(a, b) => {
                let a = self.mul(pi, a)?;
                let b = self.mul(pi, b)?;
                Rc::new(CTerm::Sum(a, b))
            }
            CTerm::Mul(eta, u) => {
                let cat = self.store.concat(pi, *eta);
                Rc::new(CTerm::Mul(cat, u.clone()))
            }
            CTerm::Var(_) | CTerm::Times(..) => Rc::new(CTerm::Mul(pi, t.clone())),
        };
        self.mul_memo.insert((pi, ptr(t)), out.clone());
        Some(out)
    }

    /// `l × r` with both normal and `l` not a variable.
    fn times(&mut self, l: &CRef, r: &CRef) -> Option<CRef> {
        let key = (ptr(l), ptr(r));
        if let Some(res) = self.times_memo.get(&key) {
            return Some(res.clone());
        }
        self.spend()?;
        let out = match &**r {
            CTerm::Sum(a, b) => {
                let a = self.times(l, a)?;
                let b = self.times(l, b)?;
                Rc::new(CTerm::Sum(a, b))
            }
            _ => Rc::new(CTerm::Times(l.clone(), r.clone())),
        };
        self.times_memo.insert(key, out.clone());
        Some(out)
    }
}

struct EqCtx<'a> {
    store: &'a SlpStore,
    memo: HashMap<(usize, usize), bool>,
    slp_memo: HashMap<(SlpId, SlpId), bool>,
}

fn cterm_eq(a: &CRef, b: &CRef, ctx: &mut EqCtx) -> bool {
    if Rc::ptr_eq(a, b) {
        return true;
    }
    let key = (ptr(a), ptr(b));
    if let Some(&r) = ctx.memo.get(&key) {
        return r;
    }
    let r = match (&**a, &**b) {
        (CTerm::Var(x), CTerm::Var(y)) => x == y,
        (CTerm::Sum(a1, a2), CTerm::Sum(b1, b2)) => {
            cterm_eq(a1, b1, ctx) && cterm_eq(a2, b2, ctx)
        }
        (CTerm::Mul(p, t), CTerm::Mul(q, u)) => {
            let labels_equal = if p == q {
                true
            } else {
                let k = (*p.min(q), *p.max(q));
                match ctx.slp_memo.get(&k) {
                    Some(&e) => e,
                    None => {
                        let e = ctx.store.equal(*p, *q);
                        ctx.slp_memo.insert(k, e);
                        e
                    }
                }
            };
            labels_equal && cterm_eq(t, u, ctx)
        }
        (CTerm::Times(a1, a2), CTerm::Times(b1, b2)) => {
            cterm_eq(a1, b1, ctx) && cterm_eq(a2, b2, ctx)
        }
        // A chain's head factor is a single variable; a normal `Times` head
        // never is. The shapes cannot alias.
        _ => false,
    };
    ctx.memo.insert(key, r);
    r
}

/// Equality modulo the theory of the two instantiated sides, compared in
/// compressed form. `None` means the comparison blew the node budget.
fn cterm_equal(
    lhs: &Term,
    rhs: &Term,
    subst: &Substitution,
    store: &mut SlpStore,
    cap: u64,
) -> Option<bool> {
    let mut ctx = CtermCtx::new(store, cap);
    let l = ctx.of_single_application(lhs, subst)?;
    let r = ctx.of_single_application(rhs, subst)?;
    let ln = ctx.normalize(&l)?;
    let rn = ctx.normalize(&r)?;
    let mut eq = EqCtx { store: ctx.store, memo: HashMap::new(), slp_memo: HashMap::new() };
    Some(cterm_eq(&ln, &rn, &mut eq))
}
