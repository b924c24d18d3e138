//! Asymmetric unification for the oriented rule `X×(Y+Z) → X×Y + X×Z`.
//!
//! Every equation `s =↓ t` carries the restriction that instantiating `t`
//! must leave it irreducible. Equations keep their orientation, so the
//! solver distinguishes `U =↓ V×W` (the product must stay irreducible) from
//! `V×W =↓ U` (only `U`'s instance must). Cancellation works as in the
//! symmetric baseline; four configurations fail outright because they would
//! force a redex on a constrained side; splitting fires only when nothing
//! else applies. Failure is additionally detected through the baseline's
//! dependency and propagation graphs on the symmetric erasure.
//!
//! A pair `{V∘W =↓ U, U =↓ X∘Y}` with the same operator on both compounds
//! is handled by reading the mixed-orientation cancellation rule
//! symmetrically: the variable-left equation is kept and the components are
//! equated pairwise.

use std::time::{Duration, Instant};

use crate::subst::{extract_unifier, Substitution, DEFAULT_CAP};
use crate::system::{Rhs, StandardSystem};
use crate::ta::{build_dep_graph, build_prop_graph};
use crate::term::{is_normal, normalize, Term};
use crate::vars::{VarId, VarTable};

/// One side of an asymmetric equation: depth at most one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Var(VarId),
    Sum(VarId, VarId),
    Prod(VarId, VarId),
}

impl Side {
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            Side::Var(v) => vec![*v],
            Side::Sum(a, b) | Side::Prod(a, b) => vec![*a, *b],
        }
    }

    pub fn map(&self, f: impl Fn(VarId) -> VarId) -> Side {
        match self {
            Side::Var(v) => Side::Var(f(*v)),
            Side::Sum(a, b) => Side::Sum(f(*a), f(*b)),
            Side::Prod(a, b) => Side::Prod(f(*a), f(*b)),
        }
    }

    pub fn term(&self) -> Term {
        match self {
            Side::Var(v) => Term::var(*v),
            Side::Sum(a, b) => Term::plus(Term::var(*a), Term::var(*b)),
            Side::Prod(a, b) => Term::times(Term::var(*a), Term::var(*b)),
        }
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self {
            Side::Var(v) => Some(*v),
            _ => None,
        }
    }
}

/// `left =↓ right`: any unifier must leave the instantiated right side
/// irreducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AsymEquation {
    pub left: Side,
    pub right: Side,
}

impl AsymEquation {
    /// The variable the equation defines (at least one side is a variable;
    /// when both are, the left one).
    pub fn subject(&self) -> Option<VarId> {
        self.left.as_var().or_else(|| self.right.as_var())
    }

    /// The compound side, if any.
    pub fn compound(&self) -> Option<Side> {
        match (self.left, self.right) {
            (Side::Var(_), Side::Var(_)) => None,
            (c, Side::Var(_)) => Some(c),
            (Side::Var(_), c) => Some(c),
            _ => unreachable!("asymmetric standard form has a variable side"),
        }
    }

    /// Whether the compound side is the right one (and therefore must stay
    /// irreducible under instantiation).
    pub fn compound_is_constrained(&self) -> bool {
        matches!(self.left, Side::Var(_)) && !matches!(self.right, Side::Var(_))
    }
}

#[derive(Debug, Clone, Default)]
pub struct AsymSystem {
    pub vars: VarTable,
    pub eqs: Vec<AsymEquation>,
}

impl AsymSystem {
    pub fn new(vars: VarTable) -> Self {
        AsymSystem { vars, eqs: Vec::new() }
    }

    pub fn push(&mut self, left: Side, right: Side) {
        self.eqs.push(AsymEquation { left, right });
    }

    /// Drops orientation and irreducibility flags.
    pub fn symmetric_erasure(&self) -> StandardSystem {
        let mut sys = StandardSystem::new(self.vars.clone());
        for eq in &self.eqs {
            let (var, other) = match (eq.left.as_var(), eq.right.as_var()) {
                (Some(v), _) => (v, eq.right),
                (None, Some(v)) => (v, eq.left),
                (None, None) => unreachable!("asymmetric standard form has a variable side"),
            };
            let rhs = match other {
                Side::Var(w) => Rhs::Var(w),
                Side::Sum(a, b) => Rhs::Sum(a, b),
                Side::Prod(a, b) => Rhs::Prod(a, b),
            };
            if rhs != Rhs::Var(var) {
                sys.push(var, rhs);
            }
        }
        sys
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for eq in &self.eqs {
            out.push_str(&format!(
                "{} =d {}\n",
                side_str(&eq.left, &self.vars),
                side_str(&eq.right, &self.vars)
            ));
        }
        out
    }
}

fn side_str(side: &Side, vars: &VarTable) -> String {
    match side {
        Side::Var(v) => vars.name(*v).to_string(),
        Side::Sum(a, b) => format!("{} + {}", vars.name(*a), vars.name(*b)),
        Side::Prod(a, b) => format!("{} * {}", vars.name(*a), vars.name(*b)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymFailReason {
    RuleE,
    RuleEPrime,
    RuleF,
    RuleFPrime,
    DependencyCycle,
    PropagationCycle,
}

impl std::fmt::Display for AsymFailReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AsymFailReason::RuleE => "rule-e",
            AsymFailReason::RuleEPrime => "rule-e'",
            AsymFailReason::RuleF => "rule-f",
            AsymFailReason::RuleFPrime => "rule-f'",
            AsymFailReason::DependencyCycle => "dependency-cycle",
            AsymFailReason::PropagationCycle => "propagation-cycle",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AsymStats {
    pub rule_a: u64,
    pub rule_b: u64,
    pub rule_c: u64,
    pub rule_d: u64,
    pub rule_g: u64,
    pub rule_h: u64,
    pub fresh_vars: u64,
    pub failed_rule: Option<&'static str>,
    pub wall: Duration,
}

impl AsymStats {
    pub fn splitting_count(&self) -> u64 {
        self.rule_g + self.rule_h
    }

    pub fn total_rules(&self) -> u64 {
        self.rule_a + self.rule_b + self.rule_c + self.rule_d + self.rule_g + self.rule_h
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "rule_a={}\nrule_b={}\nrule_c={}\nrule_d={}\nrule_g={}\nrule_h={}\nfresh_vars={}\nwall_us={}\n",
            self.rule_a,
            self.rule_b,
            self.rule_c,
            self.rule_d,
            self.rule_g,
            self.rule_h,
            self.fresh_vars,
            self.wall.as_micros()
        );
        if let Some(rule) = self.failed_rule {
            out.push_str(&format!("failed_rule={rule}\n"));
        }
        out
    }
}

#[derive(Debug)]
pub enum AsymOutcome {
    Unifiable {
        solved: AsymSystem,
        unifier: Option<Substitution>,
        stats: AsymStats,
    },
    NotUnifiable {
        reason: AsymFailReason,
        stats: AsymStats,
    },
    BudgetExceeded {
        stats: AsymStats,
    },
}

impl AsymOutcome {
    pub fn stats(&self) -> &AsymStats {
        match self {
            AsymOutcome::Unifiable { stats, .. }
            | AsymOutcome::NotUnifiable { stats, .. }
            | AsymOutcome::BudgetExceeded { stats } => stats,
        }
    }

    pub fn is_unifiable(&self) -> bool {
        matches!(self, AsymOutcome::Unifiable { .. })
    }
}

struct Run {
    vars: VarTable,
    eqs: Vec<AsymEquation>,
    solved: Vec<AsymEquation>,
    steps: u64,
    budget: u64,
    stats: AsymStats,
}

impl Run {
    fn spend(&mut self) -> bool {
        self.steps += 1;
        self.steps <= self.budget
    }

    fn occurs_elsewhere(&self, v: VarId, except: usize) -> bool {
        self.eqs.iter().enumerate().any(|(i, eq)| {
            i != except && (eq.left.vars().contains(&v) || eq.right.vars().contains(&v))
        })
    }

    fn substitute(&mut self, replaced: VarId, survivor: VarId) {
        let f = |v: VarId| if v == replaced { survivor } else { v };
        for eq in self.eqs.iter_mut().chain(self.solved.iter_mut()) {
            eq.left = eq.left.map(f);
            eq.right = eq.right.map(f);
        }
    }

    /// Rule (a): variable replacement, oriented toward the older variable
    /// when that replacement makes progress.
    fn try_rule_a(&mut self) -> Option<bool> {
        let pos = self.eqs.iter().enumerate().position(|(i, eq)| {
            match (eq.left, eq.right) {
                (Side::Var(l), Side::Var(r)) => {
                    l == r || self.occurs_elsewhere(l, i) || self.occurs_elsewhere(r, i)
                }
                _ => false,
            }
        })?;
        let eq = self.eqs.remove(pos);
        let (Side::Var(l), Side::Var(r)) = (eq.left, eq.right) else { unreachable!() };
        self.stats.rule_a += 1;
        if l == r {
            return Some(self.spend());
        }
        let (older, younger) = if l < r { (l, r) } else { (r, l) };
        let occurs_younger = self.eqs.iter().any(|e| {
            e.left.vars().contains(&younger) || e.right.vars().contains(&younger)
        });
        let (survivor, replaced) = if occurs_younger { (older, younger) } else { (younger, older) };
        self.substitute(replaced, survivor);
        self.solved.push(AsymEquation { left: Side::Var(replaced), right: Side::Var(survivor) });
        Some(self.spend())
    }

    /// Rules (e), (e'), (f), (f'): configurations with no asymmetric
    /// solutions.
    fn find_failure(&self) -> Option<AsymFailReason> {
        for eq in &self.eqs {
            // A constrained product U =↓ V×W.
            let (Side::Var(u), Side::Prod(_, w)) = (eq.left, eq.right) else { continue };
            for other in &self.eqs {
                if std::ptr::eq(eq, other) {
                    continue;
                }
                match (other.left, other.right) {
                    // (e): U =↓ X+Y for the same U.
                    (Side::Var(u2), Side::Sum(..)) if u2 == u => {
                        return Some(AsymFailReason::RuleE);
                    }
                    // (e'): W =↓ X+Y for the product's right factor.
                    (Side::Var(w2), Side::Sum(..)) if w2 == w => {
                        return Some(AsymFailReason::RuleEPrime);
                    }
                    // (f): X+Y =↓ U.
                    (Side::Sum(..), Side::Var(u2)) if u2 == u => {
                        return Some(AsymFailReason::RuleF);
                    }
                    // (f'): X+Y =↓ W.
                    (Side::Sum(..), Side::Var(w2)) if w2 == w => {
                        return Some(AsymFailReason::RuleFPrime);
                    }
                    _ => {}
                }
            }
        }
        None
    }

    /// Rules (b), (c), (d): two same-operator compounds defining the same
    /// variable cancel into component equations.
    fn try_cancellation(&mut self) -> Option<bool> {
        let mut found: Option<(usize, usize)> = None;
        'outer: for i in 0..self.eqs.len() {
            for j in (i + 1)..self.eqs.len() {
                let (a, b) = (&self.eqs[i], &self.eqs[j]);
                let (Some(ua), Some(ca)) = (a.subject(), a.compound()) else { continue };
                let (Some(ub), Some(cb)) = (b.subject(), b.compound()) else { continue };
                if ua != ub {
                    continue;
                }
                let same_op = matches!(
                    (ca, cb),
                    (Side::Sum(..), Side::Sum(..)) | (Side::Prod(..), Side::Prod(..))
                );
                if same_op {
                    found = Some((i, j));
                    break 'outer;
                }
            }
        }
        let (i, j) = found?;
        // Keep the variable-left equation when orientations differ, else the
        // first one; equate components pairwise with the kept components on
        // the constrained side.
        let (keep, drop) = {
            let a_varleft = self.eqs[i].compound_is_constrained();
            let b_varleft = self.eqs[j].compound_is_constrained();
            match (a_varleft, b_varleft) {
                (true, true) => {
                    self.stats.rule_b += 1;
                    (i, j)
                }
                (true, false) => {
                    self.stats.rule_c += 1;
                    (i, j)
                }
                (false, true) => {
                    self.stats.rule_c += 1;
                    (j, i)
                }
                (false, false) => {
                    self.stats.rule_d += 1;
                    (i, j)
                }
            }
        };
        let kept = self.eqs[keep].compound().unwrap();
        let dropped_eq = self.eqs.remove(drop);
        let dropped = dropped_eq.compound().unwrap();
        let ((v, w), (x, y)) = match (kept, dropped) {
            (Side::Sum(v, w), Side::Sum(x, y)) | (Side::Prod(v, w), Side::Prod(x, y)) => {
                ((v, w), (x, y))
            }
            _ => unreachable!(),
        };
        if x != v {
            self.eqs.push(AsymEquation { left: Side::Var(x), right: Side::Var(v) });
        }
        if y != w {
            self.eqs.push(AsymEquation { left: Side::Var(y), right: Side::Var(w) });
        }
        Some(self.spend())
    }

    /// Rules (g), (h): an unconstrained product `V×W =↓ U` against a sum
    /// defining the same `U` splits the product's right factor.
    fn try_splitting(&mut self) -> Option<bool> {
        let mut found: Option<(usize, usize, bool)> = None;
        'outer: for i in 0..self.eqs.len() {
            let (Side::Prod(_, _), Side::Var(u)) = (self.eqs[i].left, self.eqs[i].right) else {
                continue;
            };
            for j in 0..self.eqs.len() {
                if i == j {
                    continue;
                }
                match (self.eqs[j].left, self.eqs[j].right) {
                    // (g): U =↓ X+Y.
                    (Side::Var(u2), Side::Sum(..)) if u2 == u => {
                        found = Some((i, j, true));
                        break 'outer;
                    }
                    // (h): X+Y =↓ U.
                    (Side::Sum(..), Side::Var(u2)) if u2 == u => {
                        found = Some((i, j, false));
                        break 'outer;
                    }
                    _ => {}
                }
            }
        }
        let (prod, sum, is_g) = found?;
        let Side::Prod(v, w) = self.eqs[prod].left else { unreachable!() };
        let (x, y) = match if is_g { self.eqs[sum].right } else { self.eqs[sum].left } {
            Side::Sum(x, y) => (x, y),
            _ => unreachable!(),
        };
        self.eqs.remove(sum);
        let w1 = self.vars.fresh();
        let w2 = self.vars.fresh();
        self.stats.fresh_vars += 2;
        self.eqs.push(AsymEquation { left: Side::Sum(w1, w2), right: Side::Var(w) });
        self.eqs.push(AsymEquation { left: Side::Prod(v, w1), right: Side::Var(x) });
        self.eqs.push(AsymEquation { left: Side::Prod(v, w2), right: Side::Var(y) });
        if is_g {
            self.stats.rule_g += 1;
        } else {
            self.stats.rule_h += 1;
        }
        Some(self.spend())
    }

    fn check_cycles(&self) -> Option<AsymFailReason> {
        let mut sys = StandardSystem::new(self.vars.clone());
        for eq in &self.eqs {
            let (Some(var), Some(compound)) = (eq.subject(), eq.compound()) else { continue };
            let rhs = match compound {
                Side::Sum(a, b) => Rhs::Sum(a, b),
                Side::Prod(a, b) => Rhs::Prod(a, b),
                Side::Var(_) => unreachable!(),
            };
            sys.push(var, rhs);
        }
        let dep = build_dep_graph(&sys);
        if dep.has_cycle() {
            return Some(AsymFailReason::DependencyCycle);
        }
        if build_prop_graph(&dep).has_cycle() {
            return Some(AsymFailReason::PropagationCycle);
        }
        None
    }

    fn current_system(&self) -> AsymSystem {
        let mut sys = AsymSystem::new(self.vars.clone());
        for eq in self.eqs.iter().chain(self.solved.iter()) {
            sys.eqs.push(*eq);
        }
        sys
    }
}

/// Runs the asymmetric decider with the given rule-application budget.
pub fn asym_unify(sys: &AsymSystem, budget: u64) -> AsymOutcome {
    let start = Instant::now();
    let mut run = Run {
        vars: sys.vars.clone(),
        eqs: sys.eqs.clone(),
        solved: Vec::new(),
        steps: 0,
        budget,
        stats: AsymStats::default(),
    };

    let mut outcome = loop {
        if let Some(ok) = run.try_rule_a() {
            if !ok {
                break AsymOutcome::BudgetExceeded { stats: run.stats.clone() };
            }
            continue;
        }
        if let Some(reason) = run.find_failure() {
            run.stats.failed_rule = Some(match reason {
                AsymFailReason::RuleE => "e",
                AsymFailReason::RuleEPrime => "e'",
                AsymFailReason::RuleF => "f",
                AsymFailReason::RuleFPrime => "f'",
                _ => unreachable!(),
            });
            break AsymOutcome::NotUnifiable { reason, stats: run.stats.clone() };
        }
        if let Some(ok) = run.try_cancellation() {
            if !ok {
                break AsymOutcome::BudgetExceeded { stats: run.stats.clone() };
            }
            continue;
        }
        if let Some(reason) = run.check_cycles() {
            break AsymOutcome::NotUnifiable { reason, stats: run.stats.clone() };
        }
        match run.try_splitting() {
            Some(ok) => {
                if !ok {
                    break AsymOutcome::BudgetExceeded { stats: run.stats.clone() };
                }
            }
            None => {
                let solved = run.current_system();
                let erasure = solved.symmetric_erasure();
                debug_assert!(crate::system::is_dag_solved(&erasure));
                let unifier = extract_unifier(&erasure, DEFAULT_CAP)
                    .ok()
                    .map(|u| normalize_substitution(&u));
                break AsymOutcome::Unifiable { solved, unifier, stats: run.stats.clone() };
            }
        }
    };

    match &mut outcome {
        AsymOutcome::Unifiable { stats, .. }
        | AsymOutcome::NotUnifiable { stats, .. }
        | AsymOutcome::BudgetExceeded { stats } => stats.wall = start.elapsed(),
    }
    outcome
}

/// Whether σ unifies every equation modulo the theory and leaves every
/// instantiated right side irreducible.
pub fn check_asymmetry(subst: &Substitution, sys: &AsymSystem) -> bool {
    sys.eqs.iter().all(|eq| {
        let l = subst.apply(&eq.left.term());
        let r = subst.apply(&eq.right.term());
        crate::term::e_equal(&l, &r) && is_normal(&r)
    })
}

/// Normalizes every plain-term binding.
pub fn normalize_substitution(subst: &Substitution) -> Substitution {
    let mut out = subst.clone();
    for binding in out.map.values_mut() {
        if let crate::subst::Binding::Term(t) = binding {
            *t = normalize(t);
        }
    }
    out
}
