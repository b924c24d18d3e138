//! The classic splitting-rule decider.
//!
//! Works directly on the equation multiset with four rules: variable
//! replacement (a), product cancellation (b), sum cancellation (c), and the
//! splitting rule (d), which fires only when nothing else applies. Failure
//! is detected by cycle checking a dependency graph and a sum propagation
//! graph after every transformation. The splitting rule can fire
//! exponentially often on adversarial inputs, which is exactly what the
//! benchmark harness measures; a step budget keeps such runs bounded.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use crate::graph;
use crate::subst::{extract_unifier, Substitution, DEFAULT_CAP};
use crate::system::{Rhs, StandardSystem};
use crate::vars::{VarId, VarTable};
use crate::FailReason;

/// Default rule-application budget.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Default)]
pub struct TaStats {
    pub rule_a: u64,
    pub rule_b: u64,
    pub rule_c: u64,
    pub rule_d: u64,
    pub sum_transformations: u64,
    pub fresh_vars: u64,
    pub wall: Duration,
}

impl TaStats {
    pub fn total_rules(&self) -> u64 {
        self.rule_a + self.rule_b + self.rule_c + self.rule_d
    }

    /// `key=value` lines.
    pub fn render(&self) -> String {
        format!(
            "rule_a={}\nrule_b={}\nrule_c={}\nrule_d={}\nsum_transformations={}\nfresh_vars={}\nwall_us={}\n",
            self.rule_a,
            self.rule_b,
            self.rule_c,
            self.rule_d,
            self.sum_transformations,
            self.fresh_vars,
            self.wall.as_micros()
        )
    }
}

#[derive(Debug)]
pub enum TaOutcome {
    Unifiable {
        solved: StandardSystem,
        unifier: Option<Substitution>,
        stats: TaStats,
    },
    NotUnifiable {
        reason: FailReason,
        stats: TaStats,
    },
    BudgetExceeded {
        stats: TaStats,
    },
}

impl TaOutcome {
    pub fn stats(&self) -> &TaStats {
        match self {
            TaOutcome::Unifiable { stats, .. }
            | TaOutcome::NotUnifiable { stats, .. }
            | TaOutcome::BudgetExceeded { stats } => stats,
        }
    }

    pub fn is_unifiable(&self) -> bool {
        matches!(self, TaOutcome::Unifiable { .. })
    }
}

/// One rule application: rule name and the ids of the equations it touched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub rule: &'static str,
    pub eqs: Vec<u32>,
}

impl std::fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rule={} eqs=", self.rule)?;
        for (i, e) in self.eqs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Dependency and propagation graphs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLabel {
    LPlus,
    RPlus,
    LTimes,
    RTimes,
}

/// Edge-labeled directed multigraph over the system's variables: one
/// `l+`/`r+` pair per sum equation and one `l×`/`r×` pair per product.
#[derive(Debug, Clone)]
pub struct DepGraph {
    /// The variables that occur in the system, in id order.
    pub verts: Vec<VarId>,
    index: BTreeMap<VarId, usize>,
    pub edges: Vec<(VarId, VarId, EdgeLabel)>,
}

impl DepGraph {
    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_cycle(&self) -> bool {
        let edges = self
            .edges
            .iter()
            .map(|(a, b, _)| (self.index[a], self.index[b]));
        graph::has_cycle(self.verts.len(), edges)
    }
}

/// Quotient of the dependency graph: vertices are the classes of the
/// symmetric-reflexive-transitive closure of the `r×` edges, with a (simple)
/// edge between classes whenever an `l+`/`r+` edge crosses them.
#[derive(Debug, Clone)]
pub struct PropGraph {
    pub classes: Vec<Vec<VarId>>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl PropGraph {
    pub fn has_cycle(&self) -> bool {
        graph::has_cycle(self.classes.len(), self.edges.iter().copied())
    }

    pub fn class_of(&self, v: VarId) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&v))
    }
}

pub fn build_dep_graph(sys: &StandardSystem) -> DepGraph {
    let verts: Vec<VarId> = sys.used_vars().into_iter().collect();
    let index: BTreeMap<VarId, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut edges = Vec::new();
    for eq in &sys.eqs {
        match eq.rhs {
            Rhs::Var(_) => {}
            Rhs::Sum(a, b) => {
                edges.push((eq.lhs, a, EdgeLabel::LPlus));
                edges.push((eq.lhs, b, EdgeLabel::RPlus));
            }
            Rhs::Prod(a, b) => {
                edges.push((eq.lhs, a, EdgeLabel::LTimes));
                edges.push((eq.lhs, b, EdgeLabel::RTimes));
            }
        }
    }
    DepGraph { verts, index, edges }
}

pub fn build_prop_graph(dep: &DepGraph) -> PropGraph {
    let n = dep.verts.len();
    let mut uf = graph::UnionFind::new(n);
    for (a, b, label) in &dep.edges {
        if *label == EdgeLabel::RTimes {
            let (ia, ib) = (dep.index[a] as u32, dep.index[b] as u32);
            uf.union_into(ia.min(ib), ia.max(ib));
        }
    }
    // Dense class ids in vertex order.
    let mut class_id: BTreeMap<u32, usize> = BTreeMap::new();
    let mut classes: Vec<Vec<VarId>> = Vec::new();
    for i in 0..n {
        let root = uf.find(i as u32);
        let id = *class_id.entry(root).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[id].push(dep.verts[i]);
    }
    let mut edges = BTreeSet::new();
    for (a, b, label) in &dep.edges {
        if matches!(label, EdgeLabel::LPlus | EdgeLabel::RPlus) {
            let ca = class_id[&uf.find(dep.index[a] as u32)];
            let cb = class_id[&uf.find(dep.index[b] as u32)];
            edges.insert((ca, cb));
        }
    }
    PropGraph { classes, edges }
}

// ---------------------------------------------------------------------------
// The decider
// ---------------------------------------------------------------------------

struct TaEq {
    id: u32,
    lhs: VarId,
    rhs: Rhs,
}

struct Run<'t> {
    vars: VarTable,
    eqs: Vec<TaEq>,
    /// Variable equations retired by rule (a): `replaced = survivor`.
    solved: Vec<TaEq>,
    next_id: u32,
    steps: u64,
    budget: u64,
    stats: TaStats,
    trace: Option<&'t mut Vec<TraceEntry>>,
}

impl Run<'_> {
    fn record(&mut self, rule: &'static str, eqs: Vec<u32>) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(TraceEntry { rule, eqs });
        }
    }

    fn push_eq(&mut self, lhs: VarId, rhs: Rhs) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        self.eqs.push(TaEq { id, lhs, rhs });
        id
    }

    fn spend(&mut self) -> bool {
        self.steps += 1;
        self.steps <= self.budget
    }

    fn current_system(&self) -> StandardSystem {
        let mut sys = StandardSystem::new(self.vars.clone());
        for eq in self.eqs.iter().chain(self.solved.iter()) {
            sys.push(eq.lhs, eq.rhs);
        }
        sys
    }

    /// Active (non-retired) equations only; this is what the graphs see.
    fn active_system(&self) -> StandardSystem {
        let mut sys = StandardSystem::new(self.vars.clone());
        for eq in &self.eqs {
            sys.push(eq.lhs, eq.rhs);
        }
        sys
    }

    fn occurs_elsewhere(&self, v: VarId, except: u32) -> bool {
        self.eqs
            .iter()
            .any(|eq| eq.id != except && (eq.lhs == v || eq.rhs.vars().contains(&v)))
    }

    /// Applies `replaced -> survivor` everywhere, including retired
    /// right sides.
    fn substitute(&mut self, replaced: VarId, survivor: VarId) {
        let f = |v: VarId| if v == replaced { survivor } else { v };
        for eq in self.eqs.iter_mut().chain(self.solved.iter_mut()) {
            eq.lhs = f(eq.lhs);
            eq.rhs = eq.rhs.map(f);
        }
    }

    /// One rule (a) application if possible: the first variable equation
    /// one of whose sides occurs in another active equation.
    fn try_rule_a(&mut self) -> Option<bool> {
        let pos = self.eqs.iter().position(|eq| match eq.rhs {
            Rhs::Var(r) => {
                eq.lhs == r
                    || self.occurs_elsewhere(eq.lhs, eq.id)
                    || self.occurs_elsewhere(r, eq.id)
            }
            _ => false,
        })?;
        let eq = self.eqs.remove(pos);
        let Rhs::Var(r) = eq.rhs else { unreachable!() };
        self.stats.rule_a += 1;
        self.record("a", vec![eq.id]);
        if eq.lhs == r {
            // X = X: drop.
            return Some(self.spend());
        }
        // Orient toward the older variable when that replacement makes
        // progress; otherwise the younger side survives.
        let (older, younger) = if eq.lhs < r { (eq.lhs, r) } else { (r, eq.lhs) };
        let (survivor, replaced) = if self.occurs_elsewhere(younger, eq.id) {
            (older, younger)
        } else {
            (younger, older)
        };
        self.substitute(replaced, survivor);
        self.solved.push(TaEq { id: eq.id, lhs: replaced, rhs: Rhs::Var(survivor) });
        Some(self.spend())
    }

    /// One rule (b) or (c) application: two products or two sums with the
    /// same left variable, lowest-numbered pair first.
    fn try_rule_bc(&mut self) -> Option<bool> {
        let mut found: Option<(usize, usize, bool)> = None;
        'outer: for i in 0..self.eqs.len() {
            for j in (i + 1)..self.eqs.len() {
                if self.eqs[i].lhs != self.eqs[j].lhs {
                    continue;
                }
                match (self.eqs[i].rhs, self.eqs[j].rhs) {
                    (Rhs::Prod(..), Rhs::Prod(..)) => {
                        found = Some((i, j, true));
                        break 'outer;
                    }
                    (Rhs::Sum(..), Rhs::Sum(..)) => {
                        found = Some((i, j, false));
                        break 'outer;
                    }
                    _ => {}
                }
            }
        }
        let (i, j, is_prod) = found?;
        let (id_i, id_j) = (self.eqs[i].id, self.eqs[j].id);
        let (v, w) = match self.eqs[i].rhs {
            Rhs::Prod(v, w) | Rhs::Sum(v, w) => (v, w),
            Rhs::Var(_) => unreachable!(),
        };
        let (x, y) = match self.eqs[j].rhs {
            Rhs::Prod(x, y) | Rhs::Sum(x, y) => (x, y),
            Rhs::Var(_) => unreachable!(),
        };
        self.eqs.remove(j);
        if v != x {
            self.push_eq(v, Rhs::Var(x));
        }
        if w != y {
            self.push_eq(w, Rhs::Var(y));
        }
        if is_prod {
            self.stats.rule_b += 1;
            self.record("b", vec![id_i, id_j]);
        } else {
            self.stats.rule_c += 1;
            self.record("c", vec![id_i, id_j]);
        }
        Some(self.spend())
    }

    /// Exhausts (a) eagerly and (b)/(c) to fixpoint. False on budget
    /// exhaustion.
    fn exhaust_abc(&mut self) -> bool {
        loop {
            if let Some(ok) = self.try_rule_a() {
                if !ok {
                    return false;
                }
                continue;
            }
            if let Some(ok) = self.try_rule_bc() {
                if !ok {
                    return false;
                }
                continue;
            }
            return true;
        }
    }

    fn find_d_redex(&self) -> Option<(usize, usize)> {
        for i in 0..self.eqs.len() {
            if !matches!(self.eqs[i].rhs, Rhs::Prod(..)) {
                continue;
            }
            for j in 0..self.eqs.len() {
                if self.eqs[i].lhs == self.eqs[j].lhs && matches!(self.eqs[j].rhs, Rhs::Sum(..)) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// The splitting rule: `U = V×W, U = X+Y` becomes
    /// `U = V×W, W = W1+W2, X = V×W1, Y = V×W2` with fresh W1, W2.
    fn apply_d(&mut self, prod: usize, sum: usize) -> bool {
        debug_assert!(
            !self.abc_applicable(),
            "splitting fired while a cancellation rule was applicable"
        );
        let (id_p, id_s) = (self.eqs[prod].id, self.eqs[sum].id);
        let Rhs::Prod(v, w) = self.eqs[prod].rhs else { unreachable!() };
        let Rhs::Sum(x, y) = self.eqs[sum].rhs else { unreachable!() };
        self.eqs.remove(sum);
        let w1 = self.vars.fresh();
        let w2 = self.vars.fresh();
        self.stats.fresh_vars += 2;
        let e1 = self.push_eq(w, Rhs::Sum(w1, w2));
        let e2 = self.push_eq(x, Rhs::Prod(v, w1));
        let e3 = self.push_eq(y, Rhs::Prod(v, w2));
        self.record("d", vec![id_p, id_s, e1, e2, e3]);
        self.stats.rule_d += 1;
        self.stats.sum_transformations += 1;
        self.spend()
    }

    fn abc_applicable(&self) -> bool {
        let var_redex = self.eqs.iter().any(|eq| match eq.rhs {
            Rhs::Var(r) => {
                eq.lhs == r
                    || self.occurs_elsewhere(eq.lhs, eq.id)
                    || self.occurs_elsewhere(r, eq.id)
            }
            _ => false,
        });
        if var_redex {
            return true;
        }
        for i in 0..self.eqs.len() {
            for j in (i + 1)..self.eqs.len() {
                if self.eqs[i].lhs == self.eqs[j].lhs {
                    match (self.eqs[i].rhs, self.eqs[j].rhs) {
                        (Rhs::Prod(..), Rhs::Prod(..)) | (Rhs::Sum(..), Rhs::Sum(..)) => {
                            return true;
                        }
                        _ => {}
                    }
                }
            }
        }
        false
    }

    fn check_cycles(&self) -> Option<FailReason> {
        let sys = self.active_system();
        let dep = build_dep_graph(&sys);
        if dep.has_cycle() {
            return Some(FailReason::DependencyCycle);
        }
        let prop = build_prop_graph(&dep);
        if prop.has_cycle() {
            return Some(FailReason::PropagationCycle);
        }
        None
    }
}

/// Runs the decider with the given rule-application budget.
pub fn ta_unify(sys: &StandardSystem, budget: u64) -> TaOutcome {
    ta_unify_impl(sys, budget, None)
}

/// Like [`ta_unify`], also returning the rule trace.
pub fn ta_unify_traced(sys: &StandardSystem, budget: u64) -> (TaOutcome, Vec<TraceEntry>) {
    let mut trace = Vec::new();
    let outcome = ta_unify_impl(sys, budget, Some(&mut trace));
    (outcome, trace)
}

fn ta_unify_impl(
    sys: &StandardSystem,
    budget: u64,
    trace: Option<&mut Vec<TraceEntry>>,
) -> TaOutcome {
    let start = Instant::now();
    let mut run = Run {
        vars: sys.vars.clone(),
        eqs: Vec::new(),
        solved: Vec::new(),
        next_id: 0,
        steps: 0,
        budget,
        stats: TaStats::default(),
        trace,
    };
    for eq in &sys.eqs {
        run.push_eq(eq.lhs, eq.rhs);
    }

    let mut outcome = loop {
        if !run.exhaust_abc() {
            break TaOutcome::BudgetExceeded { stats: run.stats.clone() };
        }
        if let Some(reason) = run.check_cycles() {
            break TaOutcome::NotUnifiable { reason, stats: run.stats.clone() };
        }
        match run.find_d_redex() {
            None => {
                let solved = run.current_system();
                debug_assert!(crate::system::is_dag_solved(&solved));
                let unifier = extract_unifier(&solved, DEFAULT_CAP).ok();
                break TaOutcome::Unifiable { solved, unifier, stats: run.stats.clone() };
            }
            Some((prod, sum)) => {
                if !run.apply_d(prod, sum) {
                    break TaOutcome::BudgetExceeded { stats: run.stats.clone() };
                }
            }
        }
    };

    match &mut outcome {
        TaOutcome::Unifiable { stats, .. }
        | TaOutcome::NotUnifiable { stats, .. }
        | TaOutcome::BudgetExceeded { stats } => stats.wall = start.elapsed(),
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subst::verify_unifier;
    use crate::vars::VarTable;

    fn sys(defs: &[(&str, &str)]) -> StandardSystem {
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
    fn var_equation_unifies() {
        let s = sys(&[("X", "Y")]);
        match ta_unify(&s, 1000) {
            TaOutcome::Unifiable { unifier: Some(u), solved, .. } => {
                let x = solved.vars.lookup("X").unwrap();
                let y = solved.vars.lookup("Y").unwrap();
                assert_eq!(u.term_binding(x).unwrap(), &crate::term::Term::var(y));
            }
            other => panic!("expected unifiable, got {other:?}"),
        }
    }

    #[test]
    fn splitting_example_from_rule_d() {
        // {U = V×W, U = X+Y}: one splitting step then cleanup.
        let s = sys(&[("U", "V*W"), ("U", "X+Y")]);
        let (outcome, trace) = ta_unify_traced(&s, 1000);
        match outcome {
            TaOutcome::Unifiable { solved, unifier: Some(u), stats } => {
                assert_eq!(stats.rule_d, 1);
                assert_eq!(stats.fresh_vars, 2);
                assert!(verify_unifier(&s, &u, DEFAULT_CAP).is_ok());
                assert!(crate::system::is_dag_solved(&solved));
            }
            other => panic!("expected unifiable, got {other:?}"),
        }
        assert!(trace.iter().any(|e| e.rule == "d"));
    }

    #[test]
    fn propagation_cycle_detected() {
        let s = sys(&[("Z", "V2+V3"), ("Z", "V1*V3")]);
        match ta_unify(&s, 1000) {
            TaOutcome::NotUnifiable { reason, .. } => {
                assert_eq!(reason, FailReason::PropagationCycle);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn dependency_cycle_detected() {
        let s = sys(&[("X", "Y+Z"), ("Y", "X*W")]);
        match ta_unify(&s, 1000) {
            TaOutcome::NotUnifiable { reason, .. } => {
                assert_eq!(reason, FailReason::DependencyCycle);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn dep_graph_shapes() {
        let s = sys(&[("X", "Y+Z")]);
        let dep = build_dep_graph(&s);
        assert_eq!(dep.vertex_count(), 3);
        assert_eq!(dep.edge_count(), 2);
        assert!(!dep.has_cycle());

        let s = sys(&[("X", "Y*Z")]);
        let dep = build_dep_graph(&s);
        let labels: Vec<EdgeLabel> = dep.edges.iter().map(|e| e.2).collect();
        assert_eq!(labels, vec![EdgeLabel::LTimes, EdgeLabel::RTimes]);
    }

    #[test]
    fn sigma_zero_graph_counts() {
        // Five equations over nine variables, two edges each.
        let s = crate::generate::sigma(0);
        let dep = build_dep_graph(&s);
        assert_eq!(dep.vertex_count(), 9);
        assert_eq!(dep.edge_count(), 10);
        assert!(!dep.has_cycle());
        assert!(!build_prop_graph(&dep).has_cycle());
    }

    #[test]
    fn sigma_zero_unifier_verifies() {
        let s = crate::generate::sigma(0);
        match ta_unify(&s, 100_000) {
            TaOutcome::Unifiable { unifier: Some(u), .. } => {
                assert!(verify_unifier(&s, &u, DEFAULT_CAP).is_ok());
                assert!(u.is_idempotent());
            }
            other => panic!("sigma(0) must unify, got {other:?}"),
        }
    }

    #[test]
    fn prop_graph_classes_and_self_loop() {
        // No r× edges: every variable alone.
        let s = sys(&[("X", "Y+Z")]);
        let prop = build_prop_graph(&build_dep_graph(&s));
        assert_eq!(prop.classes.len(), 3);
        assert!(!prop.has_cycle());

        // {X = Y×Z, Z = A+B}: class {X,Z}, edges into {A} and {B}.
        let s = sys(&[("X", "Y*Z"), ("Z", "A+B")]);
        let prop = build_prop_graph(&build_dep_graph(&s));
        let xz = prop.class_of(s.vars.lookup("X").unwrap()).unwrap();
        assert_eq!(xz, prop.class_of(s.vars.lookup("Z").unwrap()).unwrap());
        assert_eq!(prop.classes[xz].len(), 2);
        assert!(!prop.has_cycle());

        // {X = X1+X2, X = V×X2}: the class of {X, X2} points at itself.
        let s = sys(&[("X", "X1+X2"), ("X", "V*X2")]);
        let prop = build_prop_graph(&build_dep_graph(&s));
        assert!(prop.has_cycle());
    }

    #[test]
    fn budget_is_respected() {
        let s = crate::generate::sigma(2);
        match ta_unify(&s, 3) {
            TaOutcome::BudgetExceeded { stats } => {
                assert!(stats.total_rules() >= 3);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }
}
