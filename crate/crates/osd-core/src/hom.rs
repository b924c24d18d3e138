//! Polynomial decider for the typed single-homomorphism fragment.
//!
//! When every product has the same left factor `T`, an equation `X = T×Y`
//! reads as `X = h(Y)` for a homomorphism `h` over `+`, and path labels
//! collapse to their lengths: path constraints become comparisons of binary
//! naturals and path computations become addition and subtraction. The
//! decider saturates a path-labeled dependency graph class by class, in the
//! top-down order induced by the sum edges, and fails exactly when that
//! graph or its propagation quotient acquires a cycle.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::graph;
use crate::system::{Rhs, StandardSystem};
use crate::vars::{VarId, VarTable};
use crate::FailReason;

/// A system in the typed fragment: products rewritten as `h`-edges.
#[derive(Debug, Clone)]
pub struct TypedSystem {
    pub vars: VarTable,
    /// The unique left-factor variable.
    pub h_var: VarId,
    pub eqs: Vec<TypedEq>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypedEq {
    /// `X = Y`
    Var(VarId, VarId),
    /// `X = Y + Z`
    Sum(VarId, VarId, VarId),
    /// `X = h(Y)`, i.e. `X = T × Y`
    H(VarId, VarId),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FragmentError {
    #[error("no product equations, so no homomorphism variable")]
    NoProducts,
    #[error("{0} distinct left-factor variables, need exactly one")]
    MultipleLabelCandidates(usize),
    #[error("a variable is used in both factor positions")]
    InconsistentTyping,
}

/// Infers the two-type partition from the equations: left product factors
/// get the factor type, every other position the base type, and variable
/// equations force equal types. Succeeds when the partition is consistent
/// and exactly one variable has the factor type.
pub fn typecheck(sys: &StandardSystem) -> Result<TypedSystem, FragmentError> {
    let n = sys.vars.len();
    let mut uf = graph::UnionFind::new(n);
    for eq in &sys.eqs {
        if let Rhs::Var(v) = eq.rhs {
            uf.union_into(eq.lhs.0.min(v.0), eq.lhs.0.max(v.0));
        }
    }
    let mut tau1 = vec![false; n];
    let mut tau2 = vec![false; n];
    for eq in &sys.eqs {
        match eq.rhs {
            Rhs::Var(_) => {}
            Rhs::Sum(a, b) => {
                tau2[uf.find(eq.lhs.0) as usize] = true;
                tau2[uf.find(a.0) as usize] = true;
                tau2[uf.find(b.0) as usize] = true;
            }
            Rhs::Prod(l, r) => {
                tau1[uf.find(l.0) as usize] = true;
                tau2[uf.find(eq.lhs.0) as usize] = true;
                tau2[uf.find(r.0) as usize] = true;
            }
        }
    }
    let mut factor_vars = Vec::new();
    for v in sys.vars.iter() {
        let root = uf.find(v.0) as usize;
        if tau1[root] && tau2[root] {
            return Err(FragmentError::InconsistentTyping);
        }
        if tau1[root] {
            factor_vars.push(v);
        }
    }
    match factor_vars.as_slice() {
        [] => Err(FragmentError::NoProducts),
        [t] => {
            let h_var = *t;
            let eqs = sys
                .eqs
                .iter()
                .map(|eq| match eq.rhs {
                    Rhs::Var(v) => TypedEq::Var(eq.lhs, v),
                    Rhs::Sum(a, b) => TypedEq::Sum(eq.lhs, a, b),
                    Rhs::Prod(_, r) => TypedEq::H(eq.lhs, r),
                })
                .collect();
            Ok(TypedSystem { vars: sys.vars.clone(), h_var, eqs })
        }
        more => Err(FragmentError::MultipleLabelCandidates(more.len())),
    }
}

#[derive(Debug, Clone, Default)]
pub struct HomStats {
    pub rule_0: u64,
    pub rule_i: u64,
    pub rule_ii: u64,
    pub rule_iii: u64,
    pub rule_iv: u64,
    pub rule_v: u64,
    pub rule_vii: u64,
    pub fresh_vars: u64,
    pub initial_classes: usize,
    pub wall: Duration,
}

impl HomStats {
    pub fn total_rules(&self) -> u64 {
        self.rule_0 + self.rule_i + self.rule_ii + self.rule_iii + self.rule_iv + self.rule_v
            + self.rule_vii
    }

    pub fn render(&self) -> String {
        format!(
            "fragment=single-homomorphism\nrule_0={}\nrule_i={}\nrule_ii={}\nrule_iii={}\nrule_iv={}\nrule_v={}\nrule_vii={}\nfresh_vars={}\ninitial_classes={}\nwall_us={}\n",
            self.rule_0,
            self.rule_i,
            self.rule_ii,
            self.rule_iii,
            self.rule_iv,
            self.rule_v,
            self.rule_vii,
            self.fresh_vars,
            self.initial_classes,
            self.wall.as_micros()
        )
    }
}

#[derive(Debug)]
pub enum HomOutcome {
    Unifiable { stats: HomStats },
    NotUnifiable { reason: FailReason, stats: HomStats },
}

impl HomOutcome {
    pub fn stats(&self) -> &HomStats {
        match self {
            HomOutcome::Unifiable { stats } | HomOutcome::NotUnifiable { stats, .. } => stats,
        }
    }

    pub fn is_unifiable(&self) -> bool {
        matches!(self, HomOutcome::Unifiable { .. })
    }
}

struct HomRun {
    vars: VarTable,
    nodes: BTreeSet<VarId>,
    /// src -> outgoing lateral edges (path length, dst).
    lateral: BTreeMap<VarId, Vec<(BigUint, VarId)>>,
    /// node -> sums defining it.
    sums: BTreeMap<VarId, Vec<(VarId, VarId)>>,
    pending: Vec<(VarId, VarId)>,
    processed: BTreeSet<VarId>,
    stats: HomStats,
}

impl HomRun {
    fn out_edges(&self, v: VarId) -> &[(BigUint, VarId)] {
        self.lateral.get(&v).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Rule (0): merge two nodes, the older id surviving.
    fn merge(&mut self, a: VarId, b: VarId) {
        if a == b {
            return;
        }
        self.stats.rule_0 += 1;
        let (survivor, replaced) = if a < b { (a, b) } else { (b, a) };
        self.nodes.remove(&replaced);
        self.processed.remove(&replaced);
        // The survivor inherits edges; let its class be processed again.
        self.processed.remove(&survivor);
        if let Some(edges) = self.lateral.remove(&replaced) {
            self.lateral.entry(survivor).or_default().extend(edges);
        }
        if let Some(ss) = self.sums.remove(&replaced) {
            self.sums.entry(survivor).or_default().extend(ss);
        }
        let f = |v: &mut VarId| {
            if *v == replaced {
                *v = survivor;
            }
        };
        for edges in self.lateral.values_mut() {
            for (_, dst) in edges.iter_mut() {
                f(dst);
            }
        }
        for ss in self.sums.values_mut() {
            for (x, y) in ss.iter_mut() {
                f(x);
                f(y);
            }
        }
        for (x, y) in self.pending.iter_mut() {
            f(x);
            f(y);
        }
    }

    /// Exhausts rules (0) and (i)-(iii), then (iv), iterating to fixpoint.
    fn cleanup(&mut self) {
        loop {
            if let Some((a, b)) = self.pending.pop() {
                self.merge(a, b);
                continue;
            }
            // (i): two sums on one node.
            if let Some((&u, _)) = self.sums.iter().find(|(_, ss)| ss.len() > 1) {
                let ss = self.sums.get_mut(&u).unwrap();
                let (a, b) = ss[0];
                let (x, y) = ss.remove(1);
                self.stats.rule_i += 1;
                if x != a {
                    self.pending.push((x, a));
                }
                if y != b {
                    self.pending.push((y, b));
                }
                continue;
            }
            // (ii): equal-length edges into one target from two sources.
            // Equating the sources makes the edges parallel duplicates,
            // which rule (iii) then removes.
            if let Some((x, z)) = self.find_rule_ii() {
                self.stats.rule_ii += 1;
                self.pending.push((x, z));
                continue;
            }
            // (iii): two outgoing edges of equal length.
            if let Some(u) = self.find_rule_iii() {
                let edges = self.lateral.get_mut(&u).unwrap();
                let mut fired = false;
                'pairs: for i in 0..edges.len() {
                    for j in (i + 1)..edges.len() {
                        if edges[i].0 == edges[j].0 {
                            let (_, y) = edges.remove(j);
                            let (_, z) = edges[i].clone();
                            self.stats.rule_iii += 1;
                            if y != z {
                                self.pending.push((y, z));
                            }
                            fired = true;
                            break 'pairs;
                        }
                    }
                }
                debug_assert!(fired);
                continue;
            }
            // (iv): two outgoing edges, strictly shorter one factors out.
            if let Some(u) = self.find_rule_iv() {
                let edges = self.lateral.get_mut(&u).unwrap();
                let (mut si, mut li) = (0, 0);
                for i in 0..edges.len() {
                    if edges[i].0 < edges[si].0 {
                        si = i;
                    }
                    if edges[i].0 > edges[li].0 {
                        li = i;
                    }
                }
                let (short_len, y) = edges[si].clone();
                let (long_len, z) = edges[li].clone();
                debug_assert!(short_len < long_len);
                edges.remove(si);
                let rest = &long_len - &short_len;
                self.lateral.entry(y).or_default().push((rest, z));
                self.stats.rule_iv += 1;
                continue;
            }
            break;
        }
    }

    fn shared_target(&self, x: VarId, z: VarId) -> Option<VarId> {
        for (lx, dx) in self.out_edges(x) {
            for (lz, dz) in self.out_edges(z) {
                if dx == dz && lx == lz {
                    return Some(*dx);
                }
            }
        }
        None
    }

    fn find_rule_ii(&self) -> Option<(VarId, VarId)> {
        for &x in &self.nodes {
            for &z in &self.nodes {
                if x >= z {
                    continue;
                }
                if self.shared_target(x, z).is_some() {
                    return Some((x, z));
                }
            }
        }
        None
    }

    fn find_rule_iii(&self) -> Option<VarId> {
        self.lateral
            .iter()
            .find(|(_, edges)| {
                edges.len() > 1
                    && (0..edges.len()).any(|i| {
                        (i + 1..edges.len()).any(|j| edges[i].0 == edges[j].0)
                    })
            })
            .map(|(u, _)| *u)
    }

    fn find_rule_iv(&self) -> Option<VarId> {
        self.lateral
            .iter()
            .find(|(_, edges)| {
                edges.len() > 1
                    && (0..edges.len()).any(|i| {
                        (i + 1..edges.len()).any(|j| edges[i].0 != edges[j].0)
                    })
            })
            .map(|(u, _)| *u)
    }

    fn check_cycles(&self) -> Option<FailReason> {
        let nodes: Vec<VarId> = self.nodes.iter().copied().collect();
        let index: BTreeMap<VarId, usize> = nodes.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut edges = Vec::new();
        for (src, outs) in &self.lateral {
            for (_, dst) in outs {
                edges.push((index[src], index[dst]));
            }
        }
        for (u, ss) in &self.sums {
            for (a, b) in ss {
                edges.push((index[u], index[a]));
                edges.push((index[u], index[b]));
            }
        }
        if graph::has_cycle(nodes.len(), edges) {
            return Some(FailReason::DependencyCycle);
        }
        let (class_of, class_count) = self.classes();
        let mut cedges = BTreeSet::new();
        for (u, ss) in &self.sums {
            for (a, b) in ss {
                cedges.insert((class_of[u], class_of[a]));
                cedges.insert((class_of[u], class_of[b]));
            }
        }
        if graph::has_cycle(class_count, cedges) {
            return Some(FailReason::PropagationCycle);
        }
        None
    }

    /// Connected components of the lateral edges; returns node -> class id
    /// and the class count. Class ids are ordered by smallest member.
    fn classes(&self) -> (BTreeMap<VarId, usize>, usize) {
        let nodes: Vec<VarId> = self.nodes.iter().copied().collect();
        let index: BTreeMap<VarId, u32> =
            nodes.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
        let mut uf = graph::UnionFind::new(nodes.len());
        for (src, outs) in &self.lateral {
            for (_, dst) in outs {
                let (a, b) = (index[src], index[dst]);
                uf.union_into(a.min(b), a.max(b));
            }
        }
        let mut ids: BTreeMap<u32, usize> = BTreeMap::new();
        let mut class_of = BTreeMap::new();
        for (i, v) in nodes.iter().enumerate() {
            let root = uf.find(i as u32);
            let next = ids.len();
            let id = *ids.entry(root).or_insert(next);
            class_of.insert(*v, id);
        }
        (class_of, ids.len())
    }

    /// Picks an unprocessed class that no other unprocessed class reaches
    /// through sum edges, smallest member first.
    fn select_class(&self) -> Option<Vec<VarId>> {
        let (class_of, count) = self.classes();
        let mut members: Vec<Vec<VarId>> = vec![Vec::new(); count];
        for (&v, &c) in &class_of {
            members[c].push(v);
        }
        let processed: Vec<bool> = members
            .iter()
            .map(|m| m.iter().all(|v| self.processed.contains(v)))
            .collect();
        let mut has_unprocessed_parent = vec![false; count];
        for (u, ss) in &self.sums {
            for (a, b) in ss {
                for child in [a, b] {
                    let (cu, cc) = (class_of[u], class_of[child]);
                    if cu != cc && !processed[cu] {
                        has_unprocessed_parent[cc] = true;
                    }
                }
            }
        }
        (0..count)
            .filter(|&c| !processed[c] && !has_unprocessed_parent[c])
            .min_by_key(|&c| members[c].iter().min().copied())
            .map(|c| members[c].clone())
    }

    /// Step 4: rule (v) from the sinks backward, then rule (vii).
    fn process_class(&mut self, class: &[VarId]) {
        let in_class: BTreeSet<VarId> = class.iter().copied().collect();
        // (v): redirect edges onto the sink, innermost first.
        loop {
            let mut fired = false;
            for &x in class {
                let Some((len_xy, y)) = self.out_edges(x).first().cloned() else { continue };
                let Some((len_yz, z)) = self.out_edges(y).first().cloned() else { continue };
                if !self.out_edges(z).is_empty() {
                    continue;
                }
                let edges = self.lateral.get_mut(&x).unwrap();
                edges[0] = (len_xy + len_yz, z);
                self.stats.rule_v += 1;
                fired = true;
                break;
            }
            if !fired {
                break;
            }
        }
        // (vii): propagate each node's sum over its lateral edge, consuming
        // the propagated sum. Fresh children are created only at a
        // childless sink.
        for &u in class {
            let Some((len, w)) = self.out_edges(u).first().cloned() else { continue };
            if u == w {
                continue;
            }
            let Some((u1, u2)) = self.sums.get(&u).and_then(|s| s.first()).copied() else {
                continue;
            };
            let existing = self.sums.get(&w).and_then(|s| s.first()).copied();
            let (w1, w2) = match existing {
                Some(pair) => pair,
                None => {
                    let w1 = self.vars.fresh();
                    let w2 = self.vars.fresh();
                    self.stats.fresh_vars += 2;
                    self.nodes.insert(w1);
                    self.nodes.insert(w2);
                    self.sums.entry(w).or_default().push((w1, w2));
                    (w1, w2)
                }
            };
            for (src, dst) in [(u1, w1), (u2, w2)] {
                let edges = self.lateral.entry(src).or_default();
                if !edges.iter().any(|(l, d)| *l == len && *d == dst) {
                    edges.push((len.clone(), dst));
                }
            }
            self.sums.get_mut(&u).unwrap().remove(0);
            self.stats.rule_vii += 1;
        }
        for &v in &in_class {
            self.processed.insert(v);
        }
        // After processing, the class must have collapsed onto one sink.
        #[cfg(debug_assertions)]
        {
            let sinks = class
                .iter()
                .filter(|v| self.out_edges(**v).is_empty())
                .count();
            debug_assert!(sinks <= 1, "class left with multiple sinks");
        }
    }

    fn any_rule_applicable(&self) -> bool {
        !self.pending.is_empty()
            || self.sums.values().any(|s| s.len() > 1)
            || self.find_rule_ii().is_some()
            || self.find_rule_iii().is_some()
            || self.find_rule_iv().is_some()
    }
}

/// Runs the typed decider.
pub fn decide_hom(typed: &TypedSystem) -> HomOutcome {
    let start = Instant::now();
    let mut run = HomRun {
        vars: typed.vars.clone(),
        nodes: BTreeSet::new(),
        lateral: BTreeMap::new(),
        sums: BTreeMap::new(),
        pending: Vec::new(),
        processed: BTreeSet::new(),
        stats: HomStats::default(),
    };
    for eq in &typed.eqs {
        match eq {
            TypedEq::Var(x, y) => {
                run.nodes.insert(*x);
                run.nodes.insert(*y);
                run.pending.push((*x, *y));
            }
            TypedEq::Sum(x, a, b) => {
                run.nodes.extend([*x, *a, *b]);
                run.sums.entry(*x).or_default().push((*a, *b));
            }
            TypedEq::H(x, y) => {
                run.nodes.extend([*x, *y]);
                run.lateral.entry(*x).or_default().push((BigUint::one(), *y));
            }
        }
    }
    run.stats.initial_classes = run.classes().1;

    let mut class_count_watermark = run.stats.initial_classes;
    // Processing is bounded by the class count, which never grows; treat a
    // runaway loop as an internal error rather than spinning.
    let mut rounds_left = 64 + 16 * run.nodes.len();
    let finish = |mut stats: HomStats, start: Instant, reason: Option<FailReason>| {
        stats.wall = start.elapsed();
        match reason {
            None => HomOutcome::Unifiable { stats },
            Some(reason) => HomOutcome::NotUnifiable { reason, stats },
        }
    };

    loop {
        run.cleanup();
        if let Some(reason) = run.check_cycles() {
            return finish(run.stats, start, Some(reason));
        }
        let count = run.classes().1;
        debug_assert!(count <= class_count_watermark, "class count increased");
        class_count_watermark = count;
        match run.select_class() {
            Some(class) => {
                assert!(rounds_left > 0, "class processing failed to converge");
                rounds_left -= 1;
                run.process_class(&class);
            }
            None => {
                debug_assert!(!run.any_rule_applicable());
                debug_assert!(
                    run.nodes.iter().all(|v| run.processed.contains(v)),
                    "no selectable class but unprocessed nodes remain"
                );
                return finish(run.stats, start, None);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::sigma;
    use crate::ta::{ta_unify, TaOutcome};

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
    fn typecheck_accepts_single_factor() {
        let s = sys(&[("X", "T*Y")]);
        let typed = typecheck(&s).unwrap();
        assert_eq!(typed.vars.name(typed.h_var), "T");
        assert_eq!(typed.eqs.len(), 1);
    }

    #[test]
    fn typecheck_rejects_factor_clash() {
        let s = sys(&[("X", "A*B"), ("Y", "B*C")]);
        assert!(typecheck(&s).is_err());
    }

    #[test]
    fn typecheck_accepts_sigma() {
        for n in 0..5 {
            let typed = typecheck(&sigma(n)).unwrap();
            assert_eq!(typed.vars.name(typed.h_var), "T");
        }
    }

    #[test]
    fn single_h_equation_unifies() {
        let s = sys(&[("X", "T*Y")]);
        let typed = typecheck(&s).unwrap();
        assert!(decide_hom(&typed).is_unifiable());
    }

    #[test]
    fn sum_under_own_image_is_propagation_cycle() {
        // {X = V+Y, X = h(Y)}
        let s = sys(&[("X", "V+Y"), ("X", "T*Y")]);
        let typed = typecheck(&s).unwrap();
        match decide_hom(&typed) {
            HomOutcome::NotUnifiable { reason, .. } => {
                assert_eq!(reason, FailReason::PropagationCycle)
            }
            other => panic!("expected propagation cycle, got {other:?}"),
        }
    }

    #[test]
    fn sigma_instances_unify() {
        for n in 0..4 {
            let typed = typecheck(&sigma(n)).unwrap();
            assert!(decide_hom(&typed).is_unifiable(), "sigma({n})");
        }
    }

    #[test]
    fn rule_count_growth_is_polynomial_on_sigma() {
        let pts: Vec<(f64, f64)> = (0..=8u32)
            .map(|n| {
                let s = sigma(n);
                let out = decide_hom(&typecheck(&s).unwrap());
                assert!(out.is_unifiable());
                ((s.eqs.len() as f64).ln(), (out.stats().total_rules() as f64).ln())
            })
            .collect();
        let slope = crate::report::log_log_slope_of(&pts).unwrap();
        assert!(slope <= 4.0, "slope {slope}");
    }

    #[test]
    fn agrees_with_baseline_on_typed_systems() {
        let cases: Vec<StandardSystem> = vec![
            sys(&[("X", "T*Y"), ("X", "A+B")]),
            sys(&[("X", "T*Y"), ("Y", "A+B"), ("A", "T*C")]),
            sys(&[("X", "X1+X2"), ("X", "T*X2")]),
            sys(&[("X", "T*Y"), ("Z", "T*Y"), ("X", "Z")]),
        ];
        for (i, s) in cases.iter().enumerate() {
            let typed = typecheck(s).unwrap_or_else(|e| panic!("case {i} not typed: {e}"));
            let hom = decide_hom(&typed).is_unifiable();
            let ta = matches!(ta_unify(s, 1_000_000), TaOutcome::Unifiable { .. });
            assert_eq!(hom, ta, "case {i}");
        }
    }
}
