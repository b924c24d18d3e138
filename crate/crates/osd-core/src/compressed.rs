//! The general polynomial decider.
//!
//! Variables become nodes of a dependency graph whose lateral edges carry
//! straight-line programs over the label variables (the left factors of
//! products). Saturation proceeds class by class in the top-down order of
//! the propagation quotient: path constraints are decided on the compressed
//! labels (equality, prefix, first mismatch), path computations are program
//! concatenation and suffix extraction, and the splitting rule propagates
//! sums without copying labels. Whenever two label variables get equated
//! the run applies the replacement to the equation system and restarts from
//! freshly built graphs; the label set shrinks at every restart, so the
//! number of restarts is bounded by the initial label count.
//!
//! Cycle checks see three edge kinds: lateral, downward (sums), and
//! relation edges from a path's source to every terminal of its label,
//! generated on demand just before each check.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use thiserror::Error;

use crate::graph;
use crate::slp::{SlpId, SlpStore};
use crate::subst::{extract_unifier, ExtractError, Substitution};
use crate::system::{Equation, Rhs, StandardSystem};
use crate::vars::{VarId, VarTable};
use crate::FailReason;

#[derive(Debug, Clone, Default)]
pub struct CompressedStats {
    pub rule_0: u64,
    pub rule_i: u64,
    pub rule_ii: u64,
    pub rule_iii: u64,
    pub rule_iv: u64,
    pub rule_v: u64,
    pub rule_vi: u64,
    pub rule_vii: u64,
    pub rule_viii: u64,
    pub rule_x: u64,
    pub restarts: u64,
    pub fresh_vars: u64,
    /// |V| at the start and end of the run.
    pub initial_label_vars: usize,
    pub final_label_vars: usize,
    pub initial_classes: usize,
    pub max_slp_size: usize,
    pub max_slp_depth: u32,
    pub max_label_len: BigUint,
    pub wall: Duration,
}

impl CompressedStats {
    pub fn total_rules(&self) -> u64 {
        self.rule_0
            + self.rule_i
            + self.rule_ii
            + self.rule_iii
            + self.rule_iv
            + self.rule_v
            + self.rule_vi
            + self.rule_vii
            + self.rule_viii
            + self.rule_x
    }

    pub fn render(&self) -> String {
        format!(
            "rule_0={}\nrule_i={}\nrule_ii={}\nrule_iii={}\nrule_iv={}\nrule_v={}\nrule_vi={}\nrule_vii={}\nrule_viii={}\nrule_x={}\nrestarts={}\nfresh_vars={}\ninitial_label_vars={}\nfinal_label_vars={}\ninitial_classes={}\nmax_slp_size={}\nmax_slp_depth={}\nmax_label_len_binary={}\nwall_us={}\n",
            self.rule_0,
            self.rule_i,
            self.rule_ii,
            self.rule_iii,
            self.rule_iv,
            self.rule_v,
            self.rule_vi,
            self.rule_vii,
            self.rule_viii,
            self.rule_x,
            self.restarts,
            self.fresh_vars,
            self.initial_label_vars,
            self.final_label_vars,
            self.initial_classes,
            self.max_slp_size,
            self.max_slp_depth,
            self.max_label_len.to_str_radix(2),
            self.wall.as_micros()
        )
    }
}

/// A dag-solved system with lateral paths kept compressed.
#[derive(Debug)]
pub struct CompressedSolvedForm {
    pub vars: VarTable,
    pub entries: Vec<SolvedEntry>,
    pub store: SlpStore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvedEntry {
    /// `x = y`
    Var(VarId, VarId),
    /// `x = a + b`
    Sum(VarId, VarId, VarId),
    /// `x = π × tail`
    Chain(VarId, SlpId, VarId),
}

#[derive(Debug, Error)]
pub enum MaterializeError {
    #[error("chain expansion exceeds the cap of {cap} nodes")]
    TooLarge { cap: u64 },
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

impl CompressedSolvedForm {
    /// Longest produced-string length over the lateral labels.
    pub fn max_label_len(&self) -> BigUint {
        self.entries
            .iter()
            .filter_map(|e| match e {
                SolvedEntry::Chain(_, label, _) => Some(self.store.len(*label).clone()),
                _ => None,
            })
            .max()
            .unwrap_or_default()
    }

    /// Distinct left variables and acyclicity, reading a chain's occurs-set
    /// as its tail plus the terminals of its label.
    pub fn is_dag_solved(&self) -> bool {
        let mut lhs = BTreeSet::new();
        for e in &self.entries {
            let l = match e {
                SolvedEntry::Var(x, _) | SolvedEntry::Sum(x, _, _) | SolvedEntry::Chain(x, _, _) => *x,
            };
            if !lhs.insert(l) {
                return false;
            }
        }
        let mut verts: BTreeSet<VarId> = BTreeSet::new();
        for e in &self.entries {
            match e {
                SolvedEntry::Var(x, y) => verts.extend([*x, *y]),
                SolvedEntry::Sum(x, a, b) => verts.extend([*x, *a, *b]),
                SolvedEntry::Chain(x, label, y) => {
                    verts.extend([*x, *y]);
                    verts.extend(self.store.terminals(*label).iter().copied());
                }
            }
        }
        let index: BTreeMap<VarId, usize> =
            verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut edges = Vec::new();
        for e in &self.entries {
            match e {
                SolvedEntry::Var(x, y) => edges.push((index[x], index[y])),
                SolvedEntry::Sum(x, a, b) => {
                    edges.push((index[x], index[a]));
                    edges.push((index[x], index[b]));
                }
                SolvedEntry::Chain(x, label, y) => {
                    edges.push((index[x], index[y]));
                    for t in self.store.terminals(*label) {
                        edges.push((index[x], index[t]));
                    }
                }
            }
        }
        !graph::has_cycle(verts.len(), edges)
    }

    /// Expands every chain into explicit product equations, with fresh
    /// intermediate variables, yielding an ordinary standard-form system.
    pub fn expand_to_system(&self, cap: u64) -> Result<StandardSystem, MaterializeError> {
        let budget = BigUint::from(cap);
        let total: BigUint = self
            .entries
            .iter()
            .filter_map(|e| match e {
                SolvedEntry::Chain(_, label, _) => Some(self.store.len(*label).clone()),
                _ => None,
            })
            .sum();
        if total > budget {
            return Err(MaterializeError::TooLarge { cap });
        }
        let mut sys = StandardSystem::new(self.vars.clone());
        for e in &self.entries {
            match e {
                SolvedEntry::Var(x, y) => sys.push(*x, Rhs::Var(*y)),
                SolvedEntry::Sum(x, a, b) => sys.push(*x, Rhs::Sum(*a, *b)),
                SolvedEntry::Chain(x, label, y) => {
                    let symbols = self
                        .store
                        .expand(*label, cap)
                        .map_err(|_| MaterializeError::TooLarge { cap })?;
                    let mut lhs = *x;
                    for (i, s) in symbols.iter().enumerate() {
                        let tail = if i + 1 == symbols.len() { *y } else { sys.vars.fresh() };
                        sys.push(lhs, Rhs::Prod(*s, tail));
                        lhs = tail;
                    }
                }
            }
        }
        Ok(sys)
    }

    /// The materialized most general unifier, when it fits under `cap`.
    pub fn materialize(&self, cap: u64) -> Result<Substitution, MaterializeError> {
        let sys = self.expand_to_system(cap)?;
        Ok(extract_unifier(&sys, cap)?)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut roots = Vec::new();
        for e in &self.entries {
            match e {
                SolvedEntry::Var(x, y) => {
                    out.push_str(&format!("{} -> {}\n", self.vars.name(*x), self.vars.name(*y)));
                }
                SolvedEntry::Sum(x, a, b) => {
                    out.push_str(&format!(
                        "{} -> ({} + {})\n",
                        self.vars.name(*x),
                        self.vars.name(*a),
                        self.vars.name(*b)
                    ));
                }
                SolvedEntry::Chain(x, label, y) => {
                    out.push_str(&format!(
                        "{} -> [slp:N{}] * {}\n",
                        self.vars.name(*x),
                        label.0,
                        self.vars.name(*y)
                    ));
                    roots.push(*label);
                }
            }
        }
        if !roots.is_empty() {
            out.push_str("SLP:\n");
            out.push_str(&self.store.render(&roots, |v| self.vars.name(v).to_string()));
        }
        out
    }
}

#[derive(Debug)]
pub enum CompressedOutcome {
    Unifiable {
        solved: CompressedSolvedForm,
        stats: CompressedStats,
    },
    NotUnifiable {
        reason: FailReason,
        stats: CompressedStats,
    },
}

impl CompressedOutcome {
    pub fn stats(&self) -> &CompressedStats {
        match self {
            CompressedOutcome::Unifiable { stats, .. }
            | CompressedOutcome::NotUnifiable { stats, .. } => stats,
        }
    }

    pub fn is_unifiable(&self) -> bool {
        matches!(self, CompressedOutcome::Unifiable { .. })
    }
}

struct Sat {
    vars: VarTable,
    /// The equation system S (sums and products only, canonical variables).
    s_eqs: Vec<Equation>,
    /// Bindings accumulated by rule (0): replaced -> survivor.
    merges: Vec<(VarId, VarId)>,
    label_vars: BTreeSet<VarId>,
    store: SlpStore,

    // Graph state, rebuilt from `s_eqs` at every restart.
    nodes: BTreeSet<VarId>,
    lateral: BTreeMap<VarId, Vec<(SlpId, VarId)>>,
    sums: BTreeMap<VarId, Vec<(VarId, VarId)>>,
    pending: Vec<(VarId, VarId)>,
    processed: BTreeSet<VarId>,
    restart: bool,
    fresh_this_phase: u64,
    /// Class-count watermark within the current phase.
    phase_class_watermark: usize,
    /// Class-count watermark across rebuilds.
    build_class_watermark: usize,
    /// Label-set watermark across rebuilds.
    label_watermark: usize,

    stats: CompressedStats,
}

impl Sat {
    fn out_edges(&self, v: VarId) -> &[(SlpId, VarId)] {
        self.lateral.get(&v).map(|e| e.as_slice()).unwrap_or(&[])
    }

    /// Step 1: rebuild both graphs from the current system.
    fn build(&mut self) {
        self.lateral.clear();
        self.sums.clear();
        self.nodes.clear();
        self.processed.clear();
        self.restart = false;
        self.fresh_this_phase = 0;
        self.label_vars = self
            .s_eqs
            .iter()
            .filter_map(|eq| match eq.rhs {
                Rhs::Prod(l, _) => Some(l),
                _ => None,
            })
            .collect();
        debug_assert!(
            self.label_vars.iter().all(|v| self.vars.is_original(*v)),
            "fresh variables must never become labels"
        );
        debug_assert!(self.label_vars.len() <= self.label_watermark, "label set grew");
        self.label_watermark = self.label_vars.len();
        for eq in &self.s_eqs {
            self.nodes.insert(eq.lhs);
            self.nodes.extend(eq.rhs.vars());
        }
        let atoms: BTreeMap<VarId, SlpId> = self
            .label_vars
            .iter()
            .map(|&l| (l, self.store.atom(l)))
            .collect();
        for eq in &self.s_eqs {
            match eq.rhs {
                Rhs::Var(_) => unreachable!("variable equations are folded into merges"),
                Rhs::Sum(a, b) => self.sums.entry(eq.lhs).or_default().push((a, b)),
                Rhs::Prod(l, r) => {
                    self.lateral.entry(eq.lhs).or_default().push((atoms[&l], r));
                }
            }
        }
        let classes = self.classes().1;
        debug_assert!(
            classes <= self.build_class_watermark,
            "class count grew across a rebuild"
        );
        self.build_class_watermark = classes;
        self.phase_class_watermark = classes;
    }

    fn rank(&self, v: VarId) -> (bool, bool, i64) {
        (
            self.label_vars.contains(&v),
            self.vars.is_original(v),
            -(v.0 as i64),
        )
    }

    /// Rule (0): applies `a = b` to the system and the graphs. The label
    /// variable survives over a non-label, originals over fresh, then the
    /// older id. Equating two labels schedules a restart.
    fn merge(&mut self, a: VarId, b: VarId) {
        if a == b {
            return;
        }
        self.stats.rule_0 += 1;
        let both_labels = self.label_vars.contains(&a) && self.label_vars.contains(&b);
        let (survivor, replaced) = if self.rank(a) >= self.rank(b) { (a, b) } else { (b, a) };
        if both_labels {
            self.restart = true;
            self.label_vars.remove(&replaced);
        }
        self.merges.push((replaced, survivor));

        // System side.
        for eq in self.s_eqs.iter_mut() {
            if eq.lhs == replaced {
                eq.lhs = survivor;
            }
            eq.rhs = eq.rhs.map(|v| if v == replaced { survivor } else { v });
        }
        let mut seen = BTreeSet::new();
        self.s_eqs.retain(|eq| seen.insert((eq.lhs, eq.rhs)));

        // Graph side. The survivor inherits edges and may need another
        // processing pass, so its processed mark is dropped too.
        self.nodes.remove(&replaced);
        self.processed.remove(&replaced);
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

    /// Step 2: the composite cleanup rule. Variable merges first, then sum
    /// cancellation (i), then the two equal-label cancellations (ii) and
    /// (iii). Runs to fixpoint; merges keep draining even once a restart is
    /// scheduled, but no further cancellation fires then.
    fn cleanup(&mut self) {
        loop {
            if let Some((a, b)) = self.pending.pop() {
                self.merge(a, b);
                continue;
            }
            if self.restart {
                return;
            }
            // (i): two sums defining one node.
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
            // (iii): two outgoing edges with string-equal labels. Same
            // target: drop the duplicate edge; different targets: equate
            // them and keep one edge.
            if let Some((u, i, j)) = self.find_equal_out_pair() {
                let edges = self.lateral.get_mut(&u).unwrap();
                let (_, y) = edges.remove(j);
                let (_, z) = edges[i];
                self.stats.rule_iii += 1;
                if y != z {
                    self.pending.push((y, z));
                }
                continue;
            }
            // (ii): string-equal edges into one target from two sources.
            if let Some((x, z)) = self.find_equal_in_pair() {
                self.stats.rule_ii += 1;
                self.pending.push((x, z));
                continue;
            }
            return;
        }
    }

    fn find_equal_out_pair(&self) -> Option<(VarId, usize, usize)> {
        for (&u, edges) in &self.lateral {
            for i in 0..edges.len() {
                for j in (i + 1)..edges.len() {
                    let (pi, _) = edges[i];
                    let (eta, _) = edges[j];
                    if self.store.len(pi) == self.store.len(eta) && self.store.equal(pi, eta) {
                        return Some((u, i, j));
                    }
                }
            }
        }
        None
    }

    fn find_equal_in_pair(&self) -> Option<(VarId, VarId)> {
        let mut incoming: BTreeMap<VarId, Vec<(SlpId, VarId)>> = BTreeMap::new();
        for (&src, edges) in &self.lateral {
            for (label, dst) in edges {
                incoming.entry(*dst).or_default().push((*label, src));
            }
        }
        for edges in incoming.values() {
            for i in 0..edges.len() {
                for j in (i + 1)..edges.len() {
                    let (pi, x) = edges[i];
                    let (eta, z) = edges[j];
                    if x != z && self.store.len(pi) == self.store.len(eta) && self.store.equal(pi, eta)
                    {
                        return Some((x, z));
                    }
                }
            }
        }
        None
    }

    /// Step 3, rule (ix): relation edges are materialized here only.
    fn check_cycles(&self) -> Option<FailReason> {
        let nodes: Vec<VarId> = self.nodes.iter().copied().collect();
        let index: BTreeMap<VarId, usize> = nodes.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut edges = BTreeSet::new();
        for (src, outs) in &self.lateral {
            for (label, dst) in outs {
                edges.insert((index[src], index[dst]));
                for t in self.store.terminals(*label) {
                    edges.insert((index[src], index[t]));
                }
            }
        }
        for (u, ss) in &self.sums {
            for (a, b) in ss {
                edges.insert((index[u], index[a]));
                edges.insert((index[u], index[b]));
            }
        }
        if graph::has_cycle(nodes.len(), edges) {
            return Some(FailReason::DependencyCycle);
        }
        let (class_of, count) = self.classes();
        let mut cedges = BTreeSet::new();
        for (u, ss) in &self.sums {
            for (a, b) in ss {
                cedges.insert((class_of[u], class_of[a]));
                cedges.insert((class_of[u], class_of[b]));
            }
        }
        if graph::has_cycle(count, cedges) {
            return Some(FailReason::PropagationCycle);
        }
        None
    }

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

    fn is_solved(&self) -> bool {
        self.pending.is_empty()
            && self.nodes.iter().all(|v| {
                let defs = self.out_edges(*v).len()
                    + self.sums.get(v).map(|s| s.len()).unwrap_or(0);
                defs <= 1
            })
    }

    fn select_class(&mut self) -> Option<Vec<VarId>> {
        let (class_of, count) = self.classes();
        debug_assert!(count <= self.phase_class_watermark, "class count grew");
        self.phase_class_watermark = self.phase_class_watermark.min(count);
        let mut members: Vec<Vec<VarId>> = vec![Vec::new(); count];
        for (&v, &c) in &class_of {
            members[c].push(v);
        }
        let processed: Vec<bool> = members
            .iter()
            .map(|m| m.iter().all(|v| self.processed.contains(v)))
            .collect();
        let mut blocked = vec![false; count];
        for (u, ss) in &self.sums {
            for (a, b) in ss {
                for child in [a, b] {
                    let (cu, cc) = (class_of[u], class_of[child]);
                    if cu != cc && !processed[cu] {
                        blocked[cc] = true;
                    }
                }
            }
        }
        (0..count)
            .filter(|&c| !processed[c] && !blocked[c])
            .min_by_key(|&c| members[c].iter().min().copied())
            .map(|c| members[c].clone())
    }

    /// Nodes of the class ordered sources-first along the lateral edges.
    fn topo_order(&self, class: &[VarId]) -> Vec<VarId> {
        let in_class: BTreeSet<VarId> = class.iter().copied().collect();
        let mut indeg: BTreeMap<VarId, usize> = class.iter().map(|&v| (v, 0)).collect();
        for &v in class {
            for (_, dst) in self.out_edges(v) {
                if in_class.contains(dst) {
                    *indeg.get_mut(dst).unwrap() += 1;
                }
            }
        }
        let mut order = Vec::new();
        let mut queue: Vec<VarId> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        while let Some(v) = queue.pop() {
            order.push(v);
            for (_, dst) in self.out_edges(v).to_vec() {
                if let Some(d) = indeg.get_mut(&dst) {
                    *d = d.saturating_sub(1);
                    if *d == 0 && !order.contains(&dst) && !queue.contains(&dst) {
                        queue.push(dst);
                    }
                }
            }
        }
        // Lateral cycles leave leftovers; append them so the caller still
        // terminates (the next cycle check fails the run).
        for &v in class {
            if !order.contains(&v) {
                order.push(v);
            }
        }
        order
    }

    /// Step 4: `(v + vi)(iv)!(x)!(viii)(vii)!`, iterated until the class is
    /// quiet or a restart is scheduled.
    fn process_class(&mut self, class: &[VarId]) {
        let mut guard = 64 + 8 * (self.nodes.len() + self.store.total_productions());
        loop {
            guard -= 1;
            assert!(guard > 0, "class processing failed to converge");
            // (v)/(vi): find a mismatched label pair on two edges leaving
            // one node and equate the mismatched terminals.
            if let Some((pi, eta, same_target)) = self.find_mismatch_pair(class) {
                let (_, a, b) = self
                    .store
                    .first_mismatch(pi, eta)
                    .expect("mismatch pair must differ in the window");
                if same_target {
                    self.stats.rule_v += 1;
                } else {
                    self.stats.rule_vi += 1;
                }
                self.merge(a, b);
                debug_assert!(self.restart, "label merge must schedule a restart");
                return;
            }
            let mut changed = false;
            // (iv)!: sources first.
            for v in self.topo_order(class) {
                while let Some((i, j)) = self.find_prefix_pair(v) {
                    let (eta, y) = self.out_edges(v)[i];
                    let (pi, z) = self.out_edges(v)[j];
                    let keep = self.store.len(pi) - self.store.len(eta);
                    let suffix = self.store.suffix(pi, &keep).expect("strict prefix");
                    self.lateral.get_mut(&v).unwrap().remove(i);
                    self.lateral.entry(y).or_default().push((suffix, z));
                    self.processed.remove(&y);
                    self.stats.rule_iv += 1;
                    changed = true;
                }
            }
            // (x)!: compose toward the sink, innermost edge first.
            loop {
                let mut fired = false;
                for &x in class {
                    let Some(&(pi, y)) = self.out_edges(x).first() else { continue };
                    if self.out_edges(x).len() != 1 {
                        continue;
                    }
                    let ys = self.out_edges(y);
                    if ys.len() != 1 {
                        continue;
                    }
                    let (eta, z) = ys[0];
                    if !self.out_edges(z).is_empty() {
                        continue;
                    }
                    let cat = self.store.concat(pi, eta);
                    self.lateral.get_mut(&x).unwrap()[0] = (cat, z);
                    self.stats.rule_x += 1;
                    fired = true;
                    changed = true;
                    break;
                }
                if !fired {
                    break;
                }
            }
            // (viii): create the sink's sum, at most once per class pass,
            // only when the sink has no children and a sum sits above it.
            let sinks: Vec<VarId> = class
                .iter()
                .copied()
                .filter(|v| self.out_edges(*v).is_empty() && self.nodes.contains(v))
                .collect();
            if let [sink] = sinks.as_slice() {
                let sink = *sink;
                let has_children = self.sums.get(&sink).map(|s| !s.is_empty()).unwrap_or(false);
                if !has_children {
                    let needs_split = class.iter().any(|&u| {
                        !self.out_edges(u).is_empty()
                            && self.out_edges(u).iter().any(|(_, d)| *d == sink)
                            && self.sums.get(&u).map(|s| !s.is_empty()).unwrap_or(false)
                    });
                    if needs_split {
                        let w1 = self.vars.fresh();
                        let w2 = self.vars.fresh();
                        self.stats.fresh_vars += 2;
                        self.fresh_this_phase += 2;
                        self.nodes.extend([w1, w2]);
                        self.sums.entry(sink).or_default().push((w1, w2));
                        self.stats.rule_viii += 1;
                        changed = true;
                    }
                }
            }
            // (vii)!: propagate a node's sum over its lateral edge into the
            // target's sum. The propagated sum is consumed: `U = U1+U2`
            // does not survive the rule, just as the baseline's splitting
            // rule drops the sum it splits.
            for &u in class {
                let Some(&(eta, w)) = self.out_edges(u).first() else { continue };
                if self.out_edges(u).len() != 1 || u == w {
                    continue;
                }
                let Some((u1, u2)) = self.sums.get(&u).and_then(|s| s.first()).copied() else {
                    continue;
                };
                let Some((w1, w2)) = self.sums.get(&w).and_then(|s| s.first()).copied() else {
                    continue;
                };
                for (src, dst) in [(u1, w1), (u2, w2)] {
                    let edges = self.lateral.entry(src).or_default();
                    if !edges.iter().any(|(l, d)| *l == eta && *d == dst) {
                        edges.push((eta, dst));
                        self.processed.remove(&src);
                    }
                }
                self.sums.get_mut(&u).unwrap().remove(0);
                self.stats.rule_vii += 1;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        for &v in class {
            if self.nodes.contains(&v) {
                self.processed.insert(v);
            }
        }
        #[cfg(debug_assertions)]
        {
            let sinks = class
                .iter()
                .filter(|v| self.nodes.contains(v) && self.out_edges(**v).is_empty())
                .count();
            debug_assert!(sinks <= 1, "processed class kept multiple sinks");
            debug_assert!(
                self.fresh_this_phase <= 2 * self.phase_class_watermark as u64,
                "fresh variables exceeded twice the class count"
            );
        }
    }

    /// Two edges leaving one class node whose labels are neither equal nor
    /// prefix-related: their first mismatch must be equated. Returns the
    /// pair and whether the edges share their target.
    fn find_mismatch_pair(&self, class: &[VarId]) -> Option<(SlpId, SlpId, bool)> {
        for &v in class {
            let edges = self.out_edges(v);
            for i in 0..edges.len() {
                for j in (i + 1)..edges.len() {
                    let (pi, y) = edges[i];
                    let (eta, z) = edges[j];
                    if self.store.first_mismatch(pi, eta).is_some() {
                        return Some((pi, eta, y == z));
                    }
                }
            }
        }
        None
    }

    fn find_prefix_pair(&self, v: VarId) -> Option<(usize, usize)> {
        let edges = self.out_edges(v);
        for i in 0..edges.len() {
            for j in 0..edges.len() {
                if i == j {
                    continue;
                }
                let (eta, _) = edges[i];
                let (pi, _) = edges[j];
                if self.store.is_strict_prefix(eta, pi) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn solved_form(mut self) -> CompressedSolvedForm {
        let mut entries = Vec::new();
        for (replaced, survivor) in &self.merges {
            if self.vars.is_original(*replaced) {
                entries.push(SolvedEntry::Var(*replaced, *survivor));
            }
        }
        let lateral = std::mem::take(&mut self.lateral);
        for (src, edges) in &lateral {
            for (label, dst) in edges {
                entries.push(SolvedEntry::Chain(*src, *label, *dst));
            }
        }
        let sums = std::mem::take(&mut self.sums);
        for (u, ss) in &sums {
            for (a, b) in ss {
                entries.push(SolvedEntry::Sum(*u, *a, *b));
            }
        }
        CompressedSolvedForm { vars: self.vars, entries, store: self.store }
    }
}

/// Runs the compressed decider.
pub fn decide(sys: &StandardSystem) -> CompressedOutcome {
    let start = Instant::now();
    let mut sat = Sat {
        vars: sys.vars.clone(),
        s_eqs: Vec::new(),
        merges: Vec::new(),
        label_vars: BTreeSet::new(),
        store: SlpStore::new(),
        nodes: BTreeSet::new(),
        lateral: BTreeMap::new(),
        sums: BTreeMap::new(),
        pending: Vec::new(),
        processed: BTreeSet::new(),
        restart: false,
        fresh_this_phase: 0,
        phase_class_watermark: usize::MAX,
        build_class_watermark: usize::MAX,
        label_watermark: usize::MAX,
        stats: CompressedStats::default(),
    };
    // Fold the input's variable equations into merges up front; everything
    // else is the persistent system S.
    let mut var_eqs = Vec::new();
    for eq in &sys.eqs {
        match eq.rhs {
            Rhs::Var(v) => var_eqs.push((eq.lhs, v)),
            _ => sat.s_eqs.push(*eq),
        }
    }
    {
        let mut seen = BTreeSet::new();
        sat.s_eqs.retain(|eq| seen.insert((eq.lhs, eq.rhs)));
    }
    sat.label_vars = sat
        .s_eqs
        .iter()
        .filter_map(|eq| match eq.rhs {
            Rhs::Prod(l, _) => Some(l),
            _ => None,
        })
        .collect();
    for (a, b) in var_eqs {
        sat.merge(a, b);
    }
    sat.restart = false;
    sat.stats.initial_label_vars = sat.label_vars.len();

    let mut first_build = true;
    let label_budget = sat.stats.initial_label_vars as u64 + 1;
    let finish_stats = |sat: &mut Sat, start: Instant| {
        sat.stats.final_label_vars = sat.label_vars.len();
        sat.stats.max_slp_size = sat.store.max_size();
        sat.stats.max_slp_depth = sat.store.max_depth();
        sat.stats.max_label_len = sat.store.max_len();
        sat.stats.wall = start.elapsed();
        sat.stats.clone()
    };

    loop {
        sat.build();
        if first_build {
            sat.stats.initial_classes = sat.phase_class_watermark;
            first_build = false;
        }
        let mut phase_guard = 1024 + 64 * sat.nodes.len();
        loop {
            phase_guard -= 1;
            assert!(phase_guard > 0, "saturation failed to converge");
            sat.cleanup();
            if sat.restart {
                break;
            }
            if let Some(reason) = sat.check_cycles() {
                let stats = finish_stats(&mut sat, start);
                return CompressedOutcome::NotUnifiable { reason, stats };
            }
            if sat.is_solved() {
                let stats = finish_stats(&mut sat, start);
                let solved = sat.solved_form();
                debug_assert!(solved.is_dag_solved());
                return CompressedOutcome::Unifiable { solved, stats };
            }
            match sat.select_class() {
                Some(class) => {
                    sat.process_class(&class);
                    if sat.restart {
                        break;
                    }
                }
                None => unreachable!("unsolved graph with every class processed"),
            }
        }
        sat.stats.restarts += 1;
        assert!(
            sat.stats.restarts < label_budget,
            "more restarts than initial label variables"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::sigma;
    use crate::subst::{verify_unifier, DEFAULT_CAP};
    use crate::ta::{ta_unify, TaOutcome};
    use crate::vars::VarTable;
    use num_traits::One;

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
    fn single_var_equation() {
        let s = sys(&[("X", "Y")]);
        let out = decide(&s);
        assert!(out.is_unifiable());
    }

    #[test]
    fn propagation_cycle_rejected() {
        let s = sys(&[("X", "X1+X2"), ("X", "V*X2")]);
        match decide(&s) {
            CompressedOutcome::NotUnifiable { reason, .. } => {
                assert_eq!(reason, FailReason::PropagationCycle)
            }
            other => panic!("expected propagation cycle, got {other:?}"),
        }
    }

    #[test]
    fn relation_edges_catch_label_occurs_check() {
        // W's label contains U through the chain, so the relation edge
        // closes a dependency cycle. The baseline agrees.
        let s = sys(&[("U", "A*V"), ("V", "B*W"), ("W", "U*Z")]);
        match decide(&s) {
            CompressedOutcome::NotUnifiable { reason, .. } => {
                assert_eq!(reason, FailReason::DependencyCycle)
            }
            other => panic!("expected dependency cycle, got {other:?}"),
        }
        assert!(matches!(
            ta_unify(&s, 100_000),
            TaOutcome::NotUnifiable { reason: FailReason::DependencyCycle, .. }
        ));
    }

    #[test]
    fn parallel_unequal_labels_equate_and_restart() {
        let s = sys(&[("X", "A*Y"), ("X", "B*Y")]);
        match decide(&s) {
            CompressedOutcome::Unifiable { solved, stats } => {
                assert_eq!(stats.rule_v, 1);
                assert_eq!(stats.restarts, 1);
                assert_eq!(stats.final_label_vars, 1);
                // A survives, B is bound to it.
                let a = solved.vars.lookup("A").unwrap();
                let b = solved.vars.lookup("B").unwrap();
                assert!(solved.entries.contains(&SolvedEntry::Var(b, a)));
            }
            other => panic!("expected unifiable, got {other:?}"),
        }
    }

    #[test]
    fn splitting_example_agrees_with_baseline() {
        let s = sys(&[("U", "V*W"), ("U", "X+Y")]);
        let CompressedOutcome::Unifiable { solved, stats } = decide(&s) else {
            panic!("must unify")
        };
        assert_eq!(stats.rule_viii, 1, "one sum created at the childless sink");
        assert_eq!(stats.fresh_vars, 2);
        let subst = solved.materialize(DEFAULT_CAP).unwrap();
        assert!(verify_unifier(&s, &subst, DEFAULT_CAP).is_ok());
    }

    #[test]
    fn solved_input_stays_itself() {
        let s = sys(&[("X", "Y+Z")]);
        let CompressedOutcome::Unifiable { solved, stats } = decide(&s) else {
            panic!("must unify")
        };
        assert_eq!(stats.total_rules(), 0);
        let x = solved.vars.lookup("X").unwrap();
        let y = solved.vars.lookup("Y").unwrap();
        let z = solved.vars.lookup("Z").unwrap();
        assert_eq!(solved.entries, vec![SolvedEntry::Sum(x, y, z)]);
    }

    #[test]
    fn rule_zero_prefers_the_label_variable() {
        // A = X equates a non-label with the label X; the label survives
        // even though A is older.
        let s = sys(&[("A", "X"), ("B", "X*C")]);
        let CompressedOutcome::Unifiable { solved, .. } = decide(&s) else {
            panic!("must unify")
        };
        let a = solved.vars.lookup("A").unwrap();
        let x = solved.vars.lookup("X").unwrap();
        assert!(solved.entries.contains(&SolvedEntry::Var(a, x)));
    }

    #[test]
    fn sigma_small_runs_match_the_expected_label_growth() {
        for n in 0..4u32 {
            let s = sigma(n);
            match decide(&s) {
                CompressedOutcome::Unifiable { solved, stats } => {
                    let expect = (BigUint::one() << (n + 2)) - BigUint::one();
                    assert_eq!(solved.max_label_len(), expect, "sigma({n})");
                    assert_eq!(stats.restarts, 0, "single label variable, no restarts");
                }
                other => panic!("sigma({n}) should unify, got {other:?}"),
            }
        }
    }

    #[test]
    fn sigma_zero_solved_form_verifies_against_input() {
        let s = sigma(0);
        let CompressedOutcome::Unifiable { solved, .. } = decide(&s) else {
            panic!("sigma(0) unifies")
        };
        assert!(solved.is_dag_solved());
        let subst = solved.materialize(DEFAULT_CAP).unwrap();
        assert!(verify_unifier(&s, &subst, DEFAULT_CAP).is_ok());
    }

    #[test]
    fn suffix_rule_fires_when_a_propagated_label_extends_an_edge() {
        // U's composed label T·S propagates onto U1, which already has its
        // own T edge: T is a strict prefix of T·S, so the suffix rule moves
        // an S edge below it.
        let s = sys(&[
            ("U", "T*M"),
            ("M", "S*W"),
            ("U", "U1+U2"),
            ("W", "W1+W2"),
            ("U1", "T*K"),
        ]);
        match decide(&s) {
            CompressedOutcome::Unifiable { solved, stats } => {
                assert!(stats.rule_iv >= 1, "expected the suffix rule to fire");
                let subst = solved.materialize(DEFAULT_CAP).unwrap();
                assert!(verify_unifier(&s, &subst, DEFAULT_CAP).is_ok());
            }
            other => panic!("expected unifiable, got {other:?}"),
        }
        assert!(ta_unify(&s, 1_000_000).is_unifiable());
    }

    #[test]
    fn chain_heavy_corpus_agrees_with_baseline() {
        use crate::generate::{random_system, GenSpec};
        let mut mismatch_rules = 0u64;
        for seed in 0..300u64 {
            let spec = GenSpec {
                seed,
                vars: 4 + (seed % 8) as u32,
                sums: 1 + (seed % 3) as u32,
                prods: 2 + (seed % 6) as u32,
                labels: 1 + (seed % 2) as u32,
                share_lhs: 0.45,
                acyclic: seed % 3 != 0,
            };
            let s = random_system(&spec);
            let out = decide(&s);
            mismatch_rules += out.stats().rule_v + out.stats().rule_vi;
            match ta_unify(&s, 10_000_000) {
                TaOutcome::BudgetExceeded { .. } => {}
                ta => assert_eq!(ta.is_unifiable(), out.is_unifiable(), "seed {seed}"),
            }
        }
        assert!(mismatch_rules > 0, "corpus never exercised the mismatch rules");
    }

    #[test]
    fn decision_agrees_with_baseline_on_failure_examples() {
        let cases = [
            vec![("Z", "V2+V3"), ("Z", "V1*V3")],
            vec![("X", "Y+Z"), ("Y", "X*W")],
            vec![("X", "X1+X2"), ("X", "V*X2")],
        ];
        for case in &cases {
            let s = sys(case);
            let slp = decide(&s).is_unifiable();
            let ta = ta_unify(&s, 100_000).is_unifiable();
            assert_eq!(slp, ta, "case {case:?}");
        }
    }
}
