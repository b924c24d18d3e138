//! Straight-line programs over label variables.
//!
//! A program is a grammar with productions `N -> a` and `N -> Nj Nk` that
//! generates exactly one string. Programs live in an append-only
//! [`SlpStore`]; structurally identical productions are stored once, so a
//! handle is just an index and creating the concatenation of two programs
//! adds at most one production. Produced-string lengths are cached as
//! arbitrary-precision naturals, since they reach `2^n` scale on the
//! benchmark families while the programs stay small.
//!
//! Equality, prefix and first-mismatch queries run without decompressing,
//! by a recursive position-indexed comparison memoized on
//! (nonterminal, nonterminal, offset).

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::vars::VarId;

/// Handle to a stored program (its top nonterminal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlpId(pub u32);

impl SlpId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Prod {
    Term(VarId),
    Cat(SlpId, SlpId),
}

#[derive(Debug, Clone)]
struct Entry {
    prod: Prod,
    len: BigUint,
    depth: u32,
    terminals: Rc<BTreeSet<VarId>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SlpError {
    #[error("suffix length {keep} out of range 1..={len}")]
    SuffixOutOfRange { keep: BigUint, len: BigUint },
    #[error("expansion of length {len} exceeds cap {cap}")]
    ExpansionTooLarge { len: BigUint, cap: u64 },
}

/// Append-only store of hash-consed productions.
#[derive(Debug, Clone, Default)]
pub struct SlpStore {
    entries: Vec<Entry>,
    dedup: HashMap<Prod, SlpId>,
}

impl SlpStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of productions in the store.
    pub fn total_productions(&self) -> usize {
        self.entries.len()
    }

    fn push(&mut self, prod: Prod, len: BigUint, depth: u32, terminals: Rc<BTreeSet<VarId>>) -> SlpId {
        if let Some(&id) = self.dedup.get(&prod) {
            return id;
        }
        let id = SlpId(self.entries.len() as u32);
        if let Prod::Cat(a, b) = prod {
            // Acyclicity: children always predate the new production.
            debug_assert!(a < id && b < id);
        }
        self.entries.push(Entry { prod, len, depth, terminals });
        self.dedup.insert(prod, id);
        id
    }

    /// The one-production program generating the single symbol `label`.
    /// Repeated calls with the same label return the same handle.
    pub fn atom(&mut self, label: VarId) -> SlpId {
        if let Some(&id) = self.dedup.get(&Prod::Term(label)) {
            return id;
        }
        let terminals = Rc::new(std::iter::once(label).collect::<BTreeSet<_>>());
        self.push(Prod::Term(label), BigUint::one(), 0, terminals)
    }

    /// The program generating `expand(i) · expand(j)`: one new top
    /// production over the union of the operands' productions.
    pub fn concat(&mut self, i: SlpId, j: SlpId) -> SlpId {
        let len = self.len(i) + self.len(j);
        let depth = self.depth(i).max(self.depth(j)) + 1;
        let terminals = self.union_terminals(i, j);
        let id = self.push(Prod::Cat(i, j), len, depth, terminals);
        #[cfg(debug_assertions)]
        {
            let union = self.reachable_union(&[i, j]).len();
            debug_assert_eq!(self.size(id), union + 1, "concat size identity");
            debug_assert!(self.depth(id) <= self.depth(i).max(self.depth(j)) + 1);
        }
        id
    }

    fn union_terminals(&self, i: SlpId, j: SlpId) -> Rc<BTreeSet<VarId>> {
        let (ti, tj) = (&self.entries[i.index()].terminals, &self.entries[j.index()].terminals);
        if tj.is_subset(ti) {
            return Rc::clone(ti);
        }
        if ti.is_subset(tj) {
            return Rc::clone(tj);
        }
        Rc::new(ti.union(tj).copied().collect())
    }

    pub fn len(&self, i: SlpId) -> &BigUint {
        &self.entries[i.index()].len
    }

    pub fn depth(&self, i: SlpId) -> u32 {
        self.entries[i.index()].depth
    }

    pub fn terminals(&self, i: SlpId) -> &BTreeSet<VarId> {
        &self.entries[i.index()].terminals
    }

    /// Number of productions reachable from `i` (the size `|S|`).
    pub fn size(&self, i: SlpId) -> usize {
        self.reachable_union(&[i]).len()
    }

    fn reachable_union(&self, roots: &[SlpId]) -> BTreeSet<SlpId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<SlpId> = roots.to_vec();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Prod::Cat(a, b) = self.entries[id.index()].prod {
                stack.push(a);
                stack.push(b);
            }
        }
        seen
    }

    /// The produced string, refused above `cap` symbols.
    pub fn expand(&self, i: SlpId, cap: u64) -> Result<Vec<VarId>, SlpError> {
        let len = self.len(i);
        if len > &BigUint::from(cap) {
            return Err(SlpError::ExpansionTooLarge { len: len.clone(), cap });
        }
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(id) = stack.pop() {
            match self.entries[id.index()].prod {
                Prod::Term(v) => out.push(v),
                Prod::Cat(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        Ok(out)
    }

    /// Symbol at 0-based `pos` of the produced string.
    pub fn symbol_at(&self, i: SlpId, pos: &BigUint) -> VarId {
        debug_assert!(pos < self.len(i));
        let mut id = i;
        let mut pos = pos.clone();
        loop {
            match self.entries[id.index()].prod {
                Prod::Term(v) => return v,
                Prod::Cat(a, b) => {
                    let la = self.len(a);
                    if &pos < la {
                        id = a;
                    } else {
                        pos -= la.clone();
                        id = b;
                    }
                }
            }
        }
    }

    /// Program producing the last `keep` symbols of `expand(i)`.
    ///
    /// Existing productions are never modified or deleted; at most
    /// `depth(i)` new productions are created and the depth does not grow.
    pub fn suffix(&mut self, i: SlpId, keep: &BigUint) -> Result<SlpId, SlpError> {
        if keep.is_zero() || keep > self.len(i) {
            return Err(SlpError::SuffixOutOfRange { keep: keep.clone(), len: self.len(i).clone() });
        }
        let out = self.suffix_inner(i, keep);
        #[cfg(debug_assertions)]
        {
            debug_assert!(self.size(out) <= self.size(i) + self.depth(i) as usize, "suffix size bound");
            debug_assert!(self.depth(out) <= self.depth(i), "suffix depth bound");
        }
        Ok(out)
    }

    fn suffix_inner(&mut self, i: SlpId, keep: &BigUint) -> SlpId {
        if keep == self.len(i) {
            return i;
        }
        match self.entries[i.index()].prod {
            Prod::Term(_) => unreachable!("keep is in range and shorter than a terminal"),
            Prod::Cat(a, b) => {
                let lb = self.len(b).clone();
                if keep <= &lb {
                    self.suffix_inner(b, keep)
                } else {
                    let left = self.suffix_inner(a, &(keep - lb));
                    // A plain top production; hash-consing dedups repeats.
                    let len = self.len(left) + self.len(b);
                    let depth = self.depth(left).max(self.depth(b)) + 1;
                    let terminals = self.union_terminals(left, b);
                    self.push(Prod::Cat(left, b), len, depth, terminals)
                }
            }
        }
    }

    /// Least position where the produced strings differ, with the two
    /// terminals at that position; `None` when the shorter string is a
    /// prefix of the longer.
    pub fn first_mismatch(&self, i: SlpId, j: SlpId) -> Option<(BigUint, VarId, VarId)> {
        let mut memo = HashMap::new();
        let pos = self.window_mismatch(i, j, &BigUint::zero(), &mut memo)?;
        let a = self.symbol_at(i, &pos);
        let b = self.symbol_at(j, &pos);
        Some((pos, a, b))
    }

    /// Whether the produced strings are identical, without decompression.
    pub fn equal(&self, i: SlpId, j: SlpId) -> bool {
        if i == j {
            return true;
        }
        if self.len(i) != self.len(j) {
            return false;
        }
        let mut memo = HashMap::new();
        self.window_mismatch(i, j, &BigUint::zero(), &mut memo).is_none()
    }

    /// Whether `expand(i)` is a prefix of `expand(j)`.
    pub fn is_prefix(&self, i: SlpId, j: SlpId) -> bool {
        if self.len(i) > self.len(j) {
            return false;
        }
        let mut memo = HashMap::new();
        self.window_mismatch(i, j, &BigUint::zero(), &mut memo).is_none()
    }

    /// Whether `expand(i)` is a strict prefix of `expand(j)`.
    pub fn is_strict_prefix(&self, i: SlpId, j: SlpId) -> bool {
        self.len(i) < self.len(j) && self.is_prefix(i, j)
    }

    /// Least `p < min(len(a) - off, len(b))` with
    /// `expand(a)[off + p] != expand(b)[p]`, or `None` if the windows agree.
    fn window_mismatch(
        &self,
        a: SlpId,
        b: SlpId,
        off: &BigUint,
        memo: &mut HashMap<(SlpId, SlpId, BigUint), Option<BigUint>>,
    ) -> Option<BigUint> {
        let la = self.len(a).clone();
        let lb = self.len(b).clone();
        debug_assert!(off < &la);
        let awin = &la - off;
        let w = awin.min(lb.clone());
        if w.is_zero() {
            return None;
        }
        if a == b && off.is_zero() {
            return None;
        }
        // Uniform strings over the same single terminal can never mismatch.
        {
            let ta = self.terminals(a);
            if ta.len() == 1 && *self.terminals(b) == *ta {
                return None;
            }
        }
        let key = (a, b, off.clone());
        if let Some(cached) = memo.get(&key) {
            return cached.clone();
        }
        let result = match self.entries[a.index()].prod {
            Prod::Cat(a1, a2) => {
                let la1 = self.len(a1).clone();
                if off >= &la1 {
                    self.window_mismatch(a2, b, &(off - la1), memo)
                } else if off + &w <= la1 {
                    self.window_mismatch(a1, b, off, memo)
                } else {
                    // Window straddles a1|a2: compare a1's tail against b's
                    // head, then flip roles for the remainder.
                    let w1 = &la1 - off;
                    match self.window_mismatch(a1, b, off, memo) {
                        Some(p) => Some(p),
                        None => self
                            .window_mismatch(b, a2, &w1, memo)
                            .map(|p| p + &w1),
                    }
                }
            }
            Prod::Term(x) => {
                // len(a) == 1, off == 0, window == 1.
                let y = self.symbol_at(b, &BigUint::zero());
                if x != y {
                    Some(BigUint::zero())
                } else {
                    None
                }
            }
        };
        memo.insert(key, result.clone());
        result
    }

    /// Text form of every production reachable from `roots`, ids ascending:
    /// `Ni -> a` or `Ni -> Nj Nk`.
    pub fn render(&self, roots: &[SlpId], name_of: impl Fn(VarId) -> String) -> String {
        let mut out = String::new();
        for id in self.reachable_union(roots) {
            match self.entries[id.index()].prod {
                Prod::Term(v) => {
                    let _ = writeln!(out, "N{} -> {}", id.0, name_of(v));
                }
                Prod::Cat(a, b) => {
                    let _ = writeln!(out, "N{} -> N{} N{}", id.0, a.0, b.0);
                }
            }
        }
        out
    }

    /// Deepest production reachable anywhere in the store.
    pub fn max_depth(&self) -> u32 {
        self.entries.iter().map(|e| e.depth).max().unwrap_or(0)
    }

    /// Longest produced string over the whole store.
    pub fn max_len(&self) -> BigUint {
        self.entries.iter().map(|e| e.len.clone()).max().unwrap_or_else(BigUint::zero)
    }

    /// Largest program size over the whole store.
    pub fn max_size(&self) -> usize {
        (0..self.entries.len()).map(|i| self.size(SlpId(i as u32))).max().unwrap_or(0)
    }
}
