//! Small graph helpers shared by the deciders: DFS cycle detection over an
//! edge list, cycle witness extraction, and a union-find with a caller-chosen
//! representative policy.

/// Whether the directed graph on `n` nodes with the given edges has a cycle.
/// Self-loops count as cycles.
pub fn has_cycle(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    find_cycle(n, edges).is_some()
}

/// Returns some cycle as a node sequence `v0 -> v1 -> ... -> v0`, or `None`.
pub fn find_cycle(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Option<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; n];
    let mut parent = vec![usize::MAX; n];

    // Iterative DFS; the grey set is the current stack path.
    for start in 0..n {
        if mark[start] != Mark::White {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Grey;
        while !stack.is_empty() {
            let (v, next) = {
                let frame = stack.last_mut().unwrap();
                let pair = *frame;
                frame.1 += 1;
                pair
            };
            if next < adj[v].len() {
                let w = adj[v][next];
                match mark[w] {
                    Mark::White => {
                        parent[w] = v;
                        mark[w] = Mark::Grey;
                        stack.push((w, 0));
                    }
                    Mark::Grey => {
                        // Back edge v -> w; walk parents back to w.
                        let mut cycle = vec![w];
                        let mut cur = v;
                        while cur != w {
                            cycle.push(cur);
                            cur = parent[cur];
                        }
                        cycle.push(w);
                        cycle.reverse();
                        return Some(cycle);
                    }
                    Mark::Black => {}
                }
            } else {
                mark[v] = Mark::Black;
                stack.pop();
            }
        }
    }
    None
}

/// Union-find over dense `u32` ids. `union` takes the winning representative
/// explicitly so callers can encode their orientation policy.
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect() }
    }

    pub fn grow(&mut self, n: usize) {
        while self.parent.len() < n {
            self.parent.push(self.parent.len() as u32);
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Merges the classes of `winner` and `loser`, keeping `winner`'s root
    /// as representative. Returns true if the classes were distinct.
    pub fn union_into(&mut self, winner: u32, loser: u32) -> bool {
        let a = self.find(winner);
        let b = self.find(loser);
        if a == b {
            return false;
        }
        self.parent[b as usize] = a;
        true
    }

    pub fn same(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_has_no_cycle() {
        assert!(!has_cycle(0, Vec::new()));
        assert!(!has_cycle(3, Vec::new()));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        assert!(has_cycle(2, vec![(1, 1)]));
        assert_eq!(find_cycle(2, vec![(1, 1)]), Some(vec![1, 1]));
    }

    #[test]
    fn two_cycle_found() {
        let cyc = find_cycle(3, vec![(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(cyc.first(), cyc.last());
        assert!(cyc.len() >= 3);
    }

    #[test]
    fn dag_is_acyclic() {
        assert!(!has_cycle(4, vec![(0, 1), (0, 2), (1, 3), (2, 3)]));
    }

    #[test]
    fn union_find_keeps_winner() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union_into(2, 3));
        assert_eq!(uf.find(3), 2);
        assert!(!uf.union_into(3, 2));
        assert!(uf.same(2, 3));
    }
}
