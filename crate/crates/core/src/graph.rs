//! Immutable undirected simple graphs in compressed adjacency form.
//!
//! Every undirected edge `{i, u}` appears twice, once in the row of `i` and
//! once in the row of `u`. The position of `u` inside the row of `i` is the
//! directed-edge index of `(i, u)`; message passing stores `R_{i->u}` at that
//! slot. `reverse[e]` gives the slot of the opposite direction.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    reverse: Vec<u32>,
}

/// Counts of input edges discarded while building a simple graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Build a graph from an arbitrary undirected edge list. Self-loops and
    /// repeated edges (in either orientation) are dropped and counted.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<(Graph, BuildStats)> {
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!("node count {n} exceeds u32 range")));
        }
        let mut stats = BuildStats::default();
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::NodeOutOfRange { id: w as u64, n });
                }
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        if total > u32::MAX as usize {
            return Err(Error::TooLarge {
                directed_edges: total as u64,
                cap: u32::MAX as u64,
            });
        }
        let mut neighbors = vec![0u32; total];
        let mut fill = offsets[..n].to_vec();
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        drop(fill);

        // sort and dedup each row, compacting in place
        let mut write = 0usize;
        let mut new_offsets = Vec::with_capacity(n + 1);
        new_offsets.push(0usize);
        let mut removed_slots = 0usize;
        for i in 0..n {
            let (start, end) = (offsets[i], offsets[i + 1]);
            neighbors[start..end].sort_unstable();
            let mut last: Option<u32> = None;
            for r in start..end {
                let w = neighbors[r];
                if last == Some(w) {
                    removed_slots += 1;
                    continue;
                }
                last = Some(w);
                neighbors[write] = w;
                write += 1;
            }
            new_offsets.push(write);
        }
        neighbors.truncate(write);
        neighbors.shrink_to_fit();
        stats.duplicates = removed_slots / 2;
        let reverse = build_reverse(&new_offsets, &neighbors);
        Ok((
            Graph {
                offsets: new_offsets,
                neighbors,
                reverse,
            },
            stats,
        ))
    }

    /// Build from edges known to be simple (no loops, no repeats). Used by the
    /// samplers, which produce each pair at most once.
    pub(crate) fn from_simple_edges(n: usize, edges: Vec<(u32, u32)>) -> Result<Graph> {
        let (g, stats) = Graph::from_edges(n, &edges)?;
        debug_assert_eq!(stats, BuildStats::default());
        Ok(g)
    }

    pub fn empty(n: usize) -> Graph {
        Graph {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
            reverse: Vec::new(),
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn directed_edge_count(&self) -> usize {
        self.neighbors.len()
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Directed-edge slots `(i, .)` as a half-open range.
    #[inline]
    pub fn slots(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    #[inline]
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn reverse(&self) -> &[u32] {
        &self.reverse
    }

    #[inline]
    pub fn target(&self, slot: usize) -> u32 {
        self.neighbors[slot]
    }

    /// Slot of the directed edge `(i, u)`, if `{i, u}` is an edge.
    pub fn slot_of(&self, i: usize, u: u32) -> Option<usize> {
        self.neighbors(i)
            .binary_search(&u)
            .ok()
            .map(|k| self.offsets[i] + k)
    }

    pub fn has_edge(&self, i: usize, u: u32) -> bool {
        self.slot_of(i, u).is_some()
    }

    /// Undirected edges with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .copied()
                .filter(move |&v| (i as u32) < v)
                .map(move |v| (i as u32, v))
        })
    }

    /// True when the graph has no cycles.
    pub fn is_forest(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = 0usize;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            components += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &y in self.neighbors(x) {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        stack.push(y as usize);
                    }
                }
            }
        }
        self.edge_count() + components == n
    }
}

fn build_reverse(offsets: &[usize], neighbors: &[u32]) -> Vec<u32> {
    let n = offsets.len() - 1;
    let mut reverse = vec![0u32; neighbors.len()];
    // Rows are sorted, so when rows are visited in increasing order the
    // occurrences of `i` inside row `u` are consumed in order.
    let mut cursor: Vec<u32> = vec![0; n];
    for i in 0..n {
        for e in offsets[i]..offsets[i + 1] {
            let u = neighbors[e] as usize;
            let slot = offsets[u] + cursor[u] as usize;
            debug_assert_eq!(neighbors[slot] as usize, i);
            reverse[e] = slot as u32;
            cursor[u] += 1;
        }
    }
    reverse
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_and_loops_are_dropped() {
        let (g, stats) = Graph::from_edges(3, &[(0, 1), (1, 0), (2, 2), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(stats.duplicates, 1);
        assert_eq!(stats.self_loops, 1);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            Graph::from_edges(2, &[(0, 2)]),
            Err(Error::NodeOutOfRange { id: 2, n: 2 })
        ));
    }

    #[test]
    fn isolated_nodes_kept() {
        let (g, _) = Graph::from_edges(5, &[(0, 1)]).unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.degree(4), 0);
    }

    #[test]
    fn forest_detection() {
        let (path, _) = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(path.is_forest());
        let (tri, _) = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(!tri.is_forest());
    }

    proptest! {
        #[test]
        fn structure_invariants(n in 1usize..40, raw in proptest::collection::vec((0u32..40, 0u32..40), 0..120)) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n as u32, b % n as u32)).collect();
            let (g, _) = Graph::from_edges(n, &edges).unwrap();
            let rev = g.reverse();
            for i in 0..n {
                let row = g.neighbors(i);
                // sorted, simple
                prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!row.contains(&(i as u32)));
                for e in g.slots(i) {
                    let u = g.target(e) as usize;
                    // symmetric, reverse is an involution onto (u, i)
                    prop_assert!(g.has_edge(u, i as u32));
                    let r = rev[e] as usize;
                    prop_assert_eq!(g.target(r) as usize, i);
                    prop_assert!(g.slots(u).contains(&r));
                    prop_assert_eq!(rev[r] as usize, e);
                }
            }
            prop_assert_eq!(g.edges().count(), g.edge_count());
        }
    }
}
