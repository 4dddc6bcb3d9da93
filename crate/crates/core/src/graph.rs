//! Undirected simple graphs on `0..n`.

use std::collections::VecDeque;
use std::fmt::Write as _;

/// Sorted adjacency lists plus a dense bit matrix for O(1) edge tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    words: usize,
    bits: Vec<u64>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Graph {
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u},{v}) out of range");
            if u == v || bits[u * words + v / 64] >> (v % 64) & 1 == 1 {
                continue;
            }
            bits[u * words + v / 64] |= 1 << (v % 64);
            bits[v * words + u / 64] |= 1 << (u % 64);
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Graph { adj, words, bits }
    }

    pub fn empty(n: usize) -> Graph {
        Graph::new(n, std::iter::empty())
    }

    pub fn complete(n: usize) -> Graph {
        Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn cycle(n: usize) -> Graph {
        Graph::new(n, (0..n).map(|u| (u, (u + 1) % n)))
    }

    pub fn order(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    /// Row `v` of the adjacency bit matrix.
    pub fn row_bits(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, a) in self.adj.iter().enumerate() {
            out.extend(a.iter().map(|&v| v as usize).filter(|&v| v > u).map(|v| (u, v)));
        }
        out
    }

    /// `p edge V E` header followed by one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("p edge {} {}\n", self.order(), self.edge_count());
        for (u, v) in self.edges() {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }

    /// Breadth-first distances from `src`; `u32::MAX` marks unreachable.
    pub fn distances_from(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.order()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        dist
    }

    /// Whether `perm` maps edges to edges (and hence, being a bijection on
    /// a finite graph, non-edges to non-edges).
    pub fn is_automorphism(&self, perm: &[u32]) -> bool {
        perm.len() == self.order()
            && self.adj.iter().enumerate().all(|(u, a)| {
                a.iter()
                    .all(|&v| self.has_edge(perm[u] as usize, perm[v as usize] as usize))
            })
    }
}
