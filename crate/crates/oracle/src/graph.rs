//! Small simple graphs on labelled vertices `0..n` as adjacency bitmasks.

use crate::det::bareiss;

/// Largest vertex count a [`LabelledGraph`] can hold.
pub const MAX_VERTICES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LabelledGraph {
    n: usize,
    adj: [u16; MAX_VERTICES],
}

impl LabelledGraph {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_VERTICES, "at most {MAX_VERTICES} vertices");
        LabelledGraph { n, adj: [0; MAX_VERTICES] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.adj[..self.n].iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b && a < self.n && b < self.n, "edge {a}-{b} on {} vertices", self.n);
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.adj[a] &= !(1 << b);
        self.adj[b] &= !(1 << a);
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn neighbours(&self, v: usize) -> u16 {
        self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    fn all(&self) -> u16 {
        if self.n == 16 {
            u16::MAX
        } else {
            (1u16 << self.n) - 1
        }
    }

    /// Vertices reachable from `start` inside `allowed`.
    fn reach(&self, start: usize, allowed: u16) -> u16 {
        let mut seen = 1u16 << start;
        let mut frontier = seen;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = self.adj[v] & allowed & !seen;
            seen |= new;
            frontier |= new;
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.reach(0, self.all()) == self.all()
    }

    /// Connected with no cut vertex. A single edge counts as 2-connected; a
    /// single vertex does not.
    pub fn is_biconnected(&self) -> bool {
        match self.n {
            0 | 1 => false,
            2 => self.has_edge(0, 1),
            _ => {
                if !self.is_connected() {
                    return false;
                }
                (0..self.n).all(|v| {
                    let rest = self.all() & !(1 << v);
                    let start = if v == 0 { 1 } else { 0 };
                    self.reach(start, rest) == rest
                })
            }
        }
    }

    /// No `K4` minor, decided by exhaustive series and parallel reductions:
    /// drop vertices of degree at most one and suppress vertices of degree
    /// two, merging the resulting parallel edges.
    pub fn is_series_parallel(&self) -> bool {
        let mut adj = self.adj;
        let mut alive = self.all();
        loop {
            let mut changed = false;
            let mut rest = alive;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let nb = adj[v];
                match nb.count_ones() {
                    0 | 1 => {
                        if nb != 0 {
                            let w = nb.trailing_zeros() as usize;
                            adj[w] &= !(1 << v);
                        }
                        adj[v] = 0;
                        alive &= !(1 << v);
                        changed = true;
                    }
                    2 => {
                        let a = nb.trailing_zeros() as usize;
                        let b = (nb & (nb - 1)).trailing_zeros() as usize;
                        adj[a] = (adj[a] & !(1 << v)) | (1 << b);
                        adj[b] = (adj[b] & !(1 << v)) | (1 << a);
                        adj[v] = 0;
                        alive &= !(1 << v);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if alive == 0 {
                return true;
            }
            if !changed {
                return false;
            }
        }
    }

    /// Laplacian with rows and columns in `drop` removed.
    fn reduced_laplacian(&self, drop: u16) -> Vec<Vec<i128>> {
        let keep: Vec<usize> = (0..self.n).filter(|v| drop >> v & 1 == 0).collect();
        keep.iter()
            .map(|&a| {
                keep.iter()
                    .map(|&b| {
                        if a == b {
                            self.degree(a) as i128
                        } else if self.has_edge(a, b) {
                            -1
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Number of spanning trees; 0 when disconnected.
    pub fn spanning_trees(&self) -> u128 {
        match self.n {
            0 => 0,
            1 => 1,
            _ => bareiss(self.reduced_laplacian(1)) as u128,
        }
    }

    /// Spanning forests with exactly two trees, one containing `s` and the
    /// other `t`: the Laplacian minor with both rows and columns removed.
    pub fn st_forests(&self, s: usize, t: usize) -> u128 {
        assert!(s != t);
        if self.n == 2 {
            return 1;
        }
        bareiss(self.reduced_laplacian((1 << s) | (1 << t))) as u128
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> LabelledGraph {
        LabelledGraph::complete(3)
    }

    fn diamond() -> LabelledGraph {
        let mut g = LabelledGraph::complete(4);
        g.remove_edge(0, 1);
        g
    }

    #[test]
    fn sp_recognition() {
        assert!(!LabelledGraph::complete(4).is_series_parallel());
        assert!(diamond().is_series_parallel());
        let path = LabelledGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(path.is_series_parallel());
        let star = LabelledGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert!(star.is_series_parallel());
        // K4 subdivided on one edge still has a K4 minor
        let sub = LabelledGraph::from_edges(5, &[(0, 4), (4, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(!sub.is_series_parallel());
        // K_{2,3} is series-parallel
        let k23 = LabelledGraph::from_edges(5, &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]);
        assert!(k23.is_series_parallel());
    }

    #[test]
    fn spanning_counts() {
        assert_eq!(triangle().spanning_trees(), 3);
        assert_eq!(diamond().spanning_trees(), 8);
        assert_eq!(LabelledGraph::complete(5).spanning_trees(), 125);
        assert_eq!(triangle().st_forests(0, 1), 2);
        let path = LabelledGraph::from_edges(3, &[(0, 2), (2, 1)]);
        assert_eq!(path.st_forests(0, 1), 2);
        assert_eq!(LabelledGraph::from_edges(3, &[(0, 1)]).spanning_trees(), 0);
    }

    #[test]
    fn connectivity() {
        assert!(LabelledGraph::from_edges(2, &[(0, 1)]).is_biconnected());
        assert!(triangle().is_biconnected());
        let path = LabelledGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert!(path.is_connected() && !path.is_biconnected());
        assert!(!LabelledGraph::empty(3).is_connected());
    }
}
