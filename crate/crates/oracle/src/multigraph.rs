//! Labelled multigraphs with loops, their compensation weights, cubic
//! censuses and kernel extraction.

use std::collections::BTreeMap;

use rug::{Integer, Rational};
use serde::Serialize;

use crate::det::bareiss;
use crate::graph::LabelledGraph;
use crate::OracleError;

/// Largest excess accepted by [`cubic_census`] by default.
pub const DEFAULT_EXCESS_CAP: usize = 3;

/// Edge multiplicities keyed by `(a, b)` with `a <= b`; `a == b` is a loop.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct WeightedMultigraph {
    n: usize,
    mult: BTreeMap<(usize, usize), u32>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl WeightedMultigraph {
    pub fn new(n: usize) -> Self {
        assert!(n <= crate::graph::MAX_VERTICES);
        WeightedMultigraph { n, mult: BTreeMap::new() }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge count, loops included.
    pub fn m(&self) -> usize {
        self.mult.values().map(|&k| k as usize).sum()
    }

    pub fn excess(&self) -> i64 {
        self.m() as i64 - self.n as i64
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a < self.n && b < self.n);
        *self.mult.entry(key(a, b)).or_default() += 1;
    }

    fn remove_edge(&mut self, a: usize, b: usize) {
        let k = key(a, b);
        let e = self.mult.get_mut(&k).expect("edge present");
        *e -= 1;
        if *e == 0 {
            self.mult.remove(&k);
        }
    }

    pub fn multiplicity(&self, a: usize, b: usize) -> u32 {
        self.mult.get(&key(a, b)).copied().unwrap_or(0)
    }

    /// `((a, b), multiplicity)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), u32)> + '_ {
        self.mult.iter().map(|(&k, &m)| (k, m))
    }

    /// A loop adds 2.
    pub fn degree(&self, v: usize) -> usize {
        self.mult
            .iter()
            .map(|(&(a, b), &k)| {
                let ends = (a == v) as usize + (b == v) as usize;
                ends * k as usize
            })
            .sum()
    }

    pub fn is_cubic(&self) -> bool {
        (0..self.n).all(|v| self.degree(v) == 3)
    }

    /// Compensation factor: `1/(2^l l!)` per vertex with `l` loops and `1/k!`
    /// per edge of multiplicity `k`. For cubic multigraphs this is
    /// `2^-(loops + double edges) 6^-(triple edges)`.
    pub fn weight(&self) -> Rational {
        let mut den = Integer::from(1);
        for (&(a, b), &k) in &self.mult {
            den *= Integer::from(Integer::factorial(k));
            if a == b {
                den <<= k;
            }
        }
        Rational::from((1, den))
    }

    /// Simple graph on the same vertices: loops dropped, multiple edges merged.
    pub fn underlying(&self) -> LabelledGraph {
        let mut g = LabelledGraph::empty(self.n);
        for &(a, b) in self.mult.keys() {
            if a != b {
                g.add_edge(a, b);
            }
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        self.underlying().is_connected()
    }

    /// Multiple edges and loops never create a `K4` minor, so this is the
    /// test on the underlying simple graph.
    pub fn is_series_parallel(&self) -> bool {
        self.underlying().is_series_parallel()
    }

    /// Spanning trees counted with edge multiplicity, by the matrix-tree
    /// theorem; loops never lie in a tree.
    pub fn spanning_trees(&self) -> u128 {
        if self.n == 0 {
            return 0;
        }
        let mut lap = vec![vec![0i128; self.n]; self.n];
        for (&(a, b), &k) in &self.mult {
            if a != b {
                let k = k as i128;
                lap[a][a] += k;
                lap[b][b] += k;
                lap[a][b] -= k;
                lap[b][a] -= k;
            }
        }
        let minor: Vec<Vec<i128>> = lap[1..].iter().map(|row| row[1..].to_vec()).collect();
        bareiss(minor) as u128
    }

    /// Contract the non-loop edge `a b` (one copy): `b` merges into `a`, the
    /// other copies of `a b` become loops at `a`, and vertices above `b`
    /// shift down by one.
    fn contract(&self, a: usize, b: usize) -> WeightedMultigraph {
        let relabel = |v: usize| {
            let v = if v == b { a } else { v };
            if v > b {
                v - 1
            } else {
                v
            }
        };
        let mut out = WeightedMultigraph::new(self.n - 1);
        let mut dropped = false;
        for (&(x, y), &k) in &self.mult {
            for _ in 0..k {
                if !dropped && key(x, y) == key(a, b) {
                    dropped = true;
                    continue;
                }
                out.add_edge(relabel(x), relabel(y));
            }
        }
        out
    }

    /// Dissolve every degree-2 vertex and prune every vertex of degree at
    /// most one, repeatedly.
    fn reduce_to_kernel(&mut self) {
        let mut alive: Vec<bool> = vec![true; self.n];
        loop {
            let mut changed = false;
            for v in 0..self.n {
                if !alive[v] {
                    continue;
                }
                let d = self.degree(v);
                if d <= 1 {
                    let incident: Vec<(usize, usize)> = self.mult.keys().copied().filter(|&(a, b)| a == v || b == v).collect();
                    for (a, b) in incident {
                        self.remove_edge(a, b);
                    }
                    alive[v] = false;
                    changed = true;
                } else if d == 2 && self.multiplicity(v, v) == 0 {
                    let mut ends = Vec::with_capacity(2);
                    for (&(a, b), &k) in &self.mult {
                        if a == v || b == v {
                            let other = if a == v { b } else { a };
                            ends.extend(std::iter::repeat(other).take(k as usize));
                        }
                    }
                    self.remove_edge(v, ends[0]);
                    self.remove_edge(v, ends[1]);
                    self.add_edge(ends[0], ends[1]);
                    alive[v] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let labels: Vec<usize> = (0..self.n).filter(|&v| alive[v]).collect();
        let mut out = WeightedMultigraph::new(labels.len());
        let pos = |v: usize| labels.binary_search(&v).expect("surviving vertex");
        for (&(a, b), &k) in &self.mult {
            for _ in 0..k {
                out.add_edge(pos(a), pos(b));
            }
        }
        *self = out;
    }

    /// Subdivide every edge, loops included, once.
    pub fn subdivide_all(&self) -> WeightedMultigraph {
        let mut out = WeightedMultigraph::new(self.n + self.m());
        let mut next = self.n;
        for (&(a, b), &k) in &self.mult {
            for _ in 0..k {
                out.add_edge(a, next);
                out.add_edge(next, b);
                next += 1;
            }
        }
        out
    }
}

impl From<&LabelledGraph> for WeightedMultigraph {
    fn from(g: &LabelledGraph) -> Self {
        WeightedMultigraph::from_edges(g.n(), &g.edges())
    }
}

/// Spanning trees by `s(G) = s(G - e) + s(G / e)` on a non-loop edge;
/// exponential, for cross-checking the determinant.
pub fn deletion_contraction_trees(g: &WeightedMultigraph) -> u128 {
    if g.n() <= 1 {
        return g.n() as u128;
    }
    match g.edges().find(|&((a, b), _)| a != b) {
        None => 0,
        Some(((a, b), _)) => {
            let mut del = g.clone();
            del.remove_edge(a, b);
            deletion_contraction_trees(&del) + deletion_contraction_trees(&g.contract(a, b))
        }
    }
}

/// Kernel of a connected multigraph: prune degree-1 vertices recursively,
/// then dissolve degree-2 vertices; survivors keep their relative order.
/// Excess 1 is accepted (its kernel is cubic with two vertices); lower
/// excess has no kernel with minimum degree 3 and is rejected.
pub fn kernel_extract(g: &WeightedMultigraph) -> Result<WeightedMultigraph, OracleError> {
    if !g.is_connected() {
        return Err(OracleError::Disconnected);
    }
    let k = g.excess();
    if k < 1 {
        return Err(OracleError::ExcessTooSmall { excess: k });
    }
    let mut out = g.clone();
    out.reduce_to_kernel();
    debug_assert_eq!(out.excess(), k);
    Ok(out)
}

/// Weighted sums over connected series-parallel cubic multigraphs on `2k`
/// labelled vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubicRow {
    pub excess: usize,
    pub vertices: usize,
    pub members: usize,
    /// Sum of compensation weights.
    #[serde(serialize_with = "as_string")]
    pub weight: Rational,
    /// Sum of weight times spanning trees.
    #[serde(serialize_with = "as_string")]
    pub weighted_trees: Rational,
}

fn as_string<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

impl CubicRow {
    /// Divided by `(2k)!`, the exponential coefficient convention.
    pub fn normalised(&self) -> (Rational, Rational) {
        let f = Integer::from(Integer::factorial(self.vertices as u32));
        (Rational::from(&self.weight / &f), Rational::from(&self.weighted_trees / &f))
    }
}

fn cubic_multigraphs(n: usize) -> Vec<WeightedMultigraph> {
    fn rec(g: &mut WeightedMultigraph, slots: &[(usize, usize)], i: usize, residual: &mut [usize], out: &mut Vec<WeightedMultigraph>) {
        if i == slots.len() {
            if residual.iter().all(|&r| r == 0) {
                out.push(g.clone());
            }
            return;
        }
        let (a, b) = slots[i];
        // every slot touching vertex a is at index <= the last (a, *) slot,
        // so a must be saturated once slot (a, n-1) is passed
        let cap = if a == b { residual[a] / 2 } else { residual[a].min(residual[b]) };
        for k in 0..=cap {
            let used = if a == b { 2 * k } else { k };
            residual[a] -= used;
            if a != b {
                residual[b] -= k;
            }
            let last_for_a = b == residual.len() - 1;
            if !last_for_a || residual[a] == 0 {
                for _ in 0..k {
                    g.add_edge(a, b);
                }
                rec(g, slots, i + 1, residual, out);
                for _ in 0..k {
                    g.remove_edge(a, b);
                }
            }
            residual[a] += used;
            if a != b {
                residual[b] += k;
            }
        }
    }
    let mut slots = Vec::new();
    for a in 0..n {
        for b in a..n {
            slots.push((a, b));
        }
    }
    let mut out = Vec::new();
    rec(&mut WeightedMultigraph::new(n), &slots, 0, &mut vec![3; n], &mut out);
    out
}

/// All connected series-parallel cubic multigraphs of excess `k` (on `2k`
/// vertices), with their weights summed.
pub fn cubic_census(k: usize, cap: usize) -> Result<CubicRow, OracleError> {
    if k > cap {
        return Err(OracleError::CapExceeded {
            what: "excess",
            n: k,
            cap,
            estimate: format!("cubic multigraphs on {} vertices", 2 * k),
        });
    }
    let mut row = CubicRow {
        excess: k,
        vertices: 2 * k,
        members: 0,
        weight: Rational::new(),
        weighted_trees: Rational::new(),
    };
    for g in cubic_multigraphs(2 * k) {
        if !g.is_connected() || !g.is_series_parallel() {
            continue;
        }
        let w = g.weight();
        row.members += 1;
        row.weighted_trees += Rational::from(&w * Integer::from(g.spanning_trees()));
        row.weight += w;
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dumbbell() -> WeightedMultigraph {
        WeightedMultigraph::from_edges(2, &[(0, 0), (0, 1), (1, 1)])
    }

    fn theta() -> WeightedMultigraph {
        WeightedMultigraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)])
    }

    #[test]
    fn weights_and_trees() {
        assert_eq!(dumbbell().weight(), Rational::from((1, 4)));
        assert_eq!(theta().weight(), Rational::from((1, 6)));
        assert_eq!(dumbbell().spanning_trees(), 1);
        assert_eq!(theta().spanning_trees(), 3);
        assert!(dumbbell().is_cubic() && theta().is_cubic());
    }

    #[test]
    fn excess_one_census() {
        let row = cubic_census(1, DEFAULT_EXCESS_CAP).unwrap();
        assert_eq!(row.members, 2);
        assert_eq!(row.weight, Rational::from((5, 12)));
        assert_eq!(row.weighted_trees, Rational::from((3, 4)));
        assert_eq!(row.normalised(), (Rational::from((5, 24)), Rational::from((3, 8))));
    }

    #[test]
    fn excess_two_and_three_census() {
        let two = cubic_census(2, DEFAULT_EXCESS_CAP).unwrap().normalised();
        assert_eq!(two, (Rational::from((13, 48)), Rational::from((73, 48))));
        let three = cubic_census(3, DEFAULT_EXCESS_CAP).unwrap().normalised();
        assert_eq!(three, (Rational::from((235, 384)), Rational::from((1241, 128))));
        assert!(cubic_census(4, DEFAULT_EXCESS_CAP).is_err());
    }

    #[test]
    fn cubic_multigraphs_are_fixed_by_extraction() {
        for g in cubic_multigraphs(4) {
            if g.is_connected() {
                assert_eq!(kernel_extract(&g).unwrap(), g);
            }
        }
    }

    #[test]
    fn subdivided_dumbbell_round_trip() {
        let sub = dumbbell().subdivide_all();
        assert_eq!(sub.n(), 5);
        assert_eq!(kernel_extract(&sub).unwrap(), dumbbell());
    }

    #[test]
    fn pendant_trees_are_pruned() {
        // theta on 0,1 with 2 subdividing the middle edge and a path 3-4 hanging off 2
        let g = WeightedMultigraph::from_edges(5, &[(0, 1), (0, 1), (0, 2), (2, 1), (2, 3), (3, 4)]);
        let k = kernel_extract(&g).unwrap();
        assert_eq!(k, theta());
    }

    #[test]
    fn low_excess_is_rejected() {
        let cycle = WeightedMultigraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert!(matches!(kernel_extract(&cycle), Err(OracleError::ExcessTooSmall { excess: 0 })));
        let split = WeightedMultigraph::from_edges(2, &[(0, 0), (1, 1)]);
        assert!(matches!(kernel_extract(&split), Err(OracleError::Disconnected)));
    }

    #[test]
    fn deletion_contraction_on_small_cases() {
        assert_eq!(deletion_contraction_trees(&theta()), 3);
        assert_eq!(deletion_contraction_trees(&dumbbell()), 1);
        let k4 = WeightedMultigraph::from(&LabelledGraph::complete(4));
        assert_eq!(deletion_contraction_trees(&k4), 16);
    }
}
