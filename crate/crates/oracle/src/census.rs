//! Exhaustive censuses of labelled series-parallel graphs and two-pole
//! networks.
//!
//! Subgraphs of series-parallel graphs are series-parallel, so the edge
//! subsets of `K_n` are walked depth-first and a branch is cut as soon as the
//! current edge set stops being series-parallel.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::LabelledGraph;
use crate::OracleError;

/// Largest vertex count accepted by default.
pub const DEFAULT_CAP: usize = 8;
/// Largest number of non-pole vertices accepted by default for networks.
pub const DEFAULT_NETWORK_CAP: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum GraphClass {
    ConnectedSp,
    BiconnectedSp,
    TwoTree,
    /// Connected series-parallel graphs with `m - n = k`.
    ExcessSp(i64),
}

impl GraphClass {
    pub fn id(&self) -> String {
        match self {
            GraphClass::ConnectedSp => "connected-sp".into(),
            GraphClass::BiconnectedSp => "2connected-sp".into(),
            GraphClass::TwoTree => "2tree".into(),
            GraphClass::ExcessSp(k) => format!("excess{k}-sp"),
        }
    }
}

/// Sums over the graphs of one class with `n` vertices and `m` edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    pub class: String,
    pub n: usize,
    pub m: usize,
    pub count: u128,
    pub sum_trees: u128,
    pub sum_trees_sq: u128,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Acc {
    count: u128,
    s: u128,
    s2: u128,
}

impl Acc {
    fn add(&mut self, s: u128) {
        self.count += 1;
        self.s += s;
        self.s2 += s * s;
    }

    fn merge(&mut self, o: &Acc) {
        self.count += o.count;
        self.s += o.s;
        self.s2 += o.s2;
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    connected: BTreeMap<usize, Acc>,
    biconnected: BTreeMap<usize, Acc>,
    two_trees: BTreeMap<usize, Acc>,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        for (mine, theirs) in [
            (&mut self.connected, o.connected),
            (&mut self.biconnected, o.biconnected),
            (&mut self.two_trees, o.two_trees),
        ] {
            for (m, a) in theirs {
                mine.entry(m).or_default().merge(&a);
            }
        }
        self
    }

    fn visit(&mut self, g: &LabelledGraph) {
        if !g.is_connected() {
            return;
        }
        let m = g.m();
        let s = g.spanning_trees();
        self.connected.entry(m).or_default().add(s);
        if g.is_biconnected() {
            self.biconnected.entry(m).or_default().add(s);
        }
        if is_two_tree(g) {
            self.two_trees.entry(m).or_default().add(s);
        }
    }
}

/// 2-trees by their defining recursion: `K2` is a 2-tree, and a graph is a
/// 2-tree if it has a degree-2 vertex with adjacent neighbours whose
/// removal leaves a 2-tree.
pub fn is_two_tree(g: &LabelledGraph) -> bool {
    fn rec(adj: &mut [u16], alive: u16) -> bool {
        if alive.count_ones() == 2 {
            let a = alive.trailing_zeros() as usize;
            let b = (alive & (alive - 1)).trailing_zeros() as usize;
            return adj[a] >> b & 1 == 1;
        }
        let mut rest = alive;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let nb = adj[v];
            if nb.count_ones() != 2 {
                continue;
            }
            let a = nb.trailing_zeros() as usize;
            let b = (nb & (nb - 1)).trailing_zeros() as usize;
            if adj[a] >> b & 1 == 0 {
                continue;
            }
            // peeling one simplicial degree-2 vertex never blocks a later
            // peel, so the first candidate decides
            adj[a] &= !(1 << v);
            adj[b] &= !(1 << v);
            adj[v] = 0;
            return rec(adj, alive & !(1 << v));
        }
        false
    }
    let n = g.n();
    if n < 2 {
        return false;
    }
    let mut adj: Vec<u16> = (0..n).map(|v| g.neighbours(v)).collect();
    rec(&mut adj, ((1u32 << n) - 1) as u16)
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            out.push((a, b));
        }
    }
    out
}

/// Calls `f` on every series-parallel graph on `n` vertices whose edges all
/// have index at least `from` in `pairs`, other than `g` itself, extending `g`.
fn walk<F: FnMut(&LabelledGraph)>(g: &mut LabelledGraph, pairs: &[(usize, usize)], from: usize, f: &mut F) {
    for i in from..pairs.len() {
        let (a, b) = pairs[i];
        g.add_edge(a, b);
        if g.is_series_parallel() {
            f(g);
            walk(g, pairs, i + 1, f);
        }
        g.remove_edge(a, b);
    }
}

/// Visits every series-parallel graph on `n` labelled vertices (including
/// disconnected ones) and folds the visits with `visit`, splitting the work
/// by the first edge. The reduction is an associative merge, so the result
/// does not depend on the thread count.
pub fn fold_sp_graphs<T, V, M>(n: usize, threads: Option<usize>, visit: V, merge: M) -> Result<T, OracleError>
where
    T: Default + Send,
    V: Fn(&mut T, &LabelledGraph) + Sync,
    M: Fn(T, T) -> T + Sync + Send,
{
    let ps = pairs(n);
    let job = || {
        (0..=ps.len())
            .into_par_iter()
            .map(|first| {
                let mut acc = T::default();
                let mut g = LabelledGraph::empty(n);
                if first == ps.len() {
                    visit(&mut acc, &g);
                    return acc;
                }
                let (a, b) = ps[first];
                g.add_edge(a, b);
                visit(&mut acc, &g);
                walk(&mut g, &ps, first + 1, &mut |h| visit(&mut acc, h));
                acc
            })
            .reduce(T::default, &merge)
    };
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| OracleError::ThreadPool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Upper bound on the edge subsets examined for `n` vertices.
pub fn cost_estimate(n: usize) -> String {
    let e = n * n.saturating_sub(1) / 2;
    format!("up to 2^{e} edge subsets of K_{n}")
}

#[derive(Clone, Copy, Debug)]
pub struct CensusOptions {
    pub cap: usize,
    pub threads: Option<usize>,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            cap: DEFAULT_CAP,
            threads: None,
        }
    }
}

/// All three simple-graph classes on `n` vertices from a single walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpCensus {
    pub n: usize,
    pub connected: Vec<CensusRow>,
    pub biconnected: Vec<CensusRow>,
    pub two_trees: Vec<CensusRow>,
}

impl SpCensus {
    pub fn rows(&self, class: GraphClass) -> Vec<CensusRow> {
        match class {
            GraphClass::ConnectedSp => self.connected.clone(),
            GraphClass::BiconnectedSp => self.biconnected.clone(),
            GraphClass::TwoTree => self.two_trees.clone(),
            GraphClass::ExcessSp(k) => self
                .connected
                .iter()
                .filter(|r| r.m as i64 - r.n as i64 == k)
                .map(|r| CensusRow {
                    class: class.id(),
                    ..r.clone()
                })
                .collect(),
        }
    }
}

/// Totals over all `m` of a set of rows: `(count, sum s, sum s^2)`.
pub fn totals(rows: &[CensusRow]) -> (u128, u128, u128) {
    rows.iter()
        .fold((0, 0, 0), |t, r| (t.0 + r.count, t.1 + r.sum_trees, t.2 + r.sum_trees_sq))
}

fn rows_of(class: GraphClass, n: usize, map: &BTreeMap<usize, Acc>) -> Vec<CensusRow> {
    map.iter()
        .map(|(&m, a)| CensusRow {
            class: class.id(),
            n,
            m,
            count: a.count,
            sum_trees: a.s,
            sum_trees_sq: a.s2,
        })
        .collect()
}

pub fn sp_census(n: usize, opts: CensusOptions) -> Result<SpCensus, OracleError> {
    if n > opts.cap {
        return Err(OracleError::CapExceeded {
            what: "vertices",
            n,
            cap: opts.cap,
            estimate: cost_estimate(n),
        });
    }
    if n == 0 {
        return Ok(SpCensus {
            n,
            connected: vec![],
            biconnected: vec![],
            two_trees: vec![],
        });
    }
    let t = fold_sp_graphs(n, opts.threads, |t: &mut Tally, g| t.visit(g), Tally::merge)?;
    Ok(SpCensus {
        n,
        connected: rows_of(GraphClass::ConnectedSp, n, &t.connected),
        biconnected: rows_of(GraphClass::BiconnectedSp, n, &t.biconnected),
        two_trees: rows_of(GraphClass::TwoTree, n, &t.two_trees),
    })
}

/// Rows of one class, ordered by `m`.
pub fn census(class: GraphClass, n: usize, opts: CensusOptions) -> Result<Vec<CensusRow>, OracleError> {
    Ok(sp_census(n, opts)?.rows(class))
}

/// Sums over two-pole networks with `n` internal vertices and `m` edges,
/// where `t` counts spanning trees and `f` pole-separating 2-forests.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NetworkRow {
    pub n: usize,
    pub m: usize,
    pub count: u128,
    pub sum_t: u128,
    pub sum_f: u128,
    pub sum_tt: u128,
    pub sum_tf: u128,
    pub sum_ff: u128,
}

impl NetworkRow {
    fn merge(&mut self, o: &NetworkRow) {
        self.count += o.count;
        self.sum_t += o.sum_t;
        self.sum_f += o.sum_f;
        self.sum_tt += o.sum_tt;
        self.sum_tf += o.sum_tf;
        self.sum_ff += o.sum_ff;
    }
}

/// Is `h`, with poles 0 and 1, a series-parallel network: nonempty, and
/// 2-connected and series-parallel once the pole edge is added?
pub fn is_network(h: &LabelledGraph) -> bool {
    if h.m() == 0 {
        return false;
    }
    let mut closed = *h;
    closed.add_edge(0, 1);
    closed.is_biconnected() && closed.is_series_parallel()
}

/// Census of networks on poles `0, 1` and `n` internal vertices `2..n+2`.
pub fn network_census(n: usize, cap: usize, threads: Option<usize>) -> Result<Vec<NetworkRow>, OracleError> {
    if n > cap {
        return Err(OracleError::CapExceeded {
            what: "internal vertices",
            n,
            cap,
            estimate: cost_estimate(n + 2),
        });
    }
    let visit = |acc: &mut BTreeMap<usize, NetworkRow>, h: &LabelledGraph| {
        if !is_network(h) {
            return;
        }
        let m = h.m();
        let t = h.spanning_trees();
        let f = h.st_forests(0, 1);
        let row = acc.entry(m).or_insert_with(|| NetworkRow {
            n,
            m,
            ..Default::default()
        });
        row.merge(&NetworkRow {
            n,
            m,
            count: 1,
            sum_t: t,
            sum_f: f,
            sum_tt: t * t,
            sum_tf: t * f,
            sum_ff: f * f,
        });
    };
    let merge = |mut a: BTreeMap<usize, NetworkRow>, b: BTreeMap<usize, NetworkRow>| {
        for (m, r) in b {
            a.entry(m)
                .or_insert_with(|| NetworkRow {
                    n,
                    m,
                    ..Default::default()
                })
                .merge(&r);
        }
        a
    };
    Ok(fold_sp_graphs(n + 2, threads, visit, merge)?.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn serial() -> CensusOptions {
        CensusOptions {
            cap: DEFAULT_CAP,
            threads: Some(1),
        }
    }

    #[test]
    fn small_classes() {
        let c3 = sp_census(3, serial()).unwrap();
        assert_eq!(totals(&c3.connected), (4, 6, 1 + 1 + 1 + 9));
        let c4 = sp_census(4, serial()).unwrap();
        assert_eq!(totals(&c4.connected).0, 37);
        let (count, s, _) = totals(&c4.biconnected);
        assert_eq!((count, s), (9, 60));
        assert_eq!(totals(&c4.two_trees), (6, 48, 6 * 64));
        assert!(c4.two_trees.iter().all(|r| r.m == 5));
    }

    #[test]
    fn trees_are_cayley() {
        for n in 1..=6 {
            let rows = census(GraphClass::ExcessSp(-1), n, serial()).unwrap();
            let (count, s, _) = totals(&rows);
            let cayley = if n == 1 { 1 } else { (n as u128).pow(n as u32 - 2) };
            assert_eq!((count, s), (cayley, cayley));
        }
    }

    #[test]
    fn two_trees_follow_moon_and_have_2n_minus_3_edges() {
        for n in 2..=6usize {
            let c = sp_census(n, serial()).unwrap();
            assert!(c.two_trees.iter().all(|r| r.m == 2 * n - 3));
            let moon = if n < 4 {
                1
            } else {
                (n * (n - 1) / 2) as u128 * ((2 * n - 3) as u128).pow(n as u32 - 4)
            };
            assert_eq!(totals(&c.two_trees).0, moon, "n = {n}");
        }
    }

    #[test]
    fn two_tree_recognition() {
        assert!(is_two_tree(&LabelledGraph::from_edges(2, &[(0, 1)])));
        assert!(is_two_tree(&LabelledGraph::complete(3)));
        assert!(!is_two_tree(&LabelledGraph::complete(4)));
        let c4 = LabelledGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(!is_two_tree(&c4));
    }

    #[test]
    fn networks_on_one_and_two_internal_vertices() {
        let n0 = network_census(0, DEFAULT_NETWORK_CAP, Some(1)).unwrap();
        assert_eq!(
            n0,
            vec![NetworkRow {
                n: 0,
                m: 1,
                count: 1,
                sum_t: 1,
                sum_f: 1,
                sum_tt: 1,
                sum_tf: 1,
                sum_ff: 1
            }]
        );
        let n1 = network_census(1, DEFAULT_NETWORK_CAP, Some(1)).unwrap();
        let t: u128 = n1.iter().map(|r| r.sum_t).sum();
        let f: u128 = n1.iter().map(|r| r.sum_f).sum();
        let tt: u128 = n1.iter().map(|r| r.sum_tt).sum();
        assert_eq!((t, f, tt), (4, 4, 10));
        let count: u128 = network_census(2, DEFAULT_NETWORK_CAP, Some(1))
            .unwrap()
            .iter()
            .map(|r| r.count)
            .sum();
        assert!(count > 0);
    }

    #[test]
    fn caps_are_enforced() {
        let err = sp_census(9, serial()).unwrap_err();
        assert!(matches!(err, OracleError::CapExceeded { n: 9, cap: 8, .. }));
        assert!(err.to_string().contains("2^36"));
        assert!(network_census(6, DEFAULT_NETWORK_CAP, None).is_err());
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let a = sp_census(6, serial()).unwrap();
        let b = sp_census(
            6,
            CensusOptions {
                cap: DEFAULT_CAP,
                threads: Some(3),
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
