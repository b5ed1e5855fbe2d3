use proptest::prelude::*;
use sptree_oracle::*;

fn graph_from_mask(n: usize, mask: u32) -> LabelledGraph {
    let mut g = LabelledGraph::empty(n);
    let mut i = 0;
    for a in 0..n {
        for b in a + 1..n {
            if mask >> i & 1 == 1 {
                g.add_edge(a, b);
            }
            i += 1;
        }
    }
    g
}

fn permuted(g: &LabelledGraph, perm: &[usize]) -> LabelledGraph {
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    LabelledGraph::from_edges(g.n(), &edges)
}

fn small_graph() -> impl Strategy<Value = LabelledGraph> {
    (2usize..=7)
        .prop_flat_map(|n| (Just(n), 0u32..(1u32 << (n * (n - 1) / 2))))
        .prop_map(|(n, m)| graph_from_mask(n, m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn determinant_matches_deletion_contraction(g in small_graph()) {
        let multi = WeightedMultigraph::from(&g);
        prop_assert_eq!(g.spanning_trees(), deletion_contraction_trees(&multi));
    }

    #[test]
    fn two_forests_are_trees_of_the_pole_contraction(g in small_graph()) {
        // merging the poles turns each pole-separating 2-forest into a tree
        let n = g.n();
        let mut merged = WeightedMultigraph::new(n - 1);
        for (a, b) in g.edges() {
            let r = |v: usize| if v == 1 { 0 } else if v > 1 { v - 1 } else { v };
            if (a, b) != (0, 1) {
                merged.add_edge(r(a), r(b));
            }
        }
        prop_assert_eq!(g.st_forests(0, 1), merged.spanning_trees());
    }

    #[test]
    fn recognition_ignores_labels(g in small_graph(), seed in any::<u64>()) {
        let n = g.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let h = permuted(&g, &perm);
        prop_assert_eq!(g.is_series_parallel(), h.is_series_parallel());
        prop_assert_eq!(g.is_biconnected(), h.is_biconnected());
        prop_assert_eq!(is_two_tree(&g), is_two_tree(&h));
        prop_assert_eq!(g.spanning_trees(), h.spanning_trees());
    }

    #[test]
    fn sp_graphs_have_at_most_2n_minus_3_edges(g in small_graph()) {
        if g.is_series_parallel() {
            prop_assert!(g.m() <= 2 * g.n() - 3);
        }
    }
}

#[test]
fn excess_two_kernels_up_to_seven_vertices_are_sp() {
    let mut seen = 0usize;
    for n in 1..=7 {
        let kernels = fold_sp_graphs(
            n,
            Some(1),
            |acc: &mut Vec<WeightedMultigraph>, g| {
                if g.is_connected() && g.m() == n + 2 {
                    acc.push(kernel_extract(&WeightedMultigraph::from(g)).unwrap());
                }
            },
            |mut a, b| {
                a.extend(b);
                a
            },
        )
        .unwrap();
        for k in &kernels {
            assert_eq!(k.excess(), 2);
            assert!(k.is_series_parallel());
            assert!((0..k.n()).all(|v| k.degree(v) >= 3));
        }
        seen += kernels.len();
    }
    assert!(seen > 0);
}

#[test]
fn k4_subdivisions_have_non_sp_kernels() {
    let k4 = WeightedMultigraph::from(&LabelledGraph::complete(4));
    let k = kernel_extract(&k4.subdivide_all()).unwrap();
    assert_eq!(k, k4);
    assert!(!k.is_series_parallel());
}

#[test]
fn excess_four_census_beyond_the_default_cap() {
    use rug::Rational;
    assert!(cubic_census(4, DEFAULT_EXCESS_CAP).is_err());
    let (g, gbar) = cubic_census(4, 4).unwrap().normalised();
    assert_eq!(g, Rational::from((683, 384)));
    assert_eq!(gbar, Rational::from((19663, 256)));
}
