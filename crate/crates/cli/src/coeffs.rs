//! Exact coefficient tables `n! [x^n]` of every class.

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use sptree::assembly::{assemble_all, assemble_at, extract_excess_slice};
use sptree::fixed_excess::solve_kernel_systems;
use sptree::networks::{solve_baseline_networks, solve_second_moment_networks, solve_spantree_networks, Flavor, NetworkBundle};
use sptree::series::{BivariateEGF, YPoly};
use sptree::two_trees::solve_two_trees;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Class {
    /// Connected graphs with a marked spanning tree.
    #[value(name = "C")]
    C,
    /// 2-connected graphs with a marked spanning tree.
    #[value(name = "B")]
    B,
    /// Connected graphs.
    #[value(name = "C0", alias = "Cempty")]
    C0,
    /// 2-connected graphs.
    #[value(name = "B0", alias = "Bempty")]
    B0,
    /// Networks: D, Dbar, S, Sbar, P, Pbar with trees, and D without.
    #[value(name = "D-bundle")]
    DBundle,
    /// Networks weighted by products of tree and 2-forest counts.
    #[value(name = "Dstar-bundle")]
    DstarBundle,
    /// 2-trees.
    #[value(name = "T")]
    T,
    /// 2-trees with a marked spanning tree.
    #[value(name = "Ts")]
    Ts,
    /// Weighted cubic kernels, `[u^k] G`; `n` is the excess.
    #[value(name = "G")]
    G,
    #[value(name = "Gbar")]
    Gbar,
    /// Connected graphs of excess `k`.
    #[value(name = "Ck")]
    Ck,
    /// Connected graphs of excess `k` with a marked spanning tree.
    #[value(name = "Cbark")]
    Cbark,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoeffRow {
    pub class: String,
    pub n: usize,
    /// Edge count, for tables split by edges.
    pub m: Option<usize>,
    /// Exact value as `p/q`, or an integer.
    pub value: String,
}

#[derive(Clone, Debug)]
pub struct CoeffQuery {
    pub class: Class,
    pub n_max: usize,
    /// Edge weight; `None` means 1.
    pub y: Option<Rational>,
    pub by_edges: bool,
    pub k: Option<i64>,
}

fn row(class: &str, n: usize, m: Option<usize>, v: Rational) -> CoeffRow {
    CoeffRow {
        class: class.into(),
        n,
        m,
        value: v.to_string(),
    }
}

fn factorial(n: usize) -> Integer {
    Integer::from(Integer::factorial(n as u32))
}

fn bivariate_rows(out: &mut Vec<CoeffRow>, class: &str, s: &BivariateEGF, q: &CoeffQuery, y: &Rational) {
    for n in 0..=q.n_max.min(s.trunc_x()) {
        if q.by_edges {
            for m in 0..=s.trunc_y() {
                let v = s.labelled(n, m);
                if v != 0 {
                    out.push(row(class, n, Some(m), v));
                }
            }
        } else {
            out.push(row(class, n, None, Rational::from(s.coeff(n).eval(y) * factorial(n))));
        }
    }
}

fn bundle_rows(
    out: &mut Vec<CoeffRow>,
    b: &NetworkBundle<YPoly>,
    names: &[&str],
    rename: impl Fn(&str) -> String,
    q: &CoeffQuery,
    y: &Rational,
) {
    for name in names {
        bivariate_rows(out, &rename(name), b.s(name), q, y);
    }
}

/// Rows of `q.class` for `n = 0..=q.n_max`.
pub fn coefficients(q: &CoeffQuery) -> Result<Vec<CoeffRow>, CliError> {
    let y = q.y.clone().unwrap_or_else(|| Rational::from(1));
    if y <= 0 {
        return Err(CliError::Usage(format!("y = {y} must be positive")));
    }
    let n = q.n_max;
    // a series-parallel graph on n vertices has at most 2n - 3 edges
    let ty = (2 * n).max(4);
    let mut out = Vec::new();
    match q.class {
        Class::C | Class::B | Class::C0 | Class::B0 => {
            let name = match q.class {
                Class::C => "C",
                Class::B => "B",
                Class::C0 => "C0",
                _ => "B0",
            };
            if q.by_edges {
                let a = assemble_all(n, ty)?;
                let s = match q.class {
                    Class::C => &a.c,
                    Class::B => &a.b,
                    Class::C0 => &a.c_base,
                    _ => &a.b_base,
                };
                bivariate_rows(&mut out, name, s, q, &y);
            } else {
                let a = assemble_at(n, &y)?;
                let s = match q.class {
                    Class::C => &a.c,
                    Class::B => &a.b,
                    Class::C0 => &a.c_base,
                    _ => &a.b_base,
                };
                for i in 0..=n {
                    out.push(row(name, i, None, s.labelled(i)));
                }
            }
        }
        Class::DBundle => {
            let tree = solve_spantree_networks(n, ty)?;
            bundle_rows(&mut out, &tree, Flavor::SpanningTree.series_names(), |s| s.to_string(), q, &y);
            let base = solve_baseline_networks(n, ty)?;
            bundle_rows(&mut out, &base, Flavor::Baseline.series_names(), |s| format!("{s}0"), q, &y);
        }
        Class::DstarBundle => {
            let b = solve_second_moment_networks(n, ty)?;
            bundle_rows(&mut out, &b, Flavor::SecondMoment.series_names(), |s| s.to_string(), q, &y);
        }
        Class::T | Class::Ts => {
            let two = solve_two_trees(n.max(3))?;
            let (name, s) = if q.class == Class::T { ("T", &two.t) } else { ("Ts", &two.ts) };
            for i in 0..=n {
                let v = s.labelled(i);
                // every 2-tree on i >= 2 vertices has 2i - 3 edges
                let m = if i >= 2 { Some(2 * i - 3) } else { None };
                let v = match m {
                    Some(m) => Rational::from(v * y.clone().pow(m as i32)),
                    None => v,
                };
                out.push(row(name, i, if q.by_edges { m } else { None }, v));
            }
        }
        Class::G | Class::Gbar => {
            if q.y.is_some() || q.by_edges {
                return Err(CliError::Usage("kernel counts take neither --y nor --by-edges".into()));
            }
            let ks = solve_kernel_systems(n.max(1))?;
            let (name, v) = if q.class == Class::G { ("G", &ks.g) } else { ("Gbar", &ks.gbar) };
            for (k, c) in v.iter().enumerate().take(n + 1) {
                out.push(row(name, k, None, c.clone()));
            }
        }
        Class::Ck | Class::Cbark => {
            let k = q.k.ok_or_else(|| CliError::Usage("classes Ck and Cbark need --k".into()))?;
            if q.y.is_some() || q.by_edges {
                return Err(CliError::Usage("excess slices take neither --y nor --by-edges".into()));
            }
            let a = assemble_all(n, (n as i64 + k).max(ty as i64) as usize)?;
            let (name, s) = if q.class == Class::Ck { ("Ck", &a.c_base) } else { ("Cbark", &a.c) };
            let slice = extract_excess_slice(s, k)?;
            for i in 0..=n {
                out.push(row(name, i, Some((i as i64 + k).max(0) as usize), slice.labelled(i)));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(class: Class, n: usize) -> CoeffQuery {
        CoeffQuery {
            class,
            n_max: n,
            y: None,
            by_edges: false,
            k: None,
        }
    }

    fn last(rows: &[CoeffRow]) -> &str {
        &rows.last().unwrap().value
    }

    #[test]
    fn documented_values() {
        assert_eq!(last(&coefficients(&q(Class::B, 4)).unwrap()), "60");
        assert_eq!(last(&coefficients(&q(Class::T, 5)).unwrap()), "70");
        assert_eq!(last(&coefficients(&q(Class::G, 1)).unwrap()), "5/24");
        assert_eq!(last(&coefficients(&q(Class::Gbar, 3)).unwrap()), "1241/128");
    }

    #[test]
    fn edge_split_sums_to_total() {
        let total = coefficients(&q(Class::C0, 5)).unwrap();
        let split = coefficients(&CoeffQuery {
            by_edges: true,
            ..q(Class::C0, 5)
        })
        .unwrap();
        let sum: Rational = split
            .iter()
            .filter(|r| r.n == 5)
            .map(|r| r.value.parse::<Rational>().unwrap())
            .sum();
        assert_eq!(sum.to_string(), last(&total));
    }

    #[test]
    fn symbolic_and_fixed_y_agree() {
        let y = Some(Rational::from((2, 3)));
        for class in [Class::C, Class::B0] {
            let fixed = coefficients(&CoeffQuery {
                y: y.clone(),
                ..q(class, 6)
            })
            .unwrap();
            let a = assemble_all(6, 12).unwrap();
            let s = if class == Class::C { &a.c } else { &a.b_base };
            let want = Rational::from(s.coeff(6).eval(y.as_ref().unwrap()) * factorial(6));
            assert_eq!(last(&fixed), want.to_string());
        }
    }

    #[test]
    fn excess_slice_needs_k() {
        assert!(matches!(coefficients(&q(Class::Ck, 5)), Err(CliError::Usage(_))));
        let rows = coefficients(&CoeffQuery {
            k: Some(-1),
            ..q(Class::Ck, 4)
        })
        .unwrap();
        // trees: Cayley's n^(n-2)
        assert_eq!(last(&rows), "16");
    }
}
