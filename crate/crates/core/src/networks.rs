//! Grammars for series-parallel networks and their solved bundles.
//!
//! A network has two unlabelled poles; it is trivial (the single root edge),
//! series, or parallel, and networks containing the root edge count as
//! parallel. Three flavours are solved:
//!
//! * spanning-tree networks: `D`, `S`, `P` carry a spanning tree, the barred
//!   versions carry a spanning forest with two components separating the poles;
//! * baseline networks without any marking;
//! * second-moment networks carrying two marked structures: two trees
//!   (`*`), a tree and a pole-separating forest (`~`), or two such forests
//!   (`^`).
//!
//! Every grammar is generic in the coefficient ring so it can be solved with
//! `y` symbolic ([`YPoly`] coefficients) or specialised to a rational.

use std::collections::BTreeMap;

use rug::Rational;
use thiserror::Error;

use crate::series::grammar::{Expr, GrammarError, GrammarSystem};
use crate::series::{Coeff, Series, SeriesError, UnivariateSeries, Var, YPoly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("negative coefficient in `{series}` at order {order}; the grammar is mistranscribed")]
    Negative { series: String, order: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("`{0}` is not part of this bundle")]
    Missing(String),
    #[error("the closed form needs a nonzero specialisation of y")]
    ZeroY,
    #[error("stored series `{0}` does not satisfy its rule")]
    Corrupt(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    SpanningTree,
    Baseline,
    SecondMoment,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::SpanningTree => "spanning-tree",
            Flavor::Baseline => "baseline",
            Flavor::SecondMoment => "second-moment",
        }
    }

    /// Names of the series in a bundle of this flavour.
    pub fn series_names(self) -> &'static [&'static str] {
        match self {
            Flavor::SpanningTree => &["D", "Dbar", "S", "Sbar", "P", "Pbar"],
            Flavor::Baseline => &["D", "S", "P"],
            Flavor::SecondMoment => &["Dstar", "Dtilde", "Dhat", "Sstar", "Stilde", "Shat", "Pstar", "Ptilde", "Phat"],
        }
    }
}

/// Deliberate corruption of a rule, used as a negative control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Perturbation {
    #[default]
    None,
    /// Drop the term of the parallel rule `P` where the root edge is absent.
    ParallelRule,
}

/// Solved network series of one flavour.
#[derive(Clone, Debug)]
pub struct NetworkBundle<C: Coeff> {
    pub flavor: Flavor,
    series: BTreeMap<String, Series<C>>,
    /// Number of passes the solver needed.
    pub rounds: usize,
}

impl<C: Coeff> NetworkBundle<C> {
    pub fn get(&self, name: &str) -> Result<&Series<C>, NetworkError> {
        self.series.get(name).ok_or_else(|| NetworkError::Missing(name.to_string()))
    }

    /// Like [`NetworkBundle::get`], panicking on a wrong name.
    pub fn s(&self, name: &str) -> &Series<C> {
        self.get(name).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(|s| s.as_str())
    }

    pub fn trunc(&self) -> usize {
        self.series.values().next().map_or(0, |s| s.trunc())
    }
}

impl NetworkBundle<YPoly> {
    /// Specialise every series at a rational `y`.
    pub fn eval_y(&self, y: &Rational) -> NetworkBundle<Rational> {
        NetworkBundle {
            flavor: self.flavor,
            series: self.series.iter().map(|(k, v)| (k.clone(), v.eval_y(y))).collect(),
            rounds: self.rounds,
        }
    }
}

/// `1 + y`, `exp(s) - 1` and friends, built once per grammar.
struct Atoms<C: Coeff> {
    y: Expr<C>,
    one: Expr<C>,
}

impl<C: Coeff> Atoms<C> {
    fn new(sys: &GrammarSystem<C>, y: C) -> Self {
        Atoms {
            y: Expr::constant(y),
            one: sys.int(1),
        }
    }
}

/// The spanning-tree network grammar.
pub fn spantree_system<C: Coeff>(ctx: C::Ctx, y: C, perturb: Perturbation) -> GrammarSystem<C> {
    let mut sys = GrammarSystem::new(Var::X, ctx);
    let a = Atoms::new(&sys, y);
    let (d, db) = (sys.unknown("D"), sys.unknown("Dbar"));
    let (s, sb) = (sys.unknown("S"), sys.unknown("Sbar"));
    let (p, pb) = (sys.unknown("P"), sys.unknown("Pbar"));
    let e = sb.exp();
    let em1 = &e - &a.one;

    sys.define("D", &a.y + &s + &p);
    sys.define("Dbar", &a.y + &sb + &pb);
    // A series network is a non-series network followed by any network.
    sys.define("S", (&a.y + &p) * d.mul_var());
    sys.define("Sbar", (&a.y + &p) * db.mul_var() + (&a.y + &pb) * d.mul_var());
    let mut prule = &a.y * &em1 + &a.y * &(&s * &e);
    if perturb != Perturbation::ParallelRule {
        prule = prule + &s * &em1;
    }
    sys.define("P", prule);
    sys.define("Pbar", (&em1 - &sb) + &a.y * &em1);
    sys
}

/// Networks without marking.
pub fn baseline_system<C: Coeff>(ctx: C::Ctx, y: C) -> GrammarSystem<C> {
    let mut sys = GrammarSystem::new(Var::X, ctx);
    let a = Atoms::new(&sys, y);
    let (d, s, p) = (sys.unknown("D"), sys.unknown("S"), sys.unknown("P"));
    let em1 = &s.exp() - &a.one;
    sys.define("D", &a.y + &s + &p);
    sys.define("S", (&a.y + &p) * d.mul_var());
    sys.define("P", &a.y * &em1 + (&em1 - &s));
    sys
}

/// Networks carrying two marked spanning structures.
///
/// The parallel rule for two trees is written with the two-tree series
/// `S*`, `P*` throughout.
pub fn second_moment_system<C: Coeff>(ctx: C::Ctx, y: C) -> GrammarSystem<C> {
    let mut sys = GrammarSystem::new(Var::X, ctx);
    let a = Atoms::new(&sys, y);
    let (ds, dt, dh) = (sys.unknown("Dstar"), sys.unknown("Dtilde"), sys.unknown("Dhat"));
    let (ss, st, sh) = (sys.unknown("Sstar"), sys.unknown("Stilde"), sys.unknown("Shat"));
    let (ps, pt, ph) = (sys.unknown("Pstar"), sys.unknown("Ptilde"), sys.unknown("Phat"));
    let e = sh.exp();
    let em1 = &e - &a.one;
    let one_plus_y = &a.one + &a.y;

    sys.define("Dstar", &a.y + &ss + &ps);
    sys.define("Dtilde", &a.y + &st + &pt);
    sys.define("Dhat", &a.y + &sh + &ph);

    let ns = &ds - &ss;
    let nt = &dt - &st;
    let nh = &dh - &sh;
    sys.define("Sstar", &ns * ds.mul_var());
    sys.define("Stilde", &nt * ds.mul_var() + &ns * dt.mul_var());
    sys.define(
        "Shat",
        &ns * dh.mul_var() + &nh * ds.mul_var() + (&nt * dt.mul_var()).scale(Rational::from(2)),
    );

    let st_e = &st * &e;
    sys.define(
        "Pstar",
        &ss * &em1 + &one_plus_y * &(&(&st * &st) * &e) + &a.y * &(&ss * &e) + (&a.y * &st_e).scale(Rational::from(2)) + &a.y * &em1,
    );
    sys.define("Ptilde", (&a.y + &st) * &em1 + &a.y * &st_e);
    sys.define("Phat", (&em1 - &sh) + &a.y * &em1);
    sys
}

fn bundle<C: Coeff>(flavor: Flavor, sys: &GrammarSystem<C>, trunc: usize) -> Result<NetworkBundle<C>, NetworkError> {
    let sol = sys.solve(trunc)?;
    if let Some((series, order)) = sol.negative.first() {
        return Err(NetworkError::Negative {
            series: series.clone(),
            order: *order,
        });
    }
    let rounds = sol.rounds;
    Ok(NetworkBundle {
        flavor,
        series: sol.into_map().into_iter().collect(),
        rounds,
    })
}

fn y_poly(trunc_y: usize) -> YPoly {
    YPoly::monomial(trunc_y, 1, Rational::from(1))
}

pub fn solve_spantree_networks(trunc_x: usize, trunc_y: usize) -> Result<NetworkBundle<YPoly>, NetworkError> {
    let sys = spantree_system(trunc_y, y_poly(trunc_y), Perturbation::None);
    bundle(Flavor::SpanningTree, &sys, trunc_x)
}

pub fn solve_baseline_networks(trunc_x: usize, trunc_y: usize) -> Result<NetworkBundle<YPoly>, NetworkError> {
    let sys = baseline_system(trunc_y, y_poly(trunc_y));
    bundle(Flavor::Baseline, &sys, trunc_x)
}

pub fn solve_second_moment_networks(trunc_x: usize, trunc_y: usize) -> Result<NetworkBundle<YPoly>, NetworkError> {
    let sys = second_moment_system(trunc_y, y_poly(trunc_y));
    bundle(Flavor::SecondMoment, &sys, trunc_x)
}

/// Solve a flavour directly at a rational `y`, which is far cheaper than
/// solving with `y` symbolic when only one specialisation is needed.
pub fn solve_networks_at(
    flavor: Flavor,
    trunc: usize,
    y: &Rational,
    perturb: Perturbation,
) -> Result<NetworkBundle<Rational>, NetworkError> {
    solve_networks_with(flavor, trunc, (), y.clone(), perturb)
}

/// Solve a flavour at a fixed `y` over any coefficient ring, for instance
/// floating-point coefficients when many terms are needed.
pub fn solve_networks_with<C: Coeff>(
    flavor: Flavor,
    trunc: usize,
    ctx: C::Ctx,
    y: C,
    perturb: Perturbation,
) -> Result<NetworkBundle<C>, NetworkError> {
    let sys = match flavor {
        Flavor::SpanningTree => spantree_system(ctx, y, perturb),
        Flavor::Baseline => baseline_system(ctx, y),
        Flavor::SecondMoment => second_moment_system(ctx, y),
    };
    bundle(flavor, &sys, trunc)
}

/// Rebuild a bundle with `y` symbolic from stored series, accepting it only
/// if every rule of the flavour's grammar holds exactly.
pub fn bundle_from_series(
    flavor: Flavor,
    trunc_y: usize,
    mut series: BTreeMap<String, Series<YPoly>>,
) -> Result<NetworkBundle<YPoly>, NetworkError> {
    let y = y_poly(trunc_y);
    let sys = match flavor {
        Flavor::SpanningTree => spantree_system(trunc_y, y, Perturbation::None),
        Flavor::Baseline => baseline_system(trunc_y, y),
        Flavor::SecondMoment => second_moment_system(trunc_y, y),
    };
    let mut values = Vec::new();
    for name in sys.names() {
        let s = series.remove(name).ok_or_else(|| NetworkError::Missing(name.clone()))?;
        if s.trunc_y() != trunc_y {
            return Err(NetworkError::Corrupt(name.clone()));
        }
        values.push(s);
    }
    let trunc = values.first().map_or(0, |s| s.trunc());
    let x = Series::variable(Var::X, trunc_y, trunc);
    let rhs = sys.rhs_at(&x, &values)?;
    for ((name, v), r) in sys.names().iter().zip(&values).zip(&rhs) {
        if v.trunc() != trunc || v != r {
            return Err(NetworkError::Corrupt(name.clone()));
        }
    }
    Ok(NetworkBundle {
        flavor,
        series: sys.names().iter().cloned().zip(values).collect(),
        rounds: 0,
    })
}

/// Outcome of substituting a solved series into a closed-form equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualReport {
    /// Largest absolute residual coefficient.
    pub max_abs: Rational,
    /// First order with a nonzero residual.
    pub first_nonzero: Option<usize>,
    /// Number of orders compared.
    pub orders: usize,
}

impl ResidualReport {
    pub fn from_series(r: &UnivariateSeries) -> Self {
        let mut max_abs = Rational::new();
        for c in r.coeffs() {
            let a = Rational::from(c.abs_ref());
            if a > max_abs {
                max_abs = a;
            }
        }
        ResidualReport {
            max_abs,
            first_nonzero: r.valuation(),
            orders: r.trunc() + 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.first_nonzero.is_none()
    }
}

/// `Phi(x, y; z)` of the closed-form implicit equation for `D`, applied to a
/// series `z` at a fixed rational `y`.
pub fn implicit_phi(z: &UnivariateSeries, y: &Rational) -> Result<UnivariateSeries, NetworkError> {
    if *y == 0 {
        return Err(NetworkError::ZeroY);
    }
    let t = z.trunc();
    let c = |r: Rational| UnivariateSeries::constant(Var::X, (), t, r);
    let one = c(Rational::from(1));
    let yc = c(y.clone());
    let y1 = c(Rational::from(1) + y);
    let xz = z.mul_var();
    let one_xz = &one + &xz;
    let xz2 = &xz * z;
    // y + (1+y) x z^2 / (1 + x z)
    let front = &yc + &(&(&y1 * &xz2) * &one_xz.reciprocal()?);
    let num = &(&(&yc * &one_xz) - &(&y1 * z)) * &(&c(Rational::from(2)) + &xz);
    let den = &(&(&yc * &one_xz) + &(&y1 * &xz2)) * &(&one_xz * &one_xz);
    let arg = -&(&(&xz * &num) * &den.reciprocal()?);
    Ok(z - &(&front * &arg.exp()?))
}

/// Substitute the solved `D` into the closed-form implicit equation.
pub fn implicit_d_consistency(bundle: &NetworkBundle<Rational>, y: &Rational, trunc: usize) -> Result<ResidualReport, NetworkError> {
    let d = bundle.get("D")?.truncate(trunc);
    Ok(ResidualReport::from_series(&implicit_phi(&d, y)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stored_bundles_are_rechecked() {
        let b = solve_spantree_networks(5, 12).unwrap();
        let map = |b: &NetworkBundle<YPoly>| b.names().map(|n| (n.to_string(), b.s(n).clone())).collect::<BTreeMap<_, _>>();
        let back = bundle_from_series(Flavor::SpanningTree, 12, map(&b)).unwrap();
        assert_eq!(back.s("Dbar"), b.s("Dbar"));
        let mut bad = map(&b);
        *bad.get_mut("P").unwrap().coeff_mut(3).coeff_mut(4) += 1;
        assert!(matches!(
            bundle_from_series(Flavor::SpanningTree, 12, bad),
            Err(NetworkError::Corrupt(_))
        ));
        let mut short = map(&b);
        short.remove("S");
        assert!(matches!(
            bundle_from_series(Flavor::SpanningTree, 12, short),
            Err(NetworkError::Missing(_))
        ));
    }

    fn q(n: i64) -> Rational {
        Rational::from(n)
    }

    fn at1(b: &NetworkBundle<YPoly>, name: &str, n: usize) -> Rational {
        b.s(name).eval_y(&q(1)).coeff(n).clone()
    }

    #[test]
    fn spanning_tree_small_orders() {
        let b = solve_spantree_networks(4, 10).unwrap();
        assert_eq!(at1(&b, "D", 0), q(1));
        assert_eq!(at1(&b, "D", 1), q(4));
        assert_eq!(at1(&b, "Dbar", 1), q(4));
        assert_eq!(at1(&b, "S", 1), q(1));
        assert_eq!(at1(&b, "P", 1), q(3));
        assert_eq!(at1(&b, "Sbar", 1), q(2));
        // Constant terms: the trivial network.
        assert_eq!(b.s("D").coeff(0), &y_poly(10));
        assert_eq!(b.s("Dbar").coeff(0), &y_poly(10));
        assert!(b.s("S").coeff(0).is_zero() && b.s("Sbar").coeff(0).is_zero());
        // exp(Sbar) at y = 1 is 1 + 2x + O(x^2).
        let e = b.s("Sbar").eval_y(&q(1)).exp().unwrap();
        assert_eq!(e.coeff(1), &q(2));
    }

    #[test]
    fn d_is_sum_of_parts() {
        let b = solve_spantree_networks(6, 14).unwrap();
        let y = BivariateY::y(6, 14);
        assert_eq!(b.s("D"), &(&(&y + b.s("S")) + b.s("P")));
        assert_eq!(b.s("Dbar"), &(&(&y + b.s("Sbar")) + b.s("Pbar")));
    }

    type BivariateY = crate::series::BivariateEGF;

    #[test]
    fn baseline_small_orders() {
        let b = solve_baseline_networks(4, 10).unwrap();
        assert_eq!(at1(&b, "D", 0), q(1));
        assert_eq!(at1(&b, "D", 1), q(2));
    }

    #[test]
    fn second_moment_small_orders() {
        let b = solve_second_moment_networks(3, 8).unwrap();
        assert_eq!(at1(&b, "Dstar", 1), q(10));
        assert_eq!(at1(&b, "Stilde", 1), q(2));
        assert_eq!(at1(&b, "Shat", 1), q(4));
        assert_eq!(at1(&b, "Dhat", 0), q(1));
    }

    #[test]
    fn specialised_solve_matches_bivariate() {
        let b = solve_spantree_networks(6, 14).unwrap();
        let u = solve_networks_at(Flavor::SpanningTree, 6, &q(1), Perturbation::None).unwrap();
        for name in Flavor::SpanningTree.series_names() {
            assert_eq!(&b.s(name).eval_y(&q(1)), u.s(name), "{name}");
        }
    }

    #[test]
    fn closed_form_residual_vanishes() {
        for y in [q(1), Rational::from((1, 2)), q(3)] {
            let b = solve_networks_at(Flavor::SpanningTree, 15, &y, Perturbation::None).unwrap();
            let r = implicit_d_consistency(&b, &y, 15).unwrap();
            assert!(r.is_zero(), "y = {y}: {r:?}");
        }
        let b = solve_networks_at(Flavor::SpanningTree, 0, &q(1), Perturbation::None).unwrap();
        assert!(implicit_d_consistency(&b, &q(1), 0).unwrap().is_zero());
    }

    #[test]
    fn perturbed_grammar_breaks_closed_form() {
        let y = q(1);
        let b = solve_networks_at(Flavor::SpanningTree, 6, &y, Perturbation::ParallelRule).unwrap();
        let r = implicit_d_consistency(&b, &y, 6).unwrap();
        assert!(!r.is_zero());
    }

    #[test]
    fn tree_marked_dominates_baseline() {
        let t = solve_networks_at(Flavor::SpanningTree, 12, &q(1), Perturbation::None).unwrap();
        let b = solve_networks_at(Flavor::Baseline, 12, &q(1), Perturbation::None).unwrap();
        for n in 0..=12 {
            assert!(t.s("D").coeff(n) >= b.s("D").coeff(n));
            assert!(t.s("D").coeff(n) >= t.s("S").coeff(n));
            assert!(t.s("D").coeff(n) >= t.s("P").coeff(n));
        }
    }
}
