//! From networks to 2-connected and connected graphs.
//!
//! 2-connected series come from the dissymmetry decomposition over ring and
//! multi-edge bricks, or (for unmarked graphs) by integrating the edge-rooting
//! identity in `y`. Connected series come from the block decomposition
//! `F = x exp(B'(F))` with `F = x C'`.

use std::ops::RangeInclusive;

use rug::Rational;
use thiserror::Error;

use crate::networks::{Flavor, NetworkBundle, NetworkError, ResidualReport};
use crate::series::grammar::{GrammarError, GrammarSystem};
use crate::series::{BivariateEGF, Coeff, Series, SeriesError, UnivariateSeries, Var, YPoly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssemblyError {
    #[error("expected a {expected} bundle, got {got}")]
    WrongFlavor { expected: &'static str, got: &'static str },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("connected-level solve failed: {0}")]
    Grammar(#[from] GrammarError),
    #[error("excess {k} slice needs trunc_y >= {need}, have {have}")]
    InsufficientY { k: i64, need: usize, have: usize },
}

fn expect(b_flavor: Flavor, want: Flavor) -> Result<(), AssemblyError> {
    if b_flavor == want {
        Ok(())
    } else {
        Err(AssemblyError::WrongFlavor {
            expected: want.name(),
            got: b_flavor.name(),
        })
    }
}

fn konst<C: Coeff>(like: &Series<C>, c: C) -> Series<C> {
    Series::constant(like.var(), like.ctx().clone(), like.trunc(), c)
}

fn one_like<C: Coeff>(like: &Series<C>) -> Series<C> {
    Series::one(like.var(), like.ctx().clone(), like.trunc())
}

/// `x^2 / 2 * a`, known to two more orders than `a`.
fn half_x2<C: Coeff>(a: &Series<C>) -> Series<C> {
    a.mul_var().mul_var().scale(&Rational::from((1, 2)))
}

/// 2-connected graphs with a marked spanning tree, by dissymmetry over the
/// ring/multi-edge decomposition tree. `y` is the edge weight the bundle was
/// solved with.
pub fn assemble_b<C: Coeff>(bundle: &NetworkBundle<C>, y: &C) -> Result<Series<C>, AssemblyError> {
    expect(bundle.flavor, Flavor::SpanningTree)?;
    let (s, sb) = (bundle.get("S")?, bundle.get("Sbar")?);
    let (p, pb) = (bundle.get("P")?, bundle.get("Pbar")?);
    let db = bundle.get("Dbar")?;
    let yc = konst(s, y.clone());
    let one = one_like(s);
    let e = sb.exp()?;
    let em1 = &e - &one;
    let em1s = &em1 - sb;

    // Rings: one non-series forest-carrying part closes a series network.
    let ring = s * &(db - sb);
    // Multi-edge bricks with at least three parts, at most one a single edge.
    let multi = &(&(s * &em1s) + &(&yc * &(s * &em1))) + &(&yc * &em1s);
    // A marked ring/multi-edge adjacency splits into series | parallel.
    let ring_multi = &(s * pb) + &(sb * p);
    let inner = &(&(&yc + &ring) + &multi) - &ring_multi;
    Ok(half_x2(&inner))
}

/// Unmarked 2-connected graphs by the same dissymmetry decomposition.
///
/// Rings of `k >= 3` non-series networks are counted up to rotation and
/// reflection, giving `(1/2)(-log(1 - u) - u - u^2/2)` with
/// `u = x (D - S)`.
pub fn assemble_baseline_b<C: Coeff>(bundle: &NetworkBundle<C>, y: &C) -> Result<Series<C>, AssemblyError> {
    expect(bundle.flavor, Flavor::Baseline)?;
    let (d, s, p) = (bundle.get("D")?, bundle.get("S")?, bundle.get("P")?);
    let yc = konst(s, y.clone());
    let one = one_like(s);
    let half = Rational::from((1, 2));

    // u is known to order trunc(D) + 1. An error in u at the next order
    // reaches u^k (k >= 3) only two orders later, so padding u with a zero
    // keeps the ring sum exact to trunc(D) + 2 like the other terms.
    let mut uc = (d - s).mul_var().coeffs().to_vec();
    uc.push(C::zero(d.ctx()));
    let u = Series::from_coeffs(d.var(), d.ctx().clone(), uc);
    // -log(1 - u) - u - u^2/2 = sum_{k >= 3} u^k / k
    let mut ring_sum = Series::zero(u.var(), u.ctx().clone(), u.trunc());
    let mut pow = &u * &u;
    for k in 3..=u.trunc() {
        pow = &pow * &u;
        ring_sum = &ring_sum + &pow.scale(&Rational::from((1, k as u64)));
    }
    let ring = ring_sum.scale(&half);

    let e = s.exp()?;
    let s2 = (s * s).scale(&half);
    let multi_half = &(&(&(&e - &one) - s) - &s2) + &(&yc * &(&(&e - &one) - s));
    let multi = half_x2(&multi_half);
    let ring_multi = half_x2(&(s * p));
    let edge = half_x2(&yc);
    let t = ring.trunc();
    let total = &(&(&edge.truncate(t) + &ring) + &multi.truncate(t)) - &ring_multi.truncate(t);
    Ok(total)
}

/// Unmarked 2-connected graphs from `2 (1+y) B_y = x^2 (D + 1)` with
/// `B(x, 0) = 0`.
pub fn baseline_b_by_integration(bundle: &NetworkBundle<YPoly>) -> Result<BivariateEGF, AssemblyError> {
    expect(bundle.flavor, Flavor::Baseline)?;
    let d = bundle.get("D")?;
    let ty = d.trunc_y();
    let one = one_like(d);
    let inv = YPoly::from_coeffs(ty, vec![Rational::from(2), Rational::from(2)])
        .inverse()
        .expect("2 + 2y is a unit");
    let by = (&(d + &one)).mul_var().mul_var().mul_ypoly(&inv);
    Ok(by.integrate_y())
}

/// Which reading of the `y`-term of the edge-rooting identity for marked
/// 2-connected graphs is tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootingReading {
    /// `y (exp(Sbar) - 1)`
    ExpMinusOne,
    /// `y exp(Sbar - 1)`, the literal parenthesisation.
    ShiftedArgument,
    /// `y exp(Sbar)`
    PlainExp,
}

impl RootingReading {
    pub const ALL: [RootingReading; 3] = [
        RootingReading::ExpMinusOne,
        RootingReading::ShiftedArgument,
        RootingReading::PlainExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RootingReading::ExpMinusOne => "y(exp(Sbar)-1)",
            RootingReading::ShiftedArgument => "y exp(Sbar-1)",
            RootingReading::PlainExp => "y exp(Sbar)",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RootingReport {
    /// Exact residual for each reading. The shifted reading is evaluated with
    /// a rational value of `1/e` accurate to 30 terms.
    pub residuals: Vec<(RootingReading, ResidualReport)>,
    /// The reading whose residual vanishes, if any.
    pub validated: Option<RootingReading>,
}

impl RootingReport {
    pub fn residual(&self, r: RootingReading) -> &ResidualReport {
        &self.residuals.iter().find(|(k, _)| *k == r).expect("all readings checked").1
    }
}

/// Check `2 (1+y) B_y = x^2 (1 + D + Dbar - T)` for the candidate `y`-terms
/// `T`. The subtracted term counts parallel networks whose poles are joined
/// by the removed edge.
///
/// The shifted reading carries the factor `1/e` and cannot vanish over the
/// rationals; it already fails at the lowest order by about `y/e`, far above
/// the error of the enclosure used.
pub fn check_rooting_identity(bundle: &NetworkBundle<YPoly>, b: &BivariateEGF) -> Result<RootingReport, AssemblyError> {
    expect(bundle.flavor, Flavor::SpanningTree)?;
    let (d, db, sb) = (bundle.get("D")?, bundle.get("Dbar")?, bundle.get("Sbar")?);
    let ty = d.trunc_y();
    let one = one_like(d);
    let yc = konst(d, YPoly::monomial(ty, 1, Rational::from(1)));
    let e = sb.exp()?;
    let two_one_plus_y = YPoly::from_coeffs(ty, vec![Rational::from(2), Rational::from(2)]);
    let lhs = b.diff_y().mul_ypoly(&two_one_plus_y);
    let base = &(&one + d) + db;

    let mut inv_e = Rational::new();
    let mut term = Rational::from(1);
    for k in 0..30u32 {
        if k > 0 {
            term /= k;
        }
        if k % 2 == 0 {
            inv_e += &term;
        } else {
            inv_e -= &term;
        }
    }

    let mut residuals = Vec::new();
    for reading in RootingReading::ALL {
        let t = match reading {
            RootingReading::ExpMinusOne => &yc * &(&e - &one),
            RootingReading::ShiftedArgument => (&yc * &e).scale(&inv_e),
            RootingReading::PlainExp => &yc * &e,
        };
        let rhs = (&base - &t).mul_var().mul_var();
        residuals.push((reading, residual_bivariate(&(&lhs - &rhs))));
    }
    let validated = residuals.iter().find(|(_, r)| r.is_zero()).map(|(k, _)| *k);
    Ok(RootingReport { residuals, validated })
}

fn residual_bivariate(r: &BivariateEGF) -> ResidualReport {
    let mut max_abs = Rational::new();
    let mut first = None;
    for (n, p) in r.coeffs().iter().enumerate() {
        for c in p.coeffs() {
            let a = Rational::from(c.abs_ref());
            if a != 0 && first.is_none() {
                first = Some(n);
            }
            if a > max_abs {
                max_abs = a;
            }
        }
    }
    ResidualReport {
        max_abs,
        first_nonzero: first,
        orders: r.trunc() + 1,
    }
}

/// Connected graphs from 2-connected ones: solve `F = x exp(B'(F))` and
/// recover `C` from `F = x C'`.
pub fn connected_from_b<C: Coeff>(b: &Series<C>) -> Result<Series<C>, AssemblyError> {
    let bx = b.derivative();
    let trunc = bx.trunc() + 1;
    let mut sys: GrammarSystem<C> = GrammarSystem::new(b.var(), b.ctx().clone());
    let f = sys.unknown("F");
    sys.define("F", f.compose_into(bx).exp().mul_var());
    let sol = sys.solve(trunc)?;
    let f = sol.series("F");
    let mut coeffs = Vec::with_capacity(trunc + 1);
    coeffs.push(C::zero(b.ctx()));
    for n in 1..=trunc {
        let mut c = f.coeff(n).clone();
        c.scale(&Rational::from((1, n as u64)));
        coeffs.push(c);
    }
    Ok(Series::from_coeffs(b.var(), b.ctx().clone(), coeffs))
}

/// `C_k(x) = sum_n [x^n y^(n+k)] C(x, y) x^n`: connected graphs of excess `k`.
pub fn extract_excess_slice(c: &BivariateEGF, k: i64) -> Result<UnivariateSeries, AssemblyError> {
    let tx = c.trunc_x();
    let need = (tx as i64 + k).max(0) as usize;
    if c.trunc_y() < need {
        return Err(AssemblyError::InsufficientY {
            k,
            need,
            have: c.trunc_y(),
        });
    }
    let coeffs = (0..=tx)
        .map(|n| {
            let m = n as i64 + k;
            if m < 0 {
                Rational::new()
            } else {
                c.get(n, m as usize).clone()
            }
        })
        .collect();
    Ok(UnivariateSeries::from_rationals(Var::X, coeffs))
}

/// Exact edge-count statistics of the objects with `n` vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMoments {
    pub n: usize,
    /// `n! [x^n] A(x, 1)`, the number of objects.
    pub total: Rational,
    pub mean: Rational,
    pub variance: Rational,
}

/// Mean and variance of the edge count for each `n` in range; orders with no
/// objects are skipped.
pub fn edge_moment_table(s: &BivariateEGF, ns: RangeInclusive<usize>) -> Vec<EdgeMoments> {
    let mut out = Vec::new();
    for n in ns {
        if n > s.trunc_x() {
            break;
        }
        let p = s.coeff(n);
        let mut m0 = Rational::new();
        let mut m1 = Rational::new();
        let mut m2 = Rational::new();
        for (m, c) in p.coeffs().iter().enumerate() {
            if *c == 0 {
                continue;
            }
            m0 += c;
            m1 += Rational::from(c * m as u64);
            m2 += Rational::from(c * (m as u64 * m as u64));
        }
        if m0 == 0 {
            continue;
        }
        let mean = Rational::from(&m1 / &m0);
        let variance = Rational::from(&m2 / &m0) - Rational::from(&mean * &mean);
        let total = {
            let mut t = Rational::new();
            for m in 0..=s.trunc_y() {
                t += s.labelled(n, m);
            }
            t
        };
        out.push(EdgeMoments { n, total, mean, variance });
    }
    out
}

/// All assembled classes at symbolic `y`.
#[derive(Clone, Debug)]
pub struct AssembledSeries {
    /// Marked 2-connected, from dissymmetry.
    pub b: BivariateEGF,
    /// Marked connected.
    pub c: BivariateEGF,
    /// Unmarked 2-connected, from integration in `y`.
    pub b_base: BivariateEGF,
    /// Unmarked connected.
    pub c_base: BivariateEGF,
}

/// Networks to order `trunc_x - 2` give graphs to order `trunc_x`.
pub fn assemble_all(trunc_x: usize, trunc_y: usize) -> Result<AssembledSeries, AssemblyError> {
    let nt = trunc_x.saturating_sub(2);
    let y = YPoly::monomial(trunc_y, 1, Rational::from(1));
    let tree = crate::networks::solve_spantree_networks(nt, trunc_y)?;
    let base = crate::networks::solve_baseline_networks(nt, trunc_y)?;
    let b = assemble_b(&tree, &y)?;
    let b_base = baseline_b_by_integration(&base)?;
    let c = connected_from_b(&b)?;
    let c_base = connected_from_b(&b_base)?;
    Ok(AssembledSeries { b, c, b_base, c_base })
}

/// Marked and unmarked 2-connected and connected series at a fixed `y`.
#[derive(Clone, Debug)]
pub struct AssembledAt<C: Coeff = Rational> {
    pub b: Series<C>,
    pub c: Series<C>,
    pub b_base: Series<C>,
    pub c_base: Series<C>,
}

/// As [`assemble_all`], solving directly at a rational `y`. The unmarked
/// 2-connected series uses the dissymmetry form, since integration in `y` is
/// unavailable once `y` is fixed.
pub fn assemble_at(trunc_x: usize, y: &Rational) -> Result<AssembledAt, AssemblyError> {
    assemble_with(trunc_x, (), y)
}

/// As [`assemble_at`] over any coefficient ring.
pub fn assemble_with<C: Coeff>(trunc_x: usize, ctx: C::Ctx, y: &C) -> Result<AssembledAt<C>, AssemblyError> {
    use crate::networks::{solve_networks_with, Perturbation};
    let nt = trunc_x.saturating_sub(2);
    let tree = solve_networks_with(Flavor::SpanningTree, nt, ctx.clone(), y.clone(), Perturbation::None)?;
    let base = solve_networks_with(Flavor::Baseline, nt, ctx, y.clone(), Perturbation::None)?;
    let b = assemble_b(&tree, y)?;
    let b_base = assemble_baseline_b(&base, y)?;
    let c = connected_from_b(&b)?;
    let c_base = connected_from_b(&b_base)?;
    Ok(AssembledAt { b, c, b_base, c_base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{solve_baseline_networks, solve_spantree_networks};
    use rug::Integer;

    fn q(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn marked_two_connected_small_counts() {
        let a = assemble_at(6, &q(1)).unwrap();
        assert_eq!(a.b.labelled(2), q(1));
        assert_eq!(a.b.labelled(3), q(3));
        assert_eq!(a.b.labelled(4), q(60));
        assert_eq!(a.b_base.labelled(3), q(1));
        assert_eq!(a.b_base.labelled(4), q(9));
        assert_eq!(a.c.labelled(1), q(1));
        assert_eq!(a.c.labelled(3), q(6));
        assert_eq!(a.c_base.labelled(4), q(37));
    }

    #[test]
    fn baseline_routes_agree() {
        let (tx, ty) = (8, 16);
        let base = solve_baseline_networks(tx - 2, ty).unwrap();
        let by_int = baseline_b_by_integration(&base).unwrap();
        let y = YPoly::monomial(ty, 1, q(1));
        let by_dis = assemble_baseline_b(&base, &y).unwrap();
        assert_eq!(by_dis.trunc(), tx);
        assert_eq!(by_int.truncate(tx), by_dis);
        assert_eq!(by_int.get(2, 1), &Rational::from((1, 2)));
        assert!(by_int.get(2, 0).is_zero());
    }

    #[test]
    fn rooting_identity_holds() {
        let (tx, ty) = (8, 16);
        let tree = solve_spantree_networks(tx - 2, ty).unwrap();
        let b = assemble_b(&tree, &YPoly::monomial(ty, 1, q(1))).unwrap();
        let r = check_rooting_identity(&tree, &b).unwrap();
        assert_eq!(r.validated, Some(RootingReading::PlainExp), "{r:?}");
        // Both parenthesisations of the printed form fail at the edge term.
        assert_eq!(r.residual(RootingReading::ExpMinusOne).first_nonzero, Some(2));
        assert_eq!(r.residual(RootingReading::ShiftedArgument).first_nonzero, Some(2));
    }

    #[test]
    fn excess_slices() {
        let all = assemble_all(6, 12).unwrap();
        let trees = extract_excess_slice(&all.c_base, -1).unwrap();
        for n in 1..=6u32 {
            let cayley = if n == 1 {
                Integer::from(1)
            } else {
                Integer::from(Integer::u_pow_u(n, n - 2))
            };
            assert_eq!(trees.labelled(n as usize), Rational::from(cayley));
        }
        let unicyclic = extract_excess_slice(&all.c_base, 0).unwrap();
        assert_eq!(unicyclic.labelled(3), q(1));
        assert!(matches!(
            extract_excess_slice(&assemble_all(6, 5).unwrap().c, 1),
            Err(AssemblyError::InsufficientY { .. })
        ));
    }

    #[test]
    fn edge_moments_small() {
        let all = assemble_all(5, 10).unwrap();
        let rows = edge_moment_table(&all.b, 2..=2);
        assert_eq!(rows[0].mean, q(1));
        assert_eq!(rows[0].variance, q(0));
        let rows = edge_moment_table(&all.c_base, 3..=3);
        assert_eq!(rows[0].mean, Rational::from((9, 4)));
        assert_eq!(rows[0].total, q(4));
    }

    #[test]
    fn wrong_flavor_rejected() {
        let base = solve_baseline_networks(3, 6).unwrap();
        assert!(matches!(
            assemble_b(&base, &YPoly::monomial(6, 1, q(1))),
            Err(AssemblyError::WrongFlavor { .. })
        ));
    }
}
