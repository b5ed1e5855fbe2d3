//! Labelled 2-trees, and 2-trees carrying a spanning tree.
//!
//! The edge count of a 2-tree is forced (`2n - 3`), so everything past the
//! edge-rooted series `T̄` is evaluated at `y = 1`.

use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::asymptotics::implicit::{branch_point, puiseux, singular_x, BranchPoint, ImplicitEquation};
use crate::asymptotics::transfer::{ratio_fit, FitResult};
use crate::asymptotics::SingularExpansion;
use crate::numeric::{e, float, Jet, NumericError};
use crate::series::grammar::{GrammarError, GrammarSystem};
use crate::series::{BivariateEGF, Coeff, Series, SeriesError, UnivariateSeries, Var, YPoly};

#[derive(Debug, Error)]
pub enum TwoTreeError {
    #[error("2-tree count at n={n} is {got}, expected {want}")]
    Moon { n: usize, got: Rational, want: Rational },
    #[error("edge-rooted 2-tree coefficient [x^{n} y^{m}] is {got}, expected {want}")]
    Lagrange { n: usize, m: usize, got: Rational, want: Rational },
    #[error("need truncation at least 3, got {0}")]
    TooShort(usize),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// `(n choose 2) (2n - 3)^(n - 4)` labelled 2-trees on `n >= 2` vertices.
pub fn moon(n: usize) -> Rational {
    let n = n as u32;
    let pairs = Integer::from(n) * (n - 1) / 2u32;
    let pow = if n >= 4 {
        Rational::from(Integer::from(Integer::u_pow_u(2 * n - 3, n - 4)))
    } else {
        Rational::from(1) / Rational::from(Integer::from(Integer::u_pow_u(2 * n - 3, 4 - n)))
    };
    Rational::from(pairs) * pow
}

/// `[x^n y^m] T̄ = m^((m-3)/2) / ((m-1)/2)!` when `n = (m-1)/2`, else 0.
pub fn lagrange_tbar(n: usize, m: usize) -> Rational {
    if m % 2 == 0 || (m - 1) / 2 != n {
        return Rational::new();
    }
    let fact = Integer::from(Integer::factorial(n as u32));
    let m_int = Integer::from(m);
    // m^((m-3)/2) with m = 2n + 1, so the exponent is n - 1.
    let pow = if n >= 1 {
        Rational::from(Integer::from(Integer::u_pow_u(m as u32, n as u32 - 1)))
    } else {
        Rational::from((1, m_int))
    };
    pow / fact
}

/// `T̄ = y exp(x T̄^2)` over any coefficient ring.
pub fn tbar_system<C: Coeff>(ctx: C::Ctx, y: C) -> GrammarSystem<C> {
    let mut sys = GrammarSystem::new(Var::X, ctx);
    let t = sys.unknown("Tbar");
    sys.define("Tbar", crate::series::grammar::Expr::constant(y) * (&t * &t).mul_var().exp());
    sys
}

/// Edge-maximal networks with a spanning tree containing (`Drbar`) or
/// avoiding (`Dr`) the root edge.
pub fn maximal_network_system<C: Coeff>(ctx: C::Ctx, y: C) -> GrammarSystem<C> {
    let mut sys = GrammarSystem::new(Var::X, ctx);
    let (u, w) = (sys.unknown("Drbar"), sys.unknown("Dr"));
    let yc = crate::series::grammar::Expr::constant(y);
    let s = &u + &w;
    let e = (&s * &u).mul_var().scale(Rational::from(2)).exp();
    sys.define("Drbar", &yc * &e);
    sys.define("Dr", &yc * &(&(&s * &s).mul_var() * &e));
    sys
}

/// `T = x^2/2 (T̄ - (2/3) x T̄^3)`.
pub fn t_from_tbar<C: Coeff>(tbar: &Series<C>) -> Series<C> {
    let cube = tbar.pow(3).mul_var().scale(&Rational::from((2, 3)));
    let inner = &tbar.truncate(cube.trunc().min(tbar.trunc())) - &cube.truncate(tbar.trunc());
    inner.mul_var().mul_var().scale(&Rational::from((1, 2)))
}

/// 2-trees with a spanning tree by dissymmetry over the edge-triangle
/// incidence tree: five node classes minus five edge classes.
pub fn ts_from_networks<C: Coeff>(x: &Series<C>, drbar: &Series<C>, dr: &Series<C>) -> Series<C> {
    let q = |r: (i64, i64)| Rational::from(r);
    let x2 = x * x;
    let x3 = &x2 * x;
    let (u, w) = (drbar, dr);
    let u2 = u * u;
    let u3 = &u2 * u;
    let u2w = &u2 * w;
    let uw2 = &(u * w) * w;
    let nodes = [
        (&x2 * u).scale(&q((1, 2))),
        (&x2 * w).scale(&q((1, 2))),
        (&x3 * &u3).scale(&q((1, 2))),
        &x3 * &u2w,
        (&x3 * &uw2).scale(&q((1, 2))),
    ];
    let edges = [
        &x3 * &u3,
        &x3 * &u2w,
        (&x3 * &u3).scale(&q((1, 2))),
        (&x3 * &u2w).scale(&q((2, 1))),
        (&x3 * &uw2).scale(&q((3, 2))),
    ];
    let mut total = Series::zero(u.var(), u.ctx().clone(), u.trunc());
    for n in &nodes {
        total = &total + n;
    }
    for e in &edges {
        total = &total - e;
    }
    total
}

/// Exact series at `y = 1` together with the bivariate edge-rooted series.
#[derive(Clone, Debug)]
pub struct TwoTreeSeries {
    pub tbar_xy: BivariateEGF,
    pub tbar: UnivariateSeries,
    pub t: UnivariateSeries,
    pub ts: UnivariateSeries,
    pub drbar: UnivariateSeries,
    pub dr: UnivariateSeries,
}

/// Solve `T̄`, `T`, the maximal networks and `Tˢ` to order `trunc`, checking
/// the counts against Moon's formula and the Lagrange closed form.
pub fn solve_two_trees(trunc: usize) -> Result<TwoTreeSeries, TwoTreeError> {
    if trunc < 3 {
        return Err(TwoTreeError::TooShort(trunc));
    }
    let ty = 2 * trunc + 1;
    let y = YPoly::monomial(ty, 1, Rational::from(1));
    let tbar_xy = tbar_system::<YPoly>(ty, y).solve(trunc)?.series("Tbar").clone();
    for n in 0..=trunc {
        for m in 0..=ty {
            let got = tbar_xy.coeff(n).coeff(m).clone();
            let want = lagrange_tbar(n, m);
            if got != want {
                return Err(TwoTreeError::Lagrange { n, m, got, want });
            }
        }
    }
    let one = Rational::from(1);
    let tbar = Series::from_coeffs(Var::X, (), tbar_xy.coeffs().iter().map(|c| c.eval(&one)).collect());
    let t = t_from_tbar(&tbar).truncate(trunc);
    for n in 2..=trunc {
        let got = t.labelled(n);
        let want = moon(n);
        if got != want {
            return Err(TwoTreeError::Moon { n, got, want });
        }
    }
    let nets = maximal_network_system::<Rational>((), one).solve(trunc)?;
    let (drbar, dr) = (nets.series("Drbar").clone(), nets.series("Dr").clone());
    let x = Series::variable(Var::X, (), trunc);
    let ts = ts_from_networks(&x, &drbar, &dr);
    Ok(TwoTreeSeries {
        tbar_xy,
        tbar,
        t,
        ts,
        drbar,
        dr,
    })
}

/// `T̄ = exp(x T̄^2)` at `y = 1` as an implicit equation.
#[derive(Clone, Debug)]
pub struct TbarEquation;

impl ImplicitEquation for TbarEquation {
    fn name(&self) -> String {
        "edge-rooted 2-trees".into()
    }
    fn eval(&self, x: &Jet, z: &Jet) -> Result<Jet, NumericError> {
        let e = (x * &(z * z)).exp_general()?;
        Ok(z - &e)
    }
    fn start(&self, prec: u32) -> Float {
        float(prec, 1)
    }
}

/// The maximal-network system with `Dr` eliminated: with `s = Drbar + Dr`,
/// the second equation reads `s - u = x u s^2`, whose small root is
/// `s = 2u / (1 + sqrt(1 - 4 x u^2))`.
#[derive(Clone, Debug)]
pub struct MaximalNetworkEquation;

impl MaximalNetworkEquation {
    fn total(x: &Jet, u: &Jet) -> Result<Jet, NumericError> {
        let prec = *u.ctx();
        let one = Series::one(u.var(), prec, u.trunc());
        let disc = &one - &(x * &(u * u)).scale(&Rational::from(4));
        let root = disc.ln()?.scale(&Rational::from((1, 2))).exp_general()?;
        Ok(&u.scale(&Rational::from(2)) * &(&one + &root).reciprocal()?)
    }

    /// `Dr = s - u` on jets.
    pub fn dr(x: &Jet, u: &Jet) -> Result<Jet, NumericError> {
        Ok(&Self::total(x, u)? - u)
    }
}

impl ImplicitEquation for MaximalNetworkEquation {
    fn name(&self) -> String {
        "edge-maximal networks".into()
    }
    fn eval(&self, x: &Jet, u: &Jet) -> Result<Jet, NumericError> {
        let s = Self::total(x, u)?;
        let e = (&(x * &s) * u).scale(&Rational::from(2)).exp_general()?;
        Ok(u - &e)
    }
    fn start(&self, prec: u32) -> Float {
        float(prec, 1)
    }
}

/// Singular data of the 2-tree classes at `y = 1`, computed from the grammars.
#[derive(Clone, Debug)]
pub struct TwoTreeSingularities {
    /// `T` at `1/(2e)`, from the Puiseux expansion of `T̄`.
    pub t: SingularExpansion,
    pub tbar_branch: BranchPoint,
    pub networks: BranchPoint,
    pub drbar: SingularExpansion,
    pub dr: SingularExpansion,
    pub ts: SingularExpansion,
}

impl TwoTreeSingularities {
    pub fn new(prec: u32) -> Result<Self, NumericError> {
        let order = 3;
        let tb = branch_point(&TbarEquation, prec)?;
        let tbar = puiseux(&TbarEquation, &tb, order)?;
        let xt = singular_x(&tb.x, order);
        let t = t_from_tbar_jet(&xt, &crate::numeric::jet(Var::X, prec, tbar[..=order].to_vec()));

        let nb = branch_point(&MaximalNetworkEquation, prec)?;
        let u = crate::numeric::jet(Var::X, prec, puiseux(&MaximalNetworkEquation, &nb, order)?[..=order].to_vec());
        let xn = singular_x(&nb.x, order);
        let w = MaximalNetworkEquation::dr(&xn, &u)?;
        let ts = ts_from_networks(&xn, &u, &w);
        Ok(TwoTreeSingularities {
            t: SingularExpansion::new(tb.x.clone(), t.coeffs().to_vec()),
            tbar_branch: tb,
            drbar: SingularExpansion::new(nb.x.clone(), u.coeffs().to_vec()),
            dr: SingularExpansion::new(nb.x.clone(), w.coeffs().to_vec()),
            ts: SingularExpansion::new(nb.x.clone(), ts.coeffs().to_vec()),
            networks: nb,
        })
    }
}

fn t_from_tbar_jet(x: &Jet, tbar: &Jet) -> Jet {
    let cube = &(&(tbar * tbar) * tbar) * x;
    let inner = tbar - &cube.scale(&Rational::from((2, 3)));
    (&(x * x) * &inner).scale(&Rational::from((1, 2)))
}

/// `T` at `y = 1` in closed form: `rho_T = 1/(2e)` and
/// `e^(-3/2) (1/12, 0, -3/16, sqrt(2)/48)`.
pub fn t_expansion_closed(prec: u32) -> SingularExpansion {
    let em = Float::with_val(prec, Float::with_val(prec, -1.5f64).exp_ref());
    let rho = Float::with_val(prec, Float::with_val(prec, e(prec) * 2u32).recip_ref());
    let sqrt2 = Float::with_val(prec, 2u32).sqrt();
    SingularExpansion::new(
        rho,
        vec![
            Float::with_val(prec, &em / 12u32),
            float(prec, 0),
            Float::with_val(prec, &em * float(prec, (-3, 16))),
            Float::with_val(prec, &em * sqrt2) / 48u32,
        ],
    )
}

/// Growth and constant of the mean number of spanning trees of a random
/// 2-tree, `E[U_n] ~ s2 growth^n`.
#[derive(Clone, Debug)]
pub struct TwoTreeExpectation {
    /// `rho_T / R_T`.
    pub growth: Float,
    /// `Tˢ_3 / T_3`.
    pub s2: Float,
    pub ts3: Float,
    pub t3: Float,
}

impl TwoTreeExpectation {
    /// `Tˢ_3` that a given `s2` would require.
    pub fn ts3_implied(&self, s2: &Float) -> Float {
        Float::with_val(self.t3.prec(), s2 * &self.t3)
    }
}

pub fn two_tree_expectation(sing: &TwoTreeSingularities) -> TwoTreeExpectation {
    let prec = sing.t.rho.prec();
    let t3 = sing.t.coeffs[3].clone();
    let ts3 = sing.ts.coeffs[3].clone();
    TwoTreeExpectation {
        growth: Float::with_val(prec, &sing.t.rho / &sing.ts.rho),
        s2: Float::with_val(prec, &ts3 / &t3),
        ts3,
        t3,
    }
}

/// Fitted `n^(-5/2)` laws of the floating-point coefficients of `T` and `Tˢ`.
#[derive(Clone, Debug)]
pub struct TwoTreeFits {
    pub t: FitResult,
    pub ts: FitResult,
}

impl TwoTreeFits {
    /// `s2` as the ratio of fitted constants.
    pub fn s2(&self) -> Float {
        Float::with_val(self.t.constant.prec(), &self.ts.constant / &self.t.constant)
    }
}

pub fn two_tree_fits(terms: usize, prec: u32) -> Result<TwoTreeFits, TwoTreeError> {
    let one = float(prec, 1);
    let tbar = tbar_system::<Float>(prec, one.clone()).solve(terms)?.series("Tbar").clone();
    let t = t_from_tbar(&tbar).truncate(terms);
    let nets = maximal_network_system::<Float>(prec, one).solve(terms)?;
    let x = Series::variable(Var::X, prec, terms);
    let ts = ts_from_networks(&x, nets.series("Drbar"), nets.series("Dr"));
    let alpha = Rational::from((-5, 2));
    let order = (terms / 6).clamp(4, 16);
    Ok(TwoTreeFits {
        t: ratio_fit(t.coeffs(), Some(&alpha), order)?,
        ts: ratio_fit(ts.coeffs(), Some(&alpha), order)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::dlw::dlw_solve;
    use crate::numeric::agreeing_digits;

    #[test]
    fn moon_small_values() {
        assert_eq!(moon(3), Rational::from(1));
        assert_eq!(moon(4), Rational::from(6));
        assert_eq!(moon(5), Rational::from(70));
    }

    #[test]
    fn exact_series() {
        let s = solve_two_trees(10).unwrap();
        assert_eq!(s.t.labelled(3), Rational::from(1));
        assert_eq!(s.t.labelled(4), Rational::from(6));
        assert_eq!(s.t.labelled(5), Rational::from(70));
        assert_eq!(*s.drbar.coeff(0), Rational::from(1));
        assert_eq!(*s.dr.coeff(0), Rational::from(0));
        assert_eq!(*s.drbar.coeff(1), Rational::from(2));
        assert_eq!(s.ts.labelled(3), Rational::from(3));
        assert_eq!(s.ts.labelled(4), Rational::from(48));
        // the ten dissymmetry terms collapse to x^2/2 (Drbar - Dr)
        let collapsed = (&s.drbar - &s.dr).mul_var().mul_var().scale(&Rational::from((1, 2)));
        assert_eq!(collapsed.truncate(s.ts.trunc()), s.ts.truncate(collapsed.trunc()));
    }

    #[test]
    fn too_short() {
        assert!(matches!(solve_two_trees(2), Err(TwoTreeError::TooShort(2))));
    }

    #[test]
    fn t_expansion_two_routes() {
        let prec = 192;
        let sing = TwoTreeSingularities::new(prec).unwrap();
        let closed = t_expansion_closed(prec);
        assert!(agreeing_digits(&sing.t.rho, &closed.rho) > 40.0);
        for k in [0, 2, 3] {
            assert!(agreeing_digits(&sing.t.coeffs[k], &closed.coeffs[k]) > 30.0, "T_{k}");
        }
        assert!(sing.t.coeffs[1].to_f64().abs() < 1e-40);
    }

    #[test]
    fn maximal_networks_two_solvers() {
        let prec = 192;
        let sing = TwoTreeSingularities::new(prec).unwrap();
        let bp = dlw_solve(|p| maximal_network_system::<Float>(p, float(p, 1)), prec).unwrap();
        assert!(agreeing_digits(&bp.x, &sing.networks.x) > 30.0);
        assert!((bp.x.to_f64() - 0.07197).abs() < 2e-5);
        let rows: [(&SingularExpansion, [f64; 4]); 2] = [
            (&sing.drbar, [1.46516, -0.77028, 0.53282, -0.40927]),
            (&sing.dr, [0.34588, -0.77028, 0.87870, -0.92279]),
        ];
        for (exp, want) in rows {
            for (k, w) in want.iter().enumerate() {
                assert!((exp.coeffs[k].to_f64() - w).abs() < 2e-5, "{k}: {}", exp.coeffs[k]);
            }
        }
    }

    #[test]
    fn expectation_and_fits() {
        let prec = 192;
        let sing = TwoTreeSingularities::new(prec).unwrap();
        let ex = two_tree_expectation(&sing);
        assert!((ex.growth.to_f64() - 2.55561).abs() < 2.55561e-4);
        let fits = two_tree_fits(90, 256).unwrap();
        assert!(fits.ts.confident(8.0));
        assert!(agreeing_digits(&fits.s2(), &ex.s2) > 8.0, "{} vs {}", fits.s2(), ex.s2);
        for (k, w) in [(0, 0.00290), (2, -0.00669), (3, 0.00133)] {
            assert!((sing.ts.coeffs[k].to_f64() - w).abs() < 2e-5, "Ts_{k}");
        }
        assert!((ex.s2.to_f64() - 0.20233).abs() < 1e-5);
        let implied = ex.ts3_implied(&Float::with_val(prec, 0.14307f64)).to_f64();
        assert!((implied - 0.00094).abs() < 1e-5, "{implied}");
    }
}
