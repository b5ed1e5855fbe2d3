//! Network and 2-connected series as explicit functions of `x` and `D`.
//!
//! Every function takes `x` as a series, so the same code serves two
//! purposes: with `x` the formal variable and exact `D` it reproduces the
//! grammar solutions coefficient by coefficient; with `x` a float jet it
//! yields Taylor or Puiseux expansions at a numeric point.

use rug::Rational;

use crate::series::{Coeff, Series, SeriesError};

fn konst<C: Coeff>(like: &Series<C>, c: C) -> Series<C> {
    Series::constant(like.var(), like.ctx().clone(), like.trunc(), c)
}

fn rat<C: Coeff>(like: &Series<C>, r: impl Into<Rational>) -> Series<C> {
    konst(like, C::from_rational(like.ctx(), r.into()))
}

/// The six spanning-tree network series at one point.
#[derive(Clone, Debug)]
pub struct TreeNetworks<C: Coeff> {
    pub d: Series<C>,
    pub dbar: Series<C>,
    pub s: Series<C>,
    pub sbar: Series<C>,
    pub p: Series<C>,
    pub pbar: Series<C>,
}

impl<C: Coeff> TreeNetworks<C> {
    pub fn get(&self, name: &str) -> Option<&Series<C>> {
        Some(match name {
            "D" => &self.d,
            "Dbar" => &self.dbar,
            "S" => &self.s,
            "Sbar" => &self.sbar,
            "P" => &self.p,
            "Pbar" => &self.pbar,
            _ => return None,
        })
    }
}

/// Unmarked network series at one point.
#[derive(Clone, Debug)]
pub struct BaseNetworks<C: Coeff> {
    pub d: Series<C>,
    pub s: Series<C>,
    pub p: Series<C>,
}

/// `(y + P, S)` from `D`: a series network is `(y + P) x D` and
/// `D = y + S + P`.
fn series_split<C: Coeff>(x: &Series<C>, d: &Series<C>) -> Result<(Series<C>, Series<C>), SeriesError> {
    let one = rat(d, 1);
    let xd = x * d;
    let yp = d * &(&one + &xd).reciprocal()?;
    let s = &xd * &yp;
    Ok((yp, s))
}

/// `Phi(x, z) = z - (y + (1+y) x z^2 / (1 + x z)) exp(-x z N / M)` with
/// `N = (y(1+xz) - (1+y) z)(2 + xz)` and `M = (y(1+xz) + (1+y) x z^2)(1+xz)^2`.
pub fn phi_tree<C: Coeff>(x: &Series<C>, z: &Series<C>, y: &C) -> Result<Series<C>, SeriesError> {
    let one = rat(z, 1);
    let two = rat(z, 2);
    let yc = konst(z, y.clone());
    let y1 = &one + &yc;
    let xz = x * z;
    let one_xz = &one + &xz;
    let xz2 = &xz * z;
    let front = &yc + &(&(&y1 * &xz2) * &one_xz.reciprocal()?);
    let num = &(&(&yc * &one_xz) - &(&y1 * z)) * &(&two + &xz);
    let den = &(&(&yc * &one_xz) + &(&y1 * &xz2)) * &(&one_xz * &one_xz);
    let arg = -&(&(&xz * &num) * &den.reciprocal()?);
    Ok(z - &(&front * &arg.exp_general()?))
}

/// `Phi(x, z) = z - ((1+y) exp(x z^2 / (1 + x z)) - 1)` for unmarked
/// networks.
pub fn phi_baseline<C: Coeff>(x: &Series<C>, z: &Series<C>, y: &C) -> Result<Series<C>, SeriesError> {
    let one = rat(z, 1);
    let y1 = &one + &konst(z, y.clone());
    let (_, s) = series_split(x, z)?;
    Ok(&(z + &one) - &(&y1 * &s.exp_general()?))
}

/// All six spanning-tree network series from `D`. The barred parallel rule
/// is solved for `exp(Sbar)` in closed form.
pub fn tree_networks_from_d<C: Coeff>(x: &Series<C>, d: &Series<C>, y: &C) -> Result<TreeNetworks<C>, SeriesError> {
    let one = rat(d, 1);
    let yc = konst(d, y.clone());
    let (yp, s) = series_split(x, d)?;
    let p = &yp - &yc;
    // P = y(e-1) + y S e + S(e-1)  =>  e = (y + S + P) / (y + S + y S)
    let e = &(&yc + &(&s + &p)) * &(&(&yc + &s) + &(&yc * &s)).reciprocal()?;
    let sbar = e.ln()?;
    let em1 = &e - &one;
    let pbar = &(&em1 - &sbar) + &(&yc * &em1);
    let dbar = &(&yc + &sbar) + &pbar;
    Ok(TreeNetworks {
        d: d.clone(),
        dbar,
        s,
        sbar,
        p,
        pbar,
    })
}

pub fn base_networks_from_d<C: Coeff>(x: &Series<C>, d: &Series<C>, y: &C) -> Result<BaseNetworks<C>, SeriesError> {
    let (yp, s) = series_split(x, d)?;
    let p = &yp - &konst(d, y.clone());
    Ok(BaseNetworks { d: d.clone(), s, p })
}

/// Marked 2-connected graphs by dissymmetry over ring and multi-edge bricks.
pub fn b_tree<C: Coeff>(x: &Series<C>, n: &TreeNetworks<C>, y: &C) -> Result<Series<C>, SeriesError> {
    let one = rat(&n.d, 1);
    let yc = konst(&n.d, y.clone());
    let e = n.sbar.exp_general()?;
    let em1 = &e - &one;
    let em1s = &em1 - &n.sbar;
    let ring = &n.s * &(&n.dbar - &n.sbar);
    let multi = &(&(&n.s * &em1s) + &(&yc * &(&n.s * &em1))) + &(&yc * &em1s);
    let ring_multi = &(&n.s * &n.pbar) + &(&n.sbar * &n.p);
    let inner = &(&(&yc + &ring) + &multi) - &ring_multi;
    Ok((&(x * x) * &inner).scale(&Rational::from((1, 2))))
}

/// Unmarked 2-connected graphs; rings are counted up to rotation and
/// reflection.
pub fn b_baseline<C: Coeff>(x: &Series<C>, n: &BaseNetworks<C>, y: &C) -> Result<Series<C>, SeriesError> {
    let one = rat(&n.d, 1);
    let half = Rational::from((1, 2));
    let yc = konst(&n.d, y.clone());
    let u = x * &(&n.d - &n.s);
    let u2 = &u * &u;
    let ring = &(&(-&(&one - &u).ln()?) - &u) - &u2.scale(&half);
    let e = n.s.exp_general()?;
    let e1s = &(&e - &one) - &n.s;
    let multi = &(&e1s - &(&n.s * &n.s).scale(&half)) + &(&yc * &e1s);
    let x2 = x * x;
    let inner = &(&(&yc + &multi) - &(&n.s * &n.p)) * &x2;
    Ok(&inner.scale(&half) + &ring.scale(&half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_b, assemble_baseline_b};
    use crate::networks::{solve_networks_at, Flavor, Perturbation};
    use crate::series::{UnivariateSeries, Var};

    #[test]
    fn closed_forms_reproduce_grammar_series() {
        for y in [Rational::from(1), Rational::from((1, 3)), Rational::from(2)] {
            let t = 9;
            let bundle = solve_networks_at(Flavor::SpanningTree, t, &y, Perturbation::None).unwrap();
            let x = UnivariateSeries::variable(Var::X, (), t);
            let d = bundle.s("D");
            assert!(phi_tree(&x, d, &y).unwrap().is_zero());
            let nets = tree_networks_from_d(&x, d, &y).unwrap();
            for name in ["D", "Dbar", "S", "Sbar", "P", "Pbar"] {
                assert_eq!(nets.get(name).unwrap(), bundle.s(name), "{name} at y={y}");
            }
            let b = b_tree(&x, &nets, &y).unwrap();
            assert_eq!(b, assemble_b(&bundle, &y).unwrap().truncate(t));

            let base = solve_networks_at(Flavor::Baseline, t, &y, Perturbation::None).unwrap();
            assert!(phi_baseline(&x, base.s("D"), &y).unwrap().is_zero());
            let bn = base_networks_from_d(&x, base.s("D"), &y).unwrap();
            assert_eq!(&bn.s, base.s("S"));
            assert_eq!(&bn.p, base.s("P"));
            let bb = b_baseline(&x, &bn, &y).unwrap();
            assert_eq!(bb, assemble_baseline_b(&base, &y).unwrap().truncate(t));
        }
    }
}
