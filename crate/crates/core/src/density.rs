//! Singularity curves `R(y)` of the network classes, the edge-density map
//! `mu(y) = -y R_y / R`, and the growth constant of the expected number of
//! spanning trees at a prescribed edge density.

use rayon::prelude::*;
use rug::{Float, Rational};
use thiserror::Error;

use crate::asymptotics::closed_form::{phi_baseline, phi_tree};
use crate::asymptotics::implicit::{branch_point, BranchPoint, ImplicitEquation};
use crate::asymptotics::two_connected::{Marking, NetworkSingularity};
use crate::numeric::{bracketed_root, float, jet_const, Jet, NumericError};
use crate::series::Var;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("density {mu} is outside the reachable interval ({lo}, {hi}) of the {class} class")]
    OutOfRange { class: &'static str, mu: f64, lo: f64, hi: f64 },
    #[error("edge weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

fn class_name(m: Marking) -> &'static str {
    match m {
        Marking::SpanningTree => "spanning-tree",
        Marking::Unmarked => "unmarked",
    }
}

/// Network equation of one class at a floating edge weight.
#[derive(Clone, Debug)]
pub struct CurveEquation {
    pub marking: Marking,
    pub y: Float,
}

impl CurveEquation {
    fn phi(&self, x: &Jet, z: &Jet, y: &Float) -> Result<Jet, NumericError> {
        Ok(match self.marking {
            Marking::SpanningTree => phi_tree(x, z, y)?,
            Marking::Unmarked => phi_baseline(x, z, y)?,
        })
    }

    /// `Phi_y` at a point, by a central difference far below working
    /// precision.
    fn phi_y(&self, x: &Float, z: &Float) -> Result<Float, NumericError> {
        let prec = self.y.prec();
        let h = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 3));
        let xs = jet_const(Var::X, x, 0);
        let zs = jet_const(Var::X, z, 0);
        let yp = Float::with_val(prec, &self.y + &h);
        let ym = Float::with_val(prec, &self.y - &h);
        let fp = self.phi(&xs, &zs, &yp)?.coeff(0).clone();
        let fm = self.phi(&xs, &zs, &ym)?.coeff(0).clone();
        Ok((fp - fm) / (h * 2u32))
    }
}

impl ImplicitEquation for CurveEquation {
    fn name(&self) -> String {
        format!("{} networks at y={}", class_name(self.marking), self.y.to_f64())
    }
    fn eval(&self, x: &Jet, z: &Jet) -> Result<Jet, NumericError> {
        self.phi(x, z, &self.y)
    }
    fn start(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.y)
    }
}

/// One point of a singularity curve.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub y: Float,
    pub r: Float,
    /// `dR/dy` along the branch-point curve.
    pub r_y: Float,
    pub branch: BranchPoint,
}

impl CurvePoint {
    /// `-y R_y / R`.
    pub fn mu(&self) -> Float {
        let prec = self.r.prec();
        -Float::with_val(prec, &self.y * &self.r_y) / &self.r
    }
}

/// `R(y)` and `R_y(y)`. Differentiating `Phi = 0, Phi_z = 0` along the curve
/// gives `Phi_x R_y + Phi_y = 0` since `Phi_z` vanishes there.
pub fn curve_point(marking: Marking, y: &Float) -> Result<CurvePoint, DensityError> {
    if !y.is_sign_positive() || y.is_zero() {
        return Err(DensityError::NonPositiveWeight(y.to_f64()));
    }
    let prec = y.prec();
    let eq = CurveEquation { marking, y: y.clone() };
    let bp = branch_point(&eq, prec)?;
    let phi_y = eq.phi_y(&bp.x, &bp.z)?;
    let r_y = -(phi_y / &bp.phi_x);
    Ok(CurvePoint {
        y: y.clone(),
        r: bp.x.clone(),
        r_y,
        branch: bp,
    })
}

/// `R(y)` over a grid of positive rationals.
pub fn singularity_curve(marking: Marking, ys: &[Rational], prec: u32) -> Vec<Result<CurvePoint, DensityError>> {
    ys.par_iter().map(|y| curve_point(marking, &Float::with_val(prec, y))).collect()
}

/// `R_y` by central differences of independently located branch points.
pub fn r_y_by_differences(marking: Marking, y: &Float, h: &Float) -> Result<Float, DensityError> {
    let prec = y.prec();
    let up = curve_point(marking, &Float::with_val(prec, y + h))?;
    let down = curve_point(marking, &Float::with_val(prec, y - h))?;
    Ok((up.r - down.r) / Float::with_val(prec, h * 2u32))
}

/// Edge density of a class at weight `y`.
pub fn mu_at(marking: Marking, y: &Float) -> Result<Float, DensityError> {
    Ok(curve_point(marking, y)?.mu())
}

/// Largest bracket in `ln y` searched by [`density_map`].
pub const LOG_Y_LIMIT: f64 = 12.0;

/// The weight `y0 > 0` with `mu(y0) = mu`, by root-finding in `ln y` (the
/// density increases with `y`).
pub fn density_map(marking: Marking, mu: &Float) -> Result<Float, DensityError> {
    let prec = mu.prec();
    let f = |t: &Float| -> Result<Float, NumericError> {
        let y = Float::with_val(prec, t.exp_ref());
        match mu_at(marking, &y) {
            Ok(m) => Ok(m - mu),
            Err(DensityError::Numeric(e)) => Err(e),
            Err(e) => Err(crate::numeric::domain(e.to_string())),
        }
    };
    let out_of_range = |lo: f64, hi: f64| DensityError::OutOfRange {
        class: class_name(marking),
        mu: mu.to_f64(),
        lo,
        hi,
    };
    let (mut lo, mut hi) = (float(prec, -1), float(prec, 1));
    let (mut flo, mut fhi) = (f(&lo)?, f(&hi)?);
    while flo.is_sign_positive() {
        lo *= 2u32;
        if lo.to_f64() < -LOG_Y_LIMIT {
            return Err(out_of_range(flo.to_f64() + mu.to_f64(), fhi.to_f64() + mu.to_f64()));
        }
        flo = f(&lo).map_err(|_| out_of_range(f64::NAN, fhi.to_f64() + mu.to_f64()))?;
    }
    while fhi.is_sign_negative() {
        hi *= 2u32;
        if hi.to_f64() > LOG_Y_LIMIT {
            return Err(out_of_range(flo.to_f64() + mu.to_f64(), fhi.to_f64() + mu.to_f64()));
        }
        fhi = f(&hi).map_err(|_| out_of_range(flo.to_f64() + mu.to_f64(), f64::NAN))?;
    }
    let t = bracketed_root("edge density equation", f, lo, hi, prec * 3 / 4)?;
    Ok(Float::with_val(prec, t.exp_ref()))
}

/// One point of the growth-versus-density curve.
#[derive(Clone, Debug)]
pub struct DensityCurvePoint {
    pub mu: Float,
    pub y_tree: Float,
    pub y_base: Float,
    /// `R_base(y_b) y_b^mu / (R_tree(y_t) y_t^mu)`.
    pub growth: Float,
}

/// Growth constant at density `mu`, with one saddle weight per class.
pub fn growth_at_density(mu: &Float) -> Result<DensityCurvePoint, DensityError> {
    let prec = mu.prec();
    let y_tree = density_map(Marking::SpanningTree, mu)?;
    let y_base = density_map(Marking::Unmarked, mu)?;
    let rt = curve_point(Marking::SpanningTree, &y_tree)?.r;
    let rb = curve_point(Marking::Unmarked, &y_base)?.r;
    let pow = |y: &Float| (Float::with_val(prec, y.ln_ref()) * mu).exp();
    let growth = (rb * pow(&y_base)) / (rt * pow(&y_tree));
    Ok(DensityCurvePoint {
        mu: mu.clone(),
        y_tree,
        y_base,
        growth,
    })
}

/// Evenly spaced densities on `[lo, hi]`.
pub fn density_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64)
        .collect()
}

/// Growth constants over a grid; points whose saddle solve fails are
/// returned as errors rather than dropped.
pub fn growth_vs_density(mus: &[f64], prec: u32) -> Vec<(f64, Result<DensityCurvePoint, DensityError>)> {
    mus.par_iter().map(|&m| (m, growth_at_density(&Float::with_val(prec, m)))).collect()
}

/// Linear extrapolation to `mu = 2` of the growth constant from densities
/// just below it; the deviation is first order in `2 - mu`.
pub fn two_tree_limit(prec: u32) -> Result<f64, DensityError> {
    let (m1, m2) = (1.995, 1.999);
    let g1 = growth_at_density(&Float::with_val(prec, m1))?.growth.to_f64();
    let g2 = growth_at_density(&Float::with_val(prec, m2))?.growth.to_f64();
    Ok(g2 + (g2 - g1) * (2.0 - m2) / (m2 - m1))
}

/// `-rho_y(1) / rho(1)` of the connected class without spanning trees, by a
/// central difference in `y` of the connected radius.
pub fn connected_edge_density(prec: u32) -> Result<Float, DensityError> {
    let h = Rational::from((1, 1u64 << 24));
    let rho = |y: Rational| -> Result<Float, NumericError> { Ok(NetworkSingularity::new(Marking::Unmarked, &y, prec)?.connected()?.rho) };
    let up = rho(Rational::from(1) + &h)?;
    let down = rho(Rational::from(1) - &h)?;
    let mid = rho(Rational::from(1))?;
    let d = (up - down) / Float::with_val(prec, &h * Rational::from(2));
    Ok(-(d / mid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::agreeing_digits;

    const P: u32 = 128;

    #[test]
    fn tree_radius_at_one_and_derivative_cross_check() {
        let y = float(P, 1);
        let pt = curve_point(Marking::SpanningTree, &y).unwrap();
        assert!((pt.r.to_f64() - 0.05668).abs() < 2e-5);
        let h = Float::with_val(P, Float::i_exp(1, -30));
        for m in [Marking::SpanningTree, Marking::Unmarked] {
            let pt = curve_point(m, &y).unwrap();
            let fd = r_y_by_differences(m, &y, &h).unwrap();
            assert!(agreeing_digits(&pt.r_y, &fd) > 8.0, "{:?}: {} vs {}", m, pt.r_y, fd);
        }
    }

    #[test]
    fn radius_decreases_and_density_increases() {
        let ys: Vec<Rational> = (1..=8).map(|k| Rational::from((k, 4))).collect();
        for m in [Marking::SpanningTree, Marking::Unmarked] {
            let pts: Vec<CurvePoint> = singularity_curve(m, &ys, P).into_iter().map(Result::unwrap).collect();
            assert!(pts.windows(2).all(|w| w[1].r < w[0].r));
            assert!(pts.windows(2).all(|w| w[1].mu() > w[0].mu()));
            assert!(pts.iter().all(|p| p.mu() > 1 && p.mu() < 2));
        }
    }

    #[test]
    fn density_map_inverts_mu() {
        for m in [Marking::SpanningTree, Marking::Unmarked] {
            let y = float(P, (3, 2));
            let mu = mu_at(m, &y).unwrap();
            let back = density_map(m, &mu).unwrap();
            assert!(agreeing_digits(&back, &y) > 15.0, "{back}");
        }
        assert!(matches!(
            density_map(Marking::Unmarked, &float(P, (5, 2))),
            Err(DensityError::OutOfRange { .. })
        ));
    }

    #[test]
    fn connected_density_constant() {
        let k = connected_edge_density(P).unwrap();
        assert!((k.to_f64() - 1.61673).abs() < 1e-3, "{k}");
    }

    #[test]
    fn growth_curve_is_monotone_and_tends_to_two_tree_limit() {
        let pts = growth_vs_density(&density_grid(1.08, 1.97, 10), P);
        let g: Vec<f64> = pts
            .iter()
            .map(|(m, p)| p.as_ref().unwrap_or_else(|e| panic!("{m}: {e}")).growth.to_f64())
            .collect();
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let lim = two_tree_limit(P).unwrap();
        assert!((lim - 2.55561).abs() < 1e-3, "{lim}");
    }
}
