//! Scalar implicit equations `Phi(x, z) = 0`: branch points, Puiseux
//! expansions by indeterminate coefficients, and regular Taylor jets.

use rug::{Float, Rational};

use crate::numeric::{abs, domain, float, jet, jet_const, jet_point, newton, Jet, NewtonOptions, NumericError};
use crate::series::Var;

use super::closed_form::{phi_baseline, phi_tree};

/// An equation `Phi(x, z) = 0` whose relevant solution `z(x)` is analytic at
/// `x = 0` with value [`ImplicitEquation::start`].
pub trait ImplicitEquation {
    fn name(&self) -> String;
    /// `Phi` on jets in a common local parameter.
    fn eval(&self, x: &Jet, z: &Jet) -> Result<Jet, NumericError>;
    fn start(&self, prec: u32) -> Float;
}

/// Spanning-tree networks at a fixed edge weight.
#[derive(Clone, Debug)]
pub struct TreeEquation {
    pub y: Rational,
}

/// Unmarked networks at a fixed edge weight.
#[derive(Clone, Debug)]
pub struct BaselineEquation {
    pub y: Rational,
}

impl ImplicitEquation for TreeEquation {
    fn name(&self) -> String {
        format!("spanning-tree networks at y={}", self.y)
    }
    fn eval(&self, x: &Jet, z: &Jet) -> Result<Jet, NumericError> {
        Ok(phi_tree(x, z, &Float::with_val(z.ctx().to_owned(), &self.y))?)
    }
    fn start(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.y)
    }
}

impl ImplicitEquation for BaselineEquation {
    fn name(&self) -> String {
        format!("networks at y={}", self.y)
    }
    fn eval(&self, x: &Jet, z: &Jet) -> Result<Jet, NumericError> {
        Ok(phi_baseline(x, z, &Float::with_val(z.ctx().to_owned(), &self.y))?)
    }
    fn start(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.y)
    }
}

/// `(Phi, Phi_z, Phi_zz / 2)` at a point.
fn z_derivs<E: ImplicitEquation + ?Sized>(eq: &E, x: &Float, z: &Float) -> Result<[Float; 3], NumericError> {
    let xj = jet_const(Var::X, x, 2);
    let zj = jet_point(Var::X, z, 2);
    let r = eq.eval(&xj, &zj)?;
    Ok([r.coeff(0).clone(), r.coeff(1).clone(), r.coeff(2).clone()])
}

/// `(Phi, Phi_x)` at a point.
fn x_derivs<E: ImplicitEquation + ?Sized>(eq: &E, x: &Float, z: &Float) -> Result<[Float; 2], NumericError> {
    let xj = jet_point(Var::X, x, 1);
    let zj = jet_const(Var::X, z, 1);
    let r = eq.eval(&xj, &zj)?;
    Ok([r.coeff(0).clone(), r.coeff(1).clone()])
}

/// A square-root branch point `Phi = Phi_z = 0` with its certificate.
#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub x: Float,
    pub z: Float,
    /// `|Phi|` and `|Phi_z|` at the returned point.
    pub residual: [Float; 2],
    /// `Phi_zz / 2`, bounded away from zero for a square-root singularity.
    pub half_phi_zz: Float,
    /// `Phi_x`.
    pub phi_x: Float,
}

/// Follow the solution curve in `z` from `(0, start)`; `x(z)` increases up to
/// the branch point, where `Phi_z` changes sign. The last bracket seeds a
/// Newton solve of `Phi = Phi_z = 0`.
pub fn branch_point<E: ImplicitEquation + ?Sized>(eq: &E, prec: u32) -> Result<BranchPoint, NumericError> {
    let what = format!("branch point of {}", eq.name());
    let opts = NewtonOptions::for_prec(prec);
    let z0 = eq.start(prec);
    let mut x = float(prec, 0);
    let mut z = z0.clone();
    let mut dz = Float::with_val(prec, abs(&z0).max(&float(prec, 1)) / 20u32);
    let solve_x = |z: &Float, guess: &Float| -> Result<Float, NumericError> {
        let r = newton(
            &what,
            |v| Ok(vec![x_derivs(eq, &v[0], z)?[0].clone()]),
            vec![guess.clone()],
            &NewtonOptions {
                max_iter: 60,
                tol_bits: prec / 2,
            },
        )?;
        Ok(r.x[0].clone())
    };
    let mut seed = None;
    for _ in 0..2000 {
        let zn = Float::with_val(prec, &z + &dz);
        // Linear predictor along the curve: dx/dz = -Phi_z / Phi_x.
        let [_, px] = x_derivs(eq, &x, &z)?;
        let [_, pz, _] = z_derivs(eq, &x, &z)?;
        let guess = Float::with_val(prec, &x - Float::with_val(prec, &pz / &px) * &dz);
        match solve_x(&zn, &guess) {
            Ok(xn) if xn > x && xn.is_sign_positive() => {
                let [_, pzn, _] = z_derivs(eq, &xn, &zn)?;
                if pzn.is_sign_negative() != pz.is_sign_negative() {
                    seed = Some((xn, zn));
                    break;
                }
                x = xn;
                z = zn;
                dz *= 2u32;
            }
            Ok(_) | Err(_) => {
                dz /= 4u32;
                if dz < Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 3)) {
                    seed = Some((x.clone(), z.clone()));
                    break;
                }
            }
        }
    }
    let (sx, sz) = seed.ok_or_else(|| domain(format!("{what}: no fold found")))?;
    let r = newton(
        &what,
        |v| {
            let [p, pz, _] = z_derivs(eq, &v[0], &v[1])?;
            Ok(vec![p, pz])
        },
        vec![sx, sz],
        &opts,
    )?;
    let (bx, bz) = (r.x[0].clone(), r.x[1].clone());
    let [p, pz, pzz] = z_derivs(eq, &bx, &bz)?;
    let [_, px] = x_derivs(eq, &bx, &bz)?;
    if abs(&pzz) < Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 4)) {
        return Err(domain(format!("{what}: Phi_zz vanishes, not a square-root point")));
    }
    Ok(BranchPoint {
        x: bx,
        z: bz,
        residual: [abs(&p), abs(&pz)],
        half_phi_zz: pzz,
        phi_x: px,
    })
}

/// `z(X)` to `X^order` where `x = R(1 - X^2)`, by indeterminate coefficients.
/// The branch decreasing in `X` (increasing in `x`) is chosen.
pub fn puiseux<E: ImplicitEquation + ?Sized>(eq: &E, bp: &BranchPoint, order: usize) -> Result<Vec<Float>, NumericError> {
    let prec = bp.x.prec();
    let k = order + 1;
    let mut xc = vec![Float::new(prec); k + 1];
    xc[0] = bp.x.clone();
    xc[2] = Float::with_val(prec, -&bp.x);
    let xj = jet(Var::X, prec, xc);
    let mut a = vec![Float::new(prec); k + 1];
    a[0] = bp.z.clone();
    let resid = |a: &[Float], at: usize| -> Result<Float, NumericError> {
        let r = eq.eval(&xj, &jet(Var::X, prec, a.to_vec()))?;
        Ok(r.coeff(at).clone())
    };
    // X^2: quadratic in a_1 without a linear term.
    let c = resid(&a, 2)?;
    a[1] = float(prec, 1);
    let quad = Float::with_val(prec, resid(&a, 2)? - &c);
    let sq = Float::with_val(prec, -Float::with_val(prec, &c / &quad));
    if sq.is_sign_negative() {
        return Err(domain(format!("Puiseux expansion of {}: no real square root", eq.name())));
    }
    a[1] = -sq.sqrt();
    for j in 2..=order {
        a[j] = Float::new(prec);
        let r0 = resid(&a, j + 1)?;
        a[j] = float(prec, 1);
        let slope = Float::with_val(prec, resid(&a, j + 1)? - &r0);
        if slope.is_zero() {
            return Err(domain(format!("Puiseux expansion of {}: degenerate order {j}", eq.name())));
        }
        a[j] = -(r0 / slope);
    }
    a.truncate(order + 1);
    Ok(a)
}

/// Value of the analytic branch `z(x)` for `0 <= x < R`, by Newton seeded
/// from the Puiseux expansion near `R` and from continuation below.
pub fn solve_at<E: ImplicitEquation + ?Sized>(eq: &E, bp: &BranchPoint, expansion: &[Float], x: &Float) -> Result<Float, NumericError> {
    let prec = x.prec();
    if x.is_sign_negative() || *x >= bp.x {
        return Err(domain(format!("{}: point outside [0, R)", eq.name())));
    }
    let what = format!("value of {}", eq.name());
    let opts = NewtonOptions::for_prec(prec);
    let solve = |guess: Float, x: &Float| -> Result<Float, NumericError> {
        newton(&what, |v| Ok(vec![z_derivs(eq, x, &v[0])?[0].clone()]), vec![guess], &opts).map(|r| r.x[0].clone())
    };
    let big_x = Float::with_val(prec, 1 - Float::with_val(prec, x / &bp.x)).sqrt();
    if big_x < 0.5 {
        let mut guess = Float::new(prec);
        for a in expansion.iter().rev() {
            guess = guess * &big_x + a;
        }
        return solve(guess, x);
    }
    // Continuation from the origin in equal steps.
    let steps = 16u32;
    let mut z = eq.start(prec);
    for i in 1..=steps {
        let xi = Float::with_val(prec, x * i) / steps;
        z = solve(z, &xi)?;
    }
    Ok(z)
}

/// Taylor jet of the analytic branch around a regular point `(x0, z0)`:
/// `z(x0 + t)` to order `order`.
pub fn taylor<E: ImplicitEquation + ?Sized>(eq: &E, x0: &Float, z0: &Float, order: usize) -> Result<Jet, NumericError> {
    let prec = x0.prec();
    let xj = jet_point(Var::X, x0, order);
    let mut a = vec![Float::new(prec); order + 1];
    a[0] = z0.clone();
    for j in 1..=order {
        a[j] = Float::new(prec);
        let r0 = eq.eval(&xj, &jet(Var::X, prec, a.clone()))?.coeff(j).clone();
        a[j] = float(prec, 1);
        let slope = Float::with_val(prec, eq.eval(&xj, &jet(Var::X, prec, a.clone()))?.coeff(j) - &r0);
        if slope.is_zero() {
            return Err(domain(format!("{}: Phi_z vanishes at a regular point", eq.name())));
        }
        a[j] = -(r0 / slope);
    }
    Ok(jet(Var::X, prec, a))
}

/// `x = R (1 - X^2)` as a jet in `X`.
pub fn singular_x(r: &Float, order: usize) -> Jet {
    let prec = r.prec();
    let mut c = vec![Float::new(prec); order + 1];
    c[0] = r.clone();
    if order >= 2 {
        c[2] = Float::with_val(prec, -r);
    }
    jet(Var::X, prec, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::agreeing_digits;
    use rug::ops::Pow;

    const P: u32 = 192;

    /// `z = x exp(z)` (the tree function): branch at `x = 1/e`, `z = 1`, with
    /// `z = 1 - sqrt(2) X + (2/3) X^2 - ...`.
    struct TreeFn;
    impl ImplicitEquation for TreeFn {
        fn name(&self) -> String {
            "tree function".into()
        }
        fn eval(&self, x: &Jet, z: &Jet) -> Result<Jet, NumericError> {
            Ok(z - &(x * &z.exp_general()?))
        }
        fn start(&self, prec: u32) -> Float {
            Float::new(prec)
        }
    }

    #[test]
    fn tree_function_branch_point_and_expansion() {
        let bp = branch_point(&TreeFn, P).unwrap();
        let inv_e = Float::with_val(P, -1).exp();
        assert!(agreeing_digits(&bp.x, &inv_e) > 50.0);
        assert!(agreeing_digits(&bp.z, &float(P, 1)) > 50.0);
        let a = puiseux(&TreeFn, &bp, 3).unwrap();
        let s2 = Float::with_val(P, 2).sqrt();
        assert!(agreeing_digits(&a[1], &-s2.clone()) > 45.0);
        assert!(agreeing_digits(&a[2], &float(P, (2, 3))) > 45.0);
        // Third coefficient of the tree function: -11 sqrt(2) / 36.
        let a3 = Float::with_val(P, &s2 * -11) / 36u32;
        assert!(agreeing_digits(&a[3], &a3) > 45.0);
    }

    #[test]
    fn regular_taylor_matches_lambert() {
        // W(x) = sum n^(n-1) x^n / n!; at x = 0.1 compare value and slope.
        let x0 = float(P, (1, 10));
        let bp = branch_point(&TreeFn, P).unwrap();
        let ex = puiseux(&TreeFn, &bp, 3).unwrap();
        let z0 = solve_at(&TreeFn, &bp, &ex, &x0).unwrap();
        let mut w = Float::new(P);
        for n in 1..400u32 {
            w += Float::with_val(P, Float::with_val(P, n).pow(n - 1)) * Float::with_val(P, (&x0).pow(n))
                / Float::with_val(P, Float::factorial(n));
        }
        assert!(agreeing_digits(&z0, &w) > 50.0);
        let t = taylor(&TreeFn, &x0, &z0, 2).unwrap();
        // W' = W / (x (1 - W))
        let slope = Float::with_val(P, &z0 / Float::with_val(P, &x0 * Float::with_val(P, 1 - &z0)));
        assert!(agreeing_digits(t.coeff(1), &slope) > 50.0);
    }

    #[test]
    fn network_branch_point_at_one() {
        let bp = branch_point(&TreeEquation { y: Rational::from(1) }, P).unwrap();
        assert!((bp.x.to_f64() - 0.05668).abs() < 5e-6, "{}", bp.x);
        assert!((bp.z.to_f64() - 1.82404).abs() < 5e-6, "{}", bp.z);
        let base = branch_point(&BaselineEquation { y: Rational::from(1) }, P).unwrap();
        assert!((base.x.to_f64() - 0.12800).abs() < 5e-6, "{}", base.x);
        assert!(bp.x < base.x);
    }
}
