//! Square-root singularity of a positive polynomial-exponential system
//! `v = F(x, v)`: the point where `det(I - dF/dv)` vanishes along the
//! solution branch starting at `x = 0`.

use rug::Float;

use crate::numeric::{
    abs, determinant, domain, float, jet_const, jet_point, max_abs, newton, newton_with, solve_linear, Jet, NewtonOptions, NumericError,
};
use crate::series::grammar::GrammarSystem;

/// Solution of the augmented system `v = F(x, v)`, `det(I - J) = 0`.
#[derive(Clone, Debug)]
pub struct SystemBranchPoint {
    pub x: Float,
    pub names: Vec<String>,
    pub values: Vec<Float>,
    /// Largest `|v - F(x, v)|` at the returned point.
    pub residual: Float,
    /// `det(I - J)` at the returned point.
    pub det: Float,
    /// Precision that produced the point, after any escalation.
    pub prec: u32,
    /// Accepted continuation steps before the augmented solve.
    pub steps: usize,
}

impl SystemBranchPoint {
    pub fn get(&self, name: &str) -> Option<&Float> {
        self.names.iter().position(|n| n == name).map(|i| &self.values[i])
    }
}

/// Values, Jacobian `dF/dv` and `dF/dx` at one point.
struct Linearization {
    f: Vec<Float>,
    jac: Vec<Vec<Float>>,
    fx: Vec<Float>,
}

struct PointSystem<'a> {
    sys: &'a GrammarSystem<Float>,
    prec: u32,
    n: usize,
}

impl PointSystem<'_> {
    fn var(&self) -> crate::series::Var {
        self.sys.var()
    }

    fn consts(&self, v: &[Float], order: usize) -> Vec<Jet> {
        v.iter().map(|c| jet_const(self.var(), c, order)).collect()
    }

    fn eval(&self, x: &Float, v: &[Float]) -> Result<Vec<Float>, NumericError> {
        let xs = jet_const(self.var(), x, 0);
        let out = self.sys.rhs_at(&xs, &self.consts(v, 0))?;
        Ok(out.into_iter().map(|s| s.coeff(0).clone()).collect())
    }

    fn linearize(&self, x: &Float, v: &[Float]) -> Result<Linearization, NumericError> {
        let var = self.var();
        let xc = jet_const(var, x, 1);
        let mut jac = vec![vec![Float::new(self.prec); self.n]; self.n];
        let mut f = Vec::new();
        for k in 0..self.n {
            let mut vals = self.consts(v, 1);
            vals[k] = jet_point(var, &v[k], 1);
            let out = self.sys.rhs_at(&xc, &vals)?;
            for (i, s) in out.iter().enumerate() {
                jac[i][k] = s.coeff(1).clone();
            }
            if k == 0 {
                f = out.iter().map(|s| s.coeff(0).clone()).collect();
            }
        }
        let out = self.sys.rhs_at(&jet_point(var, x, 1), &self.consts(v, 1))?;
        let fx = out.iter().map(|s| s.coeff(1).clone()).collect();
        Ok(Linearization { f, jac, fx })
    }

    fn i_minus(&self, jac: &[Vec<Float>]) -> Vec<Vec<Float>> {
        let mut m: Vec<Vec<Float>> = jac
            .iter()
            .map(|r| r.iter().map(|c| Float::with_val(self.prec, -c)).collect())
            .collect();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += 1u32;
        }
        m
    }

    fn det(&self, x: &Float, v: &[Float]) -> Result<Float, NumericError> {
        let lin = self.linearize(x, v)?;
        Ok(determinant(self.i_minus(&lin.jac)))
    }

    /// Newton on `v - F(x, v) = 0` at fixed `x` with the exact Jacobian.
    fn solve_at(&self, x: &Float, seed: Vec<Float>) -> Result<Vec<Float>, NumericError> {
        let g = |v: &[Float]| -> Result<Vec<Float>, NumericError> {
            let f = self.eval(x, v)?;
            Ok(v.iter().zip(f).map(|(a, b)| Float::with_val(self.prec, a - b)).collect())
        };
        let jac = |v: &[Float]| -> Result<Vec<Vec<Float>>, NumericError> { Ok(self.i_minus(&self.linearize(x, v)?.jac)) };
        let opts = NewtonOptions {
            max_iter: 40,
            ..NewtonOptions::for_prec(self.prec)
        };
        Ok(newton_with("regular point of the system", &g, &jac, seed, &opts)?.x)
    }
}

/// Largest `x` tried before giving up, from the ratio of two late
/// coefficients of the formal solution.
fn series_radius_bound(sys: &GrammarSystem<Float>, prec: u32) -> Result<Float, NumericError> {
    let order = 40;
    let sol = sys.solve(order)?;
    let mut best: Option<Float> = None;
    for name in sys.names() {
        let s = sol.series(name);
        let (a, b) = (s.coeff(order - 1), s.coeff(order));
        if a.is_zero() || b.is_zero() {
            continue;
        }
        let r = abs(&Float::with_val(prec, a / b));
        best = Some(match best {
            Some(c) if c <= r => c,
            _ => r,
        });
    }
    let r = best.ok_or_else(|| domain("formal solution has no two nonzero late coefficients"))?;
    Ok(r * 2u32)
}

/// Locate the branch point by continuation from `x = 0` followed by Newton
/// on the augmented system. `build` constructs the system at a given
/// precision; on stagnation the solve is repeated once at double precision.
pub fn dlw_solve<B>(build: B, prec: u32) -> Result<SystemBranchPoint, NumericError>
where
    B: Fn(u32) -> GrammarSystem<Float>,
{
    match dlw_at(&build(prec), prec) {
        Err(NumericError::NoConvergence { .. }) => {
            let hi = 2 * prec;
            let mut bp = dlw_at(&build(hi), hi)?;
            for v in bp.values.iter_mut().chain([&mut bp.x, &mut bp.residual, &mut bp.det]) {
                v.set_prec(prec);
            }
            Ok(bp)
        }
        other => other,
    }
}

fn dlw_at(sys: &GrammarSystem<Float>, prec: u32) -> Result<SystemBranchPoint, NumericError> {
    let n = sys.names().len();
    let ps = PointSystem { sys, prec, n };
    let x_max = series_radius_bound(sys, prec)?;

    let mut x = float(prec, 0);
    let mut v = ps.solve_at(&x, vec![float(prec, 0); n])?;
    let mut det = ps.det(&x, &v)?;
    if det <= 0 {
        return Err(domain("det(I - J) is not positive at x = 0"));
    }
    let det0 = det.clone();
    let mut h = Float::with_val(prec, &x_max / 64u32);
    let min_h = Float::with_val(prec, &x_max >> 60);
    let mut steps = 0;
    // March until det(I - J) has dropped to a few percent of its start.
    while det > Float::with_val(prec, &det0 / 32u32) {
        if h < min_h {
            return Err(NumericError::NoConvergence {
                what: "continuation towards the branch point".into(),
                iterations: steps,
                residual: det.to_f64(),
            });
        }
        let xn = Float::with_val(prec, &x + &h);
        if xn > x_max {
            return Err(domain("det(I - J) has no sign change below the series radius estimate"));
        }
        let lin = ps.linearize(&x, &v)?;
        let dv = solve_linear(ps.i_minus(&lin.jac), lin.fx, "tangent of the solution branch")?;
        let seed: Vec<Float> = v
            .iter()
            .zip(&dv)
            .map(|(a, d)| Float::with_val(prec, a + Float::with_val(prec, d * &h)))
            .collect();
        let accepted = ps
            .solve_at(&xn, seed)
            .and_then(|vn| Ok((ps.det(&xn, &vn)?, vn)))
            .ok()
            .filter(|(dn, vn)| *dn > 0 && *dn < det && vn.iter().zip(&v).all(|(a, b)| a >= b));
        match accepted {
            Some((dn, vn)) => {
                x = xn;
                v = vn;
                det = dn;
                steps += 1;
                h *= 2u32;
            }
            None => h /= 2u32,
        }
    }

    // The fold is a regular zero of the augmented system.
    let mut z = vec![x.clone()];
    z.extend(v.iter().cloned());
    let aug = |z: &[Float]| -> Result<Vec<Float>, NumericError> {
        let (x, v) = (&z[0], &z[1..]);
        let lin = ps.linearize(x, v)?;
        let mut out: Vec<Float> = v.iter().zip(&lin.f).map(|(a, b)| Float::with_val(prec, a - b)).collect();
        out.push(determinant(ps.i_minus(&lin.jac)));
        Ok(out)
    };
    let opts = NewtonOptions {
        max_iter: 60,
        ..NewtonOptions::for_prec(prec)
    };
    let res = newton("augmented branch-point system", aug, z, &opts)?;
    let (x, v) = (res.x[0].clone(), res.x[1..].to_vec());
    let f = ps.eval(&x, &v)?;
    let diff: Vec<Float> = v.iter().zip(&f).map(|(a, b)| Float::with_val(prec, a - b)).collect();
    let residual = max_abs(&diff, prec);
    let det = ps.det(&x, &v)?;
    if x <= 0 {
        return Err(domain("augmented solve left the positive axis"));
    }
    Ok(SystemBranchPoint {
        x,
        names: sys.names().to_vec(),
        values: v,
        residual,
        det,
        prec,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::implicit::{branch_point, TreeEquation};
    use crate::networks::{second_moment_system, spantree_system, Perturbation};
    use crate::numeric::agreeing_digits;
    use rug::Rational;

    #[test]
    fn spanning_tree_system_matches_scalar_branch_point() {
        let prec = 256;
        let bp = dlw_solve(|p| spantree_system::<Float>(p, float(p, 1), Perturbation::None), prec).unwrap();
        let scalar = branch_point(&TreeEquation { y: Rational::from(1) }, prec).unwrap();
        assert!(agreeing_digits(&bp.x, &scalar.x) > 20.0, "{} vs {}", bp.x, scalar.x);
        assert!(agreeing_digits(bp.get("D").unwrap(), &scalar.z) > 20.0);
        assert!(bp.residual.to_f64() < 1e-60);
    }

    #[test]
    fn second_moment_radius() {
        let bp = dlw_solve(|p| second_moment_system::<Float>(p, float(p, 1)), 256).unwrap();
        assert!((bp.x.to_f64() - 0.02407).abs() < 2e-5, "{}", bp.x);
    }
}
