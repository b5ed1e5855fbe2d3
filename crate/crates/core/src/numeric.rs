//! Multiple-precision numerics: Taylor jets, dense linear algebra and Newton
//! solvers over `rug::Float`.

use rug::float::Constant;
use rug::{Float, Rational};
use thiserror::Error;

use crate::series::grammar::GrammarError;
use crate::series::{Series, SeriesError, Var};

/// Default working precision in bits.
pub const DEFAULT_PREC: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("{what}: no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { what: String, iterations: usize, residual: f64 },
    #[error("{what}: singular linear system")]
    Singular { what: String },
    #[error("{what}")]
    Domain { what: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Assembly(#[from] Box<crate::assembly::AssemblyError>),
}

impl From<crate::assembly::AssemblyError> for NumericError {
    fn from(e: crate::assembly::AssemblyError) -> Self {
        NumericError::Assembly(Box::new(e))
    }
}

pub fn domain(what: impl Into<String>) -> NumericError {
    NumericError::Domain { what: what.into() }
}

/// Truncated Taylor expansion in a local parameter `t` with float
/// coefficients.
pub type Jet = Series<Float>;

pub fn float(prec: u32, v: impl Into<Rational>) -> Float {
    Float::with_val(prec, v.into())
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn e(prec: u32) -> Float {
    Float::with_val(prec, 1).exp()
}

/// `Gamma(v)` for a rational argument.
pub fn gamma(prec: u32, v: &Rational) -> Float {
    Float::with_val(prec, v).gamma()
}

/// The constant jet `c`.
pub fn jet_const(var: Var, c: &Float, order: usize) -> Jet {
    Series::constant(var, c.prec(), order, c.clone())
}

/// The jet `x0 + t`.
pub fn jet_point(var: Var, x0: &Float, order: usize) -> Jet {
    let mut coeffs = vec![Float::new(x0.prec()); order + 1];
    coeffs[0] = x0.clone();
    if order > 0 {
        coeffs[1] = Float::with_val(x0.prec(), 1);
    }
    Series::from_coeffs(var, x0.prec(), coeffs)
}

/// Jet from explicit coefficients.
pub fn jet(var: Var, prec: u32, coeffs: Vec<Float>) -> Jet {
    Series::from_coeffs(var, prec, coeffs)
}

pub fn abs(x: &Float) -> Float {
    Float::with_val(x.prec(), x.abs_ref())
}

pub fn max_abs(v: &[Float], prec: u32) -> Float {
    v.iter().fold(Float::new(prec), |m, x| {
        let a = abs(x);
        if a > m {
            a
        } else {
            m
        }
    })
}

/// Number of matching significant decimal digits of `a` and `b`.
pub fn agreeing_digits(a: &Float, b: &Float) -> f64 {
    let diff = Float::with_val(a.prec(), a - b).abs();
    if diff.is_zero() {
        return f64::from(a.prec()) * std::f64::consts::LOG10_2;
    }
    let scale = abs(a).max(&abs(b)).max(&Float::with_val(a.prec(), 1e-300));
    let rel = diff / scale;
    -rel.to_f64().log10()
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<Float>>, mut b: Vec<Float>, what: &str) -> Result<Vec<Float>, NumericError> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| abs(&a[i][col]).partial_cmp(&abs(&a[j][col])).unwrap())
            .unwrap();
        if a[piv][col].is_zero() {
            return Err(NumericError::Singular { what: what.into() });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = Float::with_val(a[row][col].prec(), &a[row][col] / &a[col][col]);
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let t = Float::with_val(f.prec(), &f * &a[col][k]);
                a[row][k] -= t;
            }
            let t = Float::with_val(f.prec(), &f * &b[col]);
            b[row] -= t;
        }
    }
    let mut x = vec![Float::new(b[0].prec()); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc -= Float::with_val(acc.prec(), &a[row][k] * &x[k]);
        }
        x[row] = acc / &a[row][row];
    }
    Ok(x)
}

/// Determinant by elimination with partial pivoting.
pub fn determinant(mut a: Vec<Vec<Float>>) -> Float {
    let n = a.len();
    let prec = a[0][0].prec();
    let mut det = Float::with_val(prec, 1);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| abs(&a[i][col]).partial_cmp(&abs(&a[j][col])).unwrap())
            .unwrap();
        if a[piv][col].is_zero() {
            return Float::new(prec);
        }
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= &a[col][col];
        for row in col + 1..n {
            let f = Float::with_val(prec, &a[row][col] / &a[col][col]);
            for k in col..n {
                let t = Float::with_val(prec, &f * &a[col][k]);
                a[row][k] -= t;
            }
        }
    }
    det
}

/// Newton's method with a central-difference Jacobian and step halving.
#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Converged when the Newton step is below `2^-tol_bits` relative; two
    /// polishing steps follow.
    pub tol_bits: u32,
}

impl NewtonOptions {
    pub fn for_prec(prec: u32) -> Self {
        NewtonOptions {
            max_iter: 200,
            tol_bits: prec / 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub x: Vec<Float>,
    /// Max-norm of the residual at the returned point.
    pub residual: Float,
    pub iterations: usize,
}

/// Jacobian of `f` at `x` by central differences with step
/// `2^(-prec/3)` relative to each coordinate.
pub fn fd_jacobian<F>(f: &F, x: &[Float]) -> Result<Vec<Vec<Float>>, NumericError>
where
    F: Fn(&[Float]) -> Result<Vec<Float>, NumericError>,
{
    let prec = x[0].prec();
    let n = x.len();
    let base = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 3));
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = Float::with_val(prec, &base * abs(&x[j]).max(&Float::with_val(prec, 1e-3)));
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += &h;
        xm[j] -= &h;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        let two_h = Float::with_val(prec, &h * 2u32);
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| Float::with_val(prec, a - b) / &two_h)
                .collect::<Vec<_>>(),
        );
    }
    let m = cols[0].len();
    Ok((0..m).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

pub fn newton<F>(what: &str, f: F, x0: Vec<Float>, opts: &NewtonOptions) -> Result<NewtonResult, NumericError>
where
    F: Fn(&[Float]) -> Result<Vec<Float>, NumericError>,
{
    newton_with(what, &f, &|x: &[Float]| fd_jacobian(&f, x), x0, opts)
}

/// Newton's method with a caller-supplied Jacobian.
pub fn newton_with<F, J>(what: &str, f: &F, jac: &J, x0: Vec<Float>, opts: &NewtonOptions) -> Result<NewtonResult, NumericError>
where
    F: Fn(&[Float]) -> Result<Vec<Float>, NumericError>,
    J: Fn(&[Float]) -> Result<Vec<Vec<Float>>, NumericError>,
{
    let prec = x0[0].prec();
    let tol = Float::with_val(prec, Float::i_exp(1, -(opts.tol_bits as i32)));
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut res = max_abs(&fx, prec);
    for it in 1..=opts.max_iter {
        let j = jac(&x)?;
        let rhs: Vec<Float> = fx.iter().map(|v| Float::with_val(prec, -v)).collect();
        let step = solve_linear(j, rhs, what)?;
        let mut lambda = Float::with_val(prec, 1);
        let (xn, fxn, resn) = loop {
            let xn: Vec<Float> = x
                .iter()
                .zip(&step)
                .map(|(a, s)| Float::with_val(prec, a + Float::with_val(prec, s * &lambda)))
                .collect();
            match f(&xn) {
                Ok(fxn) => {
                    let resn = max_abs(&fxn, prec);
                    if resn < res || lambda < 1e-6 || res < tol {
                        break (xn, fxn, resn);
                    }
                }
                Err(e) if lambda < 1e-6 => return Err(e),
                Err(_) => {}
            }
            lambda /= 2;
        };
        let scale = max_abs(&x, prec).max(&Float::with_val(prec, 1));
        let step_norm = Float::with_val(prec, max_abs(&step, prec) * &lambda) / scale;
        x = xn;
        fx = fxn;
        res = resn;
        if step_norm < tol {
            for _ in 0..2 {
                let j = jac(&x)?;
                let rhs: Vec<Float> = fx.iter().map(|v| Float::with_val(prec, -v)).collect();
                let step = solve_linear(j, rhs, what)?;
                for (a, s) in x.iter_mut().zip(&step) {
                    *a += s;
                }
                fx = f(&x)?;
            }
            res = max_abs(&fx, prec);
            return Ok(NewtonResult {
                x,
                residual: res,
                iterations: it,
            });
        }
    }
    Err(NumericError::NoConvergence {
        what: what.into(),
        iterations: opts.max_iter,
        residual: res.to_f64(),
    })
}

/// Root of a scalar function on a bracket `[lo, hi]` with a sign change, by
/// Newton steps safeguarded with bisection (derivative by central
/// differences).
pub fn bracketed_root<F>(what: &str, f: F, lo: Float, hi: Float, tol_bits: u32) -> Result<Float, NumericError>
where
    F: Fn(&Float) -> Result<Float, NumericError>,
{
    let prec = lo.prec();
    let (mut a, mut b) = (lo, hi);
    let fa = f(&a)?;
    let fb = f(&b)?;
    if fa.is_sign_negative() == fb.is_sign_negative() {
        return Err(domain(format!("{what}: no sign change on the bracket")));
    }
    let a_neg = fa.is_sign_negative();
    let tol = Float::with_val(prec, Float::i_exp(1, -(tol_bits as i32)));
    let mut x = Float::with_val(prec, &a + &b) / 2u32;
    for _ in 0..4 * prec as usize {
        let fx = f(&x)?;
        if fx.is_zero() {
            return Ok(x);
        }
        if fx.is_sign_negative() == a_neg {
            a = x.clone();
        } else {
            b = x.clone();
        }
        let width = Float::with_val(prec, &b - &a).abs();
        if width < Float::with_val(prec, &tol * abs(&x).max(&Float::with_val(prec, 1e-30))) {
            return Ok(x);
        }
        let h = Float::with_val(prec, &width * Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 3)));
        let fp = f(&Float::with_val(prec, &x + &h))?;
        let fm = f(&Float::with_val(prec, &x - &h))?;
        let d = Float::with_val(prec, &fp - &fm) / Float::with_val(prec, &h * 2u32);
        let mut next = if d.is_zero() {
            Float::with_val(prec, &a + &b) / 2u32
        } else {
            Float::with_val(prec, &x - Float::with_val(prec, &fx / &d))
        };
        let (lo_b, hi_b) = if a < b { (&a, &b) } else { (&b, &a) };
        if next <= *lo_b || next >= *hi_b {
            next = Float::with_val(prec, &a + &b) / 2u32;
        }
        let step = Float::with_val(prec, &next - &x).abs();
        x = next;
        if step < Float::with_val(prec, &tol * abs(&x).max(&Float::with_val(prec, 1e-30))) {
            return Ok(x);
        }
    }
    Err(NumericError::NoConvergence {
        what: what.into(),
        iterations: 4 * prec as usize,
        residual: f(&x)?.to_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 200;

    #[test]
    fn linear_solve_and_determinant() {
        let a = vec![vec![float(P, 2), float(P, 1)], vec![float(P, 1), float(P, 3)]];
        let x = solve_linear(a.clone(), vec![float(P, 3), float(P, 5)], "t").unwrap();
        assert!(agreeing_digits(&x[0], &float(P, (4, 5))) > 55.0);
        assert!(agreeing_digits(&x[1], &float(P, (7, 5))) > 55.0);
        assert!(agreeing_digits(&determinant(a), &float(P, 5)) > 55.0);
    }

    #[test]
    fn newton_finds_sqrt2() {
        let r = newton(
            "sqrt2",
            |x| Ok(vec![Float::with_val(P, &x[0] * &x[0]) - 2u32]),
            vec![float(P, 1)],
            &NewtonOptions::for_prec(P),
        )
        .unwrap();
        let s2 = Float::with_val(P, 2).sqrt();
        assert!(agreeing_digits(&r.x[0], &s2) > 50.0);
    }

    #[test]
    fn bracketed_root_of_cosine() {
        let r = bracketed_root("cos", |x| Ok(Float::with_val(P, x.cos_ref())), float(P, 1), float(P, 2), 150).unwrap();
        let half_pi = pi(P) / 2u32;
        assert!(agreeing_digits(&r, &half_pi) > 40.0);
    }

    #[test]
    fn jets_expand_exp_and_log() {
        let x0 = float(P, (1, 3));
        let t = jet_point(Var::X, &x0, 4);
        let e = t.exp_general().unwrap();
        // d^k/dt^k exp(x0 + t) / k! = exp(x0) / k!
        let ex = Float::with_val(P, x0.exp_ref());
        assert!(agreeing_digits(e.coeff(3), &(ex.clone() / 6u32)) > 55.0);
        let l = e.ln().unwrap();
        assert!(agreeing_digits(l.coeff(0), &x0) > 55.0);
        assert!(agreeing_digits(l.coeff(1), &float(P, 1)) > 55.0);
        assert!(abs(l.coeff(2)) < 1e-50);
    }

    #[test]
    fn gamma_minus_three_halves() {
        let g = gamma(P, &Rational::from((-3, 2)));
        let expect = Float::with_val(P, pi(P).sqrt()) * 4u32 / 3u32;
        assert!(agreeing_digits(&g, &expect) > 55.0);
    }
}
