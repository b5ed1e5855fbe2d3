//! Exact truncated power series over the rationals.
//!
//! [`Series`] is a dense vector of coefficients in a [`Coeff`] ring. With
//! rational coefficients it is a [`UnivariateSeries`]; with [`YPoly`]
//! coefficients it is a [`BivariateEGF`] whose main variable `x` marks
//! labelled vertices (exponential) and whose `y` marks edges (ordinary).
//! Every operation truncates to the smaller of its operands' orders.

pub mod cache;
mod coeff;
pub mod grammar;
pub mod tree_function;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coeff::{Coeff, YPoly};

/// Which variable a series is expanded in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    /// Labelled vertices; coefficients of `x^n` are counts divided by `n!`.
    X,
    /// Excess of cubic kernels; ordinary in the solver sense.
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("reciprocal of a series whose constant term {constant} is not a unit")]
    NotUnit { constant: String },
    #[error("{op} needs a series with zero constant term, found {constant}")]
    NonzeroConstant { op: &'static str, constant: String },
    #[error("series are in different variables ({0:?} vs {1:?})")]
    VariableMismatch(Var, Var),
    #[error("y truncation {have} is too small, need at least {need}")]
    InsufficientYTruncation { have: usize, need: usize },
}

#[derive(Clone, PartialEq)]
pub struct Series<C: Coeff> {
    var: Var,
    ctx: C::Ctx,
    coeffs: Vec<C>,
}

pub type UnivariateSeries = Series<Rational>;
pub type BivariateEGF = Series<YPoly>;

impl<C: Coeff> Series<C> {
    pub fn zero(var: Var, ctx: C::Ctx, trunc: usize) -> Self {
        let coeffs = vec![C::zero(&ctx); trunc + 1];
        Series { var, ctx, coeffs }
    }

    pub fn from_coeffs(var: Var, ctx: C::Ctx, mut coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a constant term");
        for c in &mut coeffs {
            if c.ctx() != ctx {
                *c = c.restrict(&ctx);
            }
        }
        Series { var, ctx, coeffs }
    }

    pub fn constant(var: Var, ctx: C::Ctx, trunc: usize, c: C) -> Self {
        let mut s = Self::zero(var, ctx, trunc);
        s.coeffs[0] = c;
        s
    }

    pub fn one(var: Var, ctx: C::Ctx, trunc: usize) -> Self {
        let one = C::from_rational(&ctx, Rational::from(1));
        Self::constant(var, ctx, trunc, one)
    }

    /// The main variable itself.
    pub fn variable(var: Var, ctx: C::Ctx, trunc: usize) -> Self {
        let mut s = Self::zero(var, ctx.clone(), trunc);
        if trunc >= 1 {
            s.coeffs[1] = C::from_rational(&ctx, Rational::from(1));
        }
        s
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &C {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff_mut(&mut self, n: usize) -> &mut C {
        &mut self.coeffs[n]
    }

    pub fn truncate(&self, trunc: usize) -> Self {
        let t = trunc.min(self.trunc());
        Series {
            var: self.var,
            ctx: self.ctx.clone(),
            coeffs: self.coeffs[..=t].to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// First order at which the two series differ.
    pub fn first_difference(&self, other: &Self) -> Option<usize> {
        self.coeffs.iter().zip(&other.coeffs).position(|(a, b)| !a.agrees(b))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_nonnegative())
    }

    /// First order carrying a negative rational, if any.
    pub fn first_negative(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_nonnegative())
    }

    fn aligned(&self, other: &Self) -> (usize, C::Ctx) {
        assert_eq!(self.var, other.var, "series in different variables");
        (self.trunc().min(other.trunc()), C::meet(&self.ctx, &other.ctx))
    }

    fn restricted(&self, trunc: usize, ctx: &C::Ctx) -> Vec<C> {
        self.coeffs[..=trunc]
            .iter()
            .map(|c| if &c.ctx() == ctx { c.clone() } else { c.restrict(ctx) })
            .collect()
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            c.scale(r);
        }
        out
    }

    pub fn scale_coeff(&self, k: &C) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = c.mul(k);
        }
        out
    }

    /// Multiply by the main variable. The product is known to one more order.
    pub fn mul_var(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(C::zero(&self.ctx));
        coeffs.extend_from_slice(&self.coeffs);
        Series {
            var: self.var,
            ctx: self.ctx.clone(),
            coeffs,
        }
    }

    /// Exact division by the main variable. Loses one order of truncation.
    pub fn shift_down(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstant {
                op: "division by the main variable",
                constant: format!("{:?}", self.coeffs[0]),
            });
        }
        let coeffs = if self.trunc() == 0 {
            vec![C::zero(&self.ctx)]
        } else {
            self.coeffs[1..].to_vec()
        };
        Ok(Series {
            var: self.var,
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let inv0 = self.coeffs[0].inverse().ok_or_else(|| SeriesError::NotUnit {
            constant: format!("{:?}", self.coeffs[0]),
        })?;
        let n = self.trunc();
        let mut out: Vec<C> = Vec::with_capacity(n + 1);
        out.push(inv0.clone());
        for k in 1..=n {
            let mut acc = C::zero(&self.ctx);
            for i in 1..=k {
                if !self.coeffs[i].is_zero() {
                    acc.add_mul(&self.coeffs[i], &out[k - i]);
                }
            }
            let mut v = acc.mul(&inv0);
            v.neg_assign();
            out.push(v);
        }
        Ok(Series {
            var: self.var,
            ctx: self.ctx.clone(),
            coeffs: out,
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.var, self.ctx.clone(), self.trunc());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `exp(self)` from the recurrence `n e_n = sum_k k a_k e_{n-k}`.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstant {
                op: "exp",
                constant: format!("{:?}", self.coeffs[0]),
            });
        }
        let n = self.trunc();
        let mut out: Vec<C> = Vec::with_capacity(n + 1);
        out.push(C::from_rational(&self.ctx, Rational::from(1)));
        for m in 1..=n {
            let mut acc = C::zero(&self.ctx);
            for k in 1..=m {
                if !self.coeffs[k].is_zero() {
                    let mut t = self.coeffs[k].clone();
                    t.scale_int(&Integer::from(k));
                    acc.add_mul(&t, &out[m - k]);
                }
            }
            acc.scale(&Rational::from((1, m as u64)));
            out.push(acc);
        }
        Ok(Series {
            var: self.var,
            ctx: self.ctx.clone(),
            coeffs: out,
        })
    }

    /// `exp(self)` for any constant term the coefficient ring can
    /// exponentiate.
    pub fn exp_general(&self) -> Result<Self, SeriesError> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return self.exp();
        }
        let e0 = c0.exp_scalar().ok_or_else(|| SeriesError::NonzeroConstant {
            op: "exp",
            constant: format!("{c0:?}"),
        })?;
        let mut rest = self.clone();
        rest.coeffs[0] = C::zero(&self.ctx);
        Ok(rest.exp()?.scale_coeff(&e0))
    }

    /// Natural logarithm, `log(a_0) + integral(a' / a)`.
    pub fn ln(&self) -> Result<Self, SeriesError> {
        let c0 = &self.coeffs[0];
        let l0 = c0.ln_scalar().ok_or_else(|| SeriesError::NonzeroConstant {
            op: "log",
            constant: format!("{c0:?}"),
        })?;
        let n = self.trunc();
        let mut out = if n == 0 {
            Self::zero(self.var, self.ctx.clone(), 0)
        } else {
            let q = &self.derivative() * &self.truncate(n - 1).reciprocal()?;
            q.integral()
        };
        out.coeffs[0] = l0;
        Ok(out)
    }

    /// `outer(inner)` substituting into the main variable by Horner's rule.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstant {
                op: "composition",
                constant: format!("{:?}", inner.coeffs[0]),
            });
        }
        let (trunc, ctx) = outer.aligned(inner);
        let inner = Series {
            var: inner.var,
            ctx: ctx.clone(),
            coeffs: inner.restricted(trunc, &ctx),
        };
        let outer_c = outer.restricted(trunc, &ctx);
        let mut acc = Self::constant(outer.var, ctx.clone(), trunc, outer_c[trunc].clone());
        for j in (0..trunc).rev() {
            acc = &acc * &inner;
            acc.coeffs[0].add_assign(&outer_c[j]);
        }
        Ok(acc)
    }

    /// Derivative in the main variable.
    pub fn derivative(&self) -> Self {
        let n = self.trunc();
        let mut coeffs = Vec::with_capacity(n.max(1));
        for k in 1..=n {
            let mut c = self.coeffs[k].clone();
            c.scale_int(&Integer::from(k));
            coeffs.push(c);
        }
        if coeffs.is_empty() {
            coeffs.push(C::zero(&self.ctx));
        }
        Series {
            var: self.var,
            ctx: self.ctx.clone(),
            coeffs,
        }
    }

    /// Antiderivative in the main variable vanishing at zero; gains one order.
    pub fn integral(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(C::zero(&self.ctx));
        for (k, c) in self.coeffs.iter().enumerate() {
            let mut c = c.clone();
            c.scale(&Rational::from((1, k as u64 + 1)));
            coeffs.push(c);
        }
        Series {
            var: self.var,
            ctx: self.ctx.clone(),
            coeffs,
        }
    }

    /// Largest order `n` such that every coefficient up to `n` is zero.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }
}

impl UnivariateSeries {
    pub fn from_rationals(var: Var, coeffs: Vec<Rational>) -> Self {
        Series::from_coeffs(var, (), coeffs)
    }

    /// `n! [x^n]`, the labelled count encoded by an exponential series.
    pub fn labelled(&self, n: usize) -> Rational {
        Rational::from(&self.coeffs[n] * Integer::factorial(n as u32).complete())
    }

    /// Truncated sum at a rational point.
    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }
}

use rug::Complete;

impl BivariateEGF {
    pub fn trunc_x(&self) -> usize {
        self.trunc()
    }

    pub fn trunc_y(&self) -> usize {
        self.ctx
    }

    /// `[x^n y^m]`.
    pub fn get(&self, n: usize, m: usize) -> &Rational {
        self.coeffs[n].coeff(m)
    }

    /// `n! [x^n y^m]`.
    pub fn labelled(&self, n: usize, m: usize) -> Rational {
        Rational::from(self.get(n, m) * Integer::factorial(n as u32).complete())
    }

    /// The series `c * x^n * y^m`.
    pub fn monomial(trunc_x: usize, trunc_y: usize, n: usize, m: usize, c: Rational) -> Self {
        let mut s = Series::zero(Var::X, trunc_y, trunc_x);
        if n <= trunc_x {
            s.coeffs[n] = YPoly::monomial(trunc_y, m, c);
        }
        s
    }

    /// The series `y` (constant in `x`).
    pub fn y(trunc_x: usize, trunc_y: usize) -> Self {
        Self::monomial(trunc_x, trunc_y, 0, 1, Rational::from(1))
    }

    pub fn diff_y(&self) -> Self {
        let ty = self.trunc_y();
        let coeffs = self
            .coeffs
            .iter()
            .map(|p| {
                let mut out = YPoly::new(ty);
                for m in 1..=ty {
                    *out.coeff_mut(m - 1) = Rational::from(p.coeff(m) * m as u64);
                }
                out
            })
            .collect();
        Series::from_coeffs(Var::X, ty, coeffs)
    }

    /// Integral from `y = 0` with zero constant of integration.
    pub fn integrate_y(&self) -> Self {
        let ty = self.trunc_y();
        let coeffs = self
            .coeffs
            .iter()
            .map(|p| {
                let mut out = YPoly::new(ty);
                for m in 0..ty {
                    *out.coeff_mut(m + 1) = Rational::from(p.coeff(m) / (m as u64 + 1));
                }
                out
            })
            .collect();
        Series::from_coeffs(Var::X, ty, coeffs)
    }

    pub fn eval_y(&self, y: &Rational) -> UnivariateSeries {
        let coeffs = self.coeffs.iter().map(|p| p.eval(y)).collect();
        Series::from_coeffs(Var::X, (), coeffs)
    }

    /// Multiply every `x`-coefficient by a polynomial in `y`.
    pub fn mul_ypoly(&self, p: &YPoly) -> Self {
        self.scale_coeff(&p.restrict(&self.ctx))
    }
}

impl<C: Coeff> fmt::Debug for Series<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.var.name();
        write!(f, "Series[{v}; O({v}^{})](", self.trunc() + 1)?;
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c:?}){v}^{k}")?;
        }
        write!(f, ")")
    }
}

impl<'a, C: Coeff> Add<&'a Series<C>> for &'a Series<C> {
    type Output = Series<C>;
    fn add(self, rhs: &Series<C>) -> Series<C> {
        let (t, ctx) = self.aligned(rhs);
        let mut coeffs = self.restricted(t, &ctx);
        for (a, b) in coeffs.iter_mut().zip(rhs.restricted(t, &ctx)) {
            a.add_assign(&b);
        }
        Series {
            var: self.var,
            ctx,
            coeffs,
        }
    }
}

impl<'a, C: Coeff> Sub<&'a Series<C>> for &'a Series<C> {
    type Output = Series<C>;
    fn sub(self, rhs: &Series<C>) -> Series<C> {
        let (t, ctx) = self.aligned(rhs);
        let mut coeffs = self.restricted(t, &ctx);
        for (a, b) in coeffs.iter_mut().zip(rhs.restricted(t, &ctx)) {
            a.sub_assign(&b);
        }
        Series {
            var: self.var,
            ctx,
            coeffs,
        }
    }
}

impl<'a, C: Coeff> Neg for &'a Series<C> {
    type Output = Series<C>;
    fn neg(self) -> Series<C> {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            c.neg_assign();
        }
        out
    }
}

impl<'a, C: Coeff> Mul<&'a Series<C>> for &'a Series<C> {
    type Output = Series<C>;
    fn mul(self, rhs: &Series<C>) -> Series<C> {
        let (t, ctx) = self.aligned(rhs);
        let a = self.restricted(t, &ctx);
        let b = rhs.restricted(t, &ctx);
        let mut coeffs = vec![C::zero(&ctx); t + 1];
        let nz_b: Vec<usize> = (0..=t).filter(|&j| !b[j].is_zero()).collect();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for &j in &nz_b {
                if i + j > t {
                    break;
                }
                coeffs[i + j].add_mul(ai, &b[j]);
            }
        }
        Series {
            var: self.var,
            ctx,
            coeffs,
        }
    }
}

/// Ring operation selector for [`arith`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    /// Power of the first operand; the second operand is ignored.
    Pow(u32),
    /// Reciprocal of the first operand; the second operand is ignored.
    Reciprocal,
}

/// Result of a binary series operation together with any truncation change.
#[derive(Clone, Debug)]
pub struct ArithOutcome<C: Coeff> {
    pub value: Series<C>,
    /// `Some((left, right))` when the operands had different orders and the
    /// result was cut back to the smaller one.
    pub truncation_mismatch: Option<(usize, usize)>,
}

pub fn arith<C: Coeff>(a: &Series<C>, b: &Series<C>, op: ArithOp) -> Result<ArithOutcome<C>, SeriesError> {
    if a.var != b.var {
        return Err(SeriesError::VariableMismatch(a.var, b.var));
    }
    let binary = matches!(op, ArithOp::Add | ArithOp::Sub | ArithOp::Mul);
    let truncation_mismatch = (binary && a.trunc() != b.trunc()).then(|| (a.trunc(), b.trunc()));
    let value = match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Pow(k) => a.pow(k),
        ArithOp::Reciprocal => a.reciprocal()?,
    };
    Ok(ArithOutcome {
        value,
        truncation_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn uni(c: &[(i64, i64)]) -> UnivariateSeries {
        UnivariateSeries::from_rationals(Var::X, c.iter().map(|&(n, d)| q(n, d)).collect())
    }

    #[test]
    fn x_times_x_is_x_squared() {
        let x = UnivariateSeries::variable(Var::X, (), 4);
        assert_eq!(&x * &x, uni(&[(0, 1), (0, 1), (1, 1), (0, 1), (0, 1)]));
    }

    #[test]
    fn reciprocal_of_one_plus_y() {
        // Treat y as the main variable of a univariate series.
        let s = uni(&[(1, 1), (1, 1), (0, 1), (0, 1), (0, 1)]);
        let r = s.reciprocal().unwrap();
        assert_eq!(r, uni(&[(1, 1), (-1, 1), (1, 1), (-1, 1), (1, 1)]));
    }

    #[test]
    fn reciprocal_rejects_zero_constant() {
        let x = UnivariateSeries::variable(Var::X, (), 3);
        assert!(matches!(x.reciprocal(), Err(SeriesError::NotUnit { .. })));
    }

    #[test]
    fn exp_of_x() {
        let x = UnivariateSeries::variable(Var::X, (), 3);
        assert_eq!(x.exp().unwrap(), uni(&[(1, 1), (1, 1), (1, 2), (1, 6)]));
        let zero = UnivariateSeries::zero(Var::X, (), 3);
        assert_eq!(zero.exp().unwrap(), UnivariateSeries::one(Var::X, (), 3));
    }

    #[test]
    fn exp_rejects_constant_term() {
        let one = UnivariateSeries::one(Var::X, (), 3);
        assert!(matches!(one.exp(), Err(SeriesError::NonzeroConstant { .. })));
    }

    #[test]
    fn compose_with_identity_inner() {
        let x = UnivariateSeries::variable(Var::X, (), 5);
        let x2 = &x * &x;
        assert_eq!(Series::compose(&x2, &x).unwrap(), x2);
    }

    #[test]
    fn compose_exp_with_xy() {
        let (tx, ty) = (5, 5);
        let x = BivariateEGF::monomial(tx, ty, 1, 0, q(1, 1));
        let expx = x.exp().unwrap();
        let xy = BivariateEGF::monomial(tx, ty, 1, 1, q(1, 1));
        let got = Series::compose(&expx, &xy).unwrap();
        for n in 0..=tx {
            for m in 0..=ty {
                let want = if n == m {
                    Rational::from((1, Integer::factorial(n as u32).complete()))
                } else {
                    Rational::new()
                };
                assert_eq!(got.get(n, m), &want, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn y_calculus() {
        let (tx, ty) = (3, 4);
        let s = BivariateEGF::monomial(tx, ty, 2, 1, q(1, 2));
        assert_eq!(s.diff_y(), BivariateEGF::monomial(tx, ty, 2, 0, q(1, 2)));
        // x^2/2 (1 - y + y^2) integrates to x^2/2 (y - y^2/2 + y^3/3)
        let p = YPoly::from_coeffs(ty, vec![q(1, 2), q(-1, 2), q(1, 2)]);
        let f = BivariateEGF::monomial(tx, ty, 2, 0, q(1, 1)).mul_ypoly(&p);
        let want = YPoly::from_coeffs(ty, vec![q(0, 1), q(1, 2), q(-1, 4), q(1, 6)]);
        assert_eq!(f.integrate_y().coeff(2), &want);
    }

    #[test]
    fn arith_reports_truncation_mismatch() {
        let a = UnivariateSeries::one(Var::X, (), 5);
        let b = UnivariateSeries::one(Var::X, (), 3);
        let out = arith(&a, &b, ArithOp::Add).unwrap();
        assert_eq!(out.truncation_mismatch, Some((5, 3)));
        assert_eq!(out.value.trunc(), 3);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let s = uni(&[(1, 1), (2, 3), (-1, 5), (7, 2), (1, 9)]);
        assert_eq!(s.pow(3), &(&s * &s) * &s);
    }
}
