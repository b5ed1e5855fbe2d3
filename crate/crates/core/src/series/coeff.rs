//! Coefficient rings for truncated series in one main variable.
//!
//! A series is a vector of coefficients in a ring `C`. Two rings are used:
//! plain rationals (univariate series) and polynomials in the edge variable
//! `y` truncated at a fixed degree (bivariate series, exponential in the main
//! variable and ordinary in `y`).

use std::fmt;

use rug::{Complete, Float, Integer, Rational};

/// Ring of coefficients of a truncated series.
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync {
    /// Shape information needed to build new elements (the `y` truncation).
    type Ctx: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn zero(ctx: &Self::Ctx) -> Self;
    fn from_rational(ctx: &Self::Ctx, r: Rational) -> Self;
    fn ctx(&self) -> Self::Ctx;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn sub_assign(&mut self, other: &Self);
    fn neg_assign(&mut self);
    /// `self += a * b`
    fn add_mul(&mut self, a: &Self, b: &Self);
    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(&self.ctx());
        out.add_mul(self, other);
        out
    }
    /// `self += k * a * b`
    fn add_mul_int(&mut self, a: &Self, b: &Self, k: &Integer) {
        let mut t = a.mul(b);
        t.scale_int(k);
        self.add_assign(&t);
    }
    fn scale(&mut self, r: &Rational);
    fn scale_int(&mut self, k: &Integer);
    /// Multiplicative inverse when `self` is a unit.
    fn inverse(&self) -> Option<Self>;
    /// True when every rational entry is `>= 0`.
    fn is_nonnegative(&self) -> bool;
    /// Narrow two contexts to their common (smaller) truncation.
    fn meet(a: &Self::Ctx, b: &Self::Ctx) -> Self::Ctx;
    fn restrict(&self, ctx: &Self::Ctx) -> Self;
    /// Equality up to the rounding of the ring; exact rings compare exactly.
    fn agrees(&self, other: &Self) -> bool {
        self == other
    }
    /// `exp` of a coefficient; exact rings only know `exp(0)`.
    fn exp_scalar(&self) -> Option<Self> {
        self.is_zero().then(|| Self::from_rational(&self.ctx(), Rational::from(1)))
    }
    /// Natural logarithm of a coefficient; exact rings only know `log(1)`.
    fn ln_scalar(&self) -> Option<Self> {
        let one = Self::from_rational(&self.ctx(), Rational::from(1));
        (*self == one).then(|| Self::zero(&self.ctx()))
    }
}

impl Coeff for Rational {
    type Ctx = ();

    fn zero(_: &()) -> Self {
        Rational::new()
    }
    fn from_rational(_: &(), r: Rational) -> Self {
        r
    }
    fn ctx(&self) {}
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign(&mut self, other: &Self) {
        *self -= other;
    }
    fn neg_assign(&mut self) {
        let v = std::mem::take(self);
        *self = -v;
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += (a * b).complete();
    }
    fn add_mul_int(&mut self, a: &Self, b: &Self, k: &Integer) {
        let t = Rational::from(a * b);
        *self += t * k;
    }
    fn scale(&mut self, r: &Rational) {
        *self *= r;
    }
    fn scale_int(&mut self, k: &Integer) {
        *self *= k;
    }
    fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Rational::from(self.recip_ref()))
        }
    }
    fn is_nonnegative(&self) -> bool {
        self.cmp0() != std::cmp::Ordering::Less
    }
    fn meet(_: &(), _: &()) {}
    fn restrict(&self, _: &()) -> Self {
        self.clone()
    }
}

/// Floating coefficients at a fixed working precision (the context, in bits).
/// Series over this ring are Taylor jets for numeric evaluation.
impl Coeff for Float {
    type Ctx = u32;

    fn zero(prec: &u32) -> Self {
        Float::new(*prec)
    }
    fn from_rational(prec: &u32, r: Rational) -> Self {
        Float::with_val(*prec, r)
    }
    fn ctx(&self) -> u32 {
        self.prec()
    }
    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
    /// Relative agreement to half the working precision.
    fn agrees(&self, other: &Self) -> bool {
        let scale = Float::with_val(self.prec(), self.abs_ref()).max(&Float::with_val(self.prec(), other.abs_ref()));
        let diff = Float::with_val(self.prec(), self - other).abs();
        diff <= scale >> (self.prec() / 2)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign(&mut self, other: &Self) {
        *self -= other;
    }
    fn neg_assign(&mut self) {
        let v = self.clone();
        *self = -v;
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        let t = Float::with_val(self.prec(), a * b);
        *self += t;
    }
    fn scale(&mut self, r: &Rational) {
        *self *= r;
    }
    fn scale_int(&mut self, k: &Integer) {
        *self *= k;
    }
    fn inverse(&self) -> Option<Self> {
        (!Float::is_zero(self)).then(|| Float::with_val(self.prec(), self.recip_ref()))
    }
    fn is_nonnegative(&self) -> bool {
        !self.is_sign_negative() || Float::is_zero(self)
    }
    fn meet(a: &u32, b: &u32) -> u32 {
        (*a).min(*b)
    }
    fn restrict(&self, prec: &u32) -> Self {
        Float::with_val(*prec, self)
    }
    fn exp_scalar(&self) -> Option<Self> {
        Some(Float::with_val(self.prec(), self.exp_ref()))
    }
    fn ln_scalar(&self) -> Option<Self> {
        (*self > 0).then(|| Float::with_val(self.prec(), self.ln_ref()))
    }
}

/// Polynomial in `y` with rational coefficients, truncated after `y^trunc`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct YPoly {
    coeffs: Vec<Rational>,
}

impl YPoly {
    pub fn new(trunc: usize) -> Self {
        YPoly {
            coeffs: vec![Rational::new(); trunc + 1],
        }
    }

    pub fn from_coeffs(trunc: usize, mut coeffs: Vec<Rational>) -> Self {
        coeffs.resize(trunc + 1, Rational::new());
        YPoly { coeffs }
    }

    /// The monomial `c * y^k` (zero when `k` exceeds the truncation).
    pub fn monomial(trunc: usize, k: usize, c: Rational) -> Self {
        let mut p = YPoly::new(trunc);
        if k <= trunc {
            p.coeffs[k] = c;
        }
        p
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &Rational {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff_mut(&mut self, k: usize) -> &mut Rational {
        &mut self.coeffs[k]
    }

    /// Index of the highest nonzero entry.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    fn lowest(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn eval(&self, y: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= y;
            acc += c;
        }
        acc
    }
}

impl fmt::Debug for YPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| format!("{c}*y^{k}"))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl Coeff for YPoly {
    type Ctx = usize;

    fn zero(ctx: &usize) -> Self {
        YPoly::new(*ctx)
    }
    fn from_rational(ctx: &usize, r: Rational) -> Self {
        YPoly::monomial(*ctx, 0, r)
    }
    fn ctx(&self) -> usize {
        self.trunc()
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }
    fn sub_assign(&mut self, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
    }
    fn neg_assign(&mut self) {
        for a in &mut self.coeffs {
            let v = std::mem::take(a);
            *a = -v;
        }
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        let t = self.trunc();
        let (Some(da), Some(db)) = (a.degree(), b.degree()) else {
            return;
        };
        let (la, lb) = (a.lowest().unwrap(), b.lowest().unwrap());
        for i in la..=da.min(t) {
            let ai = &a.coeffs[i];
            if ai.is_zero() {
                continue;
            }
            let hi = db.min(t - i);
            if hi < lb {
                continue;
            }
            for j in lb..=hi {
                let bj = &b.coeffs[j];
                if !bj.is_zero() {
                    self.coeffs[i + j] += (ai * bj).complete();
                }
            }
        }
    }
    fn scale(&mut self, r: &Rational) {
        for a in &mut self.coeffs {
            *a *= r;
        }
    }
    fn scale_int(&mut self, k: &Integer) {
        for a in &mut self.coeffs {
            *a *= k;
        }
    }
    fn inverse(&self) -> Option<Self> {
        let c0 = self.coeffs[0].inverse()?;
        let t = self.trunc();
        let mut out = YPoly::new(t);
        out.coeffs[0] = c0.clone();
        for k in 1..=t {
            let mut acc = Rational::new();
            for i in 1..=k {
                if !self.coeffs[i].is_zero() {
                    acc += (&self.coeffs[i] * &out.coeffs[k - i]).complete();
                }
            }
            out.coeffs[k] = -(acc * &c0);
        }
        Some(out)
    }
    fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_nonnegative())
    }
    fn meet(a: &usize, b: &usize) -> usize {
        (*a).min(*b)
    }
    fn restrict(&self, ctx: &usize) -> Self {
        YPoly {
            coeffs: self.coeffs[..=*ctx].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn inverse_of_one_plus_y_is_alternating() {
        let p = YPoly::from_coeffs(5, vec![q(1, 1), q(1, 1)]);
        let inv = p.inverse().unwrap();
        let expected: Vec<Rational> = (0..=5).map(|k| q(if k % 2 == 0 { 1 } else { -1 }, 1)).collect();
        assert_eq!(inv.coeffs(), expected.as_slice());
    }

    #[test]
    fn product_respects_truncation() {
        let p = YPoly::from_coeffs(3, vec![q(0, 1), q(1, 1), q(2, 1)]);
        let sq = p.mul(&p);
        assert_eq!(sq.coeffs(), &[q(0, 1), q(0, 1), q(1, 1), q(4, 1)]);
    }

    #[test]
    fn non_unit_has_no_inverse() {
        let p = YPoly::monomial(4, 1, q(1, 1));
        assert!(p.inverse().is_none());
        assert!(Rational::new().inverse().is_none());
    }
}
