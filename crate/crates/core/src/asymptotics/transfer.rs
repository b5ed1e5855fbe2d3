//! Coefficient asymptotics: transfer from singular expansions, and
//! extrapolation of exact coefficient sequences.

use rug::ops::Pow;
use rug::{Float, Rational};

use crate::numeric::{abs, domain, float, gamma, NumericError};

use super::SingularExpansion;

/// `constant * n^alpha * growth^n`, times `n!` when `factorial`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticEstimate {
    pub constant: Float,
    pub alpha: Rational,
    pub growth: Float,
    pub factorial: bool,
}

impl AsymptoticEstimate {
    pub fn value(&self, n: u32) -> Float {
        let prec = self.constant.prec();
        let nf = float(prec, n);
        let mut v = Float::with_val(prec, &self.constant * Float::with_val(prec, (&self.growth).pow(n)));
        v *= (Float::with_val(prec, nf.ln_ref()) * &self.alpha).exp();
        if self.factorial {
            v *= Float::with_val(prec, Float::factorial(n));
        }
        v
    }
}

/// Transfer the leading non-analytic term `A_k X^k` (`k` odd) of a singular
/// expansion: `[x^n] ~ A_k / Gamma(-k/2) n^(-k/2 - 1) rho^(-n)`.
pub fn transfer_estimate(exp: &SingularExpansion, factorial: bool, negligible: &Float) -> Result<AsymptoticEstimate, NumericError> {
    let prec = exp.rho.prec();
    for (k, a) in exp.coeffs.iter().enumerate() {
        if k % 2 == 0 || abs(a) <= *negligible {
            continue;
        }
        let half_k = Rational::from((-(k as i64), 2));
        let g = gamma(prec, &half_k);
        return Ok(AsymptoticEstimate {
            constant: Float::with_val(prec, a / &g),
            alpha: half_k - 1u32,
            growth: Float::with_val(prec, exp.rho.recip_ref()),
            factorial,
        });
    }
    Err(domain("expansion has no non-analytic term above the threshold"))
}

/// Extrapolated `(growth, alpha, constant)` of `a_n ~ c n^alpha g^n`.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub growth: Float,
    pub alpha: Float,
    pub constant: Float,
    /// Digits of agreement between extrapolations of two different orders,
    /// for growth, alpha and constant.
    pub stability: [f64; 3],
    /// Ratios `a_n / a_(n-1)` are monotone over the fitted window.
    pub monotone: bool,
}

impl FitResult {
    pub fn confident(&self, digits: f64) -> bool {
        self.monotone && self.stability.iter().all(|s| *s >= digits)
    }
}

/// Polynomial extrapolation to `h = 0` of values `v_i` sampled at `h_i`.
fn neville(h: &[Float], v: &[Float]) -> Float {
    let prec = v[0].prec();
    let mut p = v.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            let num = Float::with_val(prec, &h[i] * &p[i + 1]) - Float::with_val(prec, &h[i + m] * &p[i]);
            p[i] = num / Float::with_val(prec, &h[i] - &h[i + m]);
        }
    }
    p.swap_remove(0)
}

/// Form of the correction terms of a coefficient sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corrections {
    /// Powers of `1/n`, as for algebraic singularities of square-root type.
    IntegerPowers,
    /// Powers of `1/sqrt(n)`, as for poles in `sqrt(1 - x/rho)`.
    HalfPowers,
}

fn extrapolate(ns: &[u32], v: &[Float], order: usize, corr: Corrections) -> Float {
    let prec = v[0].prec();
    let k = v.len();
    let h: Vec<Float> = ns[k - order..]
        .iter()
        .map(|&n| match corr {
            Corrections::IntegerPowers => float(prec, (1, n)),
            Corrections::HalfPowers => float(prec, n).sqrt().recip(),
        })
        .collect();
    neville(&h, &v[k - order..])
}

/// Limit at `n -> infinity` of `v_n` sampled at `ns`, from the last `order`
/// samples.
pub fn extrapolate_limit(ns: &[u32], v: &[Float], order: usize, corr: Corrections) -> Float {
    extrapolate(ns, v, order.min(v.len()), corr)
}

fn digits(a: &Float, b: &Float) -> f64 {
    crate::numeric::agreeing_digits(a, b)
}

/// Fit `a_n ~ c n^alpha g^n` on positive coefficients by Richardson-style
/// extrapolation in `1/n`. With `alpha` given, the constant uses it exactly.
pub fn ratio_fit(a: &[Float], alpha: Option<&Rational>, order: usize) -> Result<FitResult, NumericError> {
    ratio_fit_with(a, alpha, order, Corrections::IntegerPowers)
}

/// [`ratio_fit`] with a chosen form of the correction terms.
pub fn ratio_fit_with(a: &[Float], alpha: Option<&Rational>, order: usize, corr: Corrections) -> Result<FitResult, NumericError> {
    let n_max = a.len() - 1;
    if n_max < 2 * order + 10 {
        return Err(domain(format!("ratio fit needs at least {} coefficients", 2 * order + 10)));
    }
    if a[n_max / 2..].iter().any(|c| !c.is_sign_positive() || c.is_zero()) {
        return Err(domain("ratio fit needs positive coefficients"));
    }
    let prec = a[0].prec();
    let start = n_max / 2;
    let ns: Vec<u32> = (start as u32..=n_max as u32).collect();
    let ratios: Vec<Float> = ns
        .iter()
        .map(|&n| Float::with_val(prec, &a[n as usize] / &a[n as usize - 1]))
        .collect();
    let monotone = ratios.windows(2).all(|w| w[0] <= w[1]) || ratios.windows(2).all(|w| w[0] >= w[1]);

    let g_hi = extrapolate(&ns, &ratios, order, corr);
    let g_lo = extrapolate(&ns, &ratios, order - 2, corr);
    // r_n / g = 1 + alpha/n + ... ; alpha_n = n (r_n / g - 1)
    let alphas = |g: &Float| -> Vec<Float> {
        ns.iter()
            .zip(&ratios)
            .map(|(&n, r)| (Float::with_val(prec, r / g) - 1u32) * n)
            .collect()
    };
    let al = alphas(&g_hi);
    let alpha_hi = extrapolate(&ns, &al, order - 1, corr);
    let alpha_lo = extrapolate(&ns, &al, order - 3, corr);
    let alpha_used = match alpha {
        Some(q) => Float::with_val(prec, q),
        None => alpha_hi.clone(),
    };
    let consts: Vec<Float> = ns
        .iter()
        .map(|&n| {
            let nf = float(prec, n);
            let scale = Float::with_val(prec, (&g_hi).pow(n)) * (Float::with_val(prec, nf.ln_ref()) * &alpha_used).exp();
            Float::with_val(prec, &a[n as usize] / &scale)
        })
        .collect();
    let c_hi = extrapolate(&ns, &consts, order, corr);
    let c_lo = extrapolate(&ns, &consts, order - 2, corr);
    Ok(FitResult {
        stability: [digits(&g_hi, &g_lo), digits(&alpha_hi, &alpha_lo), digits(&c_hi, &c_lo)],
        growth: g_hi,
        alpha: alpha_hi,
        constant: c_hi,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{agreeing_digits, e, pi};

    const P: u32 = 256;

    #[test]
    fn tree_function_fit_recovers_e_and_minus_three_halves() {
        // [x^n] W = n^(n-1) / n! ~ n^(-3/2) e^n / sqrt(2 pi)
        let a: Vec<Float> = (0..=160u32)
            .map(|n| {
                if n == 0 {
                    return float(P, 0);
                }
                Float::with_val(P, Float::with_val(P, n).pow(n - 1)) / Float::with_val(P, Float::factorial(n))
            })
            .collect();
        let fit = ratio_fit(&a, None, 12).unwrap();
        assert!(agreeing_digits(&fit.growth, &e(P)) > 12.0, "{}", fit.growth);
        assert!(agreeing_digits(&fit.alpha, &float(P, (-3, 2))) > 8.0, "{}", fit.alpha);
        let c = Float::with_val(P, Float::with_val(P, pi(P) * 2u32).sqrt().recip_ref());
        assert!(agreeing_digits(&fit.constant, &c) > 8.0);
        assert!(fit.confident(6.0));
    }

    #[test]
    fn transfer_of_square_root() {
        // (1 - x)^(1/2): A_1 = 1, coefficient ~ n^(-3/2) / Gamma(-1/2)
        let exp = SingularExpansion::new(float(P, 1), vec![float(P, 0), float(P, 1)]);
        let est = transfer_estimate(&exp, false, &float(P, (1, 1000000))).unwrap();
        assert_eq!(est.alpha, Rational::from((-3, 2)));
        let g = Float::with_val(P, -2i32) * Float::with_val(P, pi(P).sqrt());
        assert!(agreeing_digits(&est.constant, &Float::with_val(P, g.recip_ref())) > 60.0);
    }
}
