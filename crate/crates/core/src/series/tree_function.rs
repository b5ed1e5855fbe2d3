//! The rooted labelled tree function `W = x exp(W)`.

use rug::Rational;

use super::grammar::GrammarSystem;
use super::{UnivariateSeries, Var};

/// `W(x)` to order `trunc`; `[x^n] W = n^(n-1) / n!`.
pub fn tree_function_w(trunc: usize) -> UnivariateSeries {
    let mut sys: GrammarSystem<Rational> = GrammarSystem::new(Var::X, ());
    let w = sys.unknown("W");
    sys.define("W", w.exp().mul_var());
    sys.solve(trunc).expect("W = x exp(W) is guarded").series("W").clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::{Complete, Integer};

    #[test]
    fn matches_cayley_formula() {
        let w = tree_function_w(20);
        for n in 1..=20u32 {
            let nn = Integer::from(Integer::u_pow_u(n, n - 1));
            let want = Rational::from((nn, Integer::factorial(n).complete()));
            assert_eq!(w.coeff(n as usize), &want, "n = {n}");
        }
        assert_eq!(w.coeff(0), &Rational::new());
    }

    #[test]
    fn residual_vanishes() {
        let w = tree_function_w(20);
        let rhs = w.exp().unwrap().mul_var();
        assert!((&w - &rhs).is_zero());
    }

    #[test]
    fn inverse_of_one_minus_w() {
        let w = tree_function_w(3);
        let one = UnivariateSeries::one(Var::X, (), 3);
        let r = (&one - &w).reciprocal().unwrap();
        // 1 + W + W^2 + W^3 with W = x + x^2 + (3/2) x^3
        let want: Vec<Rational> = vec![1.into(), 1.into(), 2.into(), (9, 2).into()];
        assert_eq!(r.coeffs(), want.as_slice());
        assert_eq!(&r * &(&one - &w), one);
    }
}
