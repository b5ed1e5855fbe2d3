//! Growth constants of the expected number of spanning trees in random
//! connected and 2-connected graphs, and of its second moment.

use rug::{Float, Rational};

use crate::networks::second_moment_system;
use crate::numeric::{float, gamma, NumericError};

use super::dlw::dlw_solve;
use super::two_connected::{C3Variant, Marking, NetworkSingularity};

/// Literature value of the constant in the unmarked connected count
/// `c_s n^(-5/2) rho_s^(-n) n!`, used as an input.
pub const LITERATURE_C_S: f64 = 0.0067912;
/// Literature value of the constant in the unmarked 2-connected count.
pub const LITERATURE_B: f64 = 0.00101;

#[derive(Clone, Debug)]
pub struct ExpectationConstants {
    /// Connected radius, marked.
    pub rho_bar: Float,
    /// Connected radius, unmarked.
    pub rho_s: Float,
    /// `rho_s / rho_bar`, growth of the connected expectation.
    pub rho_inv: Float,
    pub variant: C3Variant,
    /// `C_3 / Gamma(-3/2)` for both markings under `variant`.
    pub c_marked: Float,
    pub c_unmarked: Float,
    /// `c_marked / LITERATURE_C_S`.
    pub s_literature: Float,
    /// `c_marked / c_unmarked`.
    pub s_self: Float,
    /// 2-connected radii: marked `R`, unmarked `r`, second moment `R_2`.
    pub big_r: Float,
    pub r: Float,
    pub r2: Float,
    /// `B_3 / Gamma(-3/2)` for both markings.
    pub b_marked: Float,
    pub b_unmarked: Float,
    /// `b_marked / LITERATURE_B`.
    pub p_literature: Float,
    pub p_self: Float,
    /// `r / R`.
    pub varpi_inv: Float,
    /// `r / R_2`.
    pub varpi2_inv: Float,
}

/// All expectation constants at edge weight 1 with the given `C_3` form.
pub fn expectation_constants(variant: C3Variant, prec: u32) -> Result<ExpectationConstants, NumericError> {
    let one = Rational::from(1);
    let marked = NetworkSingularity::new(Marking::SpanningTree, &one, prec)?;
    let unmarked = NetworkSingularity::new(Marking::Unmarked, &one, prec)?;
    let cm = marked.connected()?;
    let cu = unmarked.connected()?;
    let g = gamma(prec, &Rational::from((-3, 2)));
    let over_g = |v: &Float| Float::with_val(prec, v / &g);
    let c_marked = over_g(cm.c3(variant));
    let c_unmarked = over_g(cu.c3(variant));
    let b_marked = over_g(&marked.b_expansion()?.coeffs[3]);
    let b_unmarked = over_g(&unmarked.b_expansion()?.coeffs[3]);
    let r2 = dlw_solve(|p| second_moment_system::<Float>(p, float(p, 1)), prec)?.x;
    let big_r = marked.radius().clone();
    let r = unmarked.radius().clone();
    let div = |a: &Float, b: &Float| Float::with_val(prec, a / b);
    Ok(ExpectationConstants {
        rho_inv: div(&cu.rho, &cm.rho),
        s_literature: div(&c_marked, &float(prec, Rational::from_f64(LITERATURE_C_S).expect("finite"))),
        s_self: div(&c_marked, &c_unmarked),
        p_literature: div(&b_marked, &float(prec, Rational::from_f64(LITERATURE_B).expect("finite"))),
        p_self: div(&b_marked, &b_unmarked),
        varpi_inv: div(&r, &big_r),
        varpi2_inv: div(&r, &r2),
        rho_bar: cm.rho,
        rho_s: cu.rho,
        variant,
        c_marked,
        c_unmarked,
        big_r,
        r,
        r2,
        b_marked,
        b_unmarked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_constants() {
        let e = expectation_constants(C3Variant::TwoThirdsAtTau, 192).unwrap();
        assert!((e.rho_inv.to_f64() - 2.08415).abs() < 2e-4, "{}", e.rho_inv);
        assert!((e.varpi_inv.to_f64() / 2.25829 - 1.0).abs() < 1e-4, "{}", e.varpi_inv);
        assert!((e.varpi2_inv.to_f64() / 5.31718 - 1.0).abs() < 1e-4, "{}", e.varpi2_inv);
        assert!((e.r.to_f64() - 0.12800).abs() < 1e-5);
        // the second moment grows faster than the square of the first
        assert!(e.varpi2_inv > Float::with_val(192, &e.varpi_inv * &e.varpi_inv));
    }
}
