//! Singular expansions of the network, 2-connected and connected series of
//! both flavours at a fixed edge weight.

use std::collections::BTreeMap;

use rug::{Float, Rational};

use crate::assembly::assemble_with;
use crate::numeric::{abs, bracketed_root, domain, float, gamma, jet, Jet, NumericError};
use crate::series::Var;

use super::closed_form::{b_baseline, b_tree, base_networks_from_d, tree_networks_from_d};
use super::implicit::{branch_point, puiseux, singular_x, solve_at, taylor, BaselineEquation, BranchPoint, ImplicitEquation, TreeEquation};
use super::transfer::{ratio_fit, FitResult};
use super::SingularExpansion;

/// Which family of graphs: marked with a spanning tree, or unmarked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Marking {
    SpanningTree,
    Unmarked,
}

impl Marking {
    pub fn name(self) -> &'static str {
        match self {
            Marking::SpanningTree => "spanning-tree",
            Marking::Unmarked => "unmarked",
        }
    }
}

/// Network singularity of one flavour at one edge weight, with the Puiseux
/// expansion of `D` and everything derived from it.
pub struct NetworkSingularity {
    pub marking: Marking,
    pub y: Rational,
    pub branch: BranchPoint,
    /// `D_0 .. D_order` in `X = sqrt(1 - x/R)`.
    pub d: Vec<Float>,
    eq: Box<dyn ImplicitEquation + Send + Sync>,
}

impl std::fmt::Debug for NetworkSingularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NetworkSingularity")
            .field("marking", &self.marking)
            .field("y", &self.y)
            .field("R", &self.branch.x)
            .field("d", &self.d)
            .finish()
    }
}

/// Puiseux order kept for network expansions.
pub const EXPANSION_ORDER: usize = 4;

impl NetworkSingularity {
    pub fn new(marking: Marking, y: &Rational, prec: u32) -> Result<Self, NumericError> {
        if *y <= 0 {
            return Err(domain("edge weight must be positive"));
        }
        let eq: Box<dyn ImplicitEquation + Send + Sync> = match marking {
            Marking::SpanningTree => Box::new(TreeEquation { y: y.clone() }),
            Marking::Unmarked => Box::new(BaselineEquation { y: y.clone() }),
        };
        let branch = branch_point(eq.as_ref(), prec)?;
        let d = puiseux(eq.as_ref(), &branch, EXPANSION_ORDER)?;
        Ok(NetworkSingularity {
            marking,
            y: y.clone(),
            branch,
            d,
            eq,
        })
    }

    pub fn prec(&self) -> u32 {
        self.branch.x.prec()
    }

    pub fn radius(&self) -> &Float {
        &self.branch.x
    }

    fn y_float(&self) -> Float {
        Float::with_val(self.prec(), &self.y)
    }

    fn d_jet(&self, order: usize) -> Jet {
        jet(Var::X, self.prec(), self.d[..=order].to_vec())
    }

    /// Expansions in `X` of every network series of this flavour, to `X^3`.
    pub fn network_expansions(&self) -> Result<BTreeMap<&'static str, SingularExpansion>, NumericError> {
        let order = 3;
        let x = singular_x(&self.branch.x, order);
        let d = self.d_jet(order);
        let y = self.y_float();
        let mut out = BTreeMap::new();
        let mut put = |name: &'static str, j: &Jet| {
            out.insert(name, SingularExpansion::new(self.branch.x.clone(), j.coeffs().to_vec()));
        };
        match self.marking {
            Marking::SpanningTree => {
                let n = tree_networks_from_d(&x, &d, &y)?;
                put("D", &n.d);
                put("Dbar", &n.dbar);
                put("S", &n.s);
                put("Sbar", &n.sbar);
                put("P", &n.p);
                put("Pbar", &n.pbar);
            }
            Marking::Unmarked => {
                let n = base_networks_from_d(&x, &d, &y)?;
                put("D", &n.d);
                put("S", &n.s);
                put("P", &n.p);
            }
        }
        Ok(out)
    }

    fn b_of(&self, x: &Jet, d: &Jet) -> Result<Jet, NumericError> {
        let y = self.y_float();
        Ok(match self.marking {
            Marking::SpanningTree => b_tree(x, &tree_networks_from_d(x, d, &y)?, &y)?,
            Marking::Unmarked => b_baseline(x, &base_networks_from_d(x, d, &y)?, &y)?,
        })
    }

    /// Expansion of the 2-connected series in `X`, to `X^3`.
    pub fn b_expansion(&self) -> Result<SingularExpansion, NumericError> {
        let order = 3;
        let b = self.b_of(&singular_x(&self.branch.x, order), &self.d_jet(order))?;
        Ok(SingularExpansion::new(self.branch.x.clone(), b.coeffs().to_vec()))
    }

    /// Network `D` at a point of `[0, R)`.
    pub fn d_at(&self, x: &Float) -> Result<Float, NumericError> {
        solve_at(self.eq.as_ref(), &self.branch, &self.d, x)
    }

    /// `B, B_x, B_xx, B_xxx` at a point of `(0, R)`.
    pub fn b_derivatives(&self, x: &Float) -> Result<[Float; 4], NumericError> {
        let z = self.d_at(x)?;
        let dj = taylor(self.eq.as_ref(), x, &z, 3)?;
        let xj = crate::numeric::jet_point(Var::X, x, 3);
        let b = self.b_of(&xj, &dj)?;
        let prec = self.prec();
        Ok([
            b.coeff(0).clone(),
            b.coeff(1).clone(),
            Float::with_val(prec, b.coeff(2) * 2u32),
            Float::with_val(prec, b.coeff(3) * 6u32),
        ])
    }

    /// Connected-level singularity from `F = x exp(B_x(F))`.
    pub fn connected(&self) -> Result<ConnectedSingularity, NumericError> {
        let prec = self.prec();
        let r = self.branch.x.clone();
        // tau B_xx(tau) = 1; B_xx blows up at R like 1/X.
        let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 4));
        let hi = Float::with_val(prec, &r * Float::with_val(prec, 1 - &eps));
        let lo = Float::with_val(prec, &r / 64u32);
        let f = |t: &Float| -> Result<Float, NumericError> {
            let [_, _, bxx, _] = self.b_derivatives(t)?;
            Ok(Float::with_val(prec, t * &bxx) - 1u32)
        };
        let tau = bracketed_root("tau B_xx(tau) = 1", f, lo, hi, prec * 3 / 4)?;
        let [b, bx, bxx, bxxx] = self.b_derivatives(&tau)?;
        let rho = Float::with_val(prec, &tau / Float::with_val(prec, bx.exp_ref()));
        let c0 = Float::with_val(prec, &tau + &b) - Float::with_val(prec, &tau * &bx);
        let c2 = Float::with_val(prec, -&tau);
        // Denominator tau B_xxx - tau B_xx^2 + 2 B_xx, equal to B_xx + tau B_xxx
        // on the curve tau B_xx = 1.
        let den = Float::with_val(prec, &tau * &bxxx) - Float::with_val(prec, &tau * Float::with_val(prec, &bxx * &bxx))
            + Float::with_val(prec, &bxx * 2u32);
        let core_tau = Float::with_val(prec, &tau * 2u32) / &den;
        let [_, bx_rho, _, _] = self.b_derivatives(&rho)?;
        let num_rho = Float::with_val(prec, &rho * Float::with_val(prec, bx_rho.exp_ref())) * 2u32;
        let core_rho = num_rho / &den;
        let two_thirds = float(prec, (2, 3));
        let three_halves = float(prec, (3, 2));
        let c3 = [
            (C3Variant::TwoThirdsAtTau, Float::with_val(prec, core_tau.sqrt_ref()) * &two_thirds),
            (
                C3Variant::ThreeHalvesAtTau,
                Float::with_val(prec, core_tau.sqrt_ref()) * &three_halves,
            ),
            (C3Variant::TwoThirdsAtRho, Float::with_val(prec, core_rho.sqrt_ref()) * &two_thirds),
            (
                C3Variant::ThreeHalvesAtRho,
                Float::with_val(prec, core_rho.sqrt_ref()) * &three_halves,
            ),
        ];
        let margin = Float::with_val(prec, &r - &tau);
        Ok(ConnectedSingularity {
            tau,
            rho,
            c0,
            c2,
            c3: c3.to_vec(),
            margin,
            b_at_tau: [b, bx, bxx, bxxx],
        })
    }
}

/// Candidate forms of the `X^3` coefficient of the connected series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum C3Variant {
    /// `(2/3) sqrt(2 tau / (B_xx + tau B_xxx))`, from integrating `x C' = F`.
    TwoThirdsAtTau,
    /// Prefactor `3/2`, `B_x` evaluated at `tau`.
    ThreeHalvesAtTau,
    /// Prefactor `2/3`, `rho exp(B_x(rho))` in the numerator.
    TwoThirdsAtRho,
    /// Prefactor `3/2`, `rho exp(B_x(rho))` in the numerator.
    ThreeHalvesAtRho,
}

impl C3Variant {
    pub fn name(self) -> &'static str {
        match self {
            C3Variant::TwoThirdsAtTau => "2/3 sqrt(2 tau / (B_xx + tau B_xxx))",
            C3Variant::ThreeHalvesAtTau => "3/2 sqrt(2 tau / (B_xx + tau B_xxx))",
            C3Variant::TwoThirdsAtRho => "2/3 sqrt(2 rho exp(B_x(rho)) / (B_xx + tau B_xxx))",
            C3Variant::ThreeHalvesAtRho => "3/2 sqrt(2 rho exp(B_x(rho)) / (B_xx + tau B_xxx))",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConnectedSingularity {
    pub tau: Float,
    /// Radius of the connected series, `tau / exp(B_x(tau))`.
    pub rho: Float,
    pub c0: Float,
    pub c2: Float,
    pub c3: Vec<(C3Variant, Float)>,
    /// `R - tau > 0`: the composition is subcritical.
    pub margin: Float,
    pub b_at_tau: [Float; 4],
}

impl ConnectedSingularity {
    pub fn c3(&self, v: C3Variant) -> &Float {
        &self.c3.iter().find(|(k, _)| *k == v).expect("all variants computed").1
    }

    pub fn expansion(&self, v: C3Variant) -> SingularExpansion {
        let prec = self.tau.prec();
        SingularExpansion::new(
            self.rho.clone(),
            vec![self.c0.clone(), Float::new(prec), self.c2.clone(), self.c3(v).clone()],
        )
    }
}

/// `|B_1|`, which must vanish for a 3/2-type 2-connected expansion.
pub fn b1_defect(b: &SingularExpansion) -> Float {
    abs(&b.coeffs[1])
}

/// Extrapolated `n^(-5/2)` laws of the exact coefficients, the arbiter for
/// the singular constants.
#[derive(Clone, Debug)]
pub struct CoefficientFits {
    pub b: FitResult,
    pub c: FitResult,
}

/// Fit the 2-connected and connected series of both markings from
/// `terms` floating-point coefficients at edge weight `y`.
pub fn coefficient_fits(y: &Rational, terms: usize, prec: u32) -> Result<BTreeMap<Marking, CoefficientFits>, NumericError> {
    let a = assemble_with::<Float>(terms, prec, &Float::with_val(prec, y))?;
    let alpha = Rational::from((-5, 2));
    let order = (terms / 6).clamp(4, 16);
    let fit = |s: &Jet| ratio_fit(s.coeffs(), Some(&alpha), order);
    Ok(BTreeMap::from([
        (
            Marking::SpanningTree,
            CoefficientFits {
                b: fit(&a.b)?,
                c: fit(&a.c)?,
            },
        ),
        (
            Marking::Unmarked,
            CoefficientFits {
                b: fit(&a.b_base)?,
                c: fit(&a.c_base)?,
            },
        ),
    ]))
}

/// The variant whose transferred constant `C_3 / Gamma(-3/2)` is closest to
/// the fitted one, with its relative error.
pub fn arbitrate_c3(conn: &ConnectedSingularity, fitted: &Float) -> (C3Variant, Float) {
    let prec = conn.tau.prec();
    let g = gamma(prec, &Rational::from((-3, 2)));
    conn.c3
        .iter()
        .map(|(v, c3)| {
            let est = Float::with_val(prec, c3 / &g);
            let rel = abs(&Float::with_val(prec, &est - fitted)) / fitted;
            (*v, rel)
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
        .expect("variants are nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: u32 = 192;

    fn close(got: &Float, want: f64, tol: f64) -> bool {
        (got.to_f64() - want).abs() <= tol
    }

    #[test]
    fn network_table_at_one() {
        let ns = NetworkSingularity::new(Marking::SpanningTree, &Rational::from(1), PREC).unwrap();
        assert!(close(ns.radius(), 0.05668, 2e-5));
        let ex = ns.network_expansions().unwrap();
        let table: [(&str, [f64; 4]); 6] = [
            ("D", [1.82404, -1.52769, 1.34779, -1.25138]),
            ("S", [0.17092, -0.27289, 0.18433, -0.15440]),
            ("Sbar", [0.30701, -0.43079, 0.19616, -0.12220]),
            ("P", [0.65312, -1.25480, 1.16347, -1.09697]),
            ("Pbar", [0.41170, -0.74041, 0.58941, -0.47599]),
            // The second coefficient of Dbar is negative: Dbar = y + Sbar + Pbar.
            ("Dbar", [1.71871, -1.17120, 0.78557, -0.59820]),
        ];
        for (name, want) in table {
            for (k, w) in want.iter().enumerate() {
                let got = &ex[name].coeffs[k];
                assert!(close(got, *w, 2e-5), "{name}_{k} = {got}");
            }
        }
        let sum = Float::with_val(PREC, &ex["Sbar"].coeffs[1] + &ex["Pbar"].coeffs[1]);
        assert!(close(&sum, ex["Dbar"].coeffs[1].to_f64(), 1e-15));
    }

    #[test]
    fn two_connected_and_connected_at_one() {
        let ns = NetworkSingularity::new(Marking::SpanningTree, &Rational::from(1), PREC).unwrap();
        let b = ns.b_expansion().unwrap();
        assert!(close(&b.coeffs[0], 0.00176, 2e-5));
        assert!(b1_defect(&b).to_f64() < 1e-40);
        assert!(close(&b.coeffs[2], -0.00394, 2e-5));
        assert!(close(&b.coeffs[3], 0.00062718, 1e-8));
        let c = ns.connected().unwrap();
        assert!(close(&c.rho, 0.05288, 2e-5));
        assert!(close(&c.c0, 0.05450, 2e-5));
        assert!(close(&c.c2, -0.05668, 2e-5));
        // tau and R agree to five digits but not beyond.
        let m = c.margin.to_f64();
        assert!(m > 4e-6 && m < 5e-6, "margin {m}");
    }

    #[test]
    fn unmarked_constants_at_one() {
        let ns = NetworkSingularity::new(Marking::Unmarked, &Rational::from(1), PREC).unwrap();
        assert!(close(ns.radius(), 0.12800, 2e-5));
        let b = ns.b_expansion().unwrap();
        let g = gamma(PREC, &Rational::from((-3, 2)));
        assert!(close(&Float::with_val(PREC, &b.coeffs[3] / &g), 0.00101, 1e-5));
        let c = ns.connected().unwrap();
        assert!(close(&c.rho, 0.11021, 2e-5));
    }

    #[test]
    fn fitted_coefficients_select_two_thirds_at_tau() {
        let fits = coefficient_fits(&Rational::from(1), 90, 256).unwrap();
        for marking in [Marking::SpanningTree, Marking::Unmarked] {
            let ns = NetworkSingularity::new(marking, &Rational::from(1), PREC).unwrap();
            let conn = ns.connected().unwrap();
            let f = &fits[&marking];
            assert!(f.c.confident(8.0), "{marking:?} {:?}", f.c.stability);
            let growth = Float::with_val(PREC, conn.rho.recip_ref());
            assert!(crate::numeric::agreeing_digits(&f.c.growth, &growth) > 10.0);
            let (v, rel) = arbitrate_c3(&conn, &f.c.constant);
            assert_eq!(v, C3Variant::TwoThirdsAtTau);
            assert!(rel.to_f64() < 1e-10, "{rel}");
            // the 2-connected constant transfers from B_3
            let b = ns.b_expansion().unwrap();
            let est = Float::with_val(PREC, &b.coeffs[3] / gamma(PREC, &Rational::from((-3, 2))));
            assert!(crate::numeric::agreeing_digits(&est, &f.b.constant) > 10.0);
        }
    }
}
