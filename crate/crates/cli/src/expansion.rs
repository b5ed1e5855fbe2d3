//! Singular expansions `A_0 + A_1 X + A_2 X^2 + A_3 X^3` of every class.

use rug::Rational;
use serde::Serialize;

use sptree::asymptotics::two_connected::{arbitrate_c3, coefficient_fits, Marking, NetworkSingularity};
use sptree::asymptotics::SingularExpansion;
use sptree::fixed_excess::KernelAsymptotics;
use sptree::two_trees::TwoTreeSingularities;

use crate::report::decimal;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "verbatim")]
pub enum ExpansionClass {
    D,
    Dbar,
    S,
    Sbar,
    P,
    Pbar,
    /// Networks without spanning trees.
    D0,
    S0,
    P0,
    B,
    B0,
    C,
    C0,
    T,
    Ts,
    Drbar,
    Dr,
    /// Kernel series in `U = sqrt(1 - u/gamma)`.
    #[value(name = "kernel-c")]
    KernelC,
    #[value(name = "kernel-d")]
    KernelD,
    #[value(name = "kernel-c0")]
    KernelC0,
    #[value(name = "kernel-c1")]
    KernelC1,
    #[value(name = "kernel-d0")]
    KernelD0,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionRow {
    pub class: String,
    pub y: String,
    pub rho: String,
    pub i: usize,
    pub coefficient: String,
    pub digits: usize,
    pub note: String,
}

/// Coefficients shown with this many significant digits.
const SHOWN: usize = 30;

fn rows(class: ExpansionClass, y: &Rational, e: &SingularExpansion, note: &str) -> Vec<ExpansionRow> {
    e.coeffs
        .iter()
        .take(4)
        .enumerate()
        .map(|(i, c)| ExpansionRow {
            class: format!("{class:?}"),
            y: y.to_string(),
            rho: decimal(&e.rho, SHOWN),
            i,
            coefficient: decimal(c, SHOWN),
            digits: SHOWN,
            note: note.into(),
        })
        .collect()
}

pub fn expansion(class: ExpansionClass, y: Option<Rational>, prec: u32) -> Result<Vec<ExpansionRow>, CliError> {
    use ExpansionClass::*;
    let fixed = matches!(class, T | Ts | Drbar | Dr | KernelC | KernelD | KernelC0 | KernelC1 | KernelD0);
    if fixed && y.is_some() {
        return Err(CliError::Usage(format!("{class:?} is only available at y = 1")));
    }
    let y = y.unwrap_or_else(|| Rational::from(1));
    if y <= 0 {
        return Err(CliError::Usage(format!("y = {y} must be positive")));
    }
    let marking = if matches!(class, D0 | S0 | P0 | B0 | C0) {
        Marking::Unmarked
    } else {
        Marking::SpanningTree
    };
    Ok(match class {
        D | Dbar | S | Sbar | P | Pbar | D0 | S0 | P0 => {
            let ns = NetworkSingularity::new(marking, &y, prec)?;
            let name = format!("{class:?}").trim_end_matches('0').to_string();
            rows(class, &y, &ns.network_expansions()?[name.as_str()], "")
        }
        B | B0 => rows(class, &y, &NetworkSingularity::new(marking, &y, prec)?.b_expansion()?, ""),
        C | C0 => {
            let ns = NetworkSingularity::new(marking, &y, prec)?;
            let cs = ns.connected()?;
            let fits = coefficient_fits(&y, 90, prec.max(256))?;
            let (variant, rel) = arbitrate_c3(&cs, &fits[&marking].c.constant);
            let note = format!(
                "X^3 term {} (fit relative error {:.1e}); tau = {}",
                variant.name(),
                rel.to_f64(),
                decimal(&cs.tau, 20)
            );
            rows(class, &y, &cs.expansion(variant), &note)
        }
        T | Ts | Drbar | Dr => {
            let s = TwoTreeSingularities::new(prec)?;
            let e = match class {
                T => &s.t,
                Ts => &s.ts,
                Drbar => &s.drbar,
                _ => &s.dr,
            };
            rows(class, &y, e, "")
        }
        KernelC | KernelD | KernelC0 | KernelC1 | KernelD0 => {
            let ka = KernelAsymptotics::new(prec)?;
            let (rho, c) = match class {
                KernelC => (&ka.gamma.x, &ka.c),
                KernelD => (&ka.gamma.x, &ka.d),
                KernelC0 => (&ka.gamma_bar.x, &ka.c0),
                KernelC1 => (&ka.gamma_bar.x, &ka.c1),
                _ => (&ka.gamma_bar.x, &ka.d0),
            };
            rows(class, &y, &SingularExpansion::new(rho.clone(), c.clone()), "")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_rows_at_one() {
        let r = expansion(ExpansionClass::P, None, 128).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r[1].coefficient.starts_with("-1.2548"), "{}", r[1].coefficient);
        assert!(r[0].rho.starts_with("5.66834"), "{}", r[0].rho);
    }

    #[test]
    fn fixed_classes_reject_y() {
        assert!(matches!(
            expansion(ExpansionClass::T, Some(Rational::from(2)), 128),
            Err(CliError::Usage(_))
        ));
    }
}
