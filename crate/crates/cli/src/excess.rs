//! Kernel counts of fixed excess, with the weighted cubic multigraph census
//! alongside where it is within reach.

use rug::Rational;
use serde::Serialize;

use sptree::fixed_excess::solve_kernel_systems;
use sptree_oracle::cubic_census;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExcessRow {
    pub k: usize,
    pub g: String,
    pub gbar: String,
    /// `gbar_k / g_k`.
    pub ratio: String,
    /// The same pair from the multigraph census, when `k` is within the cap.
    pub census_g: Option<String>,
    pub census_gbar: Option<String>,
}

pub fn excess_table(k_max: usize, census_cap: usize) -> Result<Vec<ExcessRow>, CliError> {
    if k_max == 0 {
        return Err(CliError::Usage("k-max must be at least 1".into()));
    }
    let ks = solve_kernel_systems(k_max)?;
    let mut out = Vec::new();
    for k in 1..=k_max {
        let (g, gbar) = (&ks.g[k], &ks.gbar[k]);
        let (census_g, census_gbar) = if k <= census_cap {
            let (w, wt) = cubic_census(k, census_cap)?.normalised();
            (Some(w.to_string()), Some(wt.to_string()))
        } else {
            (None, None)
        };
        out.push(ExcessRow {
            k,
            g: g.to_string(),
            gbar: gbar.to_string(),
            ratio: Rational::from(gbar / g).to_string(),
            census_g,
            census_gbar,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_and_census_agree() {
        let rows = excess_table(3, 3).unwrap();
        for r in &rows {
            assert_eq!(Some(&r.g), r.census_g.as_ref());
            assert_eq!(Some(&r.gbar), r.census_gbar.as_ref());
        }
        assert_eq!(rows[0].ratio, "9/5");
        assert_eq!(rows[2].gbar, "1241/128");
    }
}
