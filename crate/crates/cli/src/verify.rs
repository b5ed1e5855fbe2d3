//! Exact cross-checks of the series against brute-force censuses, residual
//! identities, the sandwich bounds, and the combined verification run.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rug::{Integer, Rational};

use sptree::assembly::{assemble_b, baseline_b_by_integration, check_rooting_identity, connected_from_b, AssembledSeries};
use sptree::fixed_excess::{resolve_normalisation, solve_kernel_systems, KernelNormalisation, PolynomialEquation};
use sptree::networks::{
    bundle_from_series, implicit_d_consistency, solve_networks_at, solve_networks_with, Flavor, NetworkBundle, NetworkError, Perturbation,
};
use sptree::series::cache::{write_bivariate, CachedSeries, SeriesStore};
use sptree::series::tree_function::tree_function_w;
use sptree::series::{BivariateEGF, Series, YPoly};
use sptree::two_trees::{solve_two_trees, TwoTreeSeries};
use sptree_oracle::{network_census, sp_census, CensusOptions, CensusRow, NetworkRow};

use crate::config::RunConfig;
use crate::ledger::{LedgerRow, Status};
use crate::report::{Check, Outcome, Report};
use crate::CliError;

/// What happened when a bundle was requested from the cache.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Stored,
    /// A stored entry was unreadable or failed its rule check.
    Recomputed(String),
}

fn y_poly(trunc_y: usize) -> YPoly {
    YPoly::monomial(trunc_y, 1, Rational::from(1))
}

fn solve_bundle(flavor: Flavor, trunc_x: usize, trunc_y: usize, perturb: Perturbation) -> Result<NetworkBundle<YPoly>, NetworkError> {
    solve_networks_with(flavor, trunc_x, trunc_y, y_poly(trunc_y), perturb)
}

fn cache_class(flavor: Flavor, name: &str) -> String {
    format!("{}-{name}", flavor.name())
}

/// Network bundle with `y` symbolic, loaded from `store` when a stored copy
/// passes the rule check and recomputed (and rewritten) otherwise.
pub fn cached_bundle(
    store: &SeriesStore,
    flavor: Flavor,
    trunc_x: usize,
    trunc_y: usize,
) -> Result<(NetworkBundle<YPoly>, CacheOutcome), CliError> {
    let key = |name: &str| SeriesStore::key(&cache_class(flavor, name), trunc_x, Some(trunc_y), None);
    let mut found = BTreeMap::new();
    let mut missing = false;
    let mut problem = None;
    for name in flavor.series_names() {
        match store.load(&key(name)) {
            Ok(Some((h, CachedSeries::Bivariate(s))))
                if h.class == cache_class(flavor, name) && h.trunc_x == trunc_x && h.trunc_y == Some(trunc_y) =>
            {
                found.insert(name.to_string(), s);
            }
            Ok(Some(_)) => problem = Some(format!("{}: header does not match its key", key(name))),
            Ok(None) => missing = true,
            Err(e) => problem = Some(format!("{}: {e}", key(name))),
        }
    }
    if problem.is_none() && !missing {
        match bundle_from_series(flavor, trunc_y, found) {
            Ok(b) => return Ok((b, CacheOutcome::Hit)),
            Err(e) => problem = Some(e.to_string()),
        }
    }
    let bundle = solve_bundle(flavor, trunc_x, trunc_y, Perturbation::None)?;
    for name in flavor.series_names() {
        let class = cache_class(flavor, name);
        store.store_with(&key(name), |w| write_bivariate(w, &class, bundle.s(name)))?;
    }
    Ok((bundle, problem.map_or(CacheOutcome::Stored, CacheOutcome::Recomputed)))
}

/// Marked and unmarked 2-connected and connected series to order `trunc_x`,
/// built from cached network bundles.
pub fn assemble_cached(store: &SeriesStore, trunc_x: usize, trunc_y: usize) -> Result<(AssembledSeries, Vec<CacheOutcome>), CliError> {
    let nt = trunc_x.saturating_sub(2);
    let (tree, o1) = cached_bundle(store, Flavor::SpanningTree, nt, trunc_y)?;
    let (base, o2) = cached_bundle(store, Flavor::Baseline, nt, trunc_y)?;
    let b = assemble_b(&tree, &y_poly(trunc_y))?;
    let b_base = baseline_b_by_integration(&base)?;
    let c = connected_from_b(&b)?;
    let c_base = connected_from_b(&b_base)?;
    Ok((AssembledSeries { b, c, b_base, c_base }, vec![o1, o2]))
}

/// First coefficient where series and census disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub class: String,
    pub n: usize,
    pub m: usize,
    pub series: Rational,
    pub census: Integer,
}

/// Compare `series(n, m)` with a census map over a rectangle of `(n, m)`;
/// returns the number of nonzero entries compared or the first divergence.
fn compare_grid(
    class: &str,
    ns: RangeInclusive<usize>,
    m_max: usize,
    series: impl Fn(usize, usize) -> Rational,
    census: &BTreeMap<(usize, usize), u128>,
) -> Result<usize, Divergence> {
    let mut nonzero = 0;
    for n in ns {
        for m in 0..=m_max {
            let s = series(n, m);
            let c = Integer::from(census.get(&(n, m)).copied().unwrap_or(0));
            if s != c {
                return Err(Divergence {
                    class: class.into(),
                    n,
                    m,
                    series: s,
                    census: c,
                });
            }
            if c != 0 {
                nonzero += 1;
            }
        }
    }
    Ok(nonzero)
}

fn grid_check(group: &str, class: &str, ns: RangeInclusive<usize>, res: Result<usize, Divergence>) -> Check {
    match res {
        Ok(k) => Check::new(
            group,
            class,
            k > 0,
            format!("{k} nonzero coefficients equal for n in {}..={}", ns.start(), ns.end()),
        ),
        Err(d) => Check::new(
            group,
            class,
            false,
            format!(
                "first divergence at (class {}, n {}, m {}): series {} census {}",
                d.class, d.n, d.m, d.series, d.census
            ),
        ),
    }
}

fn census_map(rows: &[CensusRow], f: impl Fn(&CensusRow) -> u128) -> BTreeMap<(usize, usize), u128> {
    rows.iter().map(|r| ((r.n, r.m), f(r))).collect()
}

/// Simple-graph censuses for `n` in `1..=cap`.
pub fn simple_censuses(cap: usize, threads: Option<usize>) -> Result<Vec<sptree_oracle::SpCensus>, CliError> {
    let opts = CensusOptions { cap, threads };
    (1..=cap).map(|n| sp_census(n, opts).map_err(CliError::from)).collect()
}

/// `C, C∅, B, B∅` per `(n, m)` and `T, Tˢ` per `n`, against the censuses.
pub fn simple_class_checks(censuses: &[sptree_oracle::SpCensus], a: &AssembledSeries, two: &TwoTreeSeries) -> Vec<Check> {
    let cap = censuses.iter().map(|c| c.n).max().unwrap_or(0);
    let connected: Vec<CensusRow> = censuses.iter().flat_map(|c| c.connected.clone()).collect();
    let biconnected: Vec<CensusRow> = censuses.iter().flat_map(|c| c.biconnected.clone()).collect();
    let two_trees: Vec<CensusRow> = censuses.iter().flat_map(|c| c.two_trees.clone()).collect();
    let m_max = a.c.trunc_y().min(2 * cap);
    let lab = |s: &BivariateEGF| {
        let s = s.clone();
        move |n: usize, m: usize| {
            if n <= s.trunc_x() && m <= s.trunc_y() {
                s.labelled(n, m)
            } else {
                Rational::new()
            }
        }
    };
    let g = "oracle";
    let mut out = vec![
        grid_check(
            g,
            "C",
            1..=cap,
            compare_grid("C", 1..=cap, m_max, lab(&a.c), &census_map(&connected, |r| r.sum_trees)),
        ),
        grid_check(
            g,
            "C0",
            1..=cap,
            compare_grid("C0", 1..=cap, m_max, lab(&a.c_base), &census_map(&connected, |r| r.count)),
        ),
        grid_check(
            g,
            "B",
            2..=cap,
            compare_grid("B", 2..=cap, m_max, lab(&a.b), &census_map(&biconnected, |r| r.sum_trees)),
        ),
        grid_check(
            g,
            "B0",
            2..=cap,
            compare_grid("B0", 2..=cap, m_max, lab(&a.b_base), &census_map(&biconnected, |r| r.count)),
        ),
    ];
    // 2-trees on n vertices have 2n - 3 edges; the series are taken at y = 1
    let per_n = |s: &Series<Rational>| {
        let s = s.clone();
        move |n: usize, m: usize| {
            if n >= 2 && m == 2 * n - 3 && n <= s.trunc() {
                s.labelled(n)
            } else {
                Rational::new()
            }
        }
    };
    out.push(grid_check(
        g,
        "T",
        2..=cap,
        compare_grid("T", 2..=cap, m_max, per_n(&two.t), &census_map(&two_trees, |r| r.count)),
    ));
    out.push(grid_check(
        g,
        "Ts",
        2..=cap,
        compare_grid("Ts", 2..=cap, m_max, per_n(&two.ts), &census_map(&two_trees, |r| r.sum_trees)),
    ));
    out
}

/// Network series against two-pole censuses with up to `cap` internal
/// vertices. With a perturbed grammar the failing rule is located by
/// checking every rule of the reference grammar on the divergent series.
pub fn network_checks(cap: usize, threads: Option<usize>, perturb: Perturbation) -> Result<Vec<Check>, CliError> {
    let mut rows: Vec<NetworkRow> = Vec::new();
    for n in 0..=cap {
        rows.extend(network_census(n, cap, threads)?);
    }
    let ty = 2 * cap + 3;
    let tree = solve_bundle(Flavor::SpanningTree, cap, ty, perturb)?;
    let base = solve_bundle(Flavor::Baseline, cap, ty, Perturbation::None)?;
    let second = solve_bundle(Flavor::SecondMoment, cap, ty, Perturbation::None)?;
    let map = |f: fn(&NetworkRow) -> u128| -> BTreeMap<(usize, usize), u128> { rows.iter().map(|r| ((r.n, r.m), f(r))).collect() };
    let lab = |b: &NetworkBundle<YPoly>, name: &str| {
        let s = b.s(name).clone();
        move |n: usize, m: usize| s.labelled(n, m)
    };
    let cases: [(&str, &NetworkBundle<YPoly>, &str, fn(&NetworkRow) -> u128); 6] = [
        ("D", &tree, "D", |r| r.sum_t),
        ("Dbar", &tree, "Dbar", |r| r.sum_f),
        ("D0", &base, "D", |r| r.count),
        ("Dstar", &second, "Dstar", |r| r.sum_tt),
        ("Dtilde", &second, "Dtilde", |r| r.sum_tf),
        ("Dhat", &second, "Dhat", |r| r.sum_ff),
    ];
    let mut out = Vec::new();
    for (class, bundle, name, f) in cases {
        let res = compare_grid(class, 0..=cap, ty, lab(bundle, name), &map(f));
        let mut check = grid_check("networks", class, 0..=cap, res.clone());
        if res.is_err() {
            check.detail.push_str(&locate_rule(bundle, ty));
        }
        out.push(check);
    }
    Ok(out)
}

fn locate_rule(bundle: &NetworkBundle<YPoly>, trunc_y: usize) -> String {
    let series = bundle.names().map(|n| (n.to_string(), bundle.s(n).clone())).collect();
    match bundle_from_series(bundle.flavor, trunc_y, series) {
        Err(NetworkError::Corrupt(name)) => format!("; the solved series violate the reference rule for {name} ({})", rule_label(&name)),
        Err(e) => format!("; {e}"),
        Ok(_) => "; every reference rule holds".into(),
    }
}

fn rule_label(name: &str) -> &'static str {
    match name
        .trim_end_matches("bar")
        .trim_end_matches("star")
        .trim_end_matches("tilde")
        .trim_end_matches("hat")
    {
        "P" => "parallel rule P",
        "S" => "series rule S",
        "D" => "network rule D",
        _ => "rule",
    }
}

/// Exact residual identities.
pub fn residual_checks(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let g = "residuals";
    let t = cfg.trunc_x;
    let mut out = Vec::new();
    for y in [Rational::from(1), Rational::from(2), Rational::from((1, 3))] {
        let b = solve_networks_at(Flavor::SpanningTree, t, &y, Perturbation::None)?;
        let r = implicit_d_consistency(&b, &y, t)?;
        out.push(Check::new(
            g,
            format!("closed-form implicit equation for D at y = {y}"),
            r.is_zero(),
            format!("{} orders, first nonzero {:?}", r.orders, r.first_nonzero),
        ));
    }
    let store = SeriesStore::new(&cfg.cache_dir);
    let (tree, outcome) = cached_bundle(&store, Flavor::SpanningTree, t.saturating_sub(2), cfg.trunc_y)?;
    let b = assemble_b(&tree, &y_poly(cfg.trunc_y))?;
    let rep = check_rooting_identity(&tree, &b)?;
    let detail = rep
        .residuals
        .iter()
        .map(|(k, r)| format!("{}: first nonzero {:?}", k.name(), r.first_nonzero))
        .collect::<Vec<_>>()
        .join("; ");
    out.push(Check::new(
        g,
        format!("edge-rooting identity for B at ({t}, {})", cfg.trunc_y),
        rep.validated.is_some(),
        format!(
            "holds for {}; {detail}; cache {outcome:?}",
            rep.validated.map_or("no reading", |r| r.name())
        ),
    ));
    let kt = 40;
    let ks = solve_kernel_systems(kt)?;
    let sextic = PolynomialEquation::sextic().residual(&ks.c);
    out.push(Check::new(
        g,
        format!("sextic for c(u) to order {kt}"),
        sextic.is_none(),
        format!("first nonzero {sextic:?}"),
    ));
    let octic = PolynomialEquation::octic().residual(&ks.c0);
    out.push(Check::new(
        g,
        format!("octic for c0(u) to order {kt}"),
        octic.is_none(),
        format!("first nonzero {octic:?}"),
    ));
    let w = tree_function_w(t);
    let r = &w - &w.exp()?.mul_var().truncate(t);
    out.push(Check::new(
        g,
        format!("W = x exp(W) to order {t}"),
        r.is_zero(),
        format!("first nonzero {:?}", r.valuation()),
    ));
    Ok(out)
}

/// Lower and upper bounds of the excess-2 slice at every `n <= 30`.
pub fn sandwich_checks() -> Result<Vec<Check>, CliError> {
    let (tx, k) = (30, 2usize);
    let a = sptree::assembly::assemble_all(tx, tx + k)?;
    let ks = solve_kernel_systems(k + 2)?;
    let rep = resolve_normalisation(k, &a.c, &ks.gbar[k])?;
    let chosen = match rep.chosen {
        KernelNormalisation::EgfCoefficient => "[u^k] of the kernel series",
        KernelNormalisation::Labelled => "(2k)! [u^k] of the kernel series",
    };
    let nonzero = rep.rows.iter().filter(|r| !r.lower.is_zero()).count();
    let upper_fail: Vec<usize> = rep.rows.iter().filter(|r| !r.upper_holds()).map(|r| r.n).collect();
    Ok(vec![
        Check::new(
            "sandwich",
            "lower bound, excess 2",
            rep.lower_holds,
            format!("strict at all {nonzero} n <= {tx} with a nonzero bound; normalisation {chosen}"),
        ),
        Check::new(
            "sandwich",
            "upper bound, excess 2",
            upper_fail.is_empty(),
            format!(
                "violated at {} of {} n (last n = {:?}); exact/upper tends to {:.3}",
                upper_fail.len(),
                rep.rows.len(),
                rep.upper_violated_until,
                rep.upper_ratio_limit
            ),
        ),
    ])
}

/// Ledger rows as checks: mismatches fail, flagged rows are reported.
pub fn ledger_checks(rows: &[LedgerRow]) -> Vec<Check> {
    rows.iter()
        .map(|r| {
            let detail = format!("computed {} printed {} delta {:?}; {}", r.computed, r.printed, r.delta, r.note);
            let mut c = Check::new(&format!("ledger/{}", r.scope), r.name.clone(), r.status != Status::Mismatch, detail);
            if r.status == Status::FlaggedDiscrepancy {
                c.outcome = Outcome::Flagged;
            }
            c
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Perturb the network grammar, as a negative control.
    pub perturb: Perturbation,
    pub skip_ledger: bool,
}

/// Oracle equality at the configured caps, residual identities, the sandwich
/// bounds and the full constants ledger.
pub fn verify_all(cfg: &RunConfig, opts: VerifyOptions) -> Result<Report, CliError> {
    let mut report = Report::default();
    report.extend(network_checks(cfg.network_cap, cfg.threads, opts.perturb)?);
    let store = SeriesStore::new(&cfg.cache_dir);
    let cap = cfg.oracle_cap;
    let (a, outcomes) = assemble_cached(&store, cap, 2 * cap)?;
    for o in outcomes {
        if let CacheOutcome::Recomputed(why) = o {
            report.extend([Check {
                outcome: Outcome::Pass,
                ..Check::new("cache", "recomputed entry", true, why)
            }]);
        }
    }
    let two = solve_two_trees(cap.max(3))?;
    let censuses = simple_censuses(cap, cfg.threads)?;
    report.extend(simple_class_checks(&censuses, &a, &two));
    report.extend(residual_checks(cfg)?);
    report.extend(sandwich_checks()?);
    if !opts.skip_ledger {
        report.extend(ledger_checks(&crate::ledger::ledger(crate::ledger::Scope::All, cfg)?));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(name: &str) -> SeriesStore {
        let d = std::env::temp_dir().join(format!("sptree-verify-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        SeriesStore::new(d)
    }

    #[test]
    fn grid_reports_the_first_divergence() {
        let census = BTreeMap::from([((2, 3), 5u128), ((3, 4), 7)]);
        let ok = compare_grid(
            "X",
            1..=3,
            5,
            |n, m| Rational::from(census.get(&(n, m)).copied().unwrap_or(0)),
            &census,
        );
        assert_eq!(ok, Ok(2));
        let bad = compare_grid(
            "X",
            1..=3,
            5,
            |n, m| {
                Rational::from(if (n, m) == (3, 4) {
                    8
                } else {
                    census.get(&(n, m)).copied().unwrap_or(0)
                })
            },
            &census,
        );
        let d = bad.unwrap_err();
        assert_eq!((d.n, d.m, &d.census), (3, 4, &Integer::from(7)));
        let c = grid_check("g", "X", 1..=3, Err(d));
        assert!(c.detail.contains("(class X, n 3, m 4)"));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let store = scratch("bundle");
        let (fresh, o) = cached_bundle(&store, Flavor::Baseline, 3, 8).unwrap();
        assert_eq!(o, CacheOutcome::Stored);
        let (hit, o) = cached_bundle(&store, Flavor::Baseline, 3, 8).unwrap();
        assert_eq!(o, CacheOutcome::Hit);
        assert_eq!(hit.s("D"), fresh.s("D"));

        let key = SeriesStore::key(&cache_class(Flavor::Baseline, "S"), 3, Some(8), None);
        let path = store.dir().join(key);
        let text = std::fs::read_to_string(&path).unwrap();
        let line = text.lines().rfind(|l| l.ends_with("/1")).unwrap().to_string();
        let bumped = line.replace("/1", "1/1");
        std::fs::write(&path, text.replace(&line, &bumped)).unwrap();
        let (again, o) = cached_bundle(&store, Flavor::Baseline, 3, 8).unwrap();
        assert!(matches!(o, CacheOutcome::Recomputed(_)), "{o:?}");
        assert_eq!(again.s("S"), fresh.s("S"));
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn perturbed_parallel_rule_is_located() {
        let checks = network_checks(3, Some(1), Perturbation::ParallelRule).unwrap();
        let bad: Vec<_> = checks.iter().filter(|c| c.outcome == Outcome::Fail).collect();
        assert!(!bad.is_empty());
        assert!(bad[0].detail.contains("parallel rule P"), "{}", bad[0].detail);
        assert!(network_checks(3, Some(1), Perturbation::None)
            .unwrap()
            .iter()
            .all(|c| c.outcome == Outcome::Pass));
    }

    #[test]
    fn ledger_rows_map_to_outcomes() {
        let cfg = RunConfig::default();
        let rows = crate::ledger::ledger(crate::ledger::Scope::Networks, &cfg).unwrap();
        let checks = ledger_checks(&rows);
        assert_eq!(checks.len(), rows.len());
        assert!(checks.iter().any(|c| c.outcome == Outcome::Flagged && c.name == "Dbar_2"));
        assert!(checks.iter().all(|c| c.outcome != Outcome::Fail));
    }
}
