use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rug::Rational;
use serde::Serialize;

use sptree::density::{density_grid, growth_vs_density};
use sptree::networks::Perturbation;
use sptree::series::cache::SeriesStore;
use sptree_cli::coeffs::{coefficients, Class, CoeffQuery};
use sptree_cli::config::{Format, RunConfig};
use sptree_cli::excess::excess_table;
use sptree_cli::expansion::{expansion, ExpansionClass};
use sptree_cli::ledger::{ledger, Scope};
use sptree_cli::report::{decimal, render, render_keyed, Meta};
use sptree_cli::verify::{verify_all, VerifyOptions};
use sptree_cli::CliError;
use sptree_oracle::{cubic_census, network_census, sp_census, CensusOptions, GraphClass};

/// Exact and asymptotic enumeration of series-parallel graphs weighted by
/// their spanning trees.
#[derive(Parser, Debug)]
#[command(name = "sptree", version)]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, env = "SPTREE_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, env = "SPTREE_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Bits of floating-point precision.
    #[arg(long, global = true)]
    prec: Option<u32>,
    #[arg(long, global = true)]
    trunc_x: Option<usize>,
    #[arg(long, global = true)]
    trunc_y: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact coefficients `n! [x^n]` of a class.
    Coeffs {
        #[arg(long, value_enum)]
        class: Class,
        /// Largest `n` (the excess for G and Gbar).
        #[arg(long)]
        n: usize,
        /// Edge weight as an integer or `p/q`; 1 when absent.
        #[arg(long, value_parser = parse_rational)]
        y: Option<Rational>,
        /// One row per edge count instead of evaluating at `y`.
        #[arg(long)]
        by_edges: bool,
        /// Excess `m - n` for Ck and Cbark.
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
    },
    /// Constants ledger against the printed values.
    Constants {
        #[arg(long, value_enum, default_value = "all")]
        scope: Scope,
    },
    /// Singular expansion coefficients of a class.
    Expansion {
        #[arg(long, value_enum)]
        class: ExpansionClass,
        #[arg(long, value_parser = parse_rational)]
        y: Option<Rational>,
    },
    /// Growth constant ratio against edge density.
    DensityCurve {
        #[arg(long, default_value_t = 1.08)]
        lo: f64,
        #[arg(long, default_value_t = 1.97)]
        hi: f64,
        #[arg(long, default_value_t = 90)]
        points: usize,
    },
    /// Kernel counts, their census and the fixed-excess ratio.
    Excess {
        #[arg(long, default_value_t = 3)]
        k_max: usize,
    },
    /// Brute-force census of one class.
    Oracle {
        #[arg(long, value_enum)]
        class: OracleClass,
        /// Vertices; internal vertices for networks; excess for cubic kernels.
        #[arg(long)]
        n: usize,
        /// Excess `m - n` for the excess class.
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
    },
    /// Every census comparison, residual identity, bound and ledger row.
    VerifyAll {
        /// Leave out the constants ledger.
        #[arg(long)]
        skip_ledger: bool,
        /// Solve the networks with a broken parallel rule.
        #[arg(long, hide = true)]
        perturb_fixture: bool,
    },
    /// Stored series.
    Cache {
        #[command(subcommand)]
        action: CacheCmd,
    },
}

#[derive(Subcommand, Debug)]
enum CacheCmd {
    List,
    Purge,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleClass {
    Connected,
    #[value(name = "2connected")]
    TwoConnected,
    #[value(name = "2tree")]
    TwoTree,
    /// Connected graphs with `m - n = k`.
    Excess,
    Network,
    Cubic,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| format!("{s:?} is not a rational: {e}"))
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::from_toml_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        c.format = f;
    }
    if cli.threads.is_some() {
        c.threads = cli.threads;
    }
    if let Some(d) = &cli.cache_dir {
        c.cache_dir = d.clone();
    }
    if let Some(p) = cli.prec {
        c.prec = p;
    }
    if let Some(t) = cli.trunc_x {
        c.trunc_x = t;
    }
    if let Some(t) = cli.trunc_y {
        c.trunc_y = t;
    }
    c.validate()?;
    Ok(c)
}

#[derive(Serialize)]
struct DensityRow {
    mu: f64,
    y_tree: String,
    y_base: String,
    growth: String,
    digits: usize,
    error: String,
}

#[derive(Serialize)]
struct CacheRow {
    key: String,
    bytes: u64,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let cfg = config(&cli)?;
    let meta = Meta::new(&cfg);
    let out = &mut io::stdout().lock();
    let pool = cfg.pool()?;
    match cli.cmd {
        Cmd::Coeffs { class, n, y, by_edges, k } => {
            let rows = coefficients(&CoeffQuery {
                class,
                n_max: n,
                y,
                by_edges,
                k,
            })?;
            render(out, cfg.format, &meta, "coeffs", &rows)?;
        }
        Cmd::Constants { scope } => {
            let rows = pool.install(|| ledger(scope, &cfg))?;
            match cfg.format {
                Format::Json => render_keyed(out, &meta, "constants", &rows, |r| r.name.clone())?,
                Format::Csv => render(out, cfg.format, &meta, "constants", &rows)?,
            }
        }
        Cmd::Expansion { class, y } => {
            let rows = expansion(class, y, cfg.prec)?;
            render(out, cfg.format, &meta, "expansion", &rows)?;
        }
        Cmd::DensityCurve { lo, hi, points } => {
            if !(lo > 1.0 && hi < 2.0 && lo <= hi && points >= 1) {
                return Err(CliError::Usage(format!(
                    "densities must satisfy 1 < lo <= hi < 2, got [{lo}, {hi}]"
                )));
            }
            let grid = density_grid(lo, hi, points);
            let pts = pool.install(|| growth_vs_density(&grid, cfg.prec));
            let digits = 20;
            let rows: Vec<DensityRow> = pts
                .into_iter()
                .map(|(mu, r)| match r {
                    Ok(p) => DensityRow {
                        mu,
                        y_tree: decimal(&p.y_tree, digits),
                        y_base: decimal(&p.y_base, digits),
                        growth: decimal(&p.growth, digits),
                        digits,
                        error: String::new(),
                    },
                    Err(e) => DensityRow {
                        mu,
                        y_tree: String::new(),
                        y_base: String::new(),
                        growth: String::new(),
                        digits,
                        error: e.to_string(),
                    },
                })
                .collect();
            render(out, cfg.format, &meta, "density-curve", &rows)?;
        }
        Cmd::Excess { k_max } => {
            let rows = excess_table(k_max, cfg.excess_cap)?;
            render(out, cfg.format, &meta, "excess", &rows)?;
        }
        Cmd::Oracle { class, n, k } => {
            let opts = CensusOptions {
                cap: cfg.oracle_cap,
                threads: cfg.threads,
            };
            match class {
                OracleClass::Network => render(
                    out,
                    cfg.format,
                    &meta,
                    "oracle-network",
                    &network_census(n, cfg.network_cap, cfg.threads)?,
                )?,
                OracleClass::Cubic => render(out, cfg.format, &meta, "oracle-cubic", &[cubic_census(n, cfg.excess_cap)?])?,
                _ => {
                    let gc = match class {
                        OracleClass::Connected => GraphClass::ConnectedSp,
                        OracleClass::TwoConnected => GraphClass::BiconnectedSp,
                        OracleClass::TwoTree => GraphClass::TwoTree,
                        _ => GraphClass::ExcessSp(k.ok_or_else(|| CliError::Usage("the excess class needs --k".into()))?),
                    };
                    let rows = sp_census(n, opts)?.rows(gc);
                    render(out, cfg.format, &meta, &format!("oracle-{}", gc.id()), &rows)?;
                }
            }
        }
        Cmd::VerifyAll {
            skip_ledger,
            perturb_fixture,
        } => {
            let perturb = if perturb_fixture {
                Perturbation::ParallelRule
            } else {
                Perturbation::None
            };
            let report = pool.install(|| verify_all(&cfg, VerifyOptions { perturb, skip_ledger }))?;
            render(out, cfg.format, &meta, "verify-all", &report.checks)?;
            out.flush()?;
            let err = &mut io::stderr().lock();
            for c in report.flagged() {
                writeln!(err, "flagged: {} {}: {}", c.group, c.name, c.detail)?;
            }
            let failures: Vec<_> = report.failures().collect();
            for c in &failures {
                writeln!(err, "FAIL: {} {}: {}", c.group, c.name, c.detail)?;
            }
            writeln!(
                err,
                "{} checks, {} failed, {} flagged",
                report.checks.len(),
                failures.len(),
                report.flagged().count()
            )?;
            if !failures.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Cache { action } => {
            let store = SeriesStore::new(&cfg.cache_dir);
            match action {
                CacheCmd::List => {
                    let rows: Vec<CacheRow> = store.list()?.into_iter().map(|(key, bytes)| CacheRow { key, bytes }).collect();
                    render(out, cfg.format, &meta, "cache", &rows)?;
                }
                CacheCmd::Purge => {
                    let n = store.purge()?;
                    writeln!(io::stderr(), "removed {n} entries from {}", cfg.cache_dir.display())?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
