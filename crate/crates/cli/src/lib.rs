//! Command-line surface of the spanning-tree enumeration toolkit: run
//! configuration, coefficient tables, the constants ledger, exact
//! cross-checks against brute-force censuses, and output rendering.

pub mod coeffs;
pub mod config;
pub mod excess;
pub mod expansion;
pub mod ledger;
pub mod report;
pub mod verify;

use sptree::assembly::AssemblyError;
use sptree::density::DensityError;
use sptree::fixed_excess::ExcessError;
use sptree::networks::NetworkError;
use sptree::numeric::NumericError;
use sptree::series::cache::CacheError;
use sptree::series::SeriesError;
use sptree::two_trees::TwoTreeError;
use sptree_oracle::OracleError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    TwoTree(#[from] TwoTreeError),
    #[error(transparent)]
    Excess(#[from] ExcessError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl CliError {
    /// 2 for usage and configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
