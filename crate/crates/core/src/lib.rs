//! Exact and asymptotic enumeration of series-parallel graphs weighted by
//! their spanning trees.
//!
//! The crate is organised bottom-up: exact series and grammar solving
//! ([`series`]), network grammars ([`networks`]), assembly of 2-connected and
//! connected classes ([`assembly`]), a high-precision numeric layer
//! ([`numeric`], [`asymptotics`]), and the special families of 2-trees
//! ([`two_trees`]) and graphs of fixed excess ([`fixed_excess`]), plus the
//! edge-density curves ([`density`]).

pub mod assembly;
pub mod asymptotics;
pub mod density;
pub mod fixed_excess;
pub mod networks;
pub mod numeric;
pub mod series;
pub mod two_trees;
