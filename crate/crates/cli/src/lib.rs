//! Scenario-driven front end for the `memincl` solver: TOML scenarios,
//! run orchestration, CSV/JSON export and assumption checks.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundled;
pub mod commands;
pub mod output;
pub mod scenario;
