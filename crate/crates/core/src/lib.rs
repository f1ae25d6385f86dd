//! Exact dependence tests on contingency tables and the information
//! content of their p-values.
//!
//! The crate computes hypergeometric table probabilities, two-sided
//! Fisher exact tests for m x n tables (full enumeration with a
//! fixed-margin Monte Carlo fallback), chi-square comparisons, plug-in
//! Shannon mutual information, and the conversions between information
//! and tail probability, p = exp(-N * MI). Certificates check the
//! estimate MI ~ -ln(P_F)/N against explicit error bands, a meta module
//! pools studies, and a simulation lab regresses MI against -ln(p)/N on
//! random tables.

pub mod combinat;
pub mod equivalence;
mod error;
pub mod infomeasure;
pub mod meta;
pub mod simlab;
pub mod tables;

pub use error::{Error, Result, TableParseError};
pub use exact_tests::TestReport;
pub use infomeasure::Nats;
pub use tables::{CountTable, RelTable};
