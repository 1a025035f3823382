//! Engine for creativity-oriented LLM reasoning pipelines.
//!
//! The crate is organised around three pipelines — combinational (`cuot`),
//! exploratory (`euot`), and transformative (`tuot`) — that recombine,
//! expand, and re-constrain solution concepts drawn from analogous problems.
//! Everything an LLM would normally make nondeterministic is funnelled
//! through [`gateway`], which supports a live HTTP backend and a scripted
//! fixture backend so every pipeline is testable offline, byte for byte.
//!
//! Supporting modules: [`model`] holds the shared domain types, [`selection`]
//! the pure numeric kernels, [`eval`] the benchmark metrics, [`complexity`]
//! the search-space calculators, and [`record`] the replayable run records.

pub mod complexity;
pub mod eval;
pub mod gateway;
pub mod model;
mod parse;
pub mod pipeline;
pub mod record;
pub mod selection;
