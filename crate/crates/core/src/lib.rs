//! Player contribution to shot-ending actions.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dataset`] loads, validates, filters and synthesises action/player tables.
//! * [`xga`] builds feature matrices and fits the goal-probability learners
//!   (complementary log-log binary regression and gradient-boosted trees).
//! * [`coalition`] turns actions into team-scoped coalitions, restricted
//!   supports and a model-based worth table.
//! * [`shapley`] computes classical and restricted Shapley values.
//! * [`inference`] bootstraps the restricted values into PRS statistics.
//!
//! Replication loops run through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to a plain loop otherwise.
//! Every replication owns an RNG stream keyed by `(seed, index)`, so results
//! do not depend on the schedule.

pub mod coalition;
pub mod dataset;
pub mod exec;
pub mod inference;
pub mod rng;
pub mod shapley;
pub mod xga;

pub use exec::Execution;
