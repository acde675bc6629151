//! Metacognitive executive for budget-constrained multi-goal object
//! navigation, with a synthetic grid world and benchmark harness.
//!
//! * [`signal`]: rolling evidence statistics, stability, progress velocity.
//! * [`meta_state`]: potentiality, persistence gate and sufficiency.
//! * [`executive`]: per-step Persist / Switch / Abort / Commit controller.
//! * [`simworld`]: grid maps, evidence generator, reactive navigator.
//! * [`bench`]: episode suites, variant runs, metrics and sweeps.
//! * [`config`]: flat dotted-key run configuration.

pub mod bench;
pub mod config;
pub mod executive;
pub mod meta_state;
pub mod signal;
pub mod simworld;
