//! Declarative experiment runner.
//!
//! An experiment is a JSON config naming a kind (variance-sweep, clt-rate,
//! symmetric-regimes, kernel-checks), an observable, a doubling horizon grid,
//! the model parameters, a replicate count, and a master seed. Running it
//! produces an output bundle: CSV tables, an SVG plot where a curve makes
//! sense, and a JSON summary echoing the config, the per-criterion pass/fail
//! verdicts, and the provenance (operation and seed) of every table.
//!
//! Identical configs produce byte-identical bundles for any worker count;
//! all randomness flows through counter-derived streams seeded from the
//! config.

mod config;
mod plot;
mod runner;

pub use config::{ExperimentConfig, ExperimentKind};
pub use plot::emit_plot;
pub use runner::{run_experiment, run_experiment_in, CriterionResult, OutputBundle};
