//! Single-sample prophet inequality toolkit.
//!
//! A gambler who sees just one sample from each value distribution can set
//! the highest sample as a threshold and accept the first real value that
//! beats it. This crate implements that rule, computes its exact performance
//! over the assignment-coin randomness, cross-validates every closed form
//! against brute-force enumeration, and runs the induced posted-price
//! mechanism against Myerson-style revenue benchmarks.

pub mod config;
pub mod counterexamples;
pub mod distributions;
pub mod driver;
pub mod exact;
pub mod game;
pub mod mechanism;
pub mod montecarlo;
pub mod rational;

pub use config::{parse_config, Command, ExperimentConfig, ReportFormat};
pub use distributions::{DistributionSpec, Family, ValidatedSpec};
pub use driver::{run_experiment, ExperimentOutput};
pub use exact::{DrawTable, VerificationReport};
pub use game::{OrderPolicy, PhaseSplit, TaggedValue};
pub use montecarlo::Estimate;
pub use rational::Rational;
