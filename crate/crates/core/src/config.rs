//! Experiment configuration: a JSON document naming one command plus its
//! inputs, validated up front with diagnostics that name the offending
//! field. Configs are echoed verbatim into every report so a report alone
//! suffices to re-run its experiment.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionError, DistributionSpec, ValidatedSpec};
use crate::exact::DEFAULT_ASSIGNMENT_CAP;
use crate::game::OrderPolicy;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse(String),
    MissingField {
        field: &'static str,
        reason: String,
    },
    InvalidField {
        field: &'static str,
        reason: String,
    },
    Spec {
        index: usize,
        source: DistributionError,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse(msg) => write!(f, "config parse error: {msg}"),
            Self::MissingField { field, reason } => {
                write!(f, "config field \"{field}\" is required: {reason}")
            }
            Self::InvalidField { field, reason } => {
                write!(f, "config field \"{field}\" is invalid: {reason}")
            }
            Self::Spec { index, source } => write!(f, "specs[{index}]: {source}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Closed-form versus brute-force verification sweep over random tables.
    Verify,
    /// Monte Carlo run of the (optionally scaled) threshold rule.
    Simulate,
    /// Posted-price mechanism ratio experiment over a range of n.
    Mechanism,
    /// Exact gap measurements on a named hard instance.
    Counterexample,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::Mechanism => "mechanism",
            Command::Counterexample => "counterexample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// The tight two-variable family, parameterized by `epsilon`.
    Ksg,
    /// The scaled-threshold family, swept over `n_range`.
    ScaledGap,
    /// Whatever finite-support specs the config lists.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub specs: Vec<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: u64,
    /// Inclusive integer range, used as the table-size sweep for `verify`,
    /// the bidder-count sweep for `mechanism`, and the parameter sweep for
    /// the scaled-gap instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_range: Option<[usize; 2]>,
    #[serde(
        default,
        with = "crate::rational::serde_repr_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub c: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<OrderPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceKind>,
    #[serde(
        default,
        with = "crate::rational::serde_repr_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub epsilon: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default)]
    pub format: ReportFormat,
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// Cross-field validation; diagnostics name the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials > 0 && self.seed.is_none() {
            return Err(ConfigError::MissingField {
                field: "seed",
                reason: format!("trials = {} requires a seed", self.trials),
            });
        }
        if let Some([lo, hi]) = self.n_range {
            if lo < 1 || lo > hi {
                return Err(ConfigError::InvalidField {
                    field: "n_range",
                    reason: format!("[{lo}, {hi}] is not a non-empty range starting at 1"),
                });
            }
        }
        if let Some(c) = &self.c {
            if c <= &Rational::zero() {
                return Err(ConfigError::InvalidField {
                    field: "c",
                    reason: "threshold scale must be positive".to_string(),
                });
            }
        }
        self.validated_specs()?;

        match self.command {
            Command::Verify => {
                let [_, hi] = self.require_n_range("verify sweeps table sizes over n_range")?;
                if hi > DEFAULT_ASSIGNMENT_CAP {
                    return Err(ConfigError::InvalidField {
                        field: "n_range",
                        reason: format!(
                            "verify enumerates 2^n assignments; n must stay at or below {DEFAULT_ASSIGNMENT_CAP}"
                        ),
                    });
                }
                self.require_trials("verify checks `trials` random tables per n")?;
            }
            Command::Simulate => {
                self.require_specs("simulate draws from the configured specs")?;
                self.require_trials("simulate is a Monte Carlo run")?;
            }
            Command::Mechanism => {
                self.require_specs("mechanism needs the i.i.d. bidder distribution")?;
                if self.specs.len() != 1 {
                    return Err(ConfigError::InvalidField {
                        field: "specs",
                        reason: format!(
                            "mechanism experiments are i.i.d.; give exactly one spec, got {}",
                            self.specs.len()
                        ),
                    });
                }
                self.require_n_range("mechanism sweeps bidder counts over n_range")?;
                self.require_trials("mechanism is a Monte Carlo run")?;
            }
            Command::Counterexample => match self.instance {
                None => {
                    return Err(ConfigError::MissingField {
                        field: "instance",
                        reason: "counterexample needs one of: ksg, scaled_gap, custom".to_string(),
                    })
                }
                Some(InstanceKind::Ksg) => {
                    if self.epsilon.is_none() {
                        return Err(ConfigError::MissingField {
                            field: "epsilon",
                            reason: "the ksg instance is parameterized by epsilon".to_string(),
                        });
                    }
                }
                Some(InstanceKind::ScaledGap) => {
                    let [lo, hi] = self.require_n_range("scaled_gap sweeps n over n_range")?;
                    if lo < 2 {
                        return Err(ConfigError::InvalidField {
                            field: "n_range",
                            reason: "scaled_gap needs n >= 2".to_string(),
                        });
                    }
                    if hi > 64 {
                        return Err(ConfigError::InvalidField {
                            field: "n_range",
                            reason: "scaled_gap caps n at 64".to_string(),
                        });
                    }
                    if self.c.is_none() {
                        return Err(ConfigError::MissingField {
                            field: "c",
                            reason: "scaled_gap measures a scaled threshold; give c".to_string(),
                        });
                    }
                }
                Some(InstanceKind::Custom) => {
                    self.require_specs("a custom instance is built from the configured specs")?;
                }
            },
        }
        Ok(())
    }

    /// Validates every spec, reporting the first failure with its index.
    pub fn validated_specs(&self) -> Result<Vec<ValidatedSpec>, ConfigError> {
        self.specs
            .iter()
            .enumerate()
            .map(|(index, spec)| {
                spec.clone()
                    .validate()
                    .map_err(|source| ConfigError::Spec { index, source })
            })
            .collect()
    }

    fn require_n_range(&self, reason: &str) -> Result<[usize; 2], ConfigError> {
        self.n_range.ok_or_else(|| ConfigError::MissingField {
            field: "n_range",
            reason: reason.to_string(),
        })
    }

    fn require_trials(&self, reason: &str) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::MissingField {
                field: "trials",
                reason: reason.to_string(),
            });
        }
        Ok(())
    }

    fn require_specs(&self, reason: &str) -> Result<(), ConfigError> {
        if self.specs.is_empty() {
            return Err(ConfigError::MissingField {
                field: "specs",
                reason: reason.to_string(),
            });
        }
        Ok(())
    }
}
