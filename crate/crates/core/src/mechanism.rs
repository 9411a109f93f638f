//! The posted-price mechanism induced by the threshold rule: the max sample
//! is the posted price, bidders arrive in arbitrary order, and the first
//! value beating the price wins at the price. Lazy per-bidder sample
//! reserves are provably a no-op for this mechanism, and
//! [`apply_lazy_sample_reserves`] exists to assert exactly that. Revenue is
//! benchmarked against a second-price auction with the monopoly reserve,
//! which is the optimal auction for i.i.d. regular bidders.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::ValidatedSpec;
use crate::game::{compare, Comparison, Phase, TaggedValue};
use crate::montecarlo::{trial_rng, Estimate, PairedAccumulator};

/// `1/(4e)`: the MHR revenue guarantee constant.
pub const QUARTER_OVER_E: f64 = 0.25 / std::f64::consts::E;

#[derive(Debug, Clone, PartialEq)]
pub enum MechanismError {
    NoBidders,
    NoTrials,
    NotRegular { label: String },
    MismatchedOutcome { reason: &'static str },
}

impl fmt::Display for MechanismError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoBidders => write!(f, "auction needs at least one bidder"),
            Self::NoTrials => write!(f, "trial count must be at least 1"),
            Self::NotRegular { label } => {
                write!(
                    f,
                    "revenue benchmark requires a regular distribution, got {label:?}"
                )
            }
            Self::MismatchedOutcome { reason } => {
                write!(f, "outcome does not match the bidder list: {reason}")
            }
        }
    }
}

impl std::error::Error for MechanismError {}

/// One bidder: their distribution, the mechanism's sample from it, and the
/// realized value, drawn independently.
#[derive(Debug, Clone, PartialEq)]
pub struct BidderProfile<'a> {
    pub spec: &'a ValidatedSpec,
    pub sample: TaggedValue<f64>,
    pub value: TaggedValue<f64>,
}

/// Draws a sample and a value per spec, with fresh tags.
pub fn draw_bidders<'a>(
    specs: &'a [ValidatedSpec],
    rng: &mut impl rand::Rng,
) -> Vec<BidderProfile<'a>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let sample = TaggedValue {
                value: spec.sample(rng),
                tag: rng.gen(),
                dist_index: i,
                phase: Phase::Sample,
            };
            let value = TaggedValue {
                value: spec.sample(rng),
                tag: rng.gen(),
                dist_index: i,
                phase: Phase::Real,
            };
            BidderProfile {
                spec,
                sample,
                value,
            }
        })
        .collect()
}

/// Result of one mechanism run. No winner means zero price, welfare, and
/// revenue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub winner: Option<usize>,
    pub price: f64,
    pub welfare: f64,
    pub revenue: f64,
}

impl AuctionOutcome {
    fn no_sale() -> Self {
        AuctionOutcome {
            winner: None,
            price: 0.0,
            welfare: 0.0,
            revenue: 0.0,
        }
    }
}

/// The order-oblivious posted-price mechanism: price = compare-max of all
/// samples; the first bidder in arrival order whose value compare-exceeds
/// the price wins and pays the price.
pub fn run_opm(bidders: &[BidderProfile<'_>], order: &[usize]) -> AuctionOutcome {
    assert!(!bidders.is_empty(), "auction needs at least one bidder");
    let mut price = &bidders[0].sample;
    for b in &bidders[1..] {
        if compare(&b.sample, price).expect("distinct tags") == Comparison::Greater {
            price = &b.sample;
        }
    }
    for &i in order {
        let bidder = &bidders[i];
        if compare(&bidder.value, price).expect("distinct tags") == Comparison::Greater {
            return AuctionOutcome {
                winner: Some(i),
                price: price.value,
                welfare: bidder.value.value,
                revenue: price.value,
            };
        }
    }
    AuctionOutcome::no_sale()
}

/// Applies per-bidder lazy sample reserves to an OPM outcome: drop the
/// winner if their value fails their own sample, otherwise charge the
/// larger of the mechanism price and the reserve. Any value beating the
/// maximum sample beats its own sample, and the price already is the
/// maximum reserve, so this must return the input unchanged; callers assert
/// that.
pub fn apply_lazy_sample_reserves(
    outcome: &AuctionOutcome,
    bidders: &[BidderProfile<'_>],
) -> Result<AuctionOutcome, MechanismError> {
    let winner = match outcome.winner {
        None => {
            if outcome.price != 0.0 || outcome.welfare != 0.0 || outcome.revenue != 0.0 {
                return Err(MechanismError::MismatchedOutcome {
                    reason: "no-sale outcome with nonzero amounts",
                });
            }
            return Ok(outcome.clone());
        }
        Some(w) => w,
    };
    let bidder = bidders
        .get(winner)
        .ok_or(MechanismError::MismatchedOutcome {
            reason: "winner index out of range",
        })?;
    if outcome.welfare != bidder.value.value {
        return Err(MechanismError::MismatchedOutcome {
            reason: "welfare does not equal the winner's value",
        });
    }

    let reserve = &bidder.sample;
    if compare(&bidder.value, reserve).expect("distinct tags") == Comparison::Less {
        return Ok(AuctionOutcome::no_sale());
    }
    let price = outcome.price.max(reserve.value);
    Ok(AuctionOutcome {
        winner: Some(winner),
        price,
        welfare: bidder.value.value,
        revenue: price,
    })
}

/// Revenue of a second-price auction with reserve on realized values:
/// no sale below the reserve, otherwise the winner pays the larger of the
/// reserve and the second-highest value.
fn second_price_with_reserve_revenue(values: impl Iterator<Item = f64>, reserve: f64) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    if first < reserve {
        0.0
    } else {
        reserve.max(second)
    }
}

/// Monte Carlo expected revenue of the optimal auction for `n` i.i.d. draws
/// from a regular spec: second price with the monopoly reserve.
pub fn myerson_benchmark_revenue(
    spec: &ValidatedSpec,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<Estimate, MechanismError> {
    if n == 0 {
        return Err(MechanismError::NoBidders);
    }
    if trials == 0 {
        return Err(MechanismError::NoTrials);
    }
    let reserve = spec
        .monopoly_reserve()
        .map_err(|_| MechanismError::NotRegular {
            label: spec.label().to_string(),
        })?;
    let mut acc = crate::montecarlo::Accumulator::default();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let revenue =
            second_price_with_reserve_revenue((0..n).map(|_| spec.sample(&mut rng)), reserve);
        acc.push(revenue);
    }
    Ok(acc.estimate())
}

/// Welfare and revenue ratios of the OPM against the prophet welfare
/// benchmark (`E[max value]`) and the Myerson revenue benchmark, estimated
/// on paired draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub label: String,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub adversarial_order: bool,
    pub welfare_ratio: Estimate,
    pub revenue_ratio: Estimate,
    pub benchmarks: BenchmarkEstimates,
    pub pass: PassFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkEstimates {
    pub opm_welfare: Estimate,
    pub opm_revenue: Estimate,
    pub expected_max_value: Estimate,
    pub myerson_revenue: Estimate,
}

/// One-sided checks with three standard errors of slack; the revenue flags
/// are present only when the corresponding analytic property is known.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassFlags {
    pub welfare_at_least_half: bool,
    pub revenue_at_least_quarter_regular: Option<bool>,
    pub revenue_at_least_quarter_over_e_mhr: Option<bool>,
}

impl PassFlags {
    pub fn all_hold(&self) -> bool {
        self.welfare_at_least_half
            && self.revenue_at_least_quarter_regular.unwrap_or(true)
            && self.revenue_at_least_quarter_over_e_mhr.unwrap_or(true)
    }
}

impl RatioReport {
    pub fn csv_header() -> &'static str {
        "label,n,trials,seed,adversarial_order,welfare_ratio,welfare_ratio_stderr,\
         revenue_ratio,revenue_ratio_stderr,welfare_pass,revenue_regular_pass,revenue_mhr_pass"
    }

    pub fn csv_row(&self) -> String {
        let opt = |o: Option<bool>| o.map(|b| b.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.n,
            self.trials,
            self.seed,
            self.adversarial_order,
            self.welfare_ratio.mean,
            self.welfare_ratio.stderr,
            self.revenue_ratio.mean,
            self.revenue_ratio.stderr,
            self.pass.welfare_at_least_half,
            opt(self.pass.revenue_at_least_quarter_regular),
            opt(self.pass.revenue_at_least_quarter_over_e_mhr),
        )
    }
}

/// Runs the OPM on `n` i.i.d. bidders per trial, under the worst-case
/// ascending-value order when flagged, and reports welfare and revenue
/// ratios against the prophet and Myerson benchmarks.
pub fn ratio_experiment(
    spec: &ValidatedSpec,
    n: usize,
    trials: u64,
    seed: u64,
    adversarial_order: bool,
) -> Result<RatioReport, MechanismError> {
    if n == 0 {
        return Err(MechanismError::NoBidders);
    }
    if trials == 0 {
        return Err(MechanismError::NoTrials);
    }
    let reserve = spec
        .monopoly_reserve()
        .map_err(|_| MechanismError::NotRegular {
            label: spec.label().to_string(),
        })?;
    let specs = vec![spec.clone(); n];

    let mut welfare = PairedAccumulator::default();
    let mut revenue = PairedAccumulator::default();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let bidders = draw_bidders(&specs, &mut rng);
        let order: Vec<usize> = if adversarial_order {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                match compare(&bidders[a].value, &bidders[b].value).expect("distinct tags") {
                    Comparison::Less => std::cmp::Ordering::Less,
                    Comparison::Greater => std::cmp::Ordering::Greater,
                }
            });
            order
        } else {
            (0..n).collect()
        };
        let outcome = run_opm(&bidders, &order);
        let prophet = bidders
            .iter()
            .map(|b| b.value.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let myerson =
            second_price_with_reserve_revenue(bidders.iter().map(|b| b.value.value), reserve);
        welfare.push(outcome.welfare, prophet);
        revenue.push(outcome.revenue, myerson);
    }

    let welfare_ratio = welfare.ratio();
    let revenue_ratio = revenue.ratio();
    let pass = PassFlags {
        welfare_at_least_half: welfare_ratio.mean >= 0.5 - 3.0 * welfare_ratio.stderr,
        revenue_at_least_quarter_regular: spec
            .is_regular()
            .filter(|&r| r)
            .map(|_| revenue_ratio.mean >= 0.25 - 3.0 * revenue_ratio.stderr),
        revenue_at_least_quarter_over_e_mhr: spec
            .is_mhr()
            .filter(|&m| m)
            .map(|_| revenue_ratio.mean >= QUARTER_OVER_E - 3.0 * revenue_ratio.stderr),
    };

    Ok(RatioReport {
        label: spec.label().to_string(),
        n,
        trials,
        seed,
        adversarial_order,
        welfare_ratio,
        revenue_ratio,
        benchmarks: BenchmarkEstimates {
            opm_welfare: welfare.a(),
            opm_revenue: revenue.a(),
            expected_max_value: welfare.b(),
            myerson_revenue: revenue.b(),
        },
        pass,
    })
}
