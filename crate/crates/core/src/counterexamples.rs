//! The named hard instances: the two-variable family on which the factor-2
//! guarantee is exactly tight, and the family showing that scaling the
//! max-sample threshold by any c ≠ 1 forfeits every constant approximation.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionError, DistributionSpec, ValidatedSpec};
use crate::exact::{exact_finite_support_performance, ExactError};
use crate::game::OrderPolicy;
use crate::rational::{
    format_rational, in_open_unit_interval, rat, rat_int, rational_to_f64, Rational,
};

#[derive(Debug, Clone, PartialEq)]
pub enum CounterexampleError {
    EpsilonOutOfRange { epsilon: String },
    NTooSmall { n: u32 },
    Distribution(DistributionError),
    Exact(ExactError),
}

impl fmt::Display for CounterexampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EpsilonOutOfRange { epsilon } => {
                write!(
                    f,
                    "epsilon must lie strictly between 0 and 1, got {epsilon}"
                )
            }
            Self::NTooSmall { n } => write!(f, "instance needs n >= 2, got {n}"),
            Self::Distribution(e) => write!(f, "{e}"),
            Self::Exact(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CounterexampleError {}

impl From<DistributionError> for CounterexampleError {
    fn from(e: DistributionError) -> Self {
        Self::Distribution(e)
    }
}

impl From<ExactError> for CounterexampleError {
    fn from(e: ExactError) -> Self {
        Self::Exact(e)
    }
}

/// An exact fact about an instance, with a note on where it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticFact {
    #[serde(with = "crate::rational::serde_repr")]
    pub value: Rational,
    pub note: String,
}

/// A named hard instance and its exactly known quantities. Every fact is
/// reproducible by [`exact_finite_support_performance`] or a stated formula.
#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub name: String,
    pub parameter: String,
    pub specs: Vec<ValidatedSpec>,
    pub facts: BTreeMap<String, AnalyticFact>,
}

impl NamedInstance {
    /// Wraps arbitrary finite-support specs with no pre-stated facts.
    pub fn custom(name: impl Into<String>, specs: Vec<ValidatedSpec>) -> Self {
        NamedInstance {
            name: name.into(),
            parameter: String::new(),
            specs,
            facts: BTreeMap::new(),
        }
    }
}

/// The tight two-variable family: a certain value of 1 next to `1/ε` with
/// probability `ε`. The prophet collects `2−ε`; no amount of distributional
/// knowledge gets the gambler above 1, and the single-sample rule earns
/// exactly `1−ε/2` against the worst-case order.
pub fn ksg_instance(epsilon: &Rational) -> Result<NamedInstance, CounterexampleError> {
    if !in_open_unit_interval(epsilon) {
        return Err(CounterexampleError::EpsilonOutOfRange {
            epsilon: format_rational(epsilon),
        });
    }
    let high = epsilon.recip();
    let specs = vec![
        DistributionSpec::constant(rat_int(1)).validate()?,
        DistributionSpec::two_point(high, epsilon.clone(), rat_int(0)).validate()?,
    ];
    let mut facts = BTreeMap::new();
    facts.insert(
        "prophet_expected_max".to_string(),
        AnalyticFact {
            value: rat_int(2) - epsilon,
            note: "pick the high value when it lands, the certain 1 otherwise".to_string(),
        },
    );
    facts.insert(
        "full_knowledge_gambler_value".to_string(),
        AnalyticFact {
            value: Rational::one(),
            note: "upper bound: either arm of the full-information game is worth 1".to_string(),
        },
    );
    facts.insert(
        "single_sample_alg_value".to_string(),
        AnalyticFact {
            value: Rational::one() - epsilon / rat_int(2),
            note: "exact enumeration under the worst-case order".to_string(),
        },
    );
    Ok(NamedInstance {
        name: "ksg".to_string(),
        parameter: format!("eps={}", format_rational(epsilon)),
        specs,
        facts,
    })
}

/// The scaled-threshold gap family: a certain 1 next to `2^n` with
/// probability `1/n`. With threshold `c·max-sample`, `c = 1/2`, the rule
/// collects the big reward only when it lands in both phases, losing a
/// factor of `n` against the expected maximum.
pub fn scaled_threshold_gap_instance(n: u32) -> Result<NamedInstance, CounterexampleError> {
    if n < 2 {
        return Err(CounterexampleError::NTooSmall { n });
    }
    let high = Rational::from_integer(BigInt::one() << n);
    let p = rat(1, i64::from(n));
    let specs = vec![
        DistributionSpec::constant(rat_int(1)).validate()?,
        DistributionSpec::two_point(high.clone(), p.clone(), rat_int(0)).validate()?,
    ];
    let mut facts = BTreeMap::new();
    let residue = Rational::one() - &p;
    facts.insert(
        "expected_max".to_string(),
        AnalyticFact {
            value: &high * &p + &residue,
            note: "2^n/n plus the certain 1 when the high value misses".to_string(),
        },
    );
    facts.insert(
        "alg_value_at_c_half".to_string(),
        AnalyticFact {
            value: &high * &p * &p + &residue,
            note: "the high value needs to land in both the sample and the real run".to_string(),
        },
    );
    Ok(NamedInstance {
        name: "scaled_threshold_gap".to_string(),
        parameter: format!("n={n}"),
        specs,
        facts,
    })
}

/// One exact measurement of an instance at scale `c`: the algorithm's
/// expected value, the expected maximum, and their ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub instance: String,
    pub parameter: String,
    #[serde(with = "crate::rational::serde_repr")]
    pub c: Rational,
    #[serde(with = "crate::rational::serde_repr")]
    pub expected_alg: Rational,
    #[serde(with = "crate::rational::serde_repr")]
    pub expected_max: Rational,
    #[serde(with = "crate::rational::serde_repr")]
    pub ratio: Rational,
    pub ratio_float: f64,
    /// Any pre-stated facts that this measurement can check, with outcomes.
    pub facts_consistent: bool,
}

impl GapReport {
    pub fn csv_header() -> &'static str {
        "instance,parameter,c,ratio_num,ratio_den,ratio_float"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.instance,
            self.parameter,
            format_rational(&self.c),
            self.ratio.numer(),
            self.ratio.denom(),
            self.ratio_float,
        )
    }
}

/// Measures `E[ALG(c)] / E[max]` exactly under the worst-case order and
/// checks the instance's stated facts where they apply: the expected max
/// always, the algorithm value when a fact for this `c` exists.
pub fn evaluate_counterexample(
    instance: &NamedInstance,
    c: &Rational,
) -> Result<GapReport, CounterexampleError> {
    let perf =
        exact_finite_support_performance(&instance.specs, c, &OrderPolicy::AlmightyWorstCase)?;
    let ratio = perf.ratio();

    let mut facts_consistent = true;
    if let Some(fact) = instance.facts.get("expected_max") {
        facts_consistent &= fact.value == perf.expected_max_reals;
    }
    if let Some(fact) = instance.facts.get("prophet_expected_max") {
        facts_consistent &= fact.value == perf.expected_max_reals;
    }
    if c == &Rational::one() {
        if let Some(fact) = instance.facts.get("single_sample_alg_value") {
            facts_consistent &= fact.value == perf.expected_alg;
        }
    }
    if c == &rat(1, 2) {
        if let Some(fact) = instance.facts.get("alg_value_at_c_half") {
            facts_consistent &= fact.value == perf.expected_alg;
        }
    }

    Ok(GapReport {
        instance: instance.name.clone(),
        parameter: instance.parameter.clone(),
        c: c.clone(),
        ratio_float: rational_to_f64(&ratio),
        expected_alg: perf.expected_alg,
        expected_max: perf.expected_max_reals,
        ratio,
        facts_consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ksg_facts() {
        let inst = ksg_instance(&rat(1, 100)).unwrap();
        assert_eq!(inst.facts["prophet_expected_max"].value, rat(199, 100));
        assert_eq!(inst.facts["full_knowledge_gambler_value"].value, rat_int(1));

        let inst = ksg_instance(&rat(1, 2)).unwrap();
        assert_eq!(inst.facts["prophet_expected_max"].value, rat(3, 2));
        assert_eq!(inst.facts["single_sample_alg_value"].value, rat(3, 4));
    }

    #[test]
    fn ksg_domain_edges() {
        assert!(ksg_instance(&rat_int(1)).is_err());
        assert!(ksg_instance(&rat_int(0)).is_err());
        assert!(ksg_instance(&rat(3, 2)).is_err());
        assert!(ksg_instance(&rat(999, 1000)).is_ok());
    }

    #[test]
    fn ksg_ratio_is_exactly_half_at_c_one() {
        for eps in [rat(1, 2), rat(1, 10), rat(1, 100), rat(7, 13)] {
            let inst = ksg_instance(&eps).unwrap();
            let report = evaluate_counterexample(&inst, &rat_int(1)).unwrap();
            assert_eq!(report.ratio, rat(1, 2), "eps = {eps}");
            assert_eq!(report.expected_alg, Rational::one() - &eps / rat_int(2));
            assert_eq!(report.expected_max, rat_int(2) - &eps);
            assert!(report.facts_consistent);
        }
    }

    #[test]
    fn scaled_gap_facts() {
        let inst = scaled_threshold_gap_instance(4).unwrap();
        assert_eq!(inst.facts["expected_max"].value, rat(19, 4));
        let inst = scaled_threshold_gap_instance(10).unwrap();
        assert_eq!(inst.facts["expected_max"].value, rat(1024, 10) + rat(9, 10));
        assert!(scaled_threshold_gap_instance(1).is_err());
    }

    #[test]
    fn scaled_gap_ratio_decreases_in_n() {
        let c = rat(1, 2);
        let mut last: Option<Rational> = None;
        for n in [4u32, 8, 12] {
            let inst = scaled_threshold_gap_instance(n).unwrap();
            let report = evaluate_counterexample(&inst, &c).unwrap();
            assert!(report.facts_consistent, "n = {n}");
            if let Some(prev) = last {
                assert!(report.ratio < prev, "ratio not decreasing at n = {n}");
            }
            last = Some(report.ratio);
        }
    }

    #[test]
    fn constant_alone_with_c_two_has_ratio_zero() {
        let inst = NamedInstance::custom(
            "constant",
            vec![DistributionSpec::constant(rat_int(1)).validate().unwrap()],
        );
        let report = evaluate_counterexample(&inst, &rat_int(2)).unwrap();
        assert_eq!(report.ratio, rat_int(0));
        assert_eq!(report.expected_max, rat_int(1));
    }

    #[test]
    fn gap_report_csv_row() {
        let inst = ksg_instance(&rat(1, 2)).unwrap();
        let report = evaluate_counterexample(&inst, &rat_int(1)).unwrap();
        assert_eq!(report.csv_row(), "ksg,eps=1/2,1,1,2,0.5");
    }
}
