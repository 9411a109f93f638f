//! The max-sample threshold game: draw one sample and one real value per
//! distribution, set the highest sample as the threshold, and accept the
//! first arriving real value that beats it.
//!
//! Every value carries an independent tie-break tag, and every comparison —
//! including real-versus-threshold — goes through the tagged lexicographic
//! order. That makes the order strict and total, so "exceeds" is
//! unambiguous even on point masses.
//!
//! Operations are generic over the scalar: `f64` for Monte Carlo runs,
//! exact rationals for the enumeration oracles.

use std::fmt;
use std::ops::Mul;

use num_traits::Zero;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distributions::ValidatedSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum GameError {
    /// Two values with identical (value, tag) pairs were compared. Tags are
    /// continuous, so this signals a broken caller contract, not bad luck.
    ForbiddenTie,
    /// A comparison saw NaN.
    Unordered,
    ExplicitOrderNotPermutation {
        len: usize,
        n: usize,
    },
    EmptySplit,
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ForbiddenTie => write!(
                f,
                "identical (value, tag) pair: smoothing requires distinct tags"
            ),
            Self::Unordered => write!(f, "comparison involving NaN"),
            Self::ExplicitOrderNotPermutation { len, n } => {
                write!(
                    f,
                    "explicit order of length {len} is not a permutation of 0..{n}"
                )
            }
            Self::EmptySplit => write!(f, "phase split must cover at least one distribution"),
        }
    }
}

impl std::error::Error for GameError {}

/// Which half of the split a value landed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sample,
    Real,
}

/// A realized value plus its tie-break tag, source distribution, and phase.
/// The unit of every comparison in the game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedValue<T> {
    pub value: T,
    pub tag: T,
    pub dist_index: usize,
    pub phase: Phase,
}

/// Strict outcome of a tagged comparison; ties are contractually impossible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Less,
    Greater,
}

/// Lexicographic comparison on (value, tag). Errors on an exact tie.
pub fn compare<T: PartialOrd>(
    a: &TaggedValue<T>,
    b: &TaggedValue<T>,
) -> Result<Comparison, GameError> {
    match a.value.partial_cmp(&b.value) {
        Some(std::cmp::Ordering::Less) => Ok(Comparison::Less),
        Some(std::cmp::Ordering::Greater) => Ok(Comparison::Greater),
        Some(std::cmp::Ordering::Equal) => match a.tag.partial_cmp(&b.tag) {
            Some(std::cmp::Ordering::Less) => Ok(Comparison::Less),
            Some(std::cmp::Ordering::Greater) => Ok(Comparison::Greater),
            Some(std::cmp::Ordering::Equal) => Err(GameError::ForbiddenTie),
            None => Err(GameError::Unordered),
        },
        None => Err(GameError::Unordered),
    }
}

fn expect_compare<T: PartialOrd>(a: &TaggedValue<T>, b: &TaggedValue<T>) -> Comparison {
    compare(a, b).expect("split invariant: distinct (value, tag) pairs")
}

/// One sample and one real value per distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSplit<T> {
    pub samples: Vec<TaggedValue<T>>,
    pub reals: Vec<TaggedValue<T>>,
}

impl<T: PartialOrd> PhaseSplit<T> {
    /// Validates the split invariants: one sample and one real per index,
    /// consistent phases, and pairwise-distinct (value, tag) pairs.
    pub fn new(
        samples: Vec<TaggedValue<T>>,
        reals: Vec<TaggedValue<T>>,
    ) -> Result<Self, GameError> {
        if samples.is_empty() || samples.len() != reals.len() {
            return Err(GameError::EmptySplit);
        }
        for (i, tv) in samples.iter().enumerate() {
            if tv.dist_index != i || tv.phase != Phase::Sample {
                return Err(GameError::EmptySplit);
            }
        }
        for (i, tv) in reals.iter().enumerate() {
            if tv.dist_index != i || tv.phase != Phase::Real {
                return Err(GameError::EmptySplit);
            }
        }
        let all: Vec<&TaggedValue<T>> = samples.iter().chain(reals.iter()).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                compare(all[i], all[j])?;
            }
        }
        Ok(PhaseSplit { samples, reals })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

/// How the adversary orders the arriving real values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    /// Indexed order: the offline adversary with the identity arrangement.
    Indexed,
    /// A fixed permutation chosen before any realization.
    ExplicitPermutation(Vec<usize>),
    /// The almighty adversary: sees all realizations and presents the reals
    /// smallest to largest, the worst case for a threshold rule.
    AlmightyWorstCase,
}

/// Result of one run of the stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<T> {
    pub accepted: Option<TaggedValue<T>>,
    /// Arrival position (0-based) of the accepted value, if any.
    pub accepted_position: Option<usize>,
    pub threshold: TaggedValue<T>,
}

impl<T: Clone + Zero> RunOutcome<T> {
    /// The gambler's payoff: the accepted value, or zero if nothing qualified.
    pub fn payoff(&self) -> T {
        self.accepted
            .as_ref()
            .map(|tv| tv.value.clone())
            .unwrap_or_else(T::zero)
    }
}

/// Draws one sample and one real per spec, each with a fresh tag from the
/// gambler's private stream.
pub fn draw_phase_split(specs: &[ValidatedSpec], rng: &mut impl Rng) -> PhaseSplit<f64> {
    assert!(!specs.is_empty(), "need at least one distribution");
    let mut samples = Vec::with_capacity(specs.len());
    let mut reals = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let value = spec.sample(rng);
        let tag = rng.gen();
        samples.push(TaggedValue {
            value,
            tag,
            dist_index: i,
            phase: Phase::Sample,
        });
        let value = spec.sample(rng);
        let tag = rng.gen();
        reals.push(TaggedValue {
            value,
            tag,
            dist_index: i,
            phase: Phase::Real,
        });
    }
    PhaseSplit { samples, reals }
}

/// The compare-maximum of the samples: the threshold `v_h`.
pub fn pick_threshold<T: PartialOrd + Clone>(split: &PhaseSplit<T>) -> TaggedValue<T> {
    assert!(!split.samples.is_empty(), "split must be nonempty");
    let mut best = &split.samples[0];
    for tv in &split.samples[1..] {
        if expect_compare(tv, best) == Comparison::Greater {
            best = tv;
        }
    }
    best.clone()
}

/// Arrival order of the reals under the given policy.
pub fn arrival_order<T: PartialOrd>(
    split: &PhaseSplit<T>,
    policy: &OrderPolicy,
) -> Result<Vec<usize>, GameError> {
    let n = split.n();
    match policy {
        OrderPolicy::Indexed => Ok((0..n).collect()),
        OrderPolicy::ExplicitPermutation(perm) => {
            let mut seen = vec![false; n];
            if perm.len() != n {
                return Err(GameError::ExplicitOrderNotPermutation { len: perm.len(), n });
            }
            for &i in perm {
                if i >= n || seen[i] {
                    return Err(GameError::ExplicitOrderNotPermutation { len: perm.len(), n });
                }
                seen[i] = true;
            }
            Ok(perm.clone())
        }
        OrderPolicy::AlmightyWorstCase => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(
                |&a, &b| match expect_compare(&split.reals[a], &split.reals[b]) {
                    Comparison::Less => std::cmp::Ordering::Less,
                    Comparison::Greater => std::cmp::Ordering::Greater,
                },
            );
            Ok(order)
        }
    }
}

/// Scans the reals in arrival order and accepts the first one that
/// compare-exceeds the threshold. No acceptance means payoff zero.
pub fn run_threshold_rule<T: PartialOrd + Clone>(
    split: &PhaseSplit<T>,
    threshold: &TaggedValue<T>,
    order: &[usize],
) -> RunOutcome<T> {
    for (position, &i) in order.iter().enumerate() {
        let real = &split.reals[i];
        if expect_compare(real, threshold) == Comparison::Greater {
            return RunOutcome {
                accepted: Some(real.clone()),
                accepted_position: Some(position),
                threshold: threshold.clone(),
            };
        }
    }
    RunOutcome {
        accepted: None,
        accepted_position: None,
        threshold: threshold.clone(),
    }
}

/// Threshold rule with a `c`-scaled threshold value. The scaled threshold
/// reuses the max sample's tag; `c = 1` reproduces `run_threshold_rule`
/// bit-exactly.
pub fn run_scaled_threshold_rule<T>(split: &PhaseSplit<T>, c: &T, order: &[usize]) -> RunOutcome<T>
where
    T: PartialOrd + Clone + Mul<Output = T>,
{
    let max_sample = pick_threshold(split);
    let threshold = TaggedValue {
        value: c.clone() * max_sample.value.clone(),
        tag: max_sample.tag,
        dist_index: max_sample.dist_index,
        phase: Phase::Sample,
    };
    run_threshold_rule(split, &threshold, order)
}

// JSON form for golden tests: {"samples":[{"v":…,"tag":…,"i":…}],"reals":[…]}.

#[derive(Serialize, Deserialize)]
struct EntryJson {
    v: f64,
    tag: f64,
    i: usize,
}

impl Serialize for PhaseSplit<f64> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct SplitJson {
            samples: Vec<EntryJson>,
            reals: Vec<EntryJson>,
        }
        let to_json = |v: &[TaggedValue<f64>]| {
            v.iter()
                .map(|tv| EntryJson {
                    v: tv.value,
                    tag: tv.tag,
                    i: tv.dist_index,
                })
                .collect()
        };
        SplitJson {
            samples: to_json(&self.samples),
            reals: to_json(&self.reals),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PhaseSplit<f64> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct SplitJson {
            samples: Vec<EntryJson>,
            reals: Vec<EntryJson>,
        }
        let raw = SplitJson::deserialize(deserializer)?;
        let from_json = |v: Vec<EntryJson>, phase: Phase| {
            v.into_iter()
                .map(|e| TaggedValue {
                    value: e.v,
                    tag: e.tag,
                    dist_index: e.i,
                    phase,
                })
                .collect()
        };
        PhaseSplit::new(
            from_json(raw.samples, Phase::Sample),
            from_json(raw.reals, Phase::Real),
        )
        .map_err(D::Error::custom)
    }
}
