//! Exact-rational analysis of the max-sample threshold rule over the
//! randomness of the per-distribution assignment coins.
//!
//! Fix two pre-drawn values per distribution. A fair coin per distribution
//! decides which draw arrives as the sample and which as the real value.
//! Scanning all `2n` draws in descending order until a distribution index
//! repeats yields the repeat structure: the repeat entry, its partner, and
//! the prefix set `T` of strictly larger entries. Closed forms over that
//! structure give, exactly:
//!
//! - the expected maximum of the real values, and
//! - the expected payoff of the threshold rule when the adversary presents
//!   the reals smallest-first (the almighty worst case),
//!
//! both as dyadic-weighted sums. [`brute_force_over_assignments`] certifies
//! them by enumerating all `2^n` coin vectors and replaying the rule, with
//! no reference to the repeat structure.
//!
//! Everything here is exact: probabilities are dyadic rationals, equality
//! checks are rational equality, and there are no tolerances to tune. Ties
//! between equal values are excluded structurally by distinct rational
//! tags. Monte Carlo estimation lives elsewhere.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distributions::{SupportPoint, ValidatedSpec};
use crate::game::OrderPolicy;
use crate::rational::{half_pow, is_dyadic, Rational};

/// Largest `n` for the `2^n` assignment enumeration.
pub const DEFAULT_ASSIGNMENT_CAP: usize = 20;
/// Largest joint (sample, real) outcome count for finite-support enumeration.
pub const DEFAULT_OUTCOME_CAP: u128 = 10_000_000;
/// Guard on total tie-ordering work across one enumeration.
const TIE_WORK_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ExactError {
    EmptyTable,
    NegativeValue { dist: usize, draw: usize },
    DuplicateEntry { dist: usize, draw: usize },
    AssignmentCapExceeded { n: usize, cap: usize },
    OutcomeCapExceeded { outcomes: u128, cap: u128 },
    TieWorkCapExceeded { work: u128, cap: u128 },
    NotFiniteSupport { label: String },
    NonPositiveScale,
    ExplicitOrderNotPermutation { len: usize, n: usize },
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyTable => write!(f, "draw table must cover at least one distribution"),
            Self::NegativeValue { dist, draw } => {
                write!(f, "negative value at distribution {dist}, draw {draw}")
            }
            Self::DuplicateEntry { dist, draw } => write!(
                f,
                "duplicate (value, tag) pair at distribution {dist}, draw {draw}"
            ),
            Self::AssignmentCapExceeded { n, cap } => {
                write!(f, "n = {n} exceeds the 2^n enumeration cap of {cap}")
            }
            Self::OutcomeCapExceeded { outcomes, cap } => {
                write!(f, "{outcomes} joint outcomes exceed the cap of {cap}")
            }
            Self::TieWorkCapExceeded { work, cap } => {
                write!(f, "{work} tie-ordering evaluations exceed the cap of {cap}")
            }
            Self::NotFiniteSupport { label } => {
                write!(f, "distribution {label:?} does not have finite support")
            }
            Self::NonPositiveScale => write!(f, "threshold scale c must be positive"),
            Self::ExplicitOrderNotPermutation { len, n } => {
                write!(
                    f,
                    "explicit order of length {len} is not a permutation of 0..{n}"
                )
            }
        }
    }
}

impl std::error::Error for ExactError {}

/// Identifies one of the `2n` entries: `draw` is 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntryId {
    pub dist: usize,
    pub draw: usize,
}

impl EntryId {
    fn flat(&self) -> usize {
        self.dist * 2 + self.draw
    }
}

/// One pre-drawn value with its tie-break tag, both exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawEntry {
    #[serde(with = "crate::rational::serde_repr")]
    pub value: Rational,
    #[serde(with = "crate::rational::serde_repr")]
    pub tag: Rational,
}

impl DrawEntry {
    fn key(&self) -> (&Rational, &Rational) {
        (&self.value, &self.tag)
    }
}

/// The fixed two-draws-per-distribution table. All `2n` (value, tag) pairs
/// are pairwise distinct, so (value, tag) is a strict total order.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    draws: Vec<[DrawEntry; 2]>,
}

impl DrawTable {
    pub fn new(draws: Vec<[DrawEntry; 2]>) -> Result<Self, ExactError> {
        if draws.is_empty() {
            return Err(ExactError::EmptyTable);
        }
        let mut seen: Vec<(&Rational, &Rational)> = Vec::with_capacity(draws.len() * 2);
        for (dist, pair) in draws.iter().enumerate() {
            for (draw, entry) in pair.iter().enumerate() {
                if entry.value < Rational::zero() {
                    return Err(ExactError::NegativeValue { dist, draw });
                }
                if seen.contains(&entry.key()) {
                    return Err(ExactError::DuplicateEntry { dist, draw });
                }
                seen.push(entry.key());
            }
        }
        Ok(DrawTable { draws })
    }

    /// Builds a table from raw values, assigning distinct integer tags in a
    /// shuffled order so equal values get random tie-breaks.
    pub fn from_values(values: Vec<[Rational; 2]>, rng: &mut impl Rng) -> Result<Self, ExactError> {
        let mut tags: Vec<i64> = (0..values.len() as i64 * 2).collect();
        tags.shuffle(rng);
        let draws = values
            .into_iter()
            .enumerate()
            .map(|(i, [v1, v2])| {
                [
                    DrawEntry {
                        value: v1,
                        tag: Rational::from_integer(BigInt::from(tags[i * 2])),
                    },
                    DrawEntry {
                        value: v2,
                        tag: Rational::from_integer(BigInt::from(tags[i * 2 + 1])),
                    },
                ]
            })
            .collect();
        DrawTable::new(draws)
    }

    /// Uniformly random rational values `num/den` with `num ≤ max_num`,
    /// `den ≤ max_den`. Small ranges make value collisions common, which is
    /// exactly what the tag machinery must survive.
    pub fn random(n: usize, rng: &mut impl Rng, max_num: u64, max_den: u64) -> Self {
        let mut value = || {
            let num = rng.gen_range(0..=max_num);
            let den = rng.gen_range(1..=max_den);
            Rational::new(BigInt::from(num), BigInt::from(den))
        };
        let values: Vec<[Rational; 2]> = (0..n).map(|_| [value(), value()]).collect();
        DrawTable::from_values(values, rng).expect("distinct integer tags")
    }

    pub fn n(&self) -> usize {
        self.draws.len()
    }

    pub fn entry(&self, id: EntryId) -> &DrawEntry {
        &self.draws[id.dist][id.draw]
    }

    pub fn entries(&self) -> impl Iterator<Item = (EntryId, &DrawEntry)> {
        self.draws.iter().enumerate().flat_map(|(dist, pair)| {
            pair.iter()
                .enumerate()
                .map(move |(draw, entry)| (EntryId { dist, draw }, entry))
        })
    }

    /// The same table with every value multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: &Rational) -> Result<Self, ExactError> {
        if lambda <= &Rational::zero() {
            return Err(ExactError::NonPositiveScale);
        }
        let draws = self
            .draws
            .iter()
            .map(|pair| {
                [
                    DrawEntry {
                        value: &pair[0].value * lambda,
                        tag: pair[0].tag.clone(),
                    },
                    DrawEntry {
                        value: &pair[1].value * lambda,
                        tag: pair[1].tag.clone(),
                    },
                ]
            })
            .collect();
        DrawTable::new(draws)
    }
}

impl Serialize for DrawTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct TableJson<'a> {
            draws: &'a Vec<[DrawEntry; 2]>,
        }
        TableJson { draws: &self.draws }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DrawTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct TableJson {
            draws: Vec<[DrawEntry; 2]>,
        }
        let raw = TableJson::deserialize(deserializer)?;
        DrawTable::new(raw.draws).map_err(D::Error::custom)
    }
}

/// One entry in the descending sort of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedEntry {
    pub id: EntryId,
    pub value: Rational,
    pub tag: Rational,
}

/// The descending-scan artifacts: the full sort, the first repeated
/// distribution's entry (`repeat`), its larger partner, and the prefix `T`
/// of entries strictly above the repeat entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatStructure {
    sorted: Vec<SortedEntry>,
    repeat_pos: usize,
    repeat_pair_pos: usize,
}

impl RepeatStructure {
    /// All `2n` entries, descending under (value, tag).
    pub fn sorted(&self) -> &[SortedEntry] {
        &self.sorted
    }

    /// `|T|`: the number of entries strictly above the repeat entry.
    pub fn t_len(&self) -> usize {
        self.repeat_pos
    }

    pub fn t_entries(&self) -> &[SortedEntry] {
        &self.sorted[..self.repeat_pos]
    }

    pub fn repeat_value(&self) -> &SortedEntry {
        &self.sorted[self.repeat_pos]
    }

    pub fn repeat_pair(&self) -> &SortedEntry {
        &self.sorted[self.repeat_pair_pos]
    }

    /// For each entry of `T` in descending order, how many `T` entries are
    /// strictly larger. The descending sort makes this the position itself.
    pub fn above_counts(&self) -> Vec<usize> {
        (0..self.t_len()).collect()
    }
}

/// Scans the descending sort until a distribution index repeats.
/// A repeat always exists by position `n` (pigeonhole), so `|T| ≥ 1`.
pub fn find_repeat_structure(table: &DrawTable) -> RepeatStructure {
    let mut sorted: Vec<SortedEntry> = table
        .entries()
        .map(|(id, entry)| SortedEntry {
            id,
            value: entry.value.clone(),
            tag: entry.tag.clone(),
        })
        .collect();
    sorted.sort_by(|a, b| (&b.value, &b.tag).cmp(&(&a.value, &a.tag)));

    let mut first_seen: HashMap<usize, usize> = HashMap::new();
    for (pos, entry) in sorted.iter().enumerate() {
        if let Some(&pair_pos) = first_seen.get(&entry.id.dist) {
            return RepeatStructure {
                sorted,
                repeat_pos: pos,
                repeat_pair_pos: pair_pos,
            };
        }
        first_seen.insert(entry.id.dist, pos);
    }
    unreachable!("a repeated distribution index exists by pigeonhole")
}

/// Expected maximum of the reals over the assignment coins:
/// `Σ_{j<|T|} (1/2)^{j+1} v_j + (1/2)^{|T|} v_repeat`, exact.
pub fn closed_form_expected_max(rs: &RepeatStructure) -> Rational {
    let t = rs.t_len();
    let mut total = Rational::zero();
    for (j, entry) in rs.t_entries().iter().enumerate() {
        total += half_pow(j + 1) * &entry.value;
    }
    total + half_pow(t) * &rs.repeat_value().value
}

/// Expected payoff of the threshold rule under the worst-case (ascending)
/// arrival order: `Σ_{j<|T|−1} (1/2)^{j+2} v_j + (1/2)^{|T|} v_last`, exact.
/// Doubling this always dominates [`closed_form_expected_max`].
pub fn closed_form_alg_value(rs: &RepeatStructure) -> Rational {
    let t = rs.t_len();
    let entries = rs.t_entries();
    let mut total = Rational::zero();
    for (j, entry) in entries.iter().enumerate().take(t - 1) {
        total += half_pow(j + 2) * &entry.value;
    }
    total + half_pow(t) * &entries[t - 1].value
}

/// Per-entry probabilities: `max_real` is the chance of being the largest
/// real, `selected` the chance of being accepted under the worst-case order.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryProbabilities {
    pub max_real: Rational,
    pub selected: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityProfile {
    entries: Vec<[EntryProbabilities; 2]>,
}

impl ProbabilityProfile {
    fn zeroed(n: usize) -> Self {
        let zero = || EntryProbabilities {
            max_real: Rational::zero(),
            selected: Rational::zero(),
        };
        ProbabilityProfile {
            entries: (0..n).map(|_| [zero(), zero()]).collect(),
        }
    }

    pub fn get(&self, id: EntryId) -> &EntryProbabilities {
        &self.entries[id.dist][id.draw]
    }

    pub fn sum_max_real(&self) -> Rational {
        self.iter().map(|(_, p)| p.max_real.clone()).sum()
    }

    pub fn sum_selected(&self) -> Rational {
        self.iter().map(|(_, p)| p.selected.clone()).sum()
    }

    /// Every probability is zero or a power of one half.
    pub fn all_dyadic(&self) -> bool {
        self.iter()
            .all(|(_, p)| is_dyadic(&p.max_real) && is_dyadic(&p.selected))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntryId, &EntryProbabilities)> {
        self.entries.iter().enumerate().flat_map(|(dist, pair)| {
            pair.iter()
                .enumerate()
                .map(move |(draw, p)| (EntryId { dist, draw }, p))
        })
    }
}

/// Closed-form probability profile: for the `j`-th entry of `T` (descending),
/// `max_real = (1/2)^{j+1}` and, below the last entry of `T`,
/// `selected = (1/2)^{j+2}`; the repeat entry has `max_real = (1/2)^{|T|}`,
/// the last entry of `T` has `selected = (1/2)^{|T|}`; all others are zero.
pub fn selection_probabilities(table: &DrawTable) -> ProbabilityProfile {
    let rs = find_repeat_structure(table);
    let t = rs.t_len();
    let mut profile = ProbabilityProfile::zeroed(table.n());
    for (j, entry) in rs.t_entries().iter().enumerate() {
        let slot = &mut profile.entries[entry.id.dist][entry.id.draw];
        slot.max_real = half_pow(j + 1);
        slot.selected = if j + 1 == t {
            half_pow(t)
        } else {
            half_pow(j + 2)
        };
    }
    let repeat = rs.repeat_value();
    profile.entries[repeat.id.dist][repeat.id.draw].max_real = half_pow(t);
    profile
}

/// Output of the assignment-enumeration oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub expected_max: Rational,
    pub expected_worst_case_alg: Rational,
    pub profile: ProbabilityProfile,
}

/// Enumerates all `2^n` assignment vectors, replaying the threshold rule
/// directly for each one: the threshold is the largest sample, the reals
/// arrive ascending, and the first real above the threshold is accepted.
/// This is the independent check on the closed forms; it never looks at the
/// repeat structure.
pub fn brute_force_over_assignments(table: &DrawTable) -> Result<BruteForceResult, ExactError> {
    brute_force_with_cap(table, DEFAULT_ASSIGNMENT_CAP)
}

pub fn brute_force_with_cap(table: &DrawTable, cap: usize) -> Result<BruteForceResult, ExactError> {
    let n = table.n();
    if n > cap {
        return Err(ExactError::AssignmentCapExceeded { n, cap });
    }

    // Entries are totally ordered; replace rational comparisons in the hot
    // loop with integer ranks (rank 0 = largest entry).
    let mut ids: Vec<EntryId> = table.entries().map(|(id, _)| id).collect();
    ids.sort_by(|a, b| {
        let ea = table.entry(*a);
        let eb = table.entry(*b);
        (&eb.value, &eb.tag).cmp(&(&ea.value, &ea.tag))
    });
    let mut rank = vec![0usize; 2 * n];
    for (r, id) in ids.iter().enumerate() {
        rank[id.flat()] = r;
    }

    let mut count_max = vec![0u64; 2 * n];
    let mut count_selected = vec![0u64; 2 * n];

    for mask in 0u64..(1u64 << n) {
        // Coin i = 0 sends draw 0 to the samples and draw 1 to the reals.
        let mut threshold_rank = usize::MAX;
        let mut best_real_rank = usize::MAX;
        let mut best_real_flat = 0usize;
        for i in 0..n {
            let (sample_flat, real_flat) = if mask & (1 << i) == 0 {
                (i * 2, i * 2 + 1)
            } else {
                (i * 2 + 1, i * 2)
            };
            threshold_rank = threshold_rank.min(rank[sample_flat]);
            let r = rank[real_flat];
            if r < best_real_rank {
                best_real_rank = r;
                best_real_flat = real_flat;
            }
        }
        count_max[best_real_flat] += 1;

        // Worst-case arrival is ascending, so the accepted real is the
        // smallest one still above the threshold: the qualifying real with
        // the largest rank.
        let mut accepted: Option<usize> = None;
        let mut accepted_rank = 0usize;
        for i in 0..n {
            let real_flat = if mask & (1 << i) == 0 {
                i * 2 + 1
            } else {
                i * 2
            };
            let r = rank[real_flat];
            if r < threshold_rank && (accepted.is_none() || r > accepted_rank) {
                accepted = Some(real_flat);
                accepted_rank = r;
            }
        }
        if let Some(flat) = accepted {
            count_selected[flat] += 1;
        }
    }

    let weight = |count: u64| Rational::new(BigInt::from(count), BigInt::one() << n);
    let mut expected_max = Rational::zero();
    let mut expected_alg = Rational::zero();
    let mut profile = ProbabilityProfile::zeroed(n);
    for (id, entry) in table.entries() {
        let flat = id.flat();
        let y = weight(count_max[flat]);
        let z = weight(count_selected[flat]);
        expected_max += &y * &entry.value;
        expected_alg += &z * &entry.value;
        profile.entries[id.dist][id.draw] = EntryProbabilities {
            max_real: y,
            selected: z,
        };
    }

    Ok(BruteForceResult {
        expected_max,
        expected_worst_case_alg: expected_alg,
        profile,
    })
}

/// Side-by-side exact comparison of the closed forms against the oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: usize,
    #[serde(with = "crate::rational::serde_repr")]
    pub closed_expected_max: Rational,
    #[serde(with = "crate::rational::serde_repr")]
    pub closed_alg_value: Rational,
    #[serde(with = "crate::rational::serde_repr")]
    pub oracle_expected_max: Rational,
    #[serde(with = "crate::rational::serde_repr")]
    pub oracle_alg_value: Rational,
    pub expected_max_matches: bool,
    pub alg_value_matches: bool,
    pub profile_matches: bool,
    pub two_approximation_holds: bool,
    pub max_real_sums_to_one: bool,
    pub selected_sums_at_most_one: bool,
    pub all_probabilities_dyadic: bool,
    pub pass: bool,
}

/// Checks one table: closed forms equal the oracle exactly, the per-entry
/// profiles agree, twice the algorithm value covers the expected maximum,
/// and the probability identities hold. Failures are reported, not thrown.
pub fn verify_instance(table: &DrawTable) -> Result<VerificationReport, ExactError> {
    let rs = find_repeat_structure(table);
    let closed_expected_max = closed_form_expected_max(&rs);
    let closed_alg_value = closed_form_alg_value(&rs);
    let closed_profile = selection_probabilities(table);
    let oracle = brute_force_over_assignments(table)?;

    let expected_max_matches = closed_expected_max == oracle.expected_max;
    let alg_value_matches = closed_alg_value == oracle.expected_worst_case_alg;
    let profile_matches = closed_profile == oracle.profile;
    let two_approximation_holds =
        Rational::from_integer(BigInt::from(2)) * &closed_alg_value >= closed_expected_max;
    let max_real_sums_to_one = closed_profile.sum_max_real() == Rational::one();
    let selected_sums_at_most_one = closed_profile.sum_selected() <= Rational::one();
    let all_probabilities_dyadic = closed_profile.all_dyadic() && oracle.profile.all_dyadic();
    let pass = expected_max_matches
        && alg_value_matches
        && profile_matches
        && two_approximation_holds
        && max_real_sums_to_one
        && selected_sums_at_most_one
        && all_probabilities_dyadic;

    Ok(VerificationReport {
        n: table.n(),
        closed_expected_max,
        closed_alg_value,
        oracle_expected_max: oracle.expected_max,
        oracle_alg_value: oracle.expected_worst_case_alg,
        expected_max_matches,
        alg_value_matches,
        profile_matches,
        two_approximation_holds,
        max_real_sums_to_one,
        selected_sums_at_most_one,
        all_probabilities_dyadic,
        pass,
    })
}

/// Exact performance of the `c`-scaled threshold rule on finite-support
/// distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPerformance {
    pub expected_alg: Rational,
    pub expected_max_reals: Rational,
}

impl ExactPerformance {
    /// `E[ALG] / E[max reals]`, or zero when the benchmark is zero.
    pub fn ratio(&self) -> Rational {
        if self.expected_max_reals.is_zero() {
            Rational::zero()
        } else {
            &self.expected_alg / &self.expected_max_reals
        }
    }
}

/// Enumerates every joint (sample, real) outcome of finite-support specs
/// with its exact probability and runs the `c`-scaled threshold rule under
/// the given arrival policy. Ties between equal values are resolved by
/// averaging over every ordering of their tie-break tags, which reproduces
/// the smoothing distribution exactly.
pub fn exact_finite_support_performance(
    specs: &[ValidatedSpec],
    c: &Rational,
    adversary: &OrderPolicy,
) -> Result<ExactPerformance, ExactError> {
    exact_finite_support_with_cap(specs, c, adversary, DEFAULT_OUTCOME_CAP)
}

pub fn exact_finite_support_with_cap(
    specs: &[ValidatedSpec],
    c: &Rational,
    adversary: &OrderPolicy,
    outcome_cap: u128,
) -> Result<ExactPerformance, ExactError> {
    if specs.is_empty() {
        return Err(ExactError::EmptyTable);
    }
    if c <= &Rational::zero() {
        return Err(ExactError::NonPositiveScale);
    }
    let n = specs.len();
    let supports: Vec<&[SupportPoint]> = specs
        .iter()
        .map(|s| {
            s.support().ok_or_else(|| ExactError::NotFiniteSupport {
                label: s.label().to_string(),
            })
        })
        .collect::<Result<_, _>>()?;

    let mut outcomes: u128 = 1;
    for s in &supports {
        let size = s.len() as u128;
        outcomes = outcomes.saturating_mul(size * size);
        if outcomes > outcome_cap {
            return Err(ExactError::OutcomeCapExceeded {
                outcomes,
                cap: outcome_cap,
            });
        }
    }

    if let OrderPolicy::ExplicitPermutation(perm) = adversary {
        let mut seen = vec![false; n];
        let ok = perm.len() == n
            && perm.iter().all(|&i| {
                if i >= n || seen[i] {
                    false
                } else {
                    seen[i] = true;
                    true
                }
            });
        if !ok {
            return Err(ExactError::ExplicitOrderNotPermutation { len: perm.len(), n });
        }
    }

    // Odometer over 2n digits: digit i selects the sample atom of spec i,
    // digit n+i the real atom.
    let mut digits = vec![0usize; 2 * n];
    let sizes: Vec<usize> = supports.iter().map(|s| s.len()).collect();

    let mut expected_alg = Rational::zero();
    let mut expected_max = Rational::zero();
    let mut tie_work: u128 = 0;

    loop {
        let sample_atoms: Vec<&SupportPoint> = (0..n).map(|i| &supports[i][digits[i]]).collect();
        let real_atoms: Vec<&SupportPoint> = (0..n).map(|i| &supports[i][digits[n + i]]).collect();

        let mut prob = Rational::one();
        for atom in sample_atoms.iter().chain(real_atoms.iter()) {
            prob *= &atom.mass;
        }

        if !prob.is_zero() {
            let outcome = OutcomeValues {
                samples: sample_atoms.iter().map(|a| &a.value).collect(),
                reals: real_atoms.iter().map(|a| &a.value).collect(),
            };
            let budget = TIE_WORK_CAP.saturating_sub(tie_work);
            let (avg_payoff, work) = average_over_tag_orderings(&outcome, c, adversary, budget)?;
            tie_work += work;
            expected_alg += &prob * avg_payoff;
            let max_real = outcome.reals.iter().max().expect("at least one real value");
            expected_max += &prob * *max_real;
        }

        // advance odometer
        let mut pos = 0;
        loop {
            if pos == 2 * n {
                return Ok(ExactPerformance {
                    expected_alg,
                    expected_max_reals: expected_max,
                });
            }
            let spec = if pos < n { pos } else { pos - n };
            digits[pos] += 1;
            if digits[pos] < sizes[spec] {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

struct OutcomeValues<'a> {
    samples: Vec<&'a Rational>,
    reals: Vec<&'a Rational>,
}

/// Averages the rule's payoff over all tag orderings of equal values.
///
/// Positions `0..n` are samples, `n..2n` reals. Equal-value entries form a
/// group; each group's tags are a uniformly random relative order, and
/// distinct-value comparisons never consult tags, so groups are independent
/// — except that a scaled threshold `c·v_max` carries the max sample's tag
/// and may collide with a *different* value group. Colliding groups are
/// merged and permuted jointly, which keeps the average exact.
fn average_over_tag_orderings(
    outcome: &OutcomeValues<'_>,
    c: &Rational,
    adversary: &OrderPolicy,
    work_budget: u128,
) -> Result<(Rational, u128), ExactError> {
    let n = outcome.samples.len();
    let all: Vec<&Rational> = outcome
        .samples
        .iter()
        .chain(outcome.reals.iter())
        .copied()
        .collect();

    // Dense value classes, ascending.
    let mut classes: Vec<&Rational> = all.clone();
    classes.sort();
    classes.dedup();
    let class_of = |v: &Rational| classes.binary_search_by(|probe| (*probe).cmp(v)).ok();
    let entry_class: Vec<usize> = all
        .iter()
        .map(|&v| class_of(v).expect("value is in its own class list"))
        .collect();

    let max_sample_class = (0..n).map(|i| entry_class[i]).max().expect("n ≥ 1");
    let threshold_value = c * all[max_sample_class_position(&entry_class, n, max_sample_class)];
    // Per class: how the class value compares to the threshold value.
    let class_vs_threshold: Vec<std::cmp::Ordering> =
        classes.iter().map(|v| (*v).cmp(&threshold_value)).collect();
    let threshold_class = class_of(&threshold_value);

    // Union groups that must share one tag-rank space.
    let mut universe_of_class: Vec<usize> = (0..classes.len()).collect();
    if let Some(tc) = threshold_class {
        if tc != max_sample_class {
            universe_of_class[tc] = max_sample_class;
        }
    }
    let mut universes: HashMap<usize, Vec<usize>> = HashMap::new();
    for (pos, &cls) in entry_class.iter().enumerate() {
        universes
            .entry(universe_of_class[cls])
            .or_default()
            .push(pos);
    }
    let mut universe_list: Vec<Vec<usize>> = universes.into_values().collect();
    universe_list.sort();
    universe_list.retain(|u| u.len() > 1);

    let mut total_orderings: u128 = 1;
    for u in &universe_list {
        for k in 2..=u.len() as u128 {
            total_orderings = total_orderings.saturating_mul(k);
        }
    }
    if total_orderings > work_budget {
        return Err(ExactError::TieWorkCapExceeded {
            work: total_orderings,
            cap: TIE_WORK_CAP,
        });
    }

    // rank[pos]: tag order within the entry's universe (higher = larger tag)
    let mut rank = vec![0usize; 2 * n];
    let mut payoff_counts = vec![0u64; 2 * n];

    enumerate_orderings(&universe_list, 0, &mut rank, &mut |rank| {
        evaluate_ordering(
            n,
            &entry_class,
            rank,
            max_sample_class,
            &class_vs_threshold,
            threshold_class,
            adversary,
            &mut payoff_counts,
        );
    });

    let mut total = Rational::zero();
    for (pos, &count) in payoff_counts.iter().enumerate() {
        if count > 0 {
            total += Rational::from_integer(BigInt::from(count)) * all[pos];
        }
    }
    let avg = total / Rational::from_integer(BigInt::from(total_orderings as u64));
    Ok((avg, total_orderings))
}

/// Position (0-based, in `0..n`) of some sample whose class is the max
/// sample class; which one does not matter, the value is shared.
fn max_sample_class_position(entry_class: &[usize], n: usize, max_sample_class: usize) -> usize {
    (0..n)
        .find(|&i| entry_class[i] == max_sample_class)
        .expect("a sample attains the max sample class")
}

/// Visits every combination of per-universe tag orderings, writing the
/// current ranks into `rank` before each callback. Heap's algorithm drives
/// each universe's permutations.
fn enumerate_orderings(
    universes: &[Vec<usize>],
    idx: usize,
    rank: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    if idx == universes.len() {
        f(rank);
        return;
    }
    let members = &universes[idx];
    let k = members.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut counters = vec![0usize; k];

    for (order_pos, &member) in perm.iter().enumerate() {
        rank[members[member]] = order_pos;
    }
    enumerate_orderings(universes, idx + 1, rank, f);

    let mut i = 0;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            for (order_pos, &member) in perm.iter().enumerate() {
                rank[members[member]] = order_pos;
            }
            enumerate_orderings(universes, idx + 1, rank, f);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
}

/// Runs the rule for one fully resolved tag ordering and tallies the
/// accepted position.
#[allow(clippy::too_many_arguments)]
fn evaluate_ordering(
    n: usize,
    entry_class: &[usize],
    rank: &[usize],
    max_sample_class: usize,
    class_vs_threshold: &[std::cmp::Ordering],
    threshold_class: Option<usize>,
    adversary: &OrderPolicy,
    payoff_counts: &mut [u64],
) {
    // The realized max sample: among samples at the top class, the one with
    // the largest tag. Its tag travels with the (possibly scaled) threshold.
    let threshold_tag_rank = (0..n)
        .filter(|&i| entry_class[i] == max_sample_class)
        .map(|i| rank[i])
        .max()
        .expect("a sample attains the max sample class");

    let exceeds = |real_pos: usize| -> bool {
        let cls = entry_class[real_pos];
        match class_vs_threshold[cls] {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                debug_assert_eq!(threshold_class, Some(cls));
                rank[real_pos] > threshold_tag_rank
            }
        }
    };

    let scan = |order: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        order.map(|i| n + i).find(|&pos| exceeds(pos))
    };

    let accepted = match adversary {
        OrderPolicy::Indexed => scan(&mut (0..n)),
        OrderPolicy::ExplicitPermutation(perm) => scan(&mut perm.iter().copied()),
        OrderPolicy::AlmightyWorstCase => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| (entry_class[n + i], rank[n + i]));
            scan(&mut order.into_iter())
        }
    };
    if let Some(pos) = accepted {
        payoff_counts[pos] += 1;
    }
}
