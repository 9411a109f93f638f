//! Property suites for the library invariants: the tagged comparison is a
//! strict total order, the closed forms agree exactly with the enumeration
//! oracle on arbitrary tables, and the game operations are comparison-based
//! and adversary-dominant.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

use samplemax::config::parse_config;
use samplemax::distributions::DistributionSpec;
use samplemax::exact::{
    brute_force_over_assignments, closed_form_alg_value, closed_form_expected_max,
    find_repeat_structure, selection_probabilities, DrawEntry, DrawTable,
};
use samplemax::game::{
    arrival_order, compare, draw_phase_split, pick_threshold, run_threshold_rule, Comparison,
    OrderPolicy, Phase, PhaseSplit, TaggedValue,
};
use samplemax::mechanism::{apply_lazy_sample_reserves, draw_bidders, run_opm};
use samplemax::montecarlo::trial_rng;
use samplemax::rational::{is_dyadic, rat, Rational};
use samplemax::ValidatedSpec;

fn arb_rational() -> impl Strategy<Value = Rational> {
    (0i64..=60, 1i64..=8).prop_map(|(num, den)| rat(num, den))
}

fn arb_table(max_n: usize) -> impl Strategy<Value = DrawTable> {
    (1..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec((arb_rational(), arb_rational()), n),
            any::<u64>(),
        )
            .prop_map(|(pairs, seed)| {
                let values = pairs.into_iter().map(|(a, b)| [a, b]).collect();
                DrawTable::from_values(values, &mut trial_rng(seed, 0))
                    .expect("shuffled integer tags are distinct")
            })
    })
}

fn mixed_specs() -> Vec<ValidatedSpec> {
    [
        DistributionSpec::uniform_interval(0.0, 1.0),
        DistributionSpec::exponential(1.0),
        DistributionSpec::two_point(rat(8, 1), rat(1, 4), rat(0, 1)),
        DistributionSpec::constant(rat(1, 2)),
        DistributionSpec::truncated_pareto(1.5, 1.0, 50.0),
    ]
    .into_iter()
    .map(|s| s.validate().unwrap())
    .collect()
}

fn arb_permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle()
}

proptest! {
    // The heart of the exact module: on arbitrary rational tables the closed
    // forms, the per-entry probability profile, and the oracle tallies agree
    // with exact rational equality, and the instance-wise 2-approximation
    // and probability identities hold.
    #[test]
    fn closed_forms_equal_oracle_on_arbitrary_tables(table in arb_table(10)) {
        let rs = find_repeat_structure(&table);
        let closed_max = closed_form_expected_max(&rs);
        let closed_alg = closed_form_alg_value(&rs);
        let profile = selection_probabilities(&table);
        let oracle = brute_force_over_assignments(&table).unwrap();

        prop_assert_eq!(&closed_max, &oracle.expected_max);
        prop_assert_eq!(&closed_alg, &oracle.expected_worst_case_alg);
        prop_assert_eq!(&profile, &oracle.profile);
        prop_assert!(Rational::from_integer(BigInt::from(2)) * &closed_alg >= closed_max);
        prop_assert_eq!(profile.sum_max_real(), Rational::one());
        prop_assert!(profile.sum_selected() <= Rational::one());
        prop_assert!(profile.all_dyadic());
    }

    // Scaling all values by λ > 0 scales both closed forms by exactly λ and
    // leaves the probability profile untouched.
    #[test]
    fn positive_scaling_is_linear(table in arb_table(8), num in 1i64..=20, den in 1i64..=20) {
        let lambda = rat(num, den);
        let scaled = table.scaled(&lambda).unwrap();
        let rs = find_repeat_structure(&table);
        let rs_scaled = find_repeat_structure(&scaled);
        prop_assert_eq!(
            closed_form_expected_max(&rs_scaled),
            closed_form_expected_max(&rs) * &lambda
        );
        prop_assert_eq!(
            closed_form_alg_value(&rs_scaled),
            closed_form_alg_value(&rs) * &lambda
        );
        prop_assert_eq!(
            selection_probabilities(&scaled),
            selection_probabilities(&table)
        );
    }

    // A strictly increasing relabeling of the values (v² + 3v + 1 on
    // non-negative rationals) preserves the repeat structure's combinatorial
    // content: T membership, the above-counts, and the repeat identities.
    #[test]
    fn monotone_relabeling_preserves_structure(table in arb_table(8)) {
        let relabel = |v: &Rational| v * v + rat(3, 1) * v + Rational::one();
        let entries = table
            .entries()
            .map(|(_, e)| DrawEntry { value: relabel(&e.value), tag: e.tag.clone() })
            .collect::<Vec<_>>();
        let n = table.n();
        let relabeled = DrawTable::new(
            (0..n)
                .map(|i| [entries[i * 2].clone(), entries[i * 2 + 1].clone()])
                .collect(),
        )
        .unwrap();

        let rs = find_repeat_structure(&table);
        let rs_new = find_repeat_structure(&relabeled);
        let ids = |r: &samplemax::exact::RepeatStructure| {
            r.sorted().iter().map(|e| e.id).collect::<Vec<_>>()
        };
        prop_assert_eq!(ids(&rs), ids(&rs_new));
        prop_assert_eq!(rs.t_len(), rs_new.t_len());
        prop_assert_eq!(rs.above_counts(), rs_new.above_counts());
        prop_assert_eq!(rs.repeat_value().id, rs_new.repeat_value().id);
        prop_assert_eq!(rs.repeat_pair().id, rs_new.repeat_pair().id);
    }

    // Entries below the repeat entry can never be the max real or be
    // selected, in both the closed profile and the oracle tallies.
    #[test]
    fn entries_below_repeat_are_dead(table in arb_table(9)) {
        let rs = find_repeat_structure(&table);
        let profile = selection_probabilities(&table);
        let oracle = brute_force_over_assignments(&table).unwrap();
        for entry in &rs.sorted()[rs.t_len() + 1..] {
            prop_assert!(profile.get(entry.id).max_real.is_zero());
            prop_assert!(profile.get(entry.id).selected.is_zero());
            prop_assert!(oracle.profile.get(entry.id).max_real.is_zero());
            prop_assert!(oracle.profile.get(entry.id).selected.is_zero());
        }
        // and Y is dyadic per entry, including the live ones
        for (_, p) in profile.iter() {
            prop_assert!(is_dyadic(&p.max_real) && is_dyadic(&p.selected));
        }
    }

    // The tagged comparison sorts any tie-free collection into a strictly
    // increasing sequence, and is antisymmetric pair-wise.
    #[test]
    fn compare_is_a_strict_total_order(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = trial_rng(seed, 0);
        let mut values: Vec<TaggedValue<f64>> = (0..n)
            .map(|i| TaggedValue {
                // coarse grid forces value ties; tags break them
                value: (rng.gen_range(0..6) as f64) / 2.0,
                tag: rng.gen(),
                dist_index: i,
                phase: Phase::Real,
            })
            .collect();
        for a in &values {
            for b in &values {
                if a.dist_index == b.dist_index {
                    continue;
                }
                let ab = compare(a, b).unwrap();
                let ba = compare(b, a).unwrap();
                prop_assert_ne!(ab, ba);
            }
        }
        values.sort_by(|a, b| match compare(a, b).unwrap() {
            Comparison::Less => std::cmp::Ordering::Less,
            Comparison::Greater => std::cmp::Ordering::Greater,
        });
        for w in values.windows(2) {
            prop_assert_eq!(compare(&w[0], &w[1]).unwrap(), Comparison::Less);
        }
    }

    // Pointwise adversary dominance: every arrival order pays at least the
    // worst-case order, and whether anything is accepted at all does not
    // depend on the order.
    #[test]
    fn any_order_dominates_the_worst_case(seed in any::<u64>(), perm in arb_permutation(5)) {
        let specs = mixed_specs();
        let split = draw_phase_split(&specs, &mut trial_rng(seed, 1));
        let threshold = pick_threshold(&split);
        let worst = arrival_order(&split, &OrderPolicy::AlmightyWorstCase).unwrap();
        let worst_outcome = run_threshold_rule(&split, &threshold, &worst);
        let outcome = run_threshold_rule(&split, &threshold, &perm);
        prop_assert!(outcome.payoff() >= worst_outcome.payoff());
        prop_assert_eq!(outcome.accepted.is_some(), worst_outcome.accepted.is_some());
    }

    // Comparison-based invariance: scaling every value by a power of two
    // (exact in binary floating point) moves the payoff but not the identity
    // or position of the accepted value.
    #[test]
    fn increasing_transforms_keep_the_decision(seed in any::<u64>(), perm in arb_permutation(5), scale in prop::sample::select(vec![4.0f64, 0.125, 32.0])) {
        let specs = mixed_specs();
        let split = draw_phase_split(&specs, &mut trial_rng(seed, 2));
        let map = |tv: &TaggedValue<f64>| TaggedValue { value: tv.value * scale, ..*tv };
        let mapped = PhaseSplit {
            samples: split.samples.iter().map(map).collect(),
            reals: split.reals.iter().map(map).collect(),
        };
        let outcome = run_threshold_rule(&split, &pick_threshold(&split), &perm);
        let mapped_outcome = run_threshold_rule(&mapped, &pick_threshold(&mapped), &perm);
        prop_assert_eq!(
            outcome.accepted.as_ref().map(|tv| tv.dist_index),
            mapped_outcome.accepted.as_ref().map(|tv| tv.dist_index)
        );
        prop_assert_eq!(outcome.accepted_position, mapped_outcome.accepted_position);
    }

    // The accepted value always strictly compare-exceeds the threshold.
    #[test]
    fn accepted_value_exceeds_threshold(seed in any::<u64>()) {
        let specs = mixed_specs();
        let split = draw_phase_split(&specs, &mut trial_rng(seed, 3));
        let threshold = pick_threshold(&split);
        let order = arrival_order(&split, &OrderPolicy::AlmightyWorstCase).unwrap();
        let outcome = run_threshold_rule(&split, &threshold, &order);
        if let Some(accepted) = &outcome.accepted {
            prop_assert_eq!(compare(accepted, &threshold).unwrap(), Comparison::Greater);
        }
    }

    // Lazy sample reserves never change an OPM outcome.
    #[test]
    fn lazy_reserves_are_identity(seed in any::<u64>(), adversarial in any::<bool>()) {
        let specs = mixed_specs();
        let mut rng = trial_rng(seed, 4);
        let bidders = draw_bidders(&specs, &mut rng);
        let n = bidders.len();
        let order: Vec<usize> = if adversarial {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                match compare(&bidders[a].value, &bidders[b].value).unwrap() {
                    Comparison::Less => std::cmp::Ordering::Less,
                    Comparison::Greater => std::cmp::Ordering::Greater,
                }
            });
            order
        } else {
            (0..n).collect()
        };
        let outcome = run_opm(&bidders, &order);
        prop_assert!(outcome.revenue <= outcome.welfare);
        prop_assert_eq!(outcome.winner.is_some(), outcome.revenue > 0.0 || outcome.welfare > 0.0);
        let reserved = apply_lazy_sample_reserves(&outcome, &bidders).unwrap();
        prop_assert_eq!(reserved, outcome);
    }

    // Config parsing must reject or accept, never panic, on arbitrary input.
    #[test]
    fn config_parsing_never_panics(text in "\\PC*") {
        let _ = parse_config(&text);
    }

    #[test]
    fn config_parsing_never_panics_on_json_shaped_input(
        value in proptest::arbitrary::any::<i64>(),
        key in "[a-z_]{1,12}",
    ) {
        let _ = parse_config(&format!("{{\"command\":\"verify\",\"{key}\":{value}}}"));
    }
}
