#![no_main]
use libfuzzer_sys::fuzz_target;
use samplemax::game::{arrival_order, pick_threshold, run_threshold_rule, OrderPolicy};
use samplemax::PhaseSplit;

fuzz_target!(|data: &[u8]| {
    // deserialization enforces the split invariants (distinct tagged pairs,
    // no NaN); a split that parses must run under every built-in policy
    let Ok(split) = serde_json::from_slice::<PhaseSplit<f64>>(data) else {
        return;
    };
    let threshold = pick_threshold(&split);
    for policy in [OrderPolicy::Indexed, OrderPolicy::AlmightyWorstCase] {
        let order = arrival_order(&split, &policy).expect("built-in policies always order");
        let outcome = run_threshold_rule(&split, &threshold, &order);
        if let Some(accepted) = &outcome.accepted {
            assert!(samplemax::game::compare(accepted, &threshold).is_ok());
        }
    }
});
