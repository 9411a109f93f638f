#![no_main]
use libfuzzer_sys::fuzz_target;
use samplemax::exact::{
    brute_force_with_cap, closed_form_alg_value, closed_form_expected_max, find_repeat_structure,
    selection_probabilities,
};
use samplemax::DrawTable;

fuzz_target!(|data: &[u8]| {
    // deserialization enforces the table invariants; anything that parses
    // must analyze cleanly, and the closed forms must agree with the
    // enumeration oracle on small tables
    let Ok(table) = serde_json::from_slice::<DrawTable>(data) else {
        return;
    };
    let rs = find_repeat_structure(&table);
    let closed_max = closed_form_expected_max(&rs);
    let closed_alg = closed_form_alg_value(&rs);
    let _ = selection_probabilities(&table);
    if let Ok(oracle) = brute_force_with_cap(&table, 6) {
        assert_eq!(closed_max, oracle.expected_max);
        assert_eq!(closed_alg, oracle.expected_worst_case_alg);
    }
});
