#![no_main]
use libfuzzer_sys::fuzz_target;
use samplemax::DistributionSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<DistributionSpec>(data) else {
        return;
    };
    // a spec that validates must evaluate without panicking
    if let Ok(valid) = spec.validate() {
        let _ = valid.cdf(1.0);
        let _ = valid.cdf(f64::INFINITY);
        let _ = valid.quantile(0.0);
        let _ = valid.quantile(0.5);
        let _ = valid.quantile(1.0);
        let _ = valid.mean();
        let _ = valid.monopoly_reserve();
        let mut rng = samplemax::montecarlo::trial_rng(0, 0);
        let _ = valid.sample(&mut rng);
    }
});
