#![no_main]

use dproj::xp::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        // A config that validated once must survive its own serialization.
        let again = serde_json::to_string(&cfg).expect("config serializes");
        let back = ExperimentConfig::from_json(&again).expect("serialized config parses");
        assert_eq!(back, cfg);
        let _ = cfg.model.resolve();
    }
});
