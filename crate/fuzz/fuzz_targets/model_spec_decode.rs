#![no_main]

use dproj::models::ModelSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<ModelSpec>(data) else {
        return;
    };
    let _ = spec.validate();
    let encoded = serde_json::to_string(&spec).expect("model serializes");
    let back: ModelSpec = serde_json::from_str(&encoded).expect("serialized model parses");
    assert_eq!(back, spec);
});
