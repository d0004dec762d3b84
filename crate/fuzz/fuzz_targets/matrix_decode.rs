#![no_main]

use dproj::tensor::{decode_matrix, encode_matrix};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(op) = decode_matrix(text) {
        let encoded = encode_matrix(&op);
        let back = decode_matrix(&encoded).expect("encoded matrix decodes");
        assert_eq!(back, op);
    }
});
