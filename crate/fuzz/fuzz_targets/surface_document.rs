#![no_main]

use libfuzzer_sys::fuzz_target;
use rflow_core::surface::SurfaceDocument;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = SurfaceDocument::from_json(text) {
        let _ = doc.build();
    }
});
