#![no_main]

use libfuzzer_sys::fuzz_target;
use rflow_core::determinant::{selberg_zeta, LengthSpectrum};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Parsed spectra must also be safe to evaluate.
        if let Ok(spec) = LengthSpectrum::parse(text) {
            let _ = selberg_zeta(&spec, 2.0);
        }
    }
});
