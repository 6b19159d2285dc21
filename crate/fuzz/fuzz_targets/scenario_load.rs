#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Parsing and validation must never panic; errors are fine. The
        // base dir is irrelevant because no oracle file is opened here.
        let _ = prompt_games::scenario::scenario_from_str(text, std::path::Path::new("."));
    }
});
