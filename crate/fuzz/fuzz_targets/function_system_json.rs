#![no_main]

use libfuzzer_sys::fuzz_target;
use sfs_core::FunctionSystem;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = FunctionSystem::from_json_str(s);
    }
});
