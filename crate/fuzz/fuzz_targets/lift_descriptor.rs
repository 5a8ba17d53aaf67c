#![no_main]

use libfuzzer_sys::fuzz_target;
use sfs_core::sfs_bridge::LiftDescriptor;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(d) = LiftDescriptor::from_json_str(s) {
            let _ = d.build();
        }
    }
});
