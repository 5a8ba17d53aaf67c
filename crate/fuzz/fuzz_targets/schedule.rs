#![no_main]

use libfuzzer_sys::fuzz_target;

// schedule descriptors, inline JSON or catalog references
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = sfs_core::descriptor::resolve_schedule_text(s);
    }
});
