#![no_main]

use libfuzzer_sys::fuzz_target;
use sfs_core::PointSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(set) = PointSet::from_csv_str(s) {
            // whatever parses must survive a round trip
            let again = PointSet::from_csv_str(&set.to_csv_string()).unwrap();
            assert_eq!(again.len(), set.len());
        }
    }
});
