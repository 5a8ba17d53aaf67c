#![no_main]

use libfuzzer_sys::fuzz_target;
use sfs_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::parse(s) {
            let _ = cfg.to_args();
        }
    }
});
