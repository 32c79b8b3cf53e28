#![no_main]

use libfuzzer_sys::fuzz_target;
use primal_dpg::config::{parse_override, Command};

fuzz_target!(|data: &str| {
    let _ = parse_override(data);
    let _ = data.parse::<Command>();
});
