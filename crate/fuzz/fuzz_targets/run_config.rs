#![no_main]

use libfuzzer_sys::fuzz_target;
use primal_dpg::config::RunConfig;

// JSON document, then one override per line after the first NUL byte.
fuzz_target!(|data: &str| {
    let (json, rest) = data.split_once('\0').unwrap_or((data, ""));
    let overrides: Vec<String> = rest.lines().map(str::to_string).collect();
    if let Ok(cfg) = RunConfig::from_json_str(json, None, &overrides) {
        let _ = cfg.validate();
    }
});
