#![no_main]

use ikm::cli::{parse_config, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|src: &str| {
    let _ = parse_config(src);
    let Ok(cfg) = RunConfig::parse(src) else {
        return;
    };
    // the canonical rendering must parse back to the same rendering
    let rendered = cfg.render();
    let again = RunConfig::parse(&rendered).expect("rendered config parses");
    assert_eq!(again.render(), rendered);
});
