#![no_main]

use ikm::cli::{parse_trace_csv, write_trace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|src: &str| {
    let Ok(parsed) = parse_trace_csv(src) else {
        return;
    };
    let mut buf = Vec::new();
    write_trace(&mut buf, "", &[], &parsed.rows).unwrap();
    let back = parse_trace_csv(std::str::from_utf8(&buf).unwrap()).expect("written trace parses");
    assert_eq!(back.rows.len(), parsed.rows.len());
    for (a, b) in back.rows.iter().zip(&parsed.rows) {
        assert_eq!(a.k, b.k);
        assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        assert_eq!(a.c_k.map(f64::to_bits), b.c_k.map(f64::to_bits));
        assert_eq!(a.rate_bound.map(f64::to_bits), b.rate_bound.map(f64::to_bits));
    }
});
