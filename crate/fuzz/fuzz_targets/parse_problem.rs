//! Fuzzes the problem-file parser, the only code path that consumes
//! untrusted input. The parser must reject malformed text with an error —
//! never panic, hang, or overallocate (allocation is capped by
//! `MAX_ELEMENTS`).

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = softqp::io::parse_problem(text);
    }
});
