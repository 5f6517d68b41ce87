#![no_main]

use asrd::report::{parse_document, render};
use asrd::Format;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(doc) = parse_document(data) {
        for format in [Format::Structured, Format::Markdown, Format::Csv] {
            let _ = render(&doc, format);
        }
    }
});
