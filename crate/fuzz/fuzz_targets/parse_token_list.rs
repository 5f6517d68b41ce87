#![no_main]

use asrd::Message;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(message) = Message::parse_list(data) {
        let _ = asrd::levenshtein(message.tokens(), &[0, 1, 2]);
    }
});
