#![no_main]

use asrd::AttributeSchema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(schema) = AttributeSchema::parse(data) {
        // accepted schemas must survive a render/parse cycle
        let text = schema.render();
        assert_eq!(AttributeSchema::parse(&text).unwrap(), schema);
    }
});
