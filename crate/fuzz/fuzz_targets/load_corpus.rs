#![no_main]

use asrd::synthlang::moprd_schema;
use asrd::{AnnotatedCorpus, ExtractOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let schema = moprd_schema();
    if let Ok(corpus) = AnnotatedCorpus::load(data, &schema) {
        assert_eq!(AnnotatedCorpus::load(&corpus.to_jsonl(), &schema).unwrap(), corpus);
        let _ = asrd::extract_rules(&corpus, &ExtractOptions::default());
    }
});
