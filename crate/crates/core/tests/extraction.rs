mod common;

use asrd::synthlang::{gen_compositional, moprd_schema, Codebook};
use asrd::{
    constant_positions, coverage_summary, extract_rules, global_constants, AnnotatedCorpus, Attribute, AttributeSchema,
    Error, ExtractOptions, Message, Sample,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{naive_extract, pattern, random_micro_corpus, shapes_corpus};

fn options(threshold: f64) -> ExtractOptions {
    ExtractOptions { threshold, ..Default::default() }
}

#[test]
fn shapes_outlier_only_matters_without_filtering() {
    let corpus = shapes_corpus();
    let filtered = extract_rules(&corpus, &ExtractOptions::default()).unwrap();
    assert!(filtered.global_constants.contains_position(4));

    // keeping the 8% variant frees position 4 and leaves it in no rule
    let raw = extract_rules(&corpus, &options(0.0)).unwrap();
    assert!(!raw.global_constants.contains_position(4));
    assert_eq!(raw.general_pattern(), "13-12-XX-10-YY-10-10-10-ZZ-AA");
    assert!(raw.rules.iter().all(|r| !r.pattern.contains_position(4)));
    assert_eq!(raw, naive_extract(&corpus, 0.0));
}

#[test]
fn coverage_of_the_empty_pattern_is_everything() {
    let corpus = shapes_corpus();
    let summary = coverage_summary(&corpus, &pattern(&[]));
    assert_eq!(summary.support, 100);
    assert!(summary.coverage.iter().all(|c| !c.informative));
}

#[test]
fn coverage_counts_samples_with_any_matching_message() {
    let corpus = shapes_corpus();
    // the outlier token appears in every sample before filtering
    assert_eq!(coverage_summary(&corpus, &pattern(&[(4, 3)])).support, 100);
    let filtered = corpus.filter_by_frequency(0.15).unwrap();
    let summary = coverage_summary(&filtered, &pattern(&[(4, 3)]));
    assert_eq!(summary.support, 0);
    assert!(summary.coverage.iter().all(|c| c.values.is_empty() && !c.informative));
}

#[test]
fn restricting_properties() {
    let corpus = shapes_corpus();
    let opts = ExtractOptions { properties: Some(vec!["all_fill".into(), "shape1".into()]), ..Default::default() };
    let table = extract_rules(&corpus, &opts).unwrap();
    let properties: Vec<&str> =
        table.rules.iter().flat_map(|r| r.evidence.iter().map(|e| e.property.as_str())).collect();
    assert!(properties.iter().all(|p| *p == "shape1" || *p == "all_fill"));
    // schema order is kept regardless of the order asked for
    assert_eq!(properties.iter().position(|p| *p == "shape1"), Some(0));

    let opts = ExtractOptions { properties: Some(vec!["colour".into()]), ..Default::default() };
    assert!(matches!(extract_rules(&corpus, &opts), Err(Error::UnknownReference(_))));
}

#[test]
fn error_cases() {
    let schema = AttributeSchema::new(vec![Attribute::new("a", ["x", "y"])], vec![]).unwrap();
    let empty = AnnotatedCorpus::from_records(schema.clone(), 2, 2, Vec::new()).unwrap();
    assert_eq!(extract_rules(&empty, &ExtractOptions::default()), Err(Error::EmptyCorpus));
    assert_eq!(global_constants(&empty), Err(Error::EmptyCorpus));

    let s = Sample::new(&schema, "s", [("a", "x")]).unwrap();
    let records = (0..10).map(|i| (s.clone(), Message::new(vec![i % 2, i / 2]), 1)).collect::<Vec<_>>();
    let flat = AnnotatedCorpus::from_records(schema, 5, 2, records).unwrap();
    assert!(matches!(extract_rules(&flat, &options(0.5)), Err(Error::EmptySample(_))));
    assert!(matches!(extract_rules(&flat, &options(1.5)), Err(Error::Config(_))));
    assert_eq!(constant_positions(std::iter::empty::<&Message>()), Err(Error::EmptyInput));
}

#[test]
fn one_token_per_attribute_rules() {
    let schema = moprd_schema();
    let book = Codebook::one_token_per_attribute(&schema);
    let table = extract_rules(&book.corpus(), &ExtractOptions::default()).unwrap();
    assert_eq!(table, book.ground_truth());
    assert!(table.global_constants.is_empty());
    // each attribute value owns exactly one single-position rule
    for attr in schema.attributes() {
        for value in &attr.domain {
            let hits: Vec<_> = table
                .rules
                .iter()
                .filter(|r| r.evidence.iter().any(|e| e.property == attr.name && &e.value == value))
                .collect();
            assert_eq!(hits.len(), 1);
            assert_eq!(hits[0].pattern.len(), 1);
        }
    }
}

#[test]
fn naive_oracle_on_many_micro_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let corpus = random_micro_corpus(&mut rng);
        for threshold in [0.0, 0.15, 0.25] {
            match extract_rules(&corpus, &options(threshold)) {
                Ok(table) => assert_eq!(table, naive_extract(&corpus, threshold)),
                Err(Error::EmptySample(_)) => assert!(threshold > 0.15),
                Err(e) => panic!("{e}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compositional_languages_recover_their_codebook(
        seed in any::<u64>(),
        len in 3usize..14,
        vocab in 6usize..30,
    ) {
        let (corpus, truth) = gen_compositional(&moprd_schema(), len, vocab, seed).unwrap();
        prop_assert_eq!(extract_rules(&corpus, &ExtractOptions::default()).unwrap(), truth);
    }

    #[test]
    fn rules_are_canonical(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = random_micro_corpus(&mut rng);
        let table = extract_rules(&corpus, &ExtractOptions::default()).unwrap();
        for pair in table.rules.windows(2) {
            prop_assert!(pair[0].pattern.canonical_cmp(&pair[1].pattern).is_lt());
        }
        for rule in &table.rules {
            prop_assert!(!rule.evidence.is_empty());
            prop_assert!(rule.pattern.positions().iter().all(|p| !table.global_constants.contains_position(*p)));
            prop_assert!(rule.support >= 1);
        }
    }

    #[test]
    fn constant_positions_agree_with_every_message(
        messages in prop::collection::vec(prop::collection::vec(0u32..3, 5), 1..8),
    ) {
        let messages: Vec<Message> = messages.into_iter().map(Message::new).collect();
        let fixed = constant_positions(&messages).unwrap();
        for p in 0..5 {
            let same = messages.iter().all(|m| m.tokens()[p] == messages[0].tokens()[p]);
            prop_assert_eq!(fixed.contains_position(p), same);
        }
        prop_assert!(messages.iter().all(|m| fixed.matches(m)));
    }
}
