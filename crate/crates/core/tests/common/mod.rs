// Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use asrd::synthlang::{combination_samples, moprd_schema};
use asrd::{
    AnnotatedCorpus, Attribute, AttributeSchema, Coverage, HyperattributeDef, Message, Pattern, PropertyValue,
    RuleTable, Sample, SemanticRule, Token,
};
use rand::Rng;

pub const SHAPES_VOCAB: usize = 14;
pub const SHAPES_LEN: usize = 10;
const OUTLIER_POSITION: usize = 4;
const OUTLIER_TOKEN: Token = 3;

fn filled(shape: &str) -> bool {
    matches!(shape, "■" | "●")
}

/// Positions 2, 8 and 9 of the hand-built two-shape language; the other
/// positions spell 13-12-_-10-10-10-10-10.
pub fn shapes_variable_tokens(shape1: &str, shape2: &str) -> [Token; 3] {
    match (filled(shape1), filled(shape2)) {
        (false, false) => [12, 10, if shape1 == shape2 { 11 } else { 12 }],
        (true, true) => [10, 10, 10],
        _ => {
            let odd = matches!((shape1, shape2), ("○", "■") | ("■", "○"));
            [12, if odd { 11 } else { 10 }, 10]
        }
    }
}

pub fn shapes_message(shape1: &str, shape2: &str) -> Message {
    let [p2, p8, p9] = shapes_variable_tokens(shape1, shape2);
    Message::new(vec![13, 12, p2, 10, 10, 10, 10, 10, p8, p9])
}

/// Every combination speaks its codebook message 92 times and a
/// low-frequency variant 8 times.
pub fn shapes_corpus() -> AnnotatedCorpus {
    let schema = moprd_schema();
    let mut records = Vec::new();
    for sample in combination_samples(&schema) {
        let (s1, s2) = (&sample.values()[0], &sample.values()[1]);
        let main = shapes_message(s1, s2);
        let mut outlier = main.tokens().to_vec();
        outlier[OUTLIER_POSITION] = OUTLIER_TOKEN;
        records.push((sample.clone(), main, 92));
        records.push((sample, Message::new(outlier), 8));
    }
    AnnotatedCorpus::from_records(schema, SHAPES_VOCAB, SHAPES_LEN, records).unwrap()
}

/// 50 entities in 2 poses with a 5-way entity grouping: 100 combinations.
pub fn entity_pose_schema() -> AttributeSchema {
    let entities: Vec<String> = (0..50).map(|i| format!("e{i:02}")).collect();
    let cases: Vec<(String, String)> =
        entities.iter().enumerate().map(|(i, e)| (e.clone(), format!("g{}", i / 10))).collect();
    AttributeSchema::new(
        vec![Attribute::new("entity", entities), Attribute::new("pose", ["left", "right"])],
        vec![HyperattributeDef::value_map("group_entity", "entity", cases)],
    )
    .unwrap()
}

pub fn pattern(pairs: &[(usize, Token)]) -> Pattern {
    pairs.iter().copied().collect()
}

// ---------------------------------------------------------------------------
// Naive rule extraction: every step is a direct scan with no shared code
// from the library beyond the schema's property evaluation.

fn naive_filter(corpus: &AnnotatedCorpus, threshold: f64) -> Vec<(Vec<String>, Vec<Vec<Token>>)> {
    corpus
        .entries()
        .iter()
        .map(|e| {
            let total: u64 = e.messages().iter().map(|(_, c)| c).sum();
            let kept = e
                .messages()
                .iter()
                .filter(|(_, c)| *c as f64 / total as f64 >= threshold)
                .map(|(m, _)| m.tokens().to_vec())
                .collect();
            (e.sample().values().to_vec(), kept)
        })
        .collect()
}

fn naive_constant(messages: &[&Vec<Token>], length: usize) -> Vec<(usize, Token)> {
    (0..length).filter(|&p| messages.iter().all(|m| m[p] == messages[0][p])).map(|p| (p, messages[0][p])).collect()
}

pub fn naive_extract(corpus: &AnnotatedCorpus, threshold: f64) -> RuleTable {
    let schema = corpus.schema();
    let len = corpus.message_length();
    let samples = naive_filter(corpus, threshold);
    let all: Vec<&Vec<Token>> = samples.iter().flat_map(|(_, ms)| ms).collect();
    let global = naive_constant(&all, len);
    let global_positions: BTreeSet<usize> = global.iter().map(|(p, _)| *p).collect();
    let props: Vec<String> = schema.property_names().map(str::to_string).collect();

    type Found = (Vec<(usize, Token)>, Vec<PropertyValue>);
    let mut found: Vec<Found> = Vec::new();
    for prop in &props {
        for value in schema.property_domain(prop).unwrap() {
            let group: Vec<&Vec<Token>> = samples
                .iter()
                .filter(|(values, _)| &schema.eval_values(values, prop).unwrap() == value)
                .flat_map(|(_, ms)| ms)
                .collect();
            if group.is_empty() {
                continue;
            }
            let local: Vec<(usize, Token)> =
                naive_constant(&group, len).into_iter().filter(|(p, _)| !global_positions.contains(p)).collect();
            let ev = PropertyValue::new(prop.clone(), value.clone());
            match found.iter_mut().find(|(p, _)| *p == local) {
                Some((_, evs)) => evs.push(ev),
                None => found.push((local, vec![ev])),
            }
        }
    }

    let mut rules: Vec<SemanticRule> = found
        .into_iter()
        .map(|(pairs, evidence)| {
            let covered: Vec<&Vec<String>> = samples
                .iter()
                .filter(|(_, ms)| ms.iter().any(|m| pairs.iter().all(|&(p, t)| m[p] == t)))
                .map(|(v, _)| v)
                .collect();
            let coverage = props
                .iter()
                .map(|prop| {
                    let domain = schema.property_domain(prop).unwrap();
                    let values: Vec<String> = domain
                        .iter()
                        .filter(|d| covered.iter().any(|v| &&schema.eval_values(v, prop).unwrap() == d))
                        .cloned()
                        .collect();
                    let informative = !values.is_empty() && values.len() != domain.len();
                    Coverage { property: prop.clone(), values, informative }
                })
                .collect();
            SemanticRule { pattern: pattern(&pairs), evidence, coverage, support: covered.len() }
        })
        .collect();
    rules.sort_by_key(|r| {
        let pairs: Vec<(usize, Token)> = r.pattern.iter().collect();
        let positions: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let tokens: Vec<Token> = pairs.iter().map(|p| p.1).collect();
        (pairs.is_empty(), positions, tokens)
    });

    RuleTable {
        message_length: len,
        attributes: schema.attribute_names().map(str::to_string).collect(),
        hyperattributes: schema.hyperattribute_names().map(str::to_string).collect(),
        global_constants: pattern(&global),
        rules,
    }
}

// ---------------------------------------------------------------------------
// Metric oracles.

/// 1 + number of smaller values + half the number of equal others.
fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn brute_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (brute_ranks(x), brute_ranks(y));
    let n = x.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / vx.sqrt() / vy.sqrt())
}

/// Textbook recursion over suffixes, memoised.
pub fn recursive_levenshtein(a: &[Token], b: &[Token]) -> usize {
    fn go(a: &[Token], b: &[Token], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let d = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo).min(go(a, b, i, j + 1, memo)).min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn hamming(a: &[Token], b: &[Token]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

// ---------------------------------------------------------------------------
// Random micro-corpora.

/// One or two small attributes, plus a boolean and a relabelling
/// hyperattribute over the first.
pub fn random_micro_schema<R: Rng>(rng: &mut R) -> AttributeSchema {
    let n_attrs = rng.gen_range(1..=2);
    let attrs: Vec<Attribute> = (0..n_attrs)
        .map(|i| {
            let name = ["a", "b"][i];
            let size = rng.gen_range(1..=3);
            Attribute::new(name, (0..size).map(|v| format!("{name}{v}")))
        })
        .collect();
    let first = attrs[0].domain.clone();
    let hypers = vec![
        HyperattributeDef::boolean("h", &format!("a == {}", first[0])).unwrap(),
        HyperattributeDef::value_map(
            "m",
            "a",
            first.iter().enumerate().map(|(i, v)| (v.clone(), format!("k{}", i % 2))),
        ),
    ];
    AttributeSchema::new(attrs, hypers).unwrap()
}

/// At most 5 samples, 4 positions, vocabulary 4 and 4 messages per sample.
pub fn random_micro_corpus<R: Rng>(rng: &mut R) -> AnnotatedCorpus {
    let schema = random_micro_schema(rng);
    let len = rng.gen_range(1..=4);
    let vocab = rng.gen_range(1..=4);
    let n_samples = rng.gen_range(1..=5);
    let mut records = Vec::new();
    for i in 0..n_samples {
        let values: Vec<String> =
            schema.attributes().iter().map(|a| a.domain[rng.gen_range(0..a.domain.len())].clone()).collect();
        let sample = Sample::from_values(&schema, format!("x{i}"), values).unwrap();
        for _ in 0..rng.gen_range(1..=4) {
            let tokens = (0..len).map(|_| rng.gen_range(0..vocab) as Token).collect();
            records.push((sample.clone(), Message::new(tokens), rng.gen_range(1..=10)));
        }
    }
    AnnotatedCorpus::from_records(schema, vocab, len, records).unwrap()
}
