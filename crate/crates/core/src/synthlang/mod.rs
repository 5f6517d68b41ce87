//! Synthetic languages with known semantics, used as ground truth for rule
//! extraction and the metrics, plus a non-neural referential game.

mod game;

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asrd::{sort_rules, table_for, Coverage, Pattern, PropertyValue, RuleTable, SemanticRule};
use crate::corpus::{gcd, AnnotatedCorpus, Message, Token};
use crate::error::{Error, Result};
use crate::schema::{AttributeSchema, Sample};

pub use game::{run_lewis_game, run_population_game, GameConfig, Language};

const MOPRD_SCHEMA: &str = include_str!("../../data/moprd.schema.json");

/// The two-shape positional-relationship schema: `shape1`, `shape2`,
/// `relationship` and the hyperattributes `fill1`, `fill2`, `all_fill`,
/// `all_empty`, `aligned`.
pub fn moprd_schema() -> AttributeSchema {
    AttributeSchema::parse(MOPRD_SCHEMA).expect("bundled schema is valid")
}

/// Positions owned by one attribute and the token each value writes there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeCode {
    /// Ascending.
    pub positions: Vec<usize>,
    /// `codes[value_index][k]` is written at `positions[k]`.
    pub codes: Vec<Vec<Token>>,
}

/// A compositional sample-to-message map: fixed positions plus one
/// disjoint position block per attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    schema: AttributeSchema,
    message_length: usize,
    vocab_size: usize,
    fixed: Pattern,
    encoders: Vec<AttributeCode>,
}

impl Codebook {
    pub fn new(
        schema: AttributeSchema,
        message_length: usize,
        vocab_size: usize,
        fixed: Pattern,
        encoders: Vec<AttributeCode>,
    ) -> Result<Self> {
        if encoders.len() != schema.attributes().len() {
            return Err(Error::Config("one encoder per attribute is required".into()));
        }
        let mut owner = vec![false; message_length];
        let mut claim = |p: usize| -> Result<()> {
            match owner.get_mut(p) {
                Some(slot) if !*slot => {
                    *slot = true;
                    Ok(())
                }
                Some(_) => Err(Error::Config(format!("position {p} is claimed twice"))),
                None => Err(Error::Config(format!("position {p} is beyond message length {message_length}"))),
            }
        };
        for (p, t) in fixed.iter() {
            claim(p)?;
            if t as usize >= vocab_size {
                return Err(Error::TokenOutOfRange { token: t as u64, vocab_size });
            }
        }
        for (enc, attr) in encoders.iter().zip(schema.attributes()) {
            if enc.positions.is_empty() || enc.codes.len() != attr.domain.len() {
                return Err(Error::Config(format!("encoder for `{}` is malformed", attr.name)));
            }
            for &p in &enc.positions {
                claim(p)?;
            }
            let mut distinct = HashSet::new();
            for code in &enc.codes {
                if code.len() != enc.positions.len() {
                    return Err(Error::Config(format!("code length mismatch for `{}`", attr.name)));
                }
                if let Some(&t) = code.iter().find(|&&t| t as usize >= vocab_size) {
                    return Err(Error::TokenOutOfRange { token: t as u64, vocab_size });
                }
                if !distinct.insert(code) {
                    return Err(Error::Config(format!("two values of `{}` share a code", attr.name)));
                }
            }
        }
        if let Some(p) = owner.iter().position(|o| !o) {
            return Err(Error::Config(format!("position {p} has no owner")));
        }
        Ok(Codebook { schema, message_length, vocab_size, fixed, encoders })
    }

    /// Random disjoint position blocks (at least one position per
    /// attribute, leftover positions fixed or added to a block) with an
    /// injective value-to-token map at every block position.
    pub fn random_compositional(
        schema: &AttributeSchema,
        message_length: usize,
        vocab_size: usize,
        seed: u64,
    ) -> Result<Self> {
        let n_attrs = schema.attributes().len();
        let max_domain = schema.attributes().iter().map(|a| a.domain.len()).max().unwrap_or(0);
        if message_length < n_attrs {
            return Err(Error::Capacity(format!(
                "{n_attrs} attributes need at least {n_attrs} positions, got {message_length}"
            )));
        }
        if vocab_size < max_domain + 1 {
            return Err(Error::Capacity(format!(
                "vocabulary of {vocab_size} is below the required {}",
                max_domain + 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions: Vec<usize> = (0..message_length).collect();
        positions.shuffle(&mut rng);
        let mut blocks: Vec<Vec<usize>> = positions[..n_attrs].iter().map(|&p| vec![p]).collect();
        let mut fixed = Pattern::new();
        for &p in &positions[n_attrs..] {
            if rng.gen_bool(0.5) {
                fixed.insert(p, rng.gen_range(0..vocab_size) as Token);
            } else {
                let a = rng.gen_range(0..n_attrs);
                blocks[a].push(p);
            }
        }
        let encoders = blocks
            .into_iter()
            .zip(schema.attributes())
            .map(|(mut block, attr)| {
                block.sort_unstable();
                let columns: Vec<Vec<Token>> = block
                    .iter()
                    .map(|_| {
                        rand::seq::index::sample(&mut rng, vocab_size, attr.domain.len())
                            .into_iter()
                            .map(|t| t as Token)
                            .collect()
                    })
                    .collect();
                let codes = (0..attr.domain.len()).map(|v| columns.iter().map(|col| col[v]).collect()).collect();
                AttributeCode { positions: block, codes }
            })
            .collect();
        Codebook::new(schema.clone(), message_length, vocab_size, fixed, encoders)
    }

    /// Attribute `i` owns position `i`; its values use a token range
    /// disjoint from every other attribute's.
    pub fn one_token_per_attribute(schema: &AttributeSchema) -> Self {
        let mut offset = 0;
        let encoders = schema
            .attributes()
            .iter()
            .enumerate()
            .map(|(i, attr)| {
                let codes = (0..attr.domain.len()).map(|v| vec![(offset + v) as Token]).collect();
                offset += attr.domain.len();
                AttributeCode { positions: vec![i], codes }
            })
            .collect();
        Codebook::new(schema.clone(), schema.attributes().len(), offset, Pattern::new(), encoders)
            .expect("construction is valid by design")
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn message_length(&self) -> usize {
        self.message_length
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn fixed(&self) -> &Pattern {
        &self.fixed
    }

    pub fn encoders(&self) -> &[AttributeCode] {
        &self.encoders
    }

    /// Message for an attribute assignment given in schema order.
    pub fn encode(&self, values: &[String]) -> Result<Message> {
        let mut tokens = vec![0; self.message_length];
        for (p, t) in self.fixed.iter() {
            tokens[p] = t;
        }
        for ((enc, attr), value) in self.encoders.iter().zip(self.schema.attributes()).zip(values) {
            let vi = value_index(&attr.domain, value)?;
            for (&p, &t) in enc.positions.iter().zip(&enc.codes[vi]) {
                tokens[p] = t;
            }
        }
        Ok(Message::new(tokens))
    }

    /// One sample per attribute combination, each with a single message.
    pub fn corpus(&self) -> AnnotatedCorpus {
        let records = combination_samples(&self.schema)
            .into_iter()
            .map(|s| {
                let m = self.encode(s.values()).expect("combination values are in domain");
                (s, m, 1)
            })
            .collect::<Vec<_>>();
        AnnotatedCorpus::from_records(self.schema.clone(), self.vocab_size, self.message_length, records)
            .expect("codebook messages are valid")
    }

    /// The rule table implied by the codebook's structure.
    ///
    /// A block position is constant over a group iff every value of the
    /// owning attribute present in the group writes the same token there;
    /// it is global iff that holds over the whole domain. Coverage follows
    /// from decoding each pattern back to the attribute values it admits.
    pub fn ground_truth(&self) -> RuleTable {
        let schema = &self.schema;
        let combos = schema.combinations();
        let indices: Vec<Vec<usize>> = combos
            .iter()
            .map(|c| c.iter().zip(schema.attributes()).map(|(v, a)| value_index(&a.domain, v).unwrap()).collect())
            .collect();

        let block_constant = |enc: &AttributeCode, k: usize, present: &[usize]| -> Option<Token> {
            let t = enc.codes[present[0]][k];
            present.iter().all(|&v| enc.codes[v][k] == t).then_some(t)
        };

        let mut global = self.fixed.clone();
        for (enc, attr) in self.encoders.iter().zip(schema.attributes()) {
            let all: Vec<usize> = (0..attr.domain.len()).collect();
            for (k, &p) in enc.positions.iter().enumerate() {
                if let Some(t) = block_constant(enc, k, &all) {
                    global.insert(p, t);
                }
            }
        }

        let mut merged: Vec<(Pattern, Vec<PropertyValue>)> = Vec::new();
        for property in schema.property_names() {
            let evaluated: Vec<String> = combos.iter().map(|c| schema.eval_values(c, property).unwrap()).collect();
            for value in schema.property_domain(property).unwrap() {
                let group: Vec<&Vec<usize>> =
                    indices.iter().zip(&evaluated).filter(|(_, v)| *v == value).map(|(i, _)| i).collect();
                if group.is_empty() {
                    continue;
                }
                let mut pattern = Pattern::new();
                for (a, enc) in self.encoders.iter().enumerate() {
                    let mut present: Vec<usize> = group.iter().map(|idx| idx[a]).collect();
                    present.sort_unstable();
                    present.dedup();
                    for (k, &p) in enc.positions.iter().enumerate() {
                        if global.contains_position(p) {
                            continue;
                        }
                        if let Some(t) = block_constant(enc, k, &present) {
                            pattern.insert(p, t);
                        }
                    }
                }
                let evidence = PropertyValue::new(property, value.clone());
                match merged.iter_mut().find(|(p, _)| *p == pattern) {
                    Some((_, ev)) => ev.push(evidence),
                    None => merged.push((pattern, vec![evidence])),
                }
            }
        }

        let owner: HashMap<usize, (usize, usize)> = self
            .encoders
            .iter()
            .enumerate()
            .flat_map(|(a, enc)| enc.positions.iter().enumerate().map(move |(k, &p)| (p, (a, k))))
            .collect();
        let mut rules: Vec<SemanticRule> = merged
            .into_iter()
            .map(|(pattern, evidence)| {
                let covered: Vec<&Vec<String>> = combos
                    .iter()
                    .zip(&indices)
                    .filter(|(_, idx)| {
                        pattern.iter().all(|(p, t)| {
                            let (a, k) = owner[&p];
                            self.encoders[a].codes[idx[a]][k] == t
                        })
                    })
                    .map(|(c, _)| c)
                    .collect();
                let coverage = schema
                    .property_names()
                    .map(|q| {
                        let domain = schema.property_domain(q).unwrap();
                        let seen: HashSet<String> = covered.iter().map(|c| schema.eval_values(c, q).unwrap()).collect();
                        let values: Vec<String> = domain.iter().filter(|v| seen.contains(*v)).cloned().collect();
                        let informative = !values.is_empty() && values.len() < domain.len();
                        Coverage { property: q.to_string(), values, informative }
                    })
                    .collect();
                SemanticRule { pattern, evidence, coverage, support: covered.len() }
            })
            .collect();
        sort_rules(&mut rules);
        table_for(schema, self.message_length, global, rules)
    }
}

fn value_index(domain: &[String], value: &str) -> Result<usize> {
    domain
        .iter()
        .position(|v| v == value)
        .ok_or_else(|| Error::AttributeMismatch(format!("`{value}` is not in the attribute domain")))
}

/// One sample per combination, ids zero-padded so that id order matches
/// enumeration order.
pub fn combination_samples(schema: &AttributeSchema) -> Vec<Sample> {
    let combos = schema.combinations();
    let width = combos.len().saturating_sub(1).to_string().len();
    combos
        .into_iter()
        .enumerate()
        .map(|(i, values)| Sample::from_values(schema, format!("s{i:0width$}"), values).expect("in domain"))
        .collect()
}

/// Compositional corpus from a random codebook, with the rule table that
/// extraction must recover from it.
pub fn gen_compositional(
    schema: &AttributeSchema,
    message_length: usize,
    vocab_size: usize,
    seed: u64,
) -> Result<(AnnotatedCorpus, RuleTable)> {
    let book = Codebook::random_compositional(schema, message_length, vocab_size, seed)?;
    Ok((book.corpus(), book.ground_truth()))
}

/// Number of positions a holistic generator keeps fixed by default.
pub const HOLISTIC_FIXED_PREFIX: usize = 2;

/// Holistic corpus: every combination gets a distinct uniformly drawn
/// message sharing a fixed two-token prefix.
pub fn gen_holistic(
    schema: &AttributeSchema,
    message_length: usize,
    vocab_size: usize,
    seed: u64,
) -> Result<AnnotatedCorpus> {
    gen_holistic_with_prefix(schema, message_length, vocab_size, HOLISTIC_FIXED_PREFIX, seed)
}

pub fn gen_holistic_with_prefix(
    schema: &AttributeSchema,
    message_length: usize,
    vocab_size: usize,
    fixed_prefix: usize,
    seed: u64,
) -> Result<AnnotatedCorpus> {
    let needed = schema.combination_count();
    if message_length < fixed_prefix || vocab_size == 0 {
        return Err(Error::Capacity(format!(
            "message length {message_length} cannot hold a fixed prefix of {fixed_prefix}"
        )));
    }
    let variable = (message_length - fixed_prefix) as u32;
    let capacity = (vocab_size as u128).checked_pow(variable).unwrap_or(u128::MAX);
    if capacity < needed as u128 {
        return Err(Error::Capacity(format!(
            "{vocab_size}^{variable} = {capacity} distinct messages cannot cover {needed} combinations"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefix: Vec<Token> = (0..fixed_prefix).map(|_| rng.gen_range(0..vocab_size) as Token).collect();
    let mut used = HashSet::new();
    let mut records = Vec::with_capacity(needed);
    for sample in combination_samples(schema) {
        let message = loop {
            let mut tokens = prefix.clone();
            tokens.extend((fixed_prefix..message_length).map(|_| rng.gen_range(0..vocab_size) as Token));
            if used.insert(tokens.clone()) {
                break Message::new(tokens);
            }
        };
        records.push((sample, message, 1));
    }
    AnnotatedCorpus::from_records(schema.clone(), vocab_size, message_length, records)
}

/// Adds `synonym_count` single-substitution variants of each sample's
/// representative message, together holding `minority_share` of the
/// sample's total count.
///
/// Counts are integers, so each sample's counts are first multiplied by
/// the smallest factor that makes the share exact and splits evenly over
/// the synonyms; base proportions are unchanged. The share is taken at a
/// resolution of 1/1000.
pub fn gen_noisy(
    base: &AnnotatedCorpus,
    synonym_count: usize,
    minority_share: f64,
    seed: u64,
) -> Result<AnnotatedCorpus> {
    if !(minority_share > 0.0 && minority_share < 1.0) {
        return Err(Error::Config(format!("minority share {minority_share} is outside (0, 1)")));
    }
    if synonym_count == 0 {
        return Err(Error::Config("at least one synonym is required".into()));
    }
    let q = 1000u64;
    let p = (minority_share * q as f64).round() as u64;
    if p == 0 || p == q {
        return Err(Error::Config(format!("minority share {minority_share} rounds to 0 or 1")));
    }
    let g = gcd(p, q);
    let (p, q) = (p / g, q / g);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = base.vocab_size() as Token;
    let mut records = Vec::new();
    for entry in base.entries() {
        let total = entry.total_count();
        let num = p * total;
        let den = (q - p) * synonym_count as u64;
        let scale = den / gcd(num, den);
        let per_synonym = num * scale / (q - p) / synonym_count as u64;

        let present: HashSet<&Message> = entry.messages().iter().map(|(m, _)| m).collect();
        let rep = entry.representative().tokens();
        let mut variants: Vec<Message> = (0..rep.len())
            .flat_map(|pos| {
                (0..vocab).filter(move |&t| t != rep[pos]).map(move |t| {
                    let mut tokens = rep.to_vec();
                    tokens[pos] = t;
                    Message::new(tokens)
                })
            })
            .filter(|m| !present.contains(m))
            .collect();
        if variants.len() < synonym_count {
            return Err(Error::Capacity(format!(
                "sample `{}` admits only {} synonyms",
                entry.sample().id,
                variants.len()
            )));
        }
        variants.shuffle(&mut rng);
        for (m, c) in entry.messages() {
            records.push((entry.sample().clone(), m.clone(), c * scale));
        }
        for m in variants.into_iter().take(synonym_count) {
            records.push((entry.sample().clone(), m, per_synonym));
        }
    }
    AnnotatedCorpus::from_records(base.schema().clone(), base.vocab_size(), base.message_length(), records)
}

/// Distinct messages of each sample, keyed by sample id; handy in tests.
pub fn message_sets(corpus: &AnnotatedCorpus) -> BTreeMap<String, Vec<Message>> {
    corpus
        .entries()
        .iter()
        .map(|e| (e.sample().id.clone(), e.messages().iter().map(|(m, _)| m.clone()).collect()))
        .collect()
}
