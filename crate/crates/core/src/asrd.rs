//! Semantic rule detection.
//!
//! The corpus is frequency-filtered, positions constant over the whole
//! corpus are set aside as the general pattern, and then for every value of
//! every attribute or hyperattribute the messages of the matching samples
//! are intersected position-wise. What survives, minus the global
//! constants, is that value's pattern. Identical patterns are merged and
//! each resulting rule is annotated with the property values observed over
//! the samples whose messages match it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedCorpus, Message, Token, DEFAULT_MIN_FREQ};
use crate::error::{Error, Result};
use crate::schema::AttributeSchema;

/// A partial assignment of tokens to message positions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<(usize, Token)>", try_from = "Vec<(usize, Token)>")]
pub struct Pattern(BTreeMap<usize, Token>);

impl Pattern {
    pub fn new() -> Self {
        Pattern::default()
    }

    pub fn insert(&mut self, position: usize, token: Token) {
        self.0.insert(position, token);
    }

    pub fn get(&self, position: usize) -> Option<Token> {
        self.0.get(&position).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positions(&self) -> Vec<usize> {
        self.0.keys().copied().collect()
    }

    pub fn tokens(&self) -> Vec<Token> {
        self.0.values().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Token)> + '_ {
        self.0.iter().map(|(&p, &t)| (p, t))
    }

    pub fn contains_position(&self, position: usize) -> bool {
        self.0.contains_key(&position)
    }

    pub fn matches(&self, message: &Message) -> bool {
        let tokens = message.tokens();
        self.0.iter().all(|(&p, &t)| tokens.get(p) == Some(&t))
    }

    /// Drops every position that `other` fixes.
    pub fn without_positions_of(&self, other: &Pattern) -> Pattern {
        Pattern(self.0.iter().filter(|(p, _)| !other.0.contains_key(p)).map(|(&p, &t)| (p, t)).collect())
    }

    /// Rule ordering: positions, then tokens, the empty pattern last.
    pub fn canonical_cmp(&self, other: &Pattern) -> Ordering {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => self.positions().cmp(&other.positions()).then_with(|| self.tokens().cmp(&other.tokens())),
        }
    }
}

impl FromIterator<(usize, Token)> for Pattern {
    fn from_iter<I: IntoIterator<Item = (usize, Token)>>(iter: I) -> Self {
        Pattern(iter.into_iter().collect())
    }
}

impl From<Pattern> for Vec<(usize, Token)> {
    fn from(p: Pattern) -> Self {
        p.0.into_iter().collect()
    }
}

impl TryFrom<Vec<(usize, Token)>> for Pattern {
    type Error = String;

    fn try_from(pairs: Vec<(usize, Token)>) -> std::result::Result<Self, String> {
        let n = pairs.len();
        let map: BTreeMap<usize, Token> = pairs.into_iter().collect();
        if map.len() != n {
            return Err("pattern repeats a position".into());
        }
        Ok(Pattern(map))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PropertyValue {
    pub property: String,
    pub value: String,
}

impl PropertyValue {
    pub fn new(property: impl Into<String>, value: impl Into<String>) -> Self {
        PropertyValue { property: property.into(), value: value.into() }
    }
}

/// Values of one property observed over the samples a pattern covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub property: String,
    pub values: Vec<String>,
    /// True iff `values` is a non-empty proper subset of the domain.
    pub informative: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageSummary {
    pub coverage: Vec<Coverage>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticRule {
    pub pattern: Pattern,
    /// Property values whose groups produced the pattern, in schema order.
    pub evidence: Vec<PropertyValue>,
    pub coverage: Vec<Coverage>,
    pub support: usize,
}

impl SemanticRule {
    pub fn evidence_values(&self, property: &str) -> Vec<&str> {
        self.evidence.iter().filter(|e| e.property == property).map(|e| e.value.as_str()).collect()
    }

    pub fn coverage_of(&self, property: &str) -> Option<&Coverage> {
        self.coverage.iter().find(|c| c.property == property)
    }
}

/// The extraction result: the general pattern plus the ordered rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTable {
    pub message_length: usize,
    pub attributes: Vec<String>,
    pub hyperattributes: Vec<String>,
    pub global_constants: Pattern,
    pub rules: Vec<SemanticRule>,
}

impl RuleTable {
    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    /// Positions not fixed by the general pattern, ascending.
    pub fn variable_positions(&self) -> Vec<usize> {
        (0..self.message_length).filter(|p| !self.global_constants.contains_position(*p)).collect()
    }

    /// The general pattern with placeholders at variable positions, e.g.
    /// `13-12-XX-10-10-10-10-10-YY-ZZ`.
    pub fn general_pattern(&self) -> String {
        let mut next = 0;
        (0..self.message_length)
            .map(|p| match self.global_constants.get(p) {
                Some(t) => t.to_string(),
                None => {
                    next += 1;
                    placeholder(next - 1)
                }
            })
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// `XX`, `YY`, `ZZ`, then `AA` .. `WW`, then `V26`, `V27`, ...
pub fn placeholder(index: usize) -> String {
    const LETTERS: &[u8] = b"XYZABCDEFGHIJKLMNOPQRSTUVW";
    match LETTERS.get(index) {
        Some(&c) => {
            let c = c as char;
            format!("{c}{c}")
        }
        None => format!("V{index}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOptions {
    pub threshold: f64,
    /// Restricts grouping to these properties; `None` means all of them.
    pub properties: Option<Vec<String>>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { threshold: DEFAULT_MIN_FREQ, properties: None }
    }
}

/// Positions (with their token) on which all `messages` agree.
pub fn constant_positions<'a, I>(messages: I) -> Result<Pattern>
where
    I: IntoIterator<Item = &'a Message>,
{
    let mut iter = messages.into_iter();
    let first = iter.next().ok_or(Error::EmptyInput)?;
    let mut fixed: Vec<Option<Token>> = first.tokens().iter().map(|&t| Some(t)).collect();
    for m in iter {
        if m.len() != fixed.len() {
            return Err(Error::LengthMismatch { expected: fixed.len(), found: m.len() });
        }
        for (slot, &t) in fixed.iter_mut().zip(m.tokens()) {
            if *slot != Some(t) {
                *slot = None;
            }
        }
    }
    Ok(fixed.into_iter().enumerate().filter_map(|(p, t)| t.map(|t| (p, t))).collect())
}

/// Positions constant across every message of the corpus.
pub fn global_constants(corpus: &AnnotatedCorpus) -> Result<Pattern> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    constant_positions(corpus.messages())
}

/// Property value sets over the samples having at least one message that
/// matches `pattern`.
pub fn coverage_summary(corpus: &AnnotatedCorpus, pattern: &Pattern) -> CoverageSummary {
    let schema = corpus.schema();
    let covered: Vec<&[String]> = corpus
        .entries()
        .iter()
        .filter(|e| e.messages().iter().any(|(m, _)| pattern.matches(m)))
        .map(|e| e.sample().values())
        .collect();
    let coverage = schema
        .property_names()
        .map(|p| {
            let domain = schema.property_domain(p).expect("schema property");
            let seen: Vec<String> =
                covered.iter().map(|values| schema.eval_values(values, p).expect("validated sample")).collect();
            let values: Vec<String> = domain.iter().filter(|v| seen.contains(v)).cloned().collect();
            let informative = !values.is_empty() && values.len() < domain.len();
            Coverage { property: p.to_string(), values, informative }
        })
        .collect();
    CoverageSummary { coverage, support: covered.len() }
}

/// Runs the full extraction pipeline and returns the rule table.
pub fn extract_rules(corpus: &AnnotatedCorpus, options: &ExtractOptions) -> Result<RuleTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let filtered = corpus.filter_by_frequency(options.threshold)?;
    let global = global_constants(&filtered)?;
    let schema = filtered.schema();

    let properties: Vec<&str> = match &options.properties {
        Some(list) => {
            for p in list {
                if !schema.has_property(p) {
                    return Err(Error::UnknownReference(format!("no property named `{p}`")));
                }
            }
            schema.property_names().filter(|p| list.iter().any(|q| q == p)).collect()
        }
        None => schema.property_names().collect(),
    };

    // property value of every sample, indexed [property][entry]
    let table: Vec<Vec<String>> = properties
        .iter()
        .map(|p| filtered.entries().iter().map(|e| schema.eval_property(e.sample(), p)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let groups: Vec<(usize, &String)> = properties
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| schema.property_domain(p).expect("checked above").iter().map(move |v| (pi, v)))
        .collect();

    let candidates: Vec<Option<(Pattern, PropertyValue)>> = groups
        .par_iter()
        .map(|&(pi, value)| {
            let members = filtered.entries().iter().zip(&table[pi]).filter(|(_, v)| *v == value);
            let messages = members.flat_map(|(e, _)| e.messages().iter().map(|(m, _)| m));
            match constant_positions(messages) {
                Ok(pattern) => {
                    Ok(Some((pattern.without_positions_of(&global), PropertyValue::new(properties[pi], value.clone()))))
                }
                Err(Error::EmptyInput) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut merged: Vec<(Pattern, Vec<PropertyValue>)> = Vec::new();
    let mut slot_of: HashMap<Pattern, usize> = HashMap::new();
    for (pattern, evidence) in candidates.into_iter().flatten() {
        match slot_of.get(&pattern) {
            Some(&i) => merged[i].1.push(evidence),
            None => {
                slot_of.insert(pattern.clone(), merged.len());
                merged.push((pattern, vec![evidence]));
            }
        }
    }

    let mut rules: Vec<SemanticRule> = merged
        .into_par_iter()
        .map(|(pattern, evidence)| {
            let CoverageSummary { coverage, support } = coverage_summary(&filtered, &pattern);
            SemanticRule { pattern, evidence, coverage, support }
        })
        .collect();
    sort_rules(&mut rules);

    Ok(table_for(schema, filtered.message_length(), global, rules))
}

pub(crate) fn sort_rules(rules: &mut [SemanticRule]) {
    rules.sort_by(|a, b| a.pattern.canonical_cmp(&b.pattern));
}

pub(crate) fn table_for(
    schema: &AttributeSchema,
    message_length: usize,
    global_constants: Pattern,
    rules: Vec<SemanticRule>,
) -> RuleTable {
    RuleTable {
        message_length,
        attributes: schema.attribute_names().map(str::to_string).collect(),
        hyperattributes: schema.hyperattribute_names().map(str::to_string).collect(),
        global_constants,
        rules,
    }
}
