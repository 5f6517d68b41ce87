//! Annotated message corpora: loading, canonical serialization and
//! frequency filtering.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{AttributeSchema, Sample};

pub type Token = u32;

/// Frequency threshold applied before rule extraction and game evaluation.
pub const DEFAULT_MIN_FREQ: f64 = 0.15;

/// A fixed-length token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Message(Vec<Token>);

impl Message {
    pub fn new(tokens: Vec<Token>) -> Self {
        Message(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses a comma-separated token list such as `1,2,3`.
    pub fn parse_list(text: &str) -> Result<Message> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Message(Vec::new()));
        }
        text.split(',')
            .map(|t| t.trim().parse::<Token>().map_err(|e| Error::Syntax(format!("bad token `{}`: {e}", t.trim()))))
            .collect::<Result<Vec<_>>>()
            .map(Message)
    }
}

impl From<Vec<Token>> for Message {
    fn from(tokens: Vec<Token>) -> Self {
        Message(tokens)
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

/// A sample with the multiset of messages produced for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    sample: Sample,
    /// Sorted by message, counts >= 1.
    messages: Vec<(Message, u64)>,
}

impl Entry {
    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn messages(&self) -> &[(Message, u64)] {
        &self.messages
    }

    pub fn total_count(&self) -> u64 {
        self.messages.iter().map(|(_, c)| c).sum()
    }

    /// Highest-count message, lexicographically smallest on ties.
    pub fn representative(&self) -> &Message {
        let mut best = &self.messages[0];
        for m in &self.messages[1..] {
            // messages are sorted, so a strict improvement keeps the smallest tie
            if m.1 > best.1 {
                best = m;
            }
        }
        &best.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedCorpus {
    schema: AttributeSchema,
    vocab_size: usize,
    message_length: usize,
    /// Sorted by sample id.
    entries: Vec<Entry>,
}

impl AnnotatedCorpus {
    /// Builds a corpus from `(sample, message, count)` records, merging
    /// repeated `(sample, message)` pairs by summing their counts.
    pub fn from_records<I>(
        schema: AttributeSchema,
        vocab_size: usize,
        message_length: usize,
        records: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (Sample, Message, u64)>,
    {
        if vocab_size == 0 {
            return Err(Error::Syntax("vocab_size must be at least 1".into()));
        }
        if message_length == 0 {
            return Err(Error::Syntax("msg_len must be at least 1".into()));
        }
        let mut by_id: BTreeMap<String, (Sample, BTreeMap<Message, u64>)> = BTreeMap::new();
        for (sample, message, count) in records {
            check_message(&message, vocab_size, message_length)?;
            if count == 0 {
                return Err(Error::Syntax(format!("sample `{}` has a zero count", sample.id)));
            }
            let slot = by_id.entry(sample.id.clone()).or_insert_with(|| (sample.clone(), BTreeMap::new()));
            if slot.0 != sample {
                return Err(Error::AttributeMismatch(format!(
                    "sample `{}` appears with different attribute values",
                    sample.id
                )));
            }
            *slot.1.entry(message).or_insert(0) += count;
        }
        for (sample, _) in by_id.values() {
            Sample::from_values(&schema, sample.id.clone(), sample.values().to_vec())?;
        }
        let entries = by_id
            .into_values()
            .map(|(sample, messages)| Entry { sample, messages: messages.into_iter().collect() })
            .collect();
        Ok(AnnotatedCorpus { schema, vocab_size, message_length, entries })
    }

    /// Parses the line-oriented corpus format.
    pub fn load(text: &str, schema: &AttributeSchema) -> Result<Self> {
        let mut lines = text
            .split('\n')
            .enumerate()
            .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Syntax("missing header line".into()))?;
        let header: RawHeader =
            serde_json::from_str(header).map_err(|e| Error::Syntax(format!("line 1: header: {e}")))?;
        let RawMeta { vocab_size, msg_len } = header.meta;
        if vocab_size == 0 || msg_len == 0 {
            return Err(Error::Syntax("line 1: vocab_size and msg_len must be positive".into()));
        }

        let mut records = Vec::new();
        for (line_no, line) in lines {
            let raw: RawRecord =
                serde_json::from_str(line).map_err(|e| Error::Syntax(format!("line {line_no}: {e}")))?;
            if raw.msg.len() != msg_len {
                return Err(Error::LengthMismatch { expected: msg_len, found: raw.msg.len() });
            }
            let mut tokens = Vec::with_capacity(raw.msg.len());
            for t in raw.msg {
                if t >= vocab_size as u64 {
                    return Err(Error::TokenOutOfRange { token: t, vocab_size });
                }
                tokens.push(t as Token);
            }
            let sample = Sample::new(schema, raw.sample, raw.attrs)?;
            let count = raw.count.unwrap_or(1);
            if count == 0 {
                return Err(Error::Syntax(format!("line {line_no}: count must be positive")));
            }
            records.push((sample, Message(tokens), count));
        }
        AnnotatedCorpus::from_records(schema.clone(), vocab_size, msg_len, records)
    }

    /// Canonical serialization: header, then samples by id, messages by token
    /// sequence, one record per distinct message.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&RawHeader {
            meta: RawMeta { vocab_size: self.vocab_size, msg_len: self.message_length },
        })
        .expect("header serializes");
        out.push('\n');
        for entry in &self.entries {
            let attrs: IndexMap<String, String> =
                self.schema.attribute_names().map(str::to_string).zip(entry.sample.values().iter().cloned()).collect();
            for (message, count) in &entry.messages {
                let record = RawRecord {
                    sample: entry.sample.id.clone(),
                    attrs: attrs.clone(),
                    msg: message.0.iter().map(|&t| t as u64).collect(),
                    count: Some(*count),
                };
                out.push_str(&serde_json::to_string(&record).expect("record serializes"));
                out.push('\n');
            }
        }
        out
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn message_length(&self) -> usize {
        self.message_length
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, sample_id: &str) -> Option<&Entry> {
        self.entries.binary_search_by(|e| e.sample.id.as_str().cmp(sample_id)).ok().map(|i| &self.entries[i])
    }

    /// Every distinct message of every sample.
    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.entries.iter().flat_map(|e| e.messages.iter().map(|(m, _)| m))
    }

    /// Keeps, per sample, the messages whose share of the sample's total
    /// count is at least `threshold`.
    pub fn filter_by_frequency(&self, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!("threshold {threshold} is outside [0, 1]")));
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for entry in &self.entries {
            let total = entry.total_count() as f64;
            let messages: Vec<(Message, u64)> =
                entry.messages.iter().filter(|(_, c)| *c as f64 / total >= threshold).cloned().collect();
            if messages.is_empty() {
                return Err(Error::EmptySample(entry.sample.id.clone()));
            }
            entries.push(Entry { sample: entry.sample.clone(), messages });
        }
        Ok(AnnotatedCorpus { entries, ..self.clone_header() })
    }

    pub fn representative_message(&self, sample_id: &str) -> Result<&Message> {
        self.entry(sample_id).map(Entry::representative).ok_or_else(|| Error::UnknownSample(sample_id.to_string()))
    }

    /// Divides each sample's counts by their greatest common divisor, so two
    /// corpora with proportional counts per sample compare equal.
    pub fn reduced(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let g = e.messages.iter().fold(0, |g, (_, c)| gcd(g, *c));
                Entry {
                    sample: e.sample.clone(),
                    messages: e.messages.iter().map(|(m, c)| (m.clone(), c / g)).collect(),
                }
            })
            .collect();
        AnnotatedCorpus { entries, ..self.clone_header() }
    }

    fn clone_header(&self) -> Self {
        AnnotatedCorpus {
            schema: self.schema.clone(),
            vocab_size: self.vocab_size,
            message_length: self.message_length,
            entries: Vec::new(),
        }
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_message(message: &Message, vocab_size: usize, message_length: usize) -> Result<()> {
    if message.len() != message_length {
        return Err(Error::LengthMismatch { expected: message_length, found: message.len() });
    }
    if let Some(&t) = message.0.iter().find(|&&t| t as usize >= vocab_size) {
        return Err(Error::TokenOutOfRange { token: t as u64, vocab_size });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    meta: RawMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    vocab_size: usize,
    msg_len: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    sample: String,
    attrs: IndexMap<String, String>,
    msg: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Attribute;

    fn tiny_schema() -> AttributeSchema {
        AttributeSchema::new(vec![Attribute::new("color", ["red", "blue"])], vec![]).unwrap()
    }

    type Spec<'a> = (&'a str, &'a str, &'a [(&'a [Token], u64)]);

    fn corpus(samples: &[Spec]) -> AnnotatedCorpus {
        let schema = tiny_schema();
        let len = samples[0].2[0].0.len();
        let records: Vec<_> = samples
            .iter()
            .flat_map(|(id, color, msgs)| {
                let sample = Sample::new(&schema, *id, [("color", *color)]).unwrap();
                msgs.iter().map(move |(m, c)| (sample.clone(), Message::new(m.to_vec()), *c))
            })
            .collect();
        AnnotatedCorpus::from_records(schema, 16, len, records).unwrap()
    }

    const HEADER: &str = r#"{"meta":{"vocab_size":16,"msg_len":3}}"#;

    #[test]
    fn load_merges_duplicate_records() {
        let text = format!(
            "{HEADER}\n{}\n{}\n",
            r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2,3],"count":3}"#,
            r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2,3],"count":4}"#
        );
        let c = AnnotatedCorpus::load(&text, &tiny_schema()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.entries()[0].messages(), &[(Message::new(vec![1, 2, 3]), 7)]);
    }

    #[test]
    fn load_defaults_count_to_one() {
        let text = format!("{HEADER}\n{}", r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2,3]}"#);
        let c = AnnotatedCorpus::load(&text, &tiny_schema()).unwrap();
        assert_eq!(c.entries()[0].total_count(), 1);
    }

    #[test]
    fn load_errors() {
        let schema = tiny_schema();
        let load = |body: &str| AnnotatedCorpus::load(&format!("{HEADER}\n{body}\n"), &schema).unwrap_err();
        assert_eq!(
            load(r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2]}"#),
            Error::LengthMismatch { expected: 3, found: 2 }
        );
        assert_eq!(
            load(r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2,16]}"#),
            Error::TokenOutOfRange { token: 16, vocab_size: 16 }
        );
        assert!(matches!(
            load(r#"{"sample":"a","attrs":{"color":"green"},"msg":[1,2,3]}"#),
            Error::AttributeMismatch(_)
        ));
        assert!(matches!(load(r#"{"sample":"a","attrs":{},"msg":[1,2,3]}"#), Error::AttributeMismatch(_)));
        assert!(matches!(load(r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2,-3]}"#), Error::Syntax(_)));
        assert!(matches!(load(r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2,3],"count":0}"#), Error::Syntax(_)));
        assert!(matches!(load("not json"), Error::Syntax(_)));
        assert!(matches!(
            load("{\"sample\":\"a\",\"attrs\":{\"color\":\"red\"},\"msg\":[1,2,3]}\n{\"sample\":\"a\",\"attrs\":{\"color\":\"blue\"},\"msg\":[1,2,3]}"),
            Error::AttributeMismatch(_)
        ));
        assert!(matches!(AnnotatedCorpus::load("", &schema), Err(Error::Syntax(_))));
        assert!(matches!(
            AnnotatedCorpus::load(r#"{"sample":"a","attrs":{"color":"red"},"msg":[1]}"#, &schema),
            Err(Error::Syntax(_))
        ));
    }

    #[test]
    fn message_of_wrong_length_is_rejected() {
        let schema = tiny_schema();
        let text = format!(
            "{}\n{}\n",
            r#"{"meta":{"vocab_size":16,"msg_len":10}}"#,
            r#"{"sample":"a","attrs":{"color":"red"},"msg":[1,2,3,4,5,6,7,8,9]}"#
        );
        assert_eq!(
            AnnotatedCorpus::load(&text, &schema).unwrap_err(),
            Error::LengthMismatch { expected: 10, found: 9 }
        );
    }

    #[test]
    fn filter_keeps_messages_at_or_above_share() {
        let c = corpus(&[("a", "red", &[(&[1], 60), (&[2], 25), (&[3], 10), (&[4], 5)])]);
        let f = c.filter_by_frequency(0.15).unwrap();
        let kept: Vec<_> = f.entries()[0].messages().iter().map(|(m, _)| m.tokens()[0]).collect();
        assert_eq!(kept, [1, 2]);

        let c = corpus(&[("a", "red", &[(&[1], 50), (&[2], 50)])]);
        assert_eq!(c.filter_by_frequency(0.15).unwrap(), c);
        assert_eq!(c.filter_by_frequency(0.0).unwrap(), c);
    }

    #[test]
    fn filter_boundary_is_inclusive() {
        let c = corpus(&[("a", "red", &[(&[1], 85), (&[2], 15)])]);
        assert_eq!(c.filter_by_frequency(0.15).unwrap(), c);
    }

    #[test]
    fn filter_errors() {
        let c = corpus(&[("a", "red", &[(&[1], 50), (&[2], 50)])]);
        assert_eq!(c.filter_by_frequency(0.6).unwrap_err(), Error::EmptySample("a".into()));
        assert!(matches!(c.filter_by_frequency(1.5), Err(Error::Config(_))));
        assert!(matches!(c.filter_by_frequency(f64::NAN), Err(Error::Config(_))));
    }

    #[test]
    fn representative_message_tie_break() {
        let c = corpus(&[
            ("a", "red", &[(&[1, 2], 5), (&[1, 3], 2)]),
            ("b", "blue", &[(&[2, 1], 3), (&[1, 9], 3)]),
            ("c", "blue", &[(&[4, 4], 1)]),
        ]);
        assert_eq!(c.representative_message("a").unwrap().tokens(), [1, 2]);
        assert_eq!(c.representative_message("b").unwrap().tokens(), [1, 9]);
        assert_eq!(c.representative_message("c").unwrap().tokens(), [4, 4]);
        assert_eq!(c.representative_message("z").unwrap_err(), Error::UnknownSample("z".into()));
    }

    #[test]
    fn jsonl_round_trip() {
        let c = corpus(&[("b", "blue", &[(&[2, 1], 3), (&[1, 9], 3)]), ("a", "red", &[(&[1, 2], 5)])]);
        let text = c.to_jsonl();
        assert!(text.starts_with(r#"{"meta":{"vocab_size":16,"msg_len":2}}"#));
        let again = AnnotatedCorpus::load(&text, c.schema()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_jsonl(), text);
    }

    #[test]
    fn reduced_divides_by_gcd() {
        let c = corpus(&[("a", "red", &[(&[1], 9), (&[2], 3)])]);
        let r = c.reduced();
        let counts: Vec<u64> = r.entries()[0].messages().iter().map(|(_, c)| *c).collect();
        assert_eq!(counts, [3, 1]);
    }

    #[test]
    fn parse_token_list() {
        assert_eq!(Message::parse_list("1,2, 3").unwrap().tokens(), [1, 2, 3]);
        assert!(Message::parse_list("1,x").is_err());
        assert!(Message::parse_list("1,,2").is_err());
        assert!(Message::parse_list("").unwrap().is_empty());
    }
}
