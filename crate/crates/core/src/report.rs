//! Canonical serialization and human-readable rendering of results.
//!
//! The structured format is a single pretty-printed JSON object whose
//! `kind` field names the result type. Key order is fixed and floats are
//! printed with six decimals, so renderings are byte-stable.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::asrd::{Pattern, RuleTable, SemanticRule};
use crate::error::{Error, Result};
use crate::metrics::{accuracy_per_speaker, AccuracyMatrix, TopSimReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Structured,
    Markdown,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" | "json" => Ok(Format::Structured),
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsReport {
    TopSim(TopSimReport),
    Accuracy(AccuracyMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    RuleTable(RuleTable),
    Metrics(MetricsReport),
}

pub fn render(doc: &Document, format: Format) -> String {
    match doc {
        Document::RuleTable(t) => render_rule_table(t, format),
        Document::Metrics(m) => render_metrics(m, format),
    }
}

/// Float printed with six decimals.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Fixed6(f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format!("{:.6}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fixed6 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Fixed6)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRuleTable {
    kind: String,
    message_length: usize,
    general_pattern: String,
    global_constants: Pattern,
    rule_count: usize,
    attributes: Vec<String>,
    hyperattributes: Vec<String>,
    rules: Vec<SemanticRule>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopSim {
    kind: String,
    rho: Fixed6,
    pair_count: usize,
    sampled: bool,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAccuracy {
    kind: String,
    episodes_per_cell: usize,
    values: Vec<Vec<Fixed6>>,
    per_speaker: Vec<Fixed6>,
}

const KIND_RULES: &str = "rule_table";
const KIND_TOPSIM: &str = "topsim";
const KIND_ACCURACY: &str = "accuracy";

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report serializes");
    out.push('\n');
    out
}

pub fn render_rule_table(table: &RuleTable, format: Format) -> String {
    match format {
        Format::Structured => to_pretty(&RawRuleTable {
            kind: KIND_RULES.into(),
            message_length: table.message_length,
            general_pattern: table.general_pattern(),
            global_constants: table.global_constants.clone(),
            rule_count: table.rule_count(),
            attributes: table.attributes.clone(),
            hyperattributes: table.hyperattributes.clone(),
            rules: table.rules.clone(),
        }),
        Format::Markdown => rule_table_markdown(table),
        Format::Csv => rule_table_csv(table),
    }
}

fn rule_columns(table: &RuleTable) -> (Vec<usize>, Vec<&str>) {
    let positions = table.variable_positions();
    let properties = table.attributes.iter().chain(&table.hyperattributes).map(String::as_str).collect();
    (positions, properties)
}

fn evidence_row(rule: &SemanticRule, positions: &[usize], properties: &[&str]) -> Vec<String> {
    positions
        .iter()
        .map(|&p| rule.pattern.get(p).map(|t| t.to_string()).unwrap_or_default())
        .chain(properties.iter().map(|p| rule.evidence_values(p).join(", ")))
        .collect()
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn md_row(cells: &[String]) -> String {
    let cells: Vec<String> = cells.iter().map(|c| md_cell(c)).collect();
    format!("| {} |\n", cells.join(" | "))
}

fn md_rule(columns: usize) -> String {
    format!("|{}\n", " --- |".repeat(columns))
}

fn rule_table_markdown(table: &RuleTable) -> String {
    let (positions, properties) = rule_columns(table);
    let mut out = String::new();
    let header: Vec<String> =
        positions.iter().map(|p| format!("pos {p}")).chain(properties.iter().map(|p| p.to_string())).collect();
    out.push_str(&md_row(&header));
    out.push_str(&md_rule(header.len()));
    for rule in &table.rules {
        out.push_str(&md_row(&evidence_row(rule, &positions, &properties)));
    }
    let _ = writeln!(out, "\nPattern message: {}", table.general_pattern());
    let _ = writeln!(out, "Rules: {}", table.rule_count());

    out.push_str("\nCoverage over matching samples (`*` marks a set narrower than the domain):\n\n");
    let header: Vec<String> = ["rule", "pattern", "support"]
        .iter()
        .map(|s| s.to_string())
        .chain(properties.iter().map(|p| p.to_string()))
        .collect();
    out.push_str(&md_row(&header));
    out.push_str(&md_rule(header.len()));
    for (i, rule) in table.rules.iter().enumerate() {
        let pattern = if rule.pattern.is_empty() {
            "(none)".to_string()
        } else {
            rule.pattern.iter().map(|(p, t)| format!("{p}:{t}")).collect::<Vec<_>>().join(" ")
        };
        let mut row = vec![(i + 1).to_string(), pattern, rule.support.to_string()];
        row.extend(properties.iter().map(|p| match rule.coverage_of(p) {
            Some(c) => format!("{}{}", c.values.join(", "), if c.informative { " *" } else { "" }),
            None => String::new(),
        }));
        out.push_str(&md_row(&row));
    }
    out
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 input")
}

fn rule_table_csv(table: &RuleTable) -> String {
    let (positions, properties) = rule_columns(table);
    let mut w = csv_writer();
    let header: Vec<String> =
        positions.iter().map(|p| format!("pos {p}")).chain(properties.iter().map(|p| p.to_string())).collect();
    w.write_record(&header).expect("in-memory writer");
    for rule in &table.rules {
        w.write_record(evidence_row(rule, &positions, &properties)).expect("in-memory writer");
    }
    w.write_record([format!("Pattern message: {}", table.general_pattern())]).expect("in-memory writer");
    finish_csv(w)
}

pub fn render_metrics(report: &MetricsReport, format: Format) -> String {
    match (report, format) {
        (MetricsReport::TopSim(t), Format::Structured) => to_pretty(&RawTopSim {
            kind: KIND_TOPSIM.into(),
            rho: Fixed6(t.rho),
            pair_count: t.pair_count,
            sampled: t.sampled,
            seed: t.seed,
        }),
        (MetricsReport::TopSim(t), Format::Markdown) => {
            let how = match (t.sampled, t.seed) {
                (true, Some(seed)) => format!("sampled, seed {seed}"),
                (true, None) => "sampled".to_string(),
                (false, _) => "exact".to_string(),
            };
            format!("TopSim: {:.4} ({} pairs, {how})\n", t.rho, t.pair_count)
        }
        (MetricsReport::TopSim(t), Format::Csv) => {
            let mut w = csv_writer();
            w.write_record(["rho", "pair_count", "sampled", "seed"]).expect("in-memory writer");
            w.write_record([
                format!("{:.6}", t.rho),
                t.pair_count.to_string(),
                t.sampled.to_string(),
                t.seed.map(|s| s.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory writer");
            finish_csv(w)
        }
        (MetricsReport::Accuracy(m), Format::Structured) => to_pretty(&RawAccuracy {
            kind: KIND_ACCURACY.into(),
            episodes_per_cell: m.episodes_per_cell,
            values: m.values.iter().map(|row| row.iter().map(|&v| Fixed6(v)).collect()).collect(),
            per_speaker: accuracy_per_speaker(m).into_iter().map(Fixed6).collect(),
        }),
        (MetricsReport::Accuracy(m), Format::Markdown) => {
            let means = accuracy_per_speaker(m);
            let mut out = String::new();
            let header: Vec<String> = std::iter::once("speaker".to_string())
                .chain((0..m.listeners()).map(|l| format!("L{l}")))
                .chain(std::iter::once("mean".to_string()))
                .collect();
            out.push_str(&md_row(&header));
            out.push_str(&md_rule(header.len()));
            for (s, (row, mean)) in m.values.iter().zip(&means).enumerate() {
                let cells: Vec<String> = std::iter::once(format!("S{s}"))
                    .chain(row.iter().map(|v| format!("{v:.4}")))
                    .chain(std::iter::once(format!("{mean:.4}")))
                    .collect();
                out.push_str(&md_row(&cells));
            }
            let listed: Vec<String> = means.iter().map(|v| format!("{v:.4}")).collect();
            let _ = writeln!(out, "\nPer-speaker accuracy: {}", listed.join(", "));
            let _ = writeln!(out, "Episodes per cell: {}", m.episodes_per_cell);
            out
        }
        (MetricsReport::Accuracy(m), Format::Csv) => {
            let means = accuracy_per_speaker(m);
            let mut w = csv_writer();
            let header: Vec<String> = std::iter::once("speaker".to_string())
                .chain((0..m.listeners()).map(|l| format!("L{l}")))
                .chain(std::iter::once("mean".to_string()))
                .collect();
            w.write_record(&header).expect("in-memory writer");
            for (s, (row, mean)) in m.values.iter().zip(&means).enumerate() {
                let cells: Vec<String> = std::iter::once(format!("S{s}"))
                    .chain(row.iter().map(|v| format!("{v:.6}")))
                    .chain(std::iter::once(format!("{mean:.6}")))
                    .collect();
                w.write_record(&cells).expect("in-memory writer");
            }
            finish_csv(w)
        }
    }
}

/// Parses any structured rendering back into its result object.
pub fn parse_document(text: &str) -> Result<Document> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Syntax(format!("report: {e}")))?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| Error::Syntax("report: missing `kind`".into()))?
        .to_string();
    let syntax = |e: serde_json::Error| Error::Syntax(format!("report: {e}"));
    match kind.as_str() {
        KIND_RULES => {
            let raw: RawRuleTable = serde_json::from_value(value).map_err(syntax)?;
            validate_rule_table(&raw)?;
            Ok(Document::RuleTable(RuleTable {
                message_length: raw.message_length,
                attributes: raw.attributes,
                hyperattributes: raw.hyperattributes,
                global_constants: raw.global_constants,
                rules: raw.rules,
            }))
        }
        KIND_TOPSIM => {
            let raw: RawTopSim = serde_json::from_value(value).map_err(syntax)?;
            if !(-1.0..=1.0).contains(&raw.rho.0) {
                return Err(Error::Syntax(format!("report: rho {} is outside [-1, 1]", raw.rho.0)));
            }
            Ok(Document::Metrics(MetricsReport::TopSim(TopSimReport {
                rho: raw.rho.0,
                pair_count: raw.pair_count,
                sampled: raw.sampled,
                seed: raw.seed,
            })))
        }
        KIND_ACCURACY => {
            let raw: RawAccuracy = serde_json::from_value(value).map_err(syntax)?;
            let width = raw.values.first().map_or(0, Vec::len);
            if width == 0 || raw.values.iter().any(|r| r.len() != width) {
                return Err(Error::Syntax("report: accuracy matrix must be non-empty and rectangular".into()));
            }
            if raw.values.iter().flatten().any(|v| !(0.0..=1.0).contains(&v.0)) {
                return Err(Error::Syntax("report: accuracy outside [0, 1]".into()));
            }
            Ok(Document::Metrics(MetricsReport::Accuracy(AccuracyMatrix {
                values: raw.values.into_iter().map(|r| r.into_iter().map(|v| v.0).collect()).collect(),
                episodes_per_cell: raw.episodes_per_cell,
            })))
        }
        other => Err(Error::Syntax(format!("report: unknown kind `{other}`"))),
    }
}

pub fn parse_rule_table(text: &str) -> Result<RuleTable> {
    match parse_document(text)? {
        Document::RuleTable(t) => Ok(t),
        Document::Metrics(_) => Err(Error::Syntax("report: expected a rule table".into())),
    }
}

fn validate_rule_table(raw: &RawRuleTable) -> Result<()> {
    let bad = |msg: String| Err(Error::Syntax(format!("report: {msg}")));
    if raw.rule_count != raw.rules.len() {
        return bad(format!("rule_count {} but {} rules", raw.rule_count, raw.rules.len()));
    }
    let in_range = |p: &Pattern| p.positions().iter().all(|&q| q < raw.message_length);
    if !in_range(&raw.global_constants) {
        return bad("global constant beyond message length".into());
    }
    let mut seen = HashSet::new();
    for rule in &raw.rules {
        if !in_range(&rule.pattern) {
            return bad("rule position beyond message length".into());
        }
        if rule.pattern.positions().iter().any(|&p| raw.global_constants.contains_position(p)) {
            return bad("rule overlaps the global constants".into());
        }
        if !seen.insert(&rule.pattern) {
            return bad("two rules share a pattern".into());
        }
        if rule.evidence.is_empty() {
            return bad("rule without evidence".into());
        }
    }
    Ok(())
}
