//! Attribute schemas, hyperattributes and samples.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, FALSE, TRUE};

/// A directly observable property and its finite value domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub domain: Vec<String>,
}

impl Attribute {
    pub fn new<S: Into<String>>(name: S, domain: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Attribute { name: name.into(), domain: domain.into_iter().map(Into::into).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HyperBody {
    /// Yields `F` or `T`.
    Boolean(Expr),
    /// Relabels the values of `source`; `cases` keeps document order.
    ValueMap { source: String, cases: Vec<(String, String)> },
}

/// A property derived from attributes or earlier hyperattributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperattributeDef {
    pub name: String,
    pub body: HyperBody,
}

impl HyperattributeDef {
    pub fn boolean(name: impl Into<String>, expr: &str) -> Result<Self> {
        Ok(HyperattributeDef { name: name.into(), body: HyperBody::Boolean(Expr::parse(expr)?) })
    }

    pub fn value_map<I, A, B>(name: impl Into<String>, source: impl Into<String>, cases: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        HyperattributeDef {
            name: name.into(),
            body: HyperBody::ValueMap {
                source: source.into(),
                cases: cases.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PropRef {
    Attribute(usize),
    Hyper(usize),
}

/// Validated set of attributes and hyperattributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    hyperattributes: Vec<HyperattributeDef>,
    index: HashMap<String, PropRef>,
    hyper_domains: Vec<Vec<String>>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>, hyperattributes: Vec<HyperattributeDef>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            if attr.domain.is_empty() {
                return Err(Error::Domain(format!("attribute `{}` has an empty domain", attr.name)));
            }
            let mut seen = HashSet::new();
            for v in &attr.domain {
                if !seen.insert(v) {
                    return Err(Error::Domain(format!("attribute `{}` lists value `{v}` twice", attr.name)));
                }
            }
            if index.insert(attr.name.clone(), PropRef::Attribute(i)).is_some() {
                return Err(Error::DuplicateName(attr.name.clone()));
            }
        }
        let hyper_names: HashSet<String> = hyperattributes.iter().map(|h| h.name.clone()).collect();
        let mut schema = AttributeSchema {
            attributes,
            hyperattributes: Vec::with_capacity(hyperattributes.len()),
            index,
            hyper_domains: Vec::new(),
        };
        for (i, def) in hyperattributes.into_iter().enumerate() {
            if schema.index.contains_key(&def.name) {
                return Err(Error::DuplicateName(def.name));
            }
            // only already-registered names resolve; later or self names are cycles
            let check_ref = |schema: &AttributeSchema, name: &str| -> Result<()> {
                if schema.index.contains_key(name) {
                    Ok(())
                } else if hyper_names.contains(name) {
                    Err(Error::Cycle(format!("`{}` refers to `{name}`, which is not defined before it", def.name)))
                } else {
                    Err(Error::UnknownReference(format!("`{}` refers to undefined `{name}`", def.name)))
                }
            };
            let domain = match &def.body {
                HyperBody::Boolean(expr) => {
                    validate_expr(&schema, expr, &def.name, &check_ref)?;
                    vec![FALSE.to_string(), TRUE.to_string()]
                }
                HyperBody::ValueMap { source, cases } => {
                    check_ref(&schema, source)?;
                    let source_domain = schema.property_domain(source)?;
                    let mut covered = HashSet::new();
                    let mut labels: Vec<String> = Vec::new();
                    for (from, to) in cases {
                        if !source_domain.contains(from) {
                            return Err(Error::Domain(format!(
                                "`{}` maps `{from}`, which is not a value of `{source}`",
                                def.name
                            )));
                        }
                        if !covered.insert(from.as_str()) {
                            return Err(Error::Domain(format!("`{}` maps `{from}` more than once", def.name)));
                        }
                        if !labels.contains(to) {
                            labels.push(to.clone());
                        }
                    }
                    if let Some(missing) = source_domain.iter().find(|v| !covered.contains(v.as_str())) {
                        return Err(Error::Domain(format!(
                            "`{}` does not map value `{missing}` of `{source}`",
                            def.name
                        )));
                    }
                    labels
                }
            };
            schema.index.insert(def.name.clone(), PropRef::Hyper(i));
            schema.hyperattributes.push(def);
            schema.hyper_domains.push(domain);
        }
        Ok(schema)
    }

    /// Parses a JSON schema document.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSchema = serde_json::from_str(text).map_err(|e| Error::Syntax(format!("schema: {e}")))?;
        let attributes = raw.attributes.into_iter().map(|a| Attribute::new(a.name, a.values)).collect();
        let mut hypers = Vec::with_capacity(raw.hyperattributes.len());
        for h in raw.hyperattributes {
            let def = match (h.expr, h.map) {
                (Some(expr), None) => HyperattributeDef::boolean(h.name, &expr)?,
                (None, Some(map)) => HyperattributeDef::value_map(h.name, map.source, map.cases),
                _ => {
                    return Err(Error::Syntax(format!(
                        "hyperattribute `{}` needs exactly one of `expr` or `map`",
                        h.name
                    )))
                }
            };
            hypers.push(def);
        }
        AttributeSchema::new(attributes, hypers)
    }

    /// Canonical JSON rendering; [`AttributeSchema::parse`] inverts it.
    pub fn render(&self) -> String {
        let raw = RawSchema {
            attributes: self
                .attributes
                .iter()
                .map(|a| RawAttribute { name: a.name.clone(), values: a.domain.clone() })
                .collect(),
            hyperattributes: self
                .hyperattributes
                .iter()
                .map(|h| match &h.body {
                    HyperBody::Boolean(e) => RawHyper { name: h.name.clone(), expr: Some(e.to_string()), map: None },
                    HyperBody::ValueMap { source, cases } => RawHyper {
                        name: h.name.clone(),
                        expr: None,
                        map: Some(RawMap { source: source.clone(), cases: cases.iter().cloned().collect() }),
                    },
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&raw).expect("schema serializes");
        out.push('\n');
        out
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn hyperattributes(&self) -> &[HyperattributeDef] {
        &self.hyperattributes
    }

    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    pub fn hyperattribute_names(&self) -> impl Iterator<Item = &str> {
        self.hyperattributes.iter().map(|h| h.name.as_str())
    }

    /// Attributes first, then hyperattributes, each in declaration order.
    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.attribute_names().chain(self.hyperattribute_names())
    }

    pub fn has_property(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        match self.index.get(name) {
            Some(PropRef::Attribute(i)) => Some(*i),
            _ => None,
        }
    }

    /// Number of attribute combinations (saturating).
    pub fn combination_count(&self) -> usize {
        self.attributes.iter().fold(1usize, |acc, a| acc.saturating_mul(a.domain.len()))
    }

    /// Every attribute combination, last attribute varying fastest.
    pub fn combinations(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = vec![Vec::new()];
        for attr in &self.attributes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    attr.domain.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v.clone());
                        next
                    })
                })
                .collect();
        }
        out
    }

    pub fn property_domain(&self, property: &str) -> Result<&[String]> {
        match self.index.get(property) {
            Some(PropRef::Attribute(i)) => Ok(&self.attributes[*i].domain),
            Some(PropRef::Hyper(i)) => Ok(&self.hyper_domains[*i]),
            None => Err(Error::UnknownReference(format!("no property named `{property}`"))),
        }
    }

    /// Value of `property` for the attribute assignment `values` (schema order).
    pub fn eval_values(&self, values: &[String], property: &str) -> Result<String> {
        match self.index.get(property) {
            Some(PropRef::Attribute(i)) => Ok(values[*i].clone()),
            Some(PropRef::Hyper(i)) => match &self.hyperattributes[*i].body {
                HyperBody::Boolean(expr) => {
                    let truth = expr.eval(&mut |name: &str| self.eval_values(values, name))?;
                    Ok(if truth { TRUE } else { FALSE }.to_string())
                }
                HyperBody::ValueMap { source, cases } => {
                    let v = self.eval_values(values, source)?;
                    cases
                        .iter()
                        .find(|(from, _)| *from == v)
                        .map(|(_, to)| to.clone())
                        .ok_or_else(|| Error::Domain(format!("`{property}` has no case for `{v}`")))
                }
            },
            None => Err(Error::UnknownReference(format!("no property named `{property}`"))),
        }
    }

    pub fn eval_property(&self, sample: &Sample, property: &str) -> Result<String> {
        self.eval_values(&sample.values, property)
    }
}

fn validate_expr(
    schema: &AttributeSchema,
    expr: &Expr,
    owner: &str,
    check_ref: &dyn Fn(&AttributeSchema, &str) -> Result<()>,
) -> Result<()> {
    let check_value = |property: &str, value: &str| -> Result<()> {
        check_ref(schema, property)?;
        if schema.property_domain(property)?.iter().any(|v| v == value) {
            Ok(())
        } else {
            Err(Error::Domain(format!("`{owner}` tests `{property}` against unknown value `{value}`")))
        }
    };
    match expr {
        Expr::In { property, values } => values.iter().try_for_each(|v| check_value(property, v)),
        Expr::Eq { property, value } => check_value(property, value),
        Expr::Not(inner) => validate_expr(schema, inner, owner, check_ref),
        Expr::And(l, r) | Expr::Or(l, r) => {
            validate_expr(schema, l, owner, check_ref)?;
            validate_expr(schema, r, owner, check_ref)
        }
    }
}

/// One annotated input: an identifier and one value per schema attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample {
    pub id: String,
    values: Vec<String>,
}

impl Sample {
    /// Builds a sample from `(attribute, value)` pairs; every schema
    /// attribute must appear exactly once with a value from its domain.
    pub fn new<I, K, V>(schema: &AttributeSchema, id: impl Into<String>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let id = id.into();
        let mut values: Vec<Option<String>> = vec![None; schema.attributes.len()];
        for (name, value) in pairs {
            let name = name.as_ref();
            let i = schema
                .attribute_index(name)
                .ok_or_else(|| Error::AttributeMismatch(format!("sample `{id}` has unknown attribute `{name}`")))?;
            if values[i].is_some() {
                return Err(Error::AttributeMismatch(format!("sample `{id}` repeats attribute `{name}`")));
            }
            values[i] = Some(value.into());
        }
        let values = values
            .into_iter()
            .zip(&schema.attributes)
            .map(|(v, attr)| {
                v.ok_or_else(|| Error::AttributeMismatch(format!("sample `{id}` lacks attribute `{}`", attr.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        Sample::from_values(schema, id, values)
    }

    /// Builds a sample from values listed in schema attribute order.
    pub fn from_values(schema: &AttributeSchema, id: impl Into<String>, values: Vec<String>) -> Result<Self> {
        let id = id.into();
        if values.len() != schema.attributes.len() {
            return Err(Error::AttributeMismatch(format!(
                "sample `{id}` has {} values for {} attributes",
                values.len(),
                schema.attributes.len()
            )));
        }
        for (v, attr) in values.iter().zip(&schema.attributes) {
            if !attr.domain.contains(v) {
                return Err(Error::AttributeMismatch(format!(
                    "sample `{id}`: `{v}` is not a value of `{}`",
                    attr.name
                )));
            }
        }
        Ok(Sample { id, values })
    }

    /// Attribute values in schema order.
    pub fn values(&self) -> &[String] {
        &self.values
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    attributes: Vec<RawAttribute>,
    #[serde(default)]
    hyperattributes: Vec<RawHyper>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttribute {
    name: String,
    values: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHyper {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    map: Option<RawMap>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    source: String,
    cases: IndexMap<String, String>,
}
