//! Semantic rule extraction for emergent-communication message corpora.
//!
//! Messages produced by a speaker are grouped by the attribute and
//! hyperattribute values of the inputs they describe; positions that stay
//! constant inside a group (and vary across the corpus) become semantic
//! rules. The crate also provides topographic similarity, referential-game
//! accuracy, synthetic ground-truth languages and a batch CLI.

pub mod asrd;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod expr;
pub mod metrics;
pub mod report;
pub mod schema;
pub mod synthlang;

pub use asrd::{
    constant_positions, coverage_summary, extract_rules, global_constants, Coverage, CoverageSummary, ExtractOptions,
    Pattern, PropertyValue, RuleTable, SemanticRule,
};
pub use corpus::{AnnotatedCorpus, Entry, Message, Token, DEFAULT_MIN_FREQ};
pub use error::{Error, Result};
pub use metrics::{
    accuracy_per_speaker, attribute_edit_distance, levenshtein, spearman, topsim, AccuracyMatrix, TopSimOptions,
    TopSimReport,
};
pub use report::{Document, Format, MetricsReport};
pub use schema::{Attribute, AttributeSchema, HyperBody, HyperattributeDef, Sample};
