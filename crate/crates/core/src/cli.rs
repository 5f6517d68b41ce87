//! Batch command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::asrd::{extract_rules, ExtractOptions};
use crate::corpus::{AnnotatedCorpus, Message, DEFAULT_MIN_FREQ};
use crate::error::{Error, Result};
use crate::metrics::{levenshtein, topsim, TopSimOptions};
use crate::report::{self, Document, Format, MetricsReport};
use crate::schema::AttributeSchema;
use crate::synthlang::{self, GameConfig};

/// Schema argument value selecting the bundled two-shape schema.
pub const BUILTIN_MOPRD: &str = "builtin:moprd";

#[derive(Parser, Debug)]
#[command(name = "asrd", version, about = "Semantic rule extraction and metrics for emergent languages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Structured,
    Markdown,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Structured => Format::Structured,
            FormatArg::Markdown => Format::Markdown,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    Compositional,
    Holistic,
    Noisy,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract the semantic rule table from a corpus.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        /// Schema file, or `builtin:moprd`.
        #[arg(long)]
        schema: String,
        #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
        min_freq: f64,
        /// Comma-separated properties to group by (default: all).
        #[arg(long, value_delimiter = ',')]
        properties: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "structured")]
        format: FormatArg,
    },
    /// Topographic similarity of a corpus.
    Topsim {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        schema: String,
        #[arg(long)]
        max_pairs: Option<usize>,
        /// Required when the pair count exceeds --max-pairs.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "structured")]
        format: FormatArg,
    },
    /// Referential game between corpus-parameterised speakers and listeners.
    Game {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        schema: String,
        #[arg(long, default_value_t = 20)]
        candidates: usize,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        speakers: usize,
        #[arg(long, default_value_t = 1)]
        listeners: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
        min_freq: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "structured")]
        format: FormatArg,
    },
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long)]
        schema: String,
        #[arg(long)]
        msg_len: Option<usize>,
        #[arg(long)]
        vocab: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Base corpus for `--kind noisy`.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        synonyms: usize,
        #[arg(long, default_value_t = 0.10)]
        minority_share: f64,
        #[arg(long, default_value_t = synthlang::HOLISTIC_FIXED_PREFIX)]
        fixed_prefix: usize,
        /// Also write the ground-truth rule table (compositional only).
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Levenshtein distance between two comma-separated token lists.
    Distance {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Re-render a structured result in another format.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the CLI and returns the process exit status: 0 on success, 1 on a
/// data or validation error, 2 on a usage error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        let e = Error::from(e);
        match e {
            Error::NotFound(_) => Error::NotFound(path.display().to_string()),
            Error::Io(msg) => Error::Io(format!("{}: {msg}", path.display())),
            other => other,
        }
    })
}

fn load_schema(arg: &str) -> Result<AttributeSchema> {
    if arg == BUILTIN_MOPRD {
        return Ok(synthlang::moprd_schema());
    }
    AttributeSchema::parse(&read(Path::new(arg))?)
}

fn load_corpus(path: &Path, schema: &AttributeSchema) -> Result<AnnotatedCorpus> {
    AnnotatedCorpus::load(&read(path)?, schema)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Extract { corpus, schema, min_freq, properties, out, format } => {
            let schema = load_schema(&schema)?;
            let corpus = load_corpus(&corpus, &schema)?;
            let table = extract_rules(&corpus, &ExtractOptions { threshold: min_freq, properties })?;
            emit(&report::render_rule_table(&table, format.into()), out.as_deref(), stdout)
        }
        Command::Topsim { corpus, schema, max_pairs, seed, out, format } => {
            let schema = load_schema(&schema)?;
            let corpus = load_corpus(&corpus, &schema)?;
            let result = topsim(&corpus, &TopSimOptions { max_pairs, seed })?;
            emit(&report::render_metrics(&MetricsReport::TopSim(result), format.into()), out.as_deref(), stdout)
        }
        Command::Game { corpus, schema, candidates, episodes, seed, speakers, listeners, min_freq, out, format } => {
            let schema = load_schema(&schema)?;
            let corpus = load_corpus(&corpus, &schema)?.filter_by_frequency(min_freq)?;
            let config = GameConfig { candidate_count: candidates, episodes, seed, speakers, listeners };
            let matrix = synthlang::run_lewis_game(&corpus, &config)?;
            emit(&report::render_metrics(&MetricsReport::Accuracy(matrix), format.into()), out.as_deref(), stdout)
        }
        Command::Synth {
            kind,
            schema,
            msg_len,
            vocab,
            seed,
            base,
            synonyms,
            minority_share,
            fixed_prefix,
            truth,
            out,
        } => {
            let schema = load_schema(&schema)?;
            let need = |v: Option<usize>, flag: &str| {
                v.ok_or_else(|| Error::Config(format!("--{flag} is required for this kind")))
            };
            let corpus = match kind {
                SynthKind::Compositional => {
                    let (corpus, table) =
                        synthlang::gen_compositional(&schema, need(msg_len, "msg-len")?, need(vocab, "vocab")?, seed)?;
                    if let Some(path) = truth {
                        std::fs::write(path, report::render_rule_table(&table, Format::Structured))?;
                    }
                    corpus
                }
                SynthKind::Holistic => synthlang::gen_holistic_with_prefix(
                    &schema,
                    need(msg_len, "msg-len")?,
                    need(vocab, "vocab")?,
                    fixed_prefix,
                    seed,
                )?,
                SynthKind::Noisy => {
                    let base = base.ok_or_else(|| Error::Config("--base is required for --kind noisy".into()))?;
                    let base = load_corpus(&base, &schema)?;
                    synthlang::gen_noisy(&base, synonyms, minority_share, seed)?
                }
            };
            emit(&corpus.to_jsonl(), out.as_deref(), stdout)
        }
        Command::Distance { a, b } => {
            let (a, b) = (Message::parse_list(&a)?, Message::parse_list(&b)?);
            writeln!(stdout, "{}", levenshtein(a.tokens(), b.tokens()))?;
            Ok(())
        }
        Command::Render { input, format, out } => {
            let doc: Document = report::parse_document(&read(&input)?)?;
            emit(&report::render(&doc, format.into()), out.as_deref(), stdout)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("asrd").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn distance_prints_levenshtein() {
        assert_eq!(run_capture(&["distance", "--a", "1,2,3", "--b", "1,3,3"]), (0, "1\n".into(), String::new()));
    }

    #[test]
    fn usage_error_exits_2() {
        let (code, _, err) = run_capture(&["extract"]);
        assert_eq!(code, 2);
        assert!(err.contains("--corpus"));
        assert_eq!(run_capture(&["bogus"]).0, 2);
    }

    #[test]
    fn data_error_exits_1_with_code() {
        let (code, _, err) = run_capture(&["distance", "--a", "1,x", "--b", "1"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error: SyntaxError"));
        let (code, _, err) = run_capture(&["extract", "--corpus", "/nonexistent/c.jsonl", "--schema", BUILTIN_MOPRD]);
        assert_eq!(code, 1);
        assert!(err.contains("NotFound"), "{err}");
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("extract"));
    }
}
