//! Command-line driver.
//!
//! Exit status is 0 on success, 1 when an input is rejected and 2 on
//! internal failures. Diagnostics go to the error stream as
//! `file:line:col: severity: message`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::antlr::{self, AntlrGenConfig, GenWarning};
use crate::aspect::{self, WeaveReport};
use crate::builder::{self, BuilderGenConfig};
use crate::metadata::AnnotationStore;
use crate::model::Grammar;
use crate::query::{match_pattern, Binding, Bound};
use crate::span::SourceSpan;
use crate::syntax::{self, print_resolved};
use crate::template::{self, FsLoader};

#[derive(Parser, Debug)]
#[command(name = "gramweave", version, about = "Modular grammars with externally attached metadata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Inputs {
    /// Grammar file.
    grammar: PathBuf,
    /// Directory searched for imported units, after the grammar's own.
    #[arg(long = "include", value_name = "DIR")]
    include: Vec<PathBuf>,
    /// Aspect file, applied in the order given.
    #[arg(long = "aspect", value_name = "FILE")]
    aspects: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and resolve a grammar, print symbol and production counts.
    Check(Inputs),
    /// Print the flattened grammar.
    Resolve(Inputs),
    /// Print the bindings of a query, one per line.
    Query {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(short = 'e', long = "expr", value_name = "QUERY")]
        pattern: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Apply aspects and print what was attached.
    Weave {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Write an ANTLR grammar.
    GenAntlr {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(short = 'o', value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        grammar_name: Option<String>,
    },
    /// Write an ANTLR grammar calling builder interfaces, and the interfaces.
    GenBuilders {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(short = 'o', value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        grammar_name: Option<String>,
        /// Java package of the generated interfaces.
        #[arg(long)]
        package: Option<String>,
    },
}

/// A rejected input, with the place to blame when known.
#[derive(Debug)]
struct Failure {
    location: Option<String>,
    message: String,
    internal: bool,
}

impl Failure {
    fn at(span: Option<&SourceSpan>, message: impl ToString) -> Failure {
        Failure { location: span.map(ToString::to_string), message: message.to_string(), internal: false }
    }

    fn file(path: &Path, message: impl ToString) -> Failure {
        Failure { location: Some(path.display().to_string()), message: message.to_string(), internal: false }
    }
}

struct Session<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Session<'_> {
    fn warn(&mut self, location: Option<&str>, message: &str) {
        let _ = match location {
            Some(l) => writeln!(self.err, "{l}: warning: {message}"),
            None => writeln!(self.err, "warning: {message}"),
        };
    }

    fn gen_warnings(&mut self, warnings: &[GenWarning]) {
        for w in warnings {
            let loc = w.span.as_ref().map(ToString::to_string);
            self.warn(loc.as_deref(), &w.message);
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::file(path, format!("cannot read file: {e}")))
}

fn load_grammar(inputs: &Inputs) -> Result<Grammar, Failure> {
    let text = read(&inputs.grammar)?;
    let file = inputs.grammar.display().to_string();
    let unit = syntax::parse_grammar(&text, &file).map_err(|e| Failure::at(Some(&e.span), &e))?;
    let loader = FsLoader::new(inputs.include.clone());
    template::resolve(&unit, &loader).map_err(|e| Failure::at(Some(e.span()), &e))
}

/// Weaves every aspect in order. Returns the store and one report per aspect.
fn weave(
    s: &mut Session<'_>,
    grammar: &Grammar,
    inputs: &Inputs,
) -> Result<(AnnotationStore, Vec<(String, WeaveReport)>), Failure> {
    let mut store = AnnotationStore::for_grammar(grammar);
    let mut reports = Vec::new();
    for path in &inputs.aspects {
        let text = read(path)?;
        let file = path.display().to_string();
        let a = syntax::parse_aspect(&text, &file).map_err(|e| Failure::at(Some(&e.span), &e))?;
        let (next, report) = aspect::apply(grammar, &a, &store).map_err(|e| Failure::at(Some(e.span()), &e))?;
        for w in &report.warnings {
            s.warn(Some(&w.location), &w.message);
        }
        store = next;
        reports.push((file, report));
    }
    Ok((store, reports))
}

fn locations(grammar: &Grammar, bound: &Bound) -> Vec<String> {
    bound
        .nodes()
        .into_iter()
        .map(|id| grammar.span(id).map_or_else(|| id.to_string(), ToString::to_string))
        .collect()
}

fn binding_line(grammar: &Grammar, vars: &[String], b: &Binding) -> String {
    let parts: Vec<String> = vars
        .iter()
        .filter_map(|v| b.vars.get(v).map(|bound| format!("{v}={}:{}", bound.kind_name(), locations(grammar, bound).join(","))))
        .collect();
    if parts.is_empty() {
        let loc = grammar.span(b.symbol).map_or_else(String::new, ToString::to_string);
        format!("_=symbol:{loc}")
    } else {
        parts.join(" ")
    }
}

fn symbol_name(grammar: &Grammar, b: &Binding) -> String {
    grammar.symbols.iter().find(|s| s.id == b.symbol).map_or_else(String::new, |s| s.name.clone())
}

/// Writes `files` into `dir`. Files already written are removed again if a
/// later one fails.
fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), Failure> {
    let internal = |message: String| Failure { location: Some(dir.display().to_string()), message, internal: true };
    std::fs::create_dir_all(dir).map_err(|e| internal(format!("cannot create output directory: {e}")))?;
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, text) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(internal(format!("cannot write {name}: {e}")));
        }
        written.push(path);
    }
    Ok(())
}

fn execute(s: &mut Session<'_>, command: Command) -> Result<(), Failure> {
    match command {
        Command::Check(inputs) => {
            let g = load_grammar(&inputs)?;
            weave(s, &g, &inputs)?;
            let _ = writeln!(s.out, "{} symbols, {} productions", g.symbols.len(), g.production_count());
        }
        Command::Resolve(inputs) => {
            let g = load_grammar(&inputs)?;
            let _ = write!(s.out, "{}", print_resolved(&g));
        }
        Command::Query { inputs, pattern, format } => {
            let g = load_grammar(&inputs)?;
            let (store, _) = weave(s, &g, &inputs)?;
            let q = syntax::parse_query(&pattern).map_err(|e| Failure::at(Some(&e.span), &e))?;
            let bindings = match_pattern(&g, &store, &q);
            let vars = q.variables();
            match format {
                Format::Text => {
                    for b in &bindings {
                        let _ = writeln!(s.out, "{}", binding_line(&g, &vars, b));
                    }
                }
                Format::Json => {
                    let list: Vec<_> = bindings
                        .iter()
                        .map(|b| {
                            let vars: serde_json::Map<String, serde_json::Value> = vars
                                .iter()
                                .filter_map(|v| {
                                    let bound = b.vars.get(v)?;
                                    Some((v.clone(), json!({ "kind": bound.kind_name(), "locations": locations(&g, bound) })))
                                })
                                .collect();
                            json!({ "symbol": symbol_name(&g, b), "vars": vars })
                        })
                        .collect();
                    let doc = json!({ "query": pattern, "bindings": list });
                    let _ = writeln!(s.out, "{}", serde_json::to_string_pretty(&doc).expect("plain JSON values"));
                }
            }
        }
        Command::Weave { inputs, format } => {
            let g = load_grammar(&inputs)?;
            let (_, reports) = weave(s, &g, &inputs)?;
            match format {
                Format::Text => {
                    let mut total = 0;
                    for (_, r) in &reports {
                        for a in &r.attachments {
                            let _ = writeln!(s.out, "{}: {}.{} = {}", a.origin, a.node, a.attribute, a.value);
                        }
                        total += r.attachments.len();
                    }
                    let _ = writeln!(s.out, "{total} attribute(s) attached");
                }
                Format::Json => {
                    let list: Vec<_> = reports.iter().map(|(file, r)| json!({ "aspect": file, "report": r })).collect();
                    let _ = writeln!(s.out, "{}", serde_json::to_string_pretty(&list).expect("plain JSON values"));
                }
            }
        }
        Command::GenAntlr { inputs, out, grammar_name } => {
            let g = load_grammar(&inputs)?;
            let (store, _) = weave(s, &g, &inputs)?;
            let config = AntlrGenConfig { grammar_name, ..Default::default() };
            let generated = antlr::generate(&g, &store, &config).map_err(|e| Failure::at(e.span(), &e))?;
            s.gen_warnings(&generated.warnings);
            let name = antlr::grammar_name(&g, &store, config.grammar_name.as_deref()).map_err(|e| Failure::at(e.span(), &e))?;
            write_all(&out, &[(format!("{name}.g"), generated.text)])?;
        }
        Command::GenBuilders { inputs, out, grammar_name, package } => {
            let g = load_grammar(&inputs)?;
            let (store, _) = weave(s, &g, &inputs)?;
            let config = BuilderGenConfig { grammar_name, package, ..Default::default() };
            let generated = builder::generate_builders(&g, &store, &config).map_err(|e| Failure::at(e.span(), &e))?;
            s.gen_warnings(&generated.warnings);
            let name = antlr::grammar_name(&g, &store, config.grammar_name.as_deref()).map_err(|e| Failure::at(e.span(), &e))?;
            let mut files = vec![(format!("{name}.g"), generated.grammar)];
            files.extend(generated.interfaces.into_iter().map(|(n, src)| (format!("{n}.java"), src)));
            write_all(&out, &files)?;
        }
    }
    Ok(())
}

/// Runs the tool on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let shown = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{shown}");
                1
            } else {
                let _ = write!(out, "{shown}");
                0
            };
        }
    };
    let mut s = Session { out, err };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(&mut s, cli.command)));
    match result {
        Ok(Ok(())) => 0,
        Ok(Err(f)) => {
            let _ = match &f.location {
                Some(l) => writeln!(s.err, "{l}: error: {}", f.message),
                None => writeln!(s.err, "error: {}", f.message),
            };
            if f.internal {
                2
            } else {
                1
            }
        }
        Err(_) => {
            let _ = writeln!(s.err, "error: internal failure");
            2
        }
    }
}
