//! Command-line front end. Every file is JSON of the form
//! `{"format": 1, "kind": ..., "data": ...}`; DOT is export only.
//!
//! Exit codes: 0 success, 1 validation or diagnostic failure, 2 usage
//! error, 3 `compare` found the tori distinct.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_standard, label_generators, random_cubic, SphereGraph};
use crate::ids::{PieceId, Side, SphereId};
use crate::normal_graph::{equivalent_with, CanonOptions, CanonicalForm, DecoratedGraph, NormalTorus};
use crate::normalize::{normalize, TraceStep};
use crate::oracle::{
    confluence_fuzz, confluence_search, fuzz, minimality_experiment_with, random_normal_torus, FuzzConfig,
    PerturbOptions, DEFAULT_CONFLUENCE_BOUND,
};
use crate::position::TorusPosition;

pub const FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed input at {location}: {message}")]
    Malformed {
        path: PathBuf,
        location: String,
        message: String,
    },
    #[error("{path}: unsupported format {found} (expected {FORMAT})")]
    Format { path: PathBuf, found: u32 },
    #[error("{path}: expected {expected}, found kind \"{found}\"")]
    Kind {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Failed(String),
}

#[derive(Parser, Debug)]
#[command(
    name = "normal-tori",
    version,
    about = "Normal tori relative to a maximal sphere system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a sphere graph: the standard one of the given rank, or a random one with --seed.
    Graph {
        #[arg(long, default_value_t = 2)]
        rank: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a sphere graph or torus position; report whether the torus is normal.
    Validate { input: PathBuf },
    /// Normalize a torus position; write the normal form and its trace.
    Normalize {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Trace log, one line per move.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Decorate a normal torus with leaf signs.
    Decorate {
        input: PathBuf,
        /// Piece whose chosen side is positive (default: least piece).
        #[arg(long)]
        base: Option<PieceId>,
        #[arg(long, value_enum, default_value_t = SideArg::A)]
        side: SideArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide normal-homotopy equivalence of two tori.
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Do not identify a torus with its axis reversed.
        #[arg(long)]
        no_reversal: bool,
    },
    /// Print the cyclic word of the axis under the standard generator labeling.
    AxisWord {
        input: PathBuf,
        #[arg(long)]
        ascii: bool,
    },
    /// Round-trip fuzzing of random normal tori under inverse moves.
    Fuzz {
        #[command(flatten)]
        run: RunArgs,
        /// Maximum perturbation depth k.
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Exhaustive search over all move orders, for one position or fuzzed ones.
    Confluence {
        input: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        /// Largest total intersection count searched.
        #[arg(long, default_value_t = DEFAULT_CONFLUENCE_BOUND)]
        depth: usize,
    },
    /// Perturb a normal torus (from a file, or random) and check its counts are minimal.
    Minimality {
        input: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        /// Number of inverse moves per trial.
        #[arg(long, default_value_t = 5)]
        depth: usize,
    },
    /// Graphviz rendering of any graph, position or normal torus file.
    ExportDot {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    rank: u32,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Piece bound for random normal tori.
    #[arg(long, default_value_t = 8)]
    size: usize,
    /// Chance that an inverse move is a Cap rather than a Slide.
    #[arg(long, default_value_t = 0.25)]
    cap_probability: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    A,
    B,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::A => Side::A,
            SideArg::B => Side::B,
        }
    }
}

/// Output of `normalize`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationFile {
    pub total: usize,
    pub intersection: BTreeMap<SphereId, usize>,
    pub trace: Vec<TraceStep>,
    pub position: TorusPosition,
    pub normal_torus: NormalTorus,
}

/// Output of `decorate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecorationFile {
    pub canonical: CanonicalForm,
    pub bounds_solid_torus: bool,
    pub decorated: DecoratedGraph,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    format: u32,
    kind: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
struct Header {
    format: u32,
    kind: String,
}

#[derive(Deserialize)]
struct Body<T> {
    data: T,
}

pub const KIND_GRAPH: &str = "sphere-graph";
pub const KIND_POSITION: &str = "torus-position";
pub const KIND_NORMALIZATION: &str = "normalization";
pub const KIND_NORMAL_TORUS: &str = "normal-torus";
pub const KIND_DECORATION: &str = "decoration";
pub const KIND_FUZZ: &str = "fuzz-report";
pub const KIND_CONFLUENCE: &str = "confluence-report";

/// Wrap `data` in the versioned envelope.
pub fn to_document<T: Serialize>(kind: &str, data: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope {
        format: FORMAT,
        kind,
        data,
    })
    .expect("serializable");
    s.push('\n');
    s
}

struct Document {
    path: PathBuf,
    text: String,
    kind: String,
}

impl Document {
    fn read(path: &Path) -> Result<Document, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        let header: Header = parse(path, &text)?;
        if header.format != FORMAT {
            return Err(CliError::Format {
                path: path.to_owned(),
                found: header.format,
            });
        }
        Ok(Document {
            path: path.to_owned(),
            text,
            kind: header.kind,
        })
    }

    fn data<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        Ok(parse::<Body<T>>(&self.path, &self.text)?.data)
    }

    fn wrong_kind(&self, expected: &str) -> CliError {
        CliError::Kind {
            path: self.path.clone(),
            expected: expected.to_owned(),
            found: self.kind.clone(),
        }
    }

    /// The torus position of a position or normalization file, validated.
    fn position(&self) -> Result<TorusPosition, CliError> {
        let t = match self.kind.as_str() {
            KIND_POSITION => self.data::<TorusPosition>()?,
            KIND_NORMALIZATION => self.data::<NormalizationFile>()?.position,
            _ => return Err(self.wrong_kind("a torus position")),
        };
        checked(t)
    }

    /// The normal torus of any torus-carrying file, normalizing if needed.
    fn normal_torus(&self) -> Result<NormalTorus, CliError> {
        match self.kind.as_str() {
            KIND_NORMAL_TORUS => {
                let nt: NormalTorus = self.data()?;
                invalid_if(nt.validate())?;
                Ok(nt)
            }
            KIND_DECORATION => Ok(self.data::<DecorationFile>()?.decorated.torus),
            KIND_POSITION | KIND_NORMALIZATION => {
                let t = self.position()?;
                if t.is_normal().normal {
                    NormalTorus::from_position(&t).map_err(|e| CliError::Failed(e.to_string()))
                } else {
                    normalize(&t)
                        .map(|n| n.normal_torus)
                        .map_err(|e| CliError::Failed(e.to_string()))
                }
            }
            _ => Err(self.wrong_kind("a torus")),
        }
    }

    /// Decorated graph of a torus file; decoration files keep their signs.
    fn decorated(&self) -> Result<DecoratedGraph, CliError> {
        if self.kind == KIND_DECORATION {
            let d = self.data::<DecorationFile>()?.decorated;
            invalid_if(d.validate())?;
            return Ok(d);
        }
        let nt = self.normal_torus()?;
        let base = *nt
            .nodes
            .keys()
            .next()
            .ok_or_else(|| CliError::Failed("normal torus has no nodes".into()))?;
        nt.decorate(base, Side::A).map_err(|e| CliError::Failed(e.to_string()))
    }
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        let at = e.path().to_string();
        CliError::Malformed {
            path: path.to_owned(),
            location: format!("{at} (line {}, column {})", inner.line(), inner.column()),
            message: strip_position(&inner.to_string()).to_owned(),
        }
    })
}

fn strip_position(msg: &str) -> &str {
    msg.rsplit_once(" at line ").map_or(msg, |(head, _)| head)
}

fn invalid_if(diags: Vec<String>) -> Result<(), CliError> {
    if diags.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(diags))
    }
}

fn checked(t: TorusPosition) -> Result<TorusPosition, CliError> {
    invalid_if(t.graph.validate())?;
    invalid_if(t.validate())?;
    Ok(t)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

/// Human-readable line: on stdout when the document went to a file,
/// otherwise on stderr.
fn note(output: Option<&Path>, line: &str) {
    if output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn fuzz_config(run: &RunArgs, max_k: usize) -> Result<FuzzConfig, CliError> {
    if !(0.0..=1.0).contains(&run.cap_probability) {
        return Err(CliError::Failed(format!(
            "cap probability {} is not in [0, 1]",
            run.cap_probability
        )));
    }
    Ok(FuzzConfig {
        seed: run.seed,
        trials: run.trials,
        rank: run.rank,
        max_k,
        size_bound: run.size,
        perturb: PerturbOptions {
            cap_probability: run.cap_probability,
        },
    })
}

/// Outcome of a successful dispatch.
enum Status {
    Ok,
    Distinct,
    /// The document was produced but reports failures.
    Failing,
}

fn dispatch(cmd: Command) -> Result<Status, CliError> {
    match cmd {
        Command::Graph { rank, seed, output } => {
            let g = match seed {
                Some(s) => random_cubic(rank, s),
                None => build_standard(rank),
            }
            .map_err(|e| CliError::Failed(e.to_string()))?;
            emit(output.as_deref(), &to_document(KIND_GRAPH, &g))?;
            Ok(Status::Ok)
        }
        Command::Validate { input } => {
            let doc = Document::read(&input)?;
            match doc.kind.as_str() {
                KIND_GRAPH => {
                    let g: SphereGraph = doc.data()?;
                    invalid_if(g.validate())?;
                    println!(
                        "valid sphere graph: rank {}, {} pants, {} spheres",
                        g.rank(),
                        g.p_vertices().len(),
                        g.edges().len()
                    );
                }
                _ => {
                    let t = doc.position()?;
                    let check = t.is_normal();
                    println!(
                        "valid torus position: {} pieces, {} circles",
                        t.pieces.len(),
                        t.circles.len()
                    );
                    if check.normal {
                        println!("normal");
                    } else {
                        println!("not normal: {}", check.violations.join("; "));
                    }
                    for v in t.parity_violations().into_iter().chain(t.nesting_violations()) {
                        println!("note: {v}");
                    }
                }
            }
            Ok(Status::Ok)
        }
        Command::Normalize { input, output, trace } => {
            let t = Document::read(&input)?.position()?;
            let n = normalize(&t).map_err(|e| CliError::Failed(e.to_string()))?;
            let file = NormalizationFile {
                total: n.position.total_intersection(),
                intersection: n.position.intersection_vector(),
                trace: n.trace,
                position: n.position,
                normal_torus: n.normal_torus,
            };
            let log: String = file.trace.iter().map(|s| format!("{s}\n")).collect();
            let doc = to_document(KIND_NORMALIZATION, &file);
            emit(output.as_deref(), &doc)?;
            match (&trace, &output) {
                (Some(p), _) => fs::write(p, log).map_err(|source| CliError::Io {
                    path: p.clone(),
                    source,
                })?,
                (None, Some(_)) => print!("{log}"),
                (None, None) => {}
            }
            Ok(Status::Ok)
        }
        Command::Decorate {
            input,
            base,
            side,
            output,
        } => {
            let nt = Document::read(&input)?.normal_torus()?;
            let base = match base {
                Some(b) => b,
                None => *nt
                    .nodes
                    .keys()
                    .next()
                    .ok_or_else(|| CliError::Failed("normal torus has no nodes".into()))?,
            };
            let d = nt
                .decorate(base, side.into())
                .map_err(|e| CliError::Failed(e.to_string()))?;
            invalid_if(d.validate())?;
            let file = DecorationFile {
                canonical: d.canonicalize(),
                bounds_solid_torus: d.bounds_solid_torus(),
                decorated: d,
            };
            emit(output.as_deref(), &to_document(KIND_DECORATION, &file))?;
            Ok(Status::Ok)
        }
        Command::Compare {
            first,
            second,
            no_reversal,
        } => {
            let a = Document::read(&first)?.decorated()?;
            let b = Document::read(&second)?.decorated()?;
            let opts = CanonOptions {
                allow_reversal: !no_reversal,
            };
            let same = equivalent_with(&a, &b, opts).map_err(|e| CliError::Failed(e.to_string()))?;
            println!("{}", if same { "EQUIVALENT" } else { "DISTINCT" });
            Ok(if same { Status::Ok } else { Status::Distinct })
        }
        Command::AxisWord { input, ascii } => {
            let nt = Document::read(&input)?.normal_torus()?;
            let word = nt
                .axis_word(&label_generators(&nt.graph))
                .map_err(|e| CliError::Failed(e.to_string()))?;
            println!("{}", if ascii { word.to_ascii() } else { word.to_string() });
            Ok(Status::Ok)
        }
        Command::Fuzz { run, depth } => {
            let report = fuzz(&fuzz_config(&run, depth)?);
            emit(run.output.as_deref(), &to_document(KIND_FUZZ, &report))?;
            note(run.output.as_deref(), &report.summary());
            Ok(if report.passed() { Status::Ok } else { Status::Failing })
        }
        Command::Confluence { input, run, depth } => match input {
            Some(path) => {
                let t = Document::read(&path)?.position()?;
                let report = confluence_search(&t, depth).map_err(|e| CliError::Failed(e.to_string()))?;
                emit(run.output.as_deref(), &to_document(KIND_CONFLUENCE, &report))?;
                note(
                    run.output.as_deref(),
                    &format!(
                        "confluent {} outcomes {} states {} terminals {}",
                        report.confluent,
                        report.outcomes.len(),
                        report.states,
                        report.terminals
                    ),
                );
                Ok(if report.confluent { Status::Ok } else { Status::Failing })
            }
            None => {
                let report = confluence_fuzz(&fuzz_config(&run, 8)?, depth);
                emit(run.output.as_deref(), &to_document(KIND_FUZZ, &report))?;
                note(run.output.as_deref(), &report.summary());
                Ok(if report.passed() { Status::Ok } else { Status::Failing })
            }
        },
        Command::Minimality { input, run, depth } => {
            let nt = match input {
                Some(path) => {
                    let t = Document::read(&path)?.position()?;
                    let check = t.is_normal();
                    if !check.normal {
                        return Err(CliError::Invalid(check.violations));
                    }
                    t
                }
                None => {
                    let g = random_cubic(run.rank, run.seed).map_err(|e| CliError::Failed(e.to_string()))?;
                    random_normal_torus(&Arc::new(g), run.seed, run.size)
                        .map_err(|e| CliError::Failed(e.to_string()))?
                }
            };
            let report =
                minimality_experiment_with(&nt, run.trials, depth, run.seed, fuzz_config(&run, depth)?.perturb);
            emit(run.output.as_deref(), &to_document(KIND_FUZZ, &report))?;
            note(run.output.as_deref(), &report.summary());
            Ok(if report.passed() { Status::Ok } else { Status::Failing })
        }
        Command::ExportDot { input, output } => {
            let doc = Document::read(&input)?;
            let dot = match doc.kind.as_str() {
                KIND_GRAPH => {
                    let g: SphereGraph = doc.data()?;
                    invalid_if(g.validate())?;
                    g.to_dot()
                }
                KIND_POSITION => doc.position()?.to_dot(),
                KIND_DECORATION => doc.decorated()?.to_dot(),
                _ => doc.normal_torus()?.to_dot(),
            };
            emit(output.as_deref(), &dot)?;
            Ok(Status::Ok)
        }
    }
}

/// Run the CLI on `args` (program name first) and return the exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(Status::Ok) => 0,
        Ok(Status::Distinct) => 3,
        Ok(Status::Failing) => 1,
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("error: {line}");
            }
            1
        }
    }
}
