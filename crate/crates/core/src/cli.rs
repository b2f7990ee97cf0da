//! The `robocmd` command line.
//!
//! Exit codes: 0 success, 1 model or command failure, 2 usage or asset
//! error, 3 infrastructure error. Results go to stdout; diagnostics,
//! notices and verbose transcripts go to stderr.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assets;
use crate::evaluator::{self, render_report, EvalError, EvalOptions, ReportFormat};
use crate::frames;
use crate::llm::{Backend, HttpBackend, ReplayBackend, StubBackend, StubRules};
use crate::parser::Grammar;
use crate::pipeline::{self, BackendKind, Mode, PipelineConfig, PipelineError, PipelineResult};
use crate::schema::FrameSchema;
use crate::validator::{render_error_report, validate_light, validate_strict, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFRA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "robocmd", version, about = "Grammar-constrained robot command understanding")]
pub struct Cli {
    /// Suppress everything except the result payload and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a sentence with the grammar alone.
    Parse(ParseArgs),
    /// Run a sentence through a pipeline mode.
    Run(RunArgs),
    /// Validate frame JSON against the schema.
    Validate(ValidateArgs),
    /// Evaluate a pipeline mode on a JSONL corpus.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct AssetArgs {
    /// Grammar file [default: bundled grammar]
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Schema file [default: bundled schema]
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub sentence: String,
    #[command(flatten)]
    pub assets: AssetArgs,
    /// Also print the parse tree.
    #[arg(long)]
    pub tree: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hybrid,
    Llm,
    Nlu,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Hybrid => Mode::Hybrid,
            ModeArg::Llm => Mode::LlmOnly,
            ModeArg::Nlu => Mode::NluOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Stub,
    Http,
    Replay,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Stub => BackendKind::Stub,
            BackendArg::Http => BackendKind::Http,
            BackendArg::Replay => BackendKind::Replay,
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Pipeline config file (JSON). Flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Response transcript for the replay backend.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub max_attempts: Option<usize>,
    #[command(flatten)]
    pub assets: AssetArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Instruction to run; omit with --interactive.
    #[arg(required_unless_present = "interactive", conflicts_with = "interactive")]
    pub sentence: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Print every attempt's prompt, response and report to stderr.
    #[arg(long, short)]
    pub verbose: bool,
    /// Read one instruction per line from stdin, write one JSON result per line.
    #[arg(long)]
    pub interactive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    Light,
    Strict,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Frame JSON text.
    #[arg(required_unless_present = "file", conflicts_with = "file")]
    pub json: Option<String>,
    /// Read the frame JSON from a file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "strict")]
    pub stage: StageArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL corpus [default: bundled synthetic corpus]
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 42)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    /// Evaluate every record instead of a test split.
    #[arg(long, conflicts_with_all = ["split_seed", "test_fraction"])]
    pub no_split: bool,
    #[arg(long, value_enum, default_value = "table")]
    pub format: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parallel workers; ignored unless the backend supports concurrency.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Similarity bucket threshold.
    #[arg(long, default_value_t = evaluator::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Fail {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Fail {
    Fail {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn infra(message: impl std::fmt::Display) -> Fail {
    Fail {
        code: EXIT_INFRA,
        message: message.to_string(),
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    quiet: bool,
}

impl Io<'_> {
    fn notice(&mut self, msg: impl std::fmt::Display) {
        if !self.quiet {
            let _ = writeln!(self.err, "{msg}");
        }
    }
}

fn read_file(path: &Path, what: &str) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_grammar(path: Option<&Path>) -> Result<Grammar, Fail> {
    match path {
        None => Ok(assets::grammar()),
        Some(p) => Grammar::from_text(&read_file(p, "grammar")?).map_err(|e| usage(format!("{}: {e}", p.display()))),
    }
}

fn load_schema(path: Option<&Path>) -> Result<FrameSchema, Fail> {
    match path {
        None => Ok(assets::schema()),
        Some(p) => FrameSchema::from_json(&read_file(p, "schema")?).map_err(|e| usage(format!("{}: {e}", p.display()))),
    }
}

/// Config file plus flag overrides. Relative paths in the file resolve
/// against the file's directory.
fn resolve_config(args: &PipelineArgs) -> Result<PipelineConfig, Fail> {
    let mut cfg = match &args.config {
        None => PipelineConfig::default(),
        Some(p) => {
            let mut cfg = PipelineConfig::from_json(&read_file(p, "config")?)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?;
            let base = p.parent().unwrap_or(Path::new(""));
            for path in [
                &mut cfg.grammar,
                &mut cfg.schema,
                &mut cfg.backend.transcript,
                &mut cfg.backend.stub_rules,
            ]
            .into_iter()
            .flatten()
            {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
            cfg
        }
    };
    if let Some(m) = args.mode {
        cfg.mode = m.into();
    }
    if let Some(b) = args.backend {
        cfg.backend.kind = b.into();
    }
    if let Some(t) = &args.transcript {
        cfg.backend.transcript = Some(t.clone());
    }
    if let Some(n) = args.max_attempts {
        cfg.max_attempts = n;
    }
    if let Some(g) = &args.assets.grammar {
        cfg.grammar = Some(g.clone());
    }
    if let Some(s) = &args.assets.schema {
        cfg.schema = Some(s.clone());
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn build_backend(cfg: &PipelineConfig) -> Result<Option<Box<dyn Backend>>, Fail> {
    if cfg.mode == Mode::NluOnly {
        return Ok(None);
    }
    let backend: Box<dyn Backend> = match cfg.backend.kind {
        BackendKind::Stub => {
            let rules = match &cfg.backend.stub_rules {
                None => assets::stub_rules(),
                Some(p) => StubRules::from_json(&read_file(p, "stub rules")?)
                    .map_err(|e| usage(format!("{}: {e}", p.display())))?,
            };
            Box::new(StubBackend::new(rules))
        }
        BackendKind::Replay => {
            let path = cfg
                .backend
                .transcript
                .as_deref()
                .ok_or_else(|| usage("the replay backend needs --transcript"))?;
            Box::new(ReplayBackend::from_file(path).map_err(usage)?)
        }
        BackendKind::Http => Box::new(HttpBackend::new(cfg.backend.http.clone()).map_err(infra)?),
    };
    Ok(Some(backend))
}

struct Loaded {
    config: PipelineConfig,
    grammar: Grammar,
    schema: FrameSchema,
    backend: Option<Box<dyn Backend>>,
}

impl Loaded {
    fn new(args: &PipelineArgs) -> Result<Self, Fail> {
        let config = resolve_config(args)?;
        Ok(Loaded {
            grammar: load_grammar(config.grammar.as_deref())?,
            schema: load_schema(config.schema.as_deref())?,
            backend: build_backend(&config)?,
            config,
        })
    }

    fn run(&self, sentence: &str) -> Result<PipelineResult, PipelineError> {
        pipeline::run(sentence, self.backend.as_deref(), &self.grammar, &self.schema, &self.config)
    }
}

fn cmd_parse(args: &ParseArgs, io: &mut Io) -> Result<i32, Fail> {
    let grammar = load_grammar(args.assets.grammar.as_deref())?;
    let schema = load_schema(args.assets.schema.as_deref())?;
    let result = pipeline::run_nlu_only(&args.sentence, &grammar, &schema, &PipelineConfig::default());
    if result.is_valid_command() {
        let _ = writeln!(io.out, "{}", result.final_frames.to_json());
    }
    if args.tree {
        if let Some(t) = &result.parse_tree {
            let _ = write!(io.out, "{}", t.render());
        }
    }
    if result.is_valid_command() {
        return Ok(EXIT_OK);
    }
    let report = &result.transcript[0].report;
    let diagnostic = render_error_report(report, &schema).unwrap_or_default();
    let _ = write!(io.err, "{diagnostic}");
    Ok(EXIT_FAILURE)
}

fn print_transcript(result: &PipelineResult, io: &mut Io) {
    if io.quiet {
        return;
    }
    for (i, a) in result.transcript.iter().enumerate() {
        let _ = writeln!(io.err, "=== attempt {} ===", i + 1);
        if let Some(p) = &a.prompt {
            let _ = writeln!(io.err, "--- system ---\n{}\n--- user ---\n{}", p.system, p.user);
        }
        let _ = writeln!(io.err, "--- response ---\n{}", a.raw_response);
        let report = serde_json::to_string_pretty(&a.report).expect("report serializes");
        let _ = writeln!(io.err, "--- report ---\n{report}");
    }
    let _ = writeln!(io.err, "=== outcome: {:?} after {} attempt(s) ===", result.outcome, result.attempts_used);
}

fn cmd_run(args: &RunArgs, io: &mut Io) -> Result<i32, Fail> {
    let loaded = Loaded::new(&args.pipeline)?;
    if !args.interactive {
        let sentence = args.sentence.as_deref().unwrap_or_default();
        let result = loaded.run(sentence).map_err(infra)?;
        if args.verbose {
            print_transcript(&result, io);
        }
        let _ = writeln!(io.out, "{}", result.final_frames.to_json());
        return Ok(if result.is_valid_command() { EXIT_OK } else { EXIT_FAILURE });
    }
    let stdin = std::io::stdin();
    for line in stdin.lock().lines() {
        let line = line.map_err(infra)?;
        if line.trim().is_empty() {
            continue;
        }
        let result = loaded.run(&line).map_err(infra)?;
        if args.verbose {
            print_transcript(&result, io);
        }
        let _ = writeln!(io.out, "{}", result.final_frames.to_json());
        let _ = io.out.flush();
    }
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs, io: &mut Io) -> Result<i32, Fail> {
    let schema = load_schema(args.schema.as_deref())?;
    let text = match (&args.json, &args.file) {
        (_, Some(p)) => read_file(p, "input")?,
        (Some(t), None) => t.clone(),
        (None, None) => return Err(usage("give frame JSON or --file")),
    };
    let (report, salvaged): (ValidationReport, Option<frames::FrameSet>) = match frames::decode(&text) {
        Err(e) => (ValidationReport::undecodable(&e), None),
        Ok(d) => match args.stage {
            StageArg::Strict => (validate_strict(&d.frames, &schema), None),
            StageArg::Light => {
                let (fs, r) = validate_light(&d.frames, &schema);
                (r, Some(fs))
            }
        },
    };
    let mut payload = serde_json::json!({ "report": report });
    if let Some(fs) = &salvaged {
        payload["salvaged"] = serde_json::to_value(fs).expect("frames serialize");
    }
    let _ = writeln!(io.out, "{}", serde_json::to_string_pretty(&payload).expect("json"));
    if let Ok(text) = render_error_report(&report, &schema) {
        io.notice(text.trim_end());
    }
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_eval(args: &EvalArgs, io: &mut Io) -> Result<i32, Fail> {
    let records = match &args.corpus {
        None => assets::corpus(),
        Some(p) => evaluator::load_corpus(p).map_err(|e| usage(e.to_string()))?,
    };
    let records = if args.no_split {
        records
    } else {
        evaluator::split_corpus(&records, args.test_fraction, args.split_seed)
            .map_err(|e| usage(e.to_string()))?
            .1
    };
    if !(args.threshold >= 0.0 && args.threshold <= 1.0) {
        return Err(usage("--threshold must be in [0, 1]"));
    }
    let loaded = Loaded::new(&args.pipeline)?;
    let concurrent = loaded.backend.as_ref().is_none_or(|b| b.supports_concurrency());
    let jobs = if args.jobs > 1 && !concurrent {
        io.notice("note: backend does not support concurrent calls; running with --jobs 1");
        1
    } else {
        args.jobs.max(1)
    };
    let options = EvalOptions {
        label: loaded.config.mode.as_str().to_string(),
        threshold: args.threshold,
        jobs,
    };
    let report = match evaluator::evaluate(&records, |s| loaded.run(s), &loaded.schema, &options) {
        Ok(r) => r,
        Err(EvalError::EmptyCorpus) => return Err(usage("corpus has no records to evaluate")),
        Err(e @ EvalError::Aborted { .. }) => return Err(infra(e)),
    };
    let text = render_report(&report, args.format.into());
    match &args.out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?;
            io.notice(format!("report written to {}", p.display()));
        }
        None => {
            let _ = write!(io.out, "{text}");
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let mut io = Io {
        out,
        err,
        quiet: cli.quiet,
    };
    let result = match &cli.command {
        Command::Parse(a) => cmd_parse(a, &mut io),
        Command::Run(a) => cmd_run(a, &mut io),
        Command::Validate(a) => cmd_validate(a, &mut io),
        Command::Eval(a) => cmd_eval(a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.err, "error: {}", f.message);
            f.code
        }
    }
}
