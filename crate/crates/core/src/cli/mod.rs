//! The `facalc` command line, shared by the binary and the C interface.

mod commands;
pub mod format;
pub mod report;
pub mod session;

use std::ffi::OsString;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::morphisms::EvalError;
use crate::tcoalg::Window;

pub use format::FileData;
pub use report::{Check, Flag, Report};
pub use session::Session;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_PARSE: i32 = 64;
pub const EXIT_RESOLVE: i32 = 65;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unresolved name: {0}")]
    Resolve(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl LoadError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LoadError::Parse(_) => EXIT_PARSE,
            LoadError::Resolve(_) => EXIT_RESOLVE,
            LoadError::Eval(EvalError::Undecided(_) | EvalError::OutsideDomain { .. }) => EXIT_UNDECIDED,
            LoadError::Eval(EvalError::LeibnizResidual(_)) => EXIT_FAIL,
            LoadError::Eval(_) => EXIT_PARSE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Structure file (JSON).
    pub file: String,
    /// Names the command acts on; checks default to everything applicable.
    pub entities: Vec<String>,
    /// Longest input word (or chain) that relations are checked on.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Longest word used when printing or comparing components.
    #[arg(long)]
    pub word_len_max: Option<usize>,
    /// Override the file's window, as `N,E`.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// b² = 0 on each A∞-structure.
    CheckB2(Common),
    /// The A∞-functor equation for cofunctors.
    CheckFunctor(Common),
    /// B² = 0 on the coderivation quiver, and the defining property of B.
    #[command(name = "check-B2")]
    CheckCoderB2(Common),
    /// Compose cofunctors `f g ...`.
    Compose(Common),
    /// Push a coderivation along a cofunctor: `r h`.
    Push(Common),
    /// Pull a coderivation back along a cofunctor: `e r`.
    Pull(Common),
    /// Evaluate a word through a cofunctor or a chain of coderivations.
    Eval(Common),
    /// Recover ψ from (𝔞⊠ψ)·ev and express it through declared coderivations.
    SolvePsi(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::CheckB2(c) => ("check-b2", c),
            Command::CheckFunctor(c) => ("check-functor", c),
            Command::CheckCoderB2(c) => ("check-B2", c),
            Command::Compose(c) => ("compose", c),
            Command::Push(c) => ("push", c),
            Command::Pull(c) => ("pull", c),
            Command::Eval(c) => ("eval", c),
            Command::SolvePsi(c) => ("solve-psi", c),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "facalc", version, about = "Exact computations with filtered A∞-categories over Novikov rings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn error(e: &LoadError) -> Outcome {
        Outcome { stdout: String::new(), stderr: format!("facalc: {e}\n"), code: e.exit_code() }
    }
}

fn parse_window(text: &str, data: &FileData) -> Result<Window, LoadError> {
    let (n, e) = text
        .split_once(',')
        .ok_or_else(|| LoadError::Parse(format!("--window expects N,E, got \"{text}\"")))?;
    let n = n.trim().parse().map_err(|_| LoadError::Parse(format!("bad window length \"{n}\"")))?;
    Ok(Window::new(n, format::parse_level(data.kind, e)?))
}

/// Runs a parsed command on the text of its structure file.
pub fn execute(command: &Command, text: &str) -> Outcome {
    let (name, opts) = command.parts();
    let result = FileData::parse(text).and_then(|data| {
        let window = match &opts.window {
            Some(w) => parse_window(w, &data)?,
            None => data.window.clone(),
        };
        let session = Session::build(data, window)?;
        commands::dispatch(name, &session, opts)
    });
    match result {
        Ok(report) => {
            let stdout = match opts.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json(),
            };
            let stderr = match (&report.output, report.flag) {
                (Some(_), Some(f)) if opts.format == Format::Text => format!("flag: {}\n", f.as_str()),
                _ => String::new(),
            };
            Outcome { stdout, stderr, code: report.exit_code() }
        }
        Err(e) => Outcome::error(&e),
    }
}

/// Parses `args` (program name first) and runs the command, reading the
/// structure file through `read`.
pub fn run<I, T>(args: I, read: impl Fn(&Path) -> std::io::Result<String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_PASS };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { stdout: String::new(), stderr: text, code }
            } else {
                Outcome { stdout: text, stderr: String::new(), code }
            };
        }
    };
    let (_, opts) = cli.command.parts();
    match read(Path::new(&opts.file)) {
        Ok(text) => execute(&cli.command, &text),
        Err(e) => Outcome::error(&LoadError::Parse(format!("cannot read {}: {e}", opts.file))),
    }
}
