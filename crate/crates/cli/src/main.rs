//! `bpcm`: diff, patch and journal BPMN process models from the shell.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 parse, 4 conflict, 5 audit
//! findings. Results go to standard output, diagnostics to standard error.
//! `BPCM_CLOCK` pins the clock to an RFC 3339 instant.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bpcm::journal::{self, decode_line, encode_set, Finding, HitRole, Journal, JournalError};
use bpcm::ontology::export_journal;
use bpcm::{
    apply, diff, invert, parse_bpmn, serialize_bpmn, ApplyError, ChangeSet, Clock, DiffError, DiffRequest, FixedClock,
    ProcessModel, Provenance, SystemClock, Timestamp, VersionTag,
};
use clap::{Args, Parser, Subcommand};

const CLOCK_VAR: &str = "BPCM_CLOCK";

#[derive(Parser)]
#[command(name = "bpcm", version, about = "Change management for BPMN 2.0 process models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the change set that takes OLD to NEW.
    Diff {
        old: PathBuf,
        new: PathBuf,
        #[command(flatten)]
        who: Who,
        /// Version the set starts from.
        #[arg(long, default_value = "v0")]
        base: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a change-set file to a model and write the result.
    Apply {
        set: PathBuf,
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the inverse of a change-set file.
    Invert {
        set: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Work with a journal directory.
    #[command(subcommand)]
    Journal(JournalCommand),
}

#[derive(Args)]
struct Who {
    #[arg(long)]
    agent: String,
    #[arg(long)]
    cause: String,
    #[arg(long = "desc", default_value = "")]
    description: String,
}

impl Who {
    fn provenance(&self) -> Provenance {
        Provenance::new(&self.agent, &self.cause, &self.description)
    }
}

#[derive(Subcommand)]
enum JournalCommand {
    /// Create a journal with a baseline model.
    Init {
        dir: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        /// Authorized agents; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        acl: Vec<String>,
    },
    /// Append a change-set file as the next version.
    Commit { dir: PathBuf, set: PathBuf },
    /// One row per version.
    Log { dir: PathBuf },
    /// Print the canonical XML of a version (the head by default).
    Show {
        dir: PathBuf,
        #[arg(long)]
        version: Option<String>,
    },
    /// Every record that touched an element.
    Trace { dir: PathBuf, element: String },
    /// Audit agents, the version chain and the digest chain.
    Verify { dir: PathBuf },
    /// Commit the inverse of every version after --to.
    Revert {
        dir: PathBuf,
        #[arg(long)]
        to: String,
        #[command(flatten)]
        who: Who,
    },
    /// Write the journal as N-Triples.
    Export {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
    fn io(path: &Path, e: io::Error) -> Self {
        Failure { code: 2, message: format!("{}: {e}", path.display()) }
    }
    fn parse(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
    fn conflict(message: impl Into<String>) -> Self {
        Failure { code: 4, message: message.into() }
    }
}

impl From<JournalError> for Failure {
    fn from(e: JournalError) -> Self {
        let code = match &e {
            JournalError::UnknownVersion(_) | JournalError::NothingToRevert(_) | JournalError::InvalidAgent(_) => 1,
            JournalError::Io { .. } | JournalError::AlreadyExists(_) => 2,
            JournalError::InvalidBaseline(_)
            | JournalError::CorruptJournal(_)
            | JournalError::EmptySet
            | JournalError::InvalidRecord { .. } => 3,
            JournalError::VersionMismatch { .. }
            | JournalError::TimestampRegression { .. }
            | JournalError::Conflict(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<ApplyError> for Failure {
    fn from(e: ApplyError) -> Self {
        Failure::conflict(format!("conflict: {e}"))
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn clock() -> Result<Box<dyn Clock>, Failure> {
    match std::env::var(CLOCK_VAR) {
        Ok(text) => {
            let at: Timestamp = text.parse().map_err(|e| Failure::usage(format!("{CLOCK_VAR}={text:?}: {e}")))?;
            Ok(Box::new(FixedClock(at)))
        }
        Err(_) => Ok(Box::new(SystemClock)),
    }
}

fn tag(text: &str) -> Result<VersionTag, Failure> {
    text.parse().map_err(|_| Failure::usage(format!("not a version tag: {text:?} (expected v0, v1, ...)")))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn read_model(path: &Path) -> Result<ProcessModel, Failure> {
    parse_bpmn(&read_text(path)?).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn read_set(path: &Path) -> Result<ChangeSet, Failure> {
    let text = read_text(path)?;
    let line = text.strip_suffix('\n').unwrap_or(&text);
    if line.contains('\n') {
        return Err(Failure::parse(format!("{}: a change-set file holds exactly one line", path.display())));
    }
    decode_line(line).map(|l| l.set).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

fn set_text(set: &ChangeSet) -> String {
    let mut s = encode_set(set);
    s.push('\n');
    s
}

/// Escapes tabs, newlines and backslashes so each row stays on one line.
fn cell(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r")
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Diff { old, new, who, base, out } => {
            let (a, b) = (read_model(&old)?, read_model(&new)?);
            let clock = clock()?;
            let request = DiffRequest::new(&a, &b, who.provenance()).with_clock(clock.as_ref()).with_base(tag(&base)?);
            let set = diff(&request).map_err(|e| match e {
                DiffError::InvalidProvenance(_) => Failure::usage(e.to_string()),
                DiffError::InvalidModel { .. } => Failure::parse(e.to_string()),
            })?;
            emit(out.as_deref(), &set_text(&set))?;
        }
        Command::Apply { set, model, out } => {
            let patched = apply(&read_set(&set)?, &read_model(&model)?)?;
            emit(out.as_deref(), &serialize_bpmn(&patched))?;
        }
        Command::Invert { set, out } => {
            emit(out.as_deref(), &set_text(&invert(&read_set(&set)?)))?;
        }
        Command::Journal(cmd) => return run_journal(cmd),
    }
    Ok(0)
}

fn run_journal(cmd: JournalCommand) -> Outcome {
    match cmd {
        JournalCommand::Init { dir, baseline, acl } => {
            Journal::init(&dir, &read_model(&baseline)?, acl)?;
            println!("v0");
        }
        JournalCommand::Commit { dir, set } => {
            let set = read_set(&set)?;
            let mut j = Journal::open(&dir)?;
            println!("{}", j.commit(set)?);
        }
        JournalCommand::Log { dir } => {
            let mut out = String::from("version\ttimestamp\tagent\tcause\tdescription\trecords\tset_id\n");
            for row in Journal::open(&dir)?.log() {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    row.version,
                    row.timestamp,
                    cell(&row.provenance.agent_name),
                    cell(&row.provenance.cause),
                    cell(&row.provenance.description),
                    row.record_count,
                    row.set_id
                ));
            }
            emit(None, &out)?;
        }
        JournalCommand::Show { dir, version } => {
            let j = Journal::open(&dir)?;
            let tag = match version {
                Some(v) => tag(&v)?,
                None => j.head_version(),
            };
            emit(None, &serialize_bpmn(&j.version(tag)?))?;
        }
        JournalCommand::Trace { dir, element } => {
            let mut out = String::from("version\trecord_id\tcategory\trole\ttimestamp\tagent\tcause\n");
            for hit in Journal::open(&dir)?.trace(&element).hits {
                let category = match hit.task_kind {
                    Some(kind) => format!("{}/{}", hit.category, kind),
                    None => hit.category.to_string(),
                };
                let role = match hit.role {
                    HitRole::Subject => "subject",
                    HitRole::Endpoint => "endpoint",
                };
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    hit.version,
                    hit.record_id,
                    category,
                    role,
                    hit.timestamp,
                    cell(&hit.provenance.agent_name),
                    cell(&hit.provenance.cause)
                ));
            }
            emit(None, &out)?;
        }
        JournalCommand::Verify { dir } => {
            let findings = journal::verify(&dir)?;
            for f in &findings {
                println!("{f}");
            }
            if !findings.is_empty() {
                eprintln!("error: {} finding(s)", findings.len());
                return Ok(5);
            }
        }
        JournalCommand::Revert { dir, to, who } => {
            let to = tag(&to)?;
            let clock = clock()?;
            let mut j = Journal::open(&dir)?;
            println!("{}", j.revert_to(to, &who.provenance(), clock.as_ref())?);
        }
        JournalCommand::Export { dir, out } => {
            let j = Journal::open(&dir)?;
            let integrity: Vec<Finding> = j.verify()?.into_iter().filter(Finding::is_integrity).collect();
            if !integrity.is_empty() {
                for f in &integrity {
                    eprintln!("{f}");
                }
                return Err(Failure { code: 5, message: "journal fails verification; not exported".into() });
            }
            emit(out.as_deref(), &export_journal(&j)?)?;
        }
    }
    Ok(0)
}
