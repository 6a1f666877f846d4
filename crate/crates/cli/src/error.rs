use std::fmt;
use std::path::PathBuf;

/// Exit code for bad flags or flag combinations.
pub const EXIT_USAGE: u8 = 2;
/// Exit code for unreadable, malformed or inconsistent input.
pub const EXIT_DATA: u8 = 3;
/// Exit code for a numeric failure during fitting.
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io { path: PathBuf, source: std::io::Error },
    Core(hypercomm::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use hypercomm::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Io { .. } => EXIT_DATA,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) => EXIT_USAGE,
                E::Parse { .. } | E::Validation(_) | E::EmptyNetwork | E::Overflow(_) | E::Io(_) => EXIT_DATA,
                E::Numeric { .. } => EXIT_NUMERIC,
                E::Invariant(_) => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<hypercomm::Error> for CliError {
    fn from(e: hypercomm::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Attaches `path` to a core error raised while reading or writing it.
pub fn at(path: &std::path::Path) -> impl FnOnce(hypercomm::Error) -> CliError + '_ {
    move |e| match e {
        hypercomm::Error::Io(source) => CliError::Io { path: path.to_path_buf(), source },
        hypercomm::Error::Parse { line, message } => CliError::Data(format!("{}: line {line}: {message}", path.display())),
        e @ (hypercomm::Error::Validation(_) | hypercomm::Error::EmptyNetwork) => CliError::Data(format!("{}: {e}", path.display())),
        other => CliError::Core(other),
    }
}
