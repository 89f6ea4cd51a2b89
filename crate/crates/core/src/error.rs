use std::fmt;
use std::path::PathBuf;

/// Where in an input a parse error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Byte(usize),
    Line(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Byte(b) => write!(f, "byte {b}"),
            Location::Line(l) => write!(f, "line {l}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {at}: {msg}")]
    Parse { at: Location, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{stage} did not converge within {iterations} iterations")]
    NonConvergence {
        stage: String,
        iterations: usize,
    },

    #[error("stage `{stage}` failed{}: {source}", path.as_ref().map(|p| format!(" on {}", p.display())).unwrap_or_default())]
    Stage {
        stage: &'static str,
        path: Option<PathBuf>,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(at: Location, msg: impl Into<String>) -> Self {
        Error::Parse {
            at,
            msg: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 for bad input, 3 for numeric non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Parse { .. } | Error::Validation(_) => 2,
            Error::NonConvergence { .. } => 3,
            _ => 1,
        }
    }
}

/// Attach a pipeline stage (and optionally the artifact involved) to an error.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str, path: Option<PathBuf>) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str, path: Option<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            path,
            source: Box::new(e),
        })
    }
}
