//! Mapper, adapter and the protocol for helpers run as separate processes.

pub mod adapter;
pub mod external;
pub mod mapper;
pub mod raw;

use thiserror::Error;

use crate::frontend::FrontendError;
use crate::logic::SyntaxError;

pub use adapter::{adapt, AdaptOutcome, NamespaceMap};
pub use external::{run_external_helper, ExternalHelperSpec, OutputKind};
pub use mapper::{map_property, render_encoding};
pub use raw::{parse_raw, render_raw, RawOutput};

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("no property encoding found in {0}")]
    NoEncoding(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("line {line}: {message}")]
    Raw { line: usize, message: String },
    #[error("expression `{text}`: {source}")]
    Expr { text: String, source: SyntaxError },
    #[error("helper executable {0} is missing or not executable")]
    NotExecutable(String),
    #[error("cyclic namespace entry for `{0}`")]
    Cycle(String),
    #[error("namespace maps both `{0}` and `{1}` to `{2}`")]
    NotInjective(String, String, String),
    #[error("location key `{key}` maps to line {line}, which is not in the program")]
    BadLine { key: String, line: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
