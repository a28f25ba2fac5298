use std::fmt;

use crate::contour_ir::Label;

/// Byte range into a parsed input string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn point(at: usize) -> Self {
        Self { start: at, end: at }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate label `{0}`")]
    DuplicateLabel(Label),
    #[error("unknown label `{0}`")]
    UnknownLabel(Label),
    #[error("label `{0}` is both external and internal")]
    OverlappingSets(Label),
    #[error("label `{0}` appears in no sub-function")]
    DanglingLabel(Label),
    #[error("syntax error at {span}: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{source} (at {span})")]
    Located {
        span: SourceSpan,
        #[source]
        source: Box<Error>,
    },
    #[error("super-index covers {found} labels, expected {expected}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid cover: {0}")]
    CoverError(String),
    #[error("out of range: {0}")]
    RangeError(String),
    #[error("label `{0}` repeats inside a step-function chain")]
    OverlappingChains(Label),
    #[error("irreducible block: {0}")]
    IrreducibleBlock(String),
    #[error("no Langreth name for factor {0}")]
    NamingUnavailable(String),
    #[error("expression is not fully expanded: {0}")]
    NotFullyExpanded(String),
    #[error("time coincidence on the discrete contour: {0}")]
    GridTieError(String),
    #[error("unknown component: {0}")]
    UnknownComponent(String),
}

impl Error {
    /// Span of a parse failure, if any.
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            Error::Syntax { span, .. } | Error::Located { span, .. } => Some(*span),
            _ => None,
        }
    }

    pub(crate) fn at(self, span: SourceSpan) -> Error {
        match self {
            e @ (Error::Syntax { .. } | Error::Located { .. }) => e,
            e => Error::Located {
                span,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
