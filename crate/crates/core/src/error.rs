use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("missing coupling for {input} (required by block `{block}`)")]
    MissingCoupling { block: String, input: String },

    #[error("duplicate block name `{0}`")]
    DuplicateBlock(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: String, expected: usize, got: usize },

    #[error("domain violation in block `{block}`: {variable} = {value} ({reason})")]
    Domain {
        block: String,
        variable: String,
        value: f64,
        reason: &'static str,
    },

    #[error("Newton did not converge after {iterations} iterations (|f|inf = {f_norm:.3e}, |g|inf = {g_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        f_norm: f64,
        g_norm: f64,
    },

    #[error("singular matrix in {context}; dominant null-space variable `{variable}`")]
    Singular { context: String, variable: String },

    #[error("power flow diverged after {iterations} iterations (mismatch {mismatch:.3e})")]
    PowerFlow { iterations: usize, mismatch: f64 },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("time integration failed at t = {t:.6} s: {reason}")]
    Integration { t: f64, reason: String },

    #[error("tuning: {0}")]
    Tuning(String),

    #[error("trace: {0}")]
    Trace(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown signal `{0}`")]
    UnknownSignal(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

/// Attach "module::operation" context to an error.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| Error::Context {
            context: what.to_string(),
            source: Box::new(e),
        })
    }
}
