use thiserror::Error;

/// Errors produced by the pipeline.
#[derive(Debug, Error)]
pub enum CareError {
    #[error("failed to read '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("missing required column '{column}' in '{path}'")]
    MissingColumn { column: String, path: String },

    #[error("no valid rows in '{0}'")]
    EmptyInput(String),

    #[error("only {found} SNPs overlap after harmonization; at least {required} are required")]
    InsufficientOverlap { found: usize, required: usize },

    #[error("only {found} instruments passed selection; at least {required} are required")]
    InsufficientInstruments { found: usize, required: usize },

    #[error(
        "selection probability underflowed for SNP '{0}'; its z-score is essentially \
         impossible under the selection event"
    )]
    SelectionUnderflow(String),

    #[error("bias-corrected instrument strength is non-positive; instruments are too weak")]
    WeakInstruments,

    #[error("screening failed for every candidate valid count")]
    ScreeningFailed,

    #[error(
        "{excluded} of {total} bootstrap replicates were invalid \
         (fraction {fraction:.4} exceeds allowed {allowed:.4})"
    )]
    UnstableEstimate {
        excluded: usize,
        total: usize,
        fraction: f64,
        allowed: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, CareError>;
