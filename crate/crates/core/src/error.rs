//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range (digits, grid exponent,
    /// fit windows, and so on).
    #[error("configuration error: {0}")]
    Config(String),

    /// A frequency descriptor denotes a rational number, which the solver
    /// must refuse: every nonzero Fourier mode would eventually hit a zero
    /// divisor.
    #[error("rational frequency: {0}")]
    RationalFrequency(String),

    /// Division by a structurally zero quantity (for example the divisor
    /// attached to the zero mode, or a descriptor with r = 0).
    #[error("zero divisor: {0}")]
    ZeroDivisor(String),

    /// The zero mode of a cohomology right-hand side is not zero to working
    /// accuracy, so no periodic solution exists.
    #[error("cohomology equation unsolvable: right-hand side has mean of magnitude 1e{mean_log10:.1}")]
    Unsolvable { mean_log10: f64 },

    /// Failure while computing a specific expansion order.
    #[error("at order {order}: {source}")]
    AtOrder {
        order: usize,
        #[source]
        source: Box<Error>,
    },

    /// A grid is too coarse to resolve a polynomial without aliasing.
    #[error("grid of {grid} points cannot resolve degree {degree} without aliasing")]
    Aliasing { degree: usize, grid: usize },

    /// Logarithm of a zero norm while building a growth sequence.
    #[error("norm of order-{order} term is zero; its logarithm is undefined")]
    UndefinedLog { order: usize },

    /// A fit or report window contains too few points or lies outside the
    /// available data.
    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    /// Two objects built under different contexts or frequencies were mixed.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// A residual sweep reached the numerical floor of the working precision,
    /// so its slope would be meaningless.
    #[error("residual floor reached at truncation order {order}; raise precision or shrink the window")]
    FloorSaturated { order: usize },

    /// An archive on disk does not satisfy the format contract.
    #[error("archive corrupted: {0}")]
    Corrupted(String),

    /// An archive was written by an incompatible format revision.
    #[error("unsupported archive format version {found} (supported: {supported})")]
    FormatVersion { found: u32, supported: u32 },

    /// An archive stores fewer digits than the caller requested.
    #[error("archive holds {stored} digits, fewer than the {requested} requested")]
    PrecisionDowngrade { stored: u32, requested: u32 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
