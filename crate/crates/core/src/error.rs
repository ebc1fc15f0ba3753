use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("row {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },

    #[error("duplicate record for year {year}, country {country}, product {product}")]
    DuplicateKey {
        year: i32,
        country: String,
        product: String,
    },

    #[error("year {0} has no trade")]
    EmptyYear(i32),

    #[error("specialization matrix is empty after pruning")]
    EmptyInstance,

    #[error("bipartite graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("dense oracle refuses a {rows}x{cols} matrix (limit {limit})")]
    TooLarge {
        rows: usize,
        cols: usize,
        limit: usize,
    },

    #[error("degenerate spectrum: second singular value is {sigma2}")]
    DegenerateSpectrum { sigma2: f64 },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("degenerate mixture fit: component {component} collapsed")]
    DegenerateFit { component: usize },

    #[error("partition has an empty side")]
    EmptyPartition,

    #[error("entry ({country}, {product}) is already present")]
    EntryPresent { country: String, product: String },

    #[error("unknown code {0}")]
    UnknownCode(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
