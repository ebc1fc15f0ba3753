//! Numerical kernels: the symmetrically normalized specialization matrix,
//! a deflated truncated SVD, and dense routines used by the eigen route and
//! as test oracles.

pub mod dense;
pub mod sparse;
pub mod svd;

pub use dense::{dense_oracle_svd, symmetric_eigen, DenseMatrix, DenseSvd, SymmetricEigen, ORACLE_SIZE_LIMIT};
pub use sparse::CsrMatrix;
pub use svd::{normalize_sym, truncated_svd, NormalizedMatrix, SpectralPair, SvdOptions, SvdWarning, TruncatedSvd};
