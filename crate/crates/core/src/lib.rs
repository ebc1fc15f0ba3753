//! Economic and product complexity indices computed as a spectral
//! co-clustering of the country–product specialization matrix.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! thread pools live in the `ecoplex` companion crate.
//!
//! Pipeline:
//!
//! 1. [`specmatrix`]: trade flows → RCA → binary specialization matrix → pruning.
//! 2. [`linalg`]: symmetric normalization and a deflated truncated SVD, plus
//!    dense routines used as oracles and by the eigen route.
//! 3. [`complexity`]: ECI/PCI by the SVD route, the random-walk eigen route
//!    and the Method of Reflections.
//! 4. [`cocluster`]: joint embedding, two-component 1-D GMM, hard/soft labels.
//! 5. [`interpretation`]: numerical checks of the random-walk, Ncut and
//!    canonical-correlation identities.
//! 6. [`simulate`]: single-addition sweeps and greedy ECI maximization.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod cocluster;
pub mod complexity;
pub mod error;
pub mod exec;
pub mod interpretation;
pub mod linalg;
pub mod math;
pub mod simulate;
pub mod specmatrix;
pub mod synth;

pub use error::{Error, Result};
