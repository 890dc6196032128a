//! Dense and banded linear algebra used across the crate.
//!
//! Dense symmetric/Hermitian eigensolves, singular values, and symmetric
//! indefinite inertia go through LAPACK (`lapack`). Large sparse operators
//! are counted instead through a reordered banded LDLᵀ (`rcm` + `band`),
//! which keeps memory at O(n·bandwidth).

mod band;
mod lapack;
mod rcm;

pub use band::{band_ldlt_inertia, BandError, BandMatrix, Inertia};
pub use lapack::{
    dense_inertia, eigh, eigvalsh, eigvalsh_complex, gemm_abh, gemm_abt, singular_values,
    syrk_upper_update, LinalgError,
};
pub use rcm::{permuted_bandwidth, rcm_order};
