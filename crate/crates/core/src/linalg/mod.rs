//! Dense complex linear algebra used throughout the crate.

mod json;
mod matrix;
mod ops;

pub use json::{fmt_f64, matrix_from_json, matrix_to_json, read_matrix, write_matrix, Sig17};
pub use matrix::{real_inner, BlockPartition, ComplexMatrix, C64, I, ONE, ZERO};
pub use ops::{
    ad_operator, commutator, direct_sum, expm_skew, frobenius_inner, hermitian_eigen,
    is_nilpotent, is_nilpotent_with, kron, kron_all, singular_values,
};
pub(crate) use ops::{expm_skew_unchecked, real_lstsq, realified_columns, svd_real};
#[cfg(test)]
pub(crate) use ops::svd_complex;

#[cfg(test)]
mod tests;
