use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Orthonormal basis `P_m` (m x (m-1)) of the complement of `1_m`.
///
/// Built from the Householder reflector that maps `e_1` to `1_m / sqrt(m)`:
/// the reflector is symmetric and orthogonal, so its columns `2..m` span the
/// complement of its first column.
pub fn simplex_basis<T: Real>(m: usize) -> Result<DMatrix<T>> {
    if m < 2 {
        return domain(format!("simplex basis needs m >= 2, got {m}"));
    }
    Ok(basis_or_empty(m))
}

/// Like [`simplex_basis`] but returns the empty `1 x 0` basis for `m = 1`.
pub(crate) fn basis_or_empty<T: Real>(m: usize) -> DMatrix<T> {
    if m <= 1 {
        return DMatrix::zeros(m, 0);
    }
    let inv_sqrt_m = T::one() / T::from_usize_lossy(m).sqrt();
    // w = e_1 - 1/sqrt(m); |w|^2 = 2 - 2/sqrt(m)
    let w = |i: usize| if i == 0 { T::one() - inv_sqrt_m } else { -inv_sqrt_m };
    let norm_sq = T::lit(2.0) * (T::one() - inv_sqrt_m);
    DMatrix::from_fn(m, m - 1, |i, j| {
        let col = j + 1;
        let identity = if i == col { T::one() } else { T::zero() };
        identity - T::lit(2.0) * w(i) * w(col) / norm_sq
    })
}
