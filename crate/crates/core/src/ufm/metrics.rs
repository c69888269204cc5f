use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Result};
use crate::geometry::LossKind;
use crate::scalar::Real;

/// `|A / |A|_F - B / |B|_F|_F`, in `[0, 2]`.
pub fn gram_distance<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return domain(format!("shapes {:?} and {:?} differ", a.shape(), b.shape()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if !(na > T::zero() && nb > T::zero()) {
        return domain("Gram distance of a zero matrix");
    }
    Ok((a / na - b / nb).norm())
}

/// Removes the loss-specific center from every class mean: the plain mean
/// for CDT (and CE), the `delta`-weighted mean for LDT.
pub fn center_embeddings<T: Real>(m: &DMatrix<T>, delta: &[T], loss: LossKind) -> Result<DMatrix<T>> {
    let k = m.ncols();
    if delta.len() != k {
        return domain(format!("delta has {} entries, expected {k}", delta.len()));
    }
    let weight = |c: usize| if loss == LossKind::Ldt { delta[c] } else { T::one() };
    let total = (0..k).fold(T::zero(), |a, c| a + weight(c));
    let mut center = DVector::zeros(m.nrows());
    for (c, col) in m.column_iter().enumerate() {
        center += col * (weight(c) / total);
    }
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        col -= &center;
    }
    Ok(out)
}

/// Mean within-class squared deviation over mean squared class-mean norm.
pub fn nc_metric<T: Real>(h: &DMatrix<T>, labels: &[usize], k: usize) -> Result<T> {
    if labels.len() != h.ncols() {
        return domain(format!("{} labels for {} embeddings", labels.len(), h.ncols()));
    }
    let means = crate::geometry::class_means_of(h, labels, k);
    let within = labels
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &y)| acc + (h.column(i) - means.column(y)).norm_squared())
        / T::from_usize_lossy(labels.len().max(1));
    let between = means.column_iter().fold(T::zero(), |acc, c| acc + c.norm_squared()) / T::from_usize_lossy(k);
    if !(between > T::zero()) {
        return domain("all class means are zero");
    }
    Ok(within / between)
}

/// Fraction of samples whose plain logit `w_y^T h_i` is not strictly the
/// largest (ties count as errors).
pub fn train_error<T: Real>(w: &DMatrix<T>, h: &DMatrix<T>, labels: &[usize]) -> T {
    let z = w.transpose() * h;
    let wrong = labels
        .iter()
        .enumerate()
        .filter(|&(i, &y)| (0..z.nrows()).any(|c| c != y && z[(c, i)] >= z[(y, i)]))
        .count();
    T::from_usize_lossy(wrong) / T::from_usize_lossy(labels.len().max(1))
}
