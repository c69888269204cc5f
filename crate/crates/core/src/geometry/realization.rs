use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LossKind;
use crate::cs_svm::margins;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;
use crate::sel::{closed_form_factors, closed_form_svd, SelSvd, StepSetting};

/// Explicit classifiers `w` (d x k) and embeddings `h` (d x n).
#[derive(Debug, Clone, PartialEq)]
pub struct Realization<T: Real> {
    pub w: DMatrix<T>,
    pub h: DMatrix<T>,
    pub labels: Vec<usize>,
}

impl<T: Real> Realization<T> {
    pub fn k(&self) -> usize {
        self.w.ncols()
    }

    /// Class means `M` (d x k).
    pub fn class_means(&self) -> DMatrix<T> {
        class_means_of(&self.h, &self.labels, self.k())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { w: &self.w * s, h: &self.h * s, labels: self.labels.clone() }
    }
}

/// Column averages of `h` per label (zero for empty classes).
pub fn class_means_of<T: Real>(h: &DMatrix<T>, labels: &[usize], k: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(h.nrows(), k);
    let mut counts = vec![0usize; k];
    for (i, &y) in labels.iter().enumerate() {
        let mut col = m.column_mut(y);
        col += h.column(i);
        counts[y] += 1;
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            let mut col = m.column_mut(c);
            col /= T::from_usize_lossy(n);
        }
    }
    m
}

/// A `d x r` matrix with orthonormal columns, from the QR factor of a
/// seeded Gaussian matrix.
pub fn orthonormal_frame<T: Real>(d: usize, r: usize, seed: u64) -> Result<DMatrix<T>> {
    if d < r {
        return domain(format!("embedding dimension {d} is below the rank {r}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(d, r, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    Ok(q.map(T::lit))
}

fn factor<T: Real>(q: &DMatrix<T>, lambda: &DVector<T>, right: &DMatrix<T>) -> DMatrix<T> {
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= lambda[j].sqrt();
    }
    scaled * right.transpose()
}

/// `W = Q Lambda^(1/2) V^T`, `H = Q Lambda^(1/2) U_otimes^T` for a random
/// orthonormal frame `Q` (d x (k-1)).
pub fn construct_realization<T: Real>(svd: &SelSvd<T>, d: usize, seed: u64) -> Result<Realization<T>> {
    let q = orthonormal_frame(d, svd.lambda().len(), seed)?;
    Ok(Realization {
        w: factor(&q, svd.lambda(), svd.v()),
        h: factor(&q, svd.lambda(), &svd.u_otimes),
        labels: svd.labels(),
    })
}

/// CS-SVM optimum for CDT: the SEL matrix is taken with `alpha = n_min`, so
/// its columns are exactly the training samples.
pub fn cdt_realization<T: Real>(setting: &StepSetting<T>, d: usize, seed: u64) -> Result<Realization<T>> {
    let s = setting.clone().with_alpha(setting.n_min())?;
    construct_realization(&closed_form_svd(&s)?, d, seed)
}

/// CS-SVM optimum for LDT via the balanced-delta reduction with ratio `R~`:
/// `(W, M D)` is a `(1_k, R~)`-SELI realization, embeddings are the means
/// `M = (M D) D^-1`, and `(W, H)` is finally rescaled jointly so that the
/// smallest margin is 1.
pub fn ldt_realization<T: Real>(setting: &StepSetting<T>, d: usize, seed: u64) -> Result<Realization<T>> {
    setting.validate()?;
    let k = setting.k();
    let f = closed_form_factors(k, setting.majority_classes(), setting.r_tilde(), T::one())?;
    let q = orthonormal_frame(d, k - 1, seed)?;
    let w = factor(&q, &f.lambda, &f.v);
    let mut means = factor(&q, &f.lambda, &f.u);
    let delta = setting.deltas();
    for (c, mut col) in means.column_iter_mut().enumerate() {
        col /= delta.get(c);
    }
    let labels = setting.labels();
    let h = DMatrix::from_fn(d, labels.len(), |r, i| means[(r, labels[i])]);
    let raw = Realization { w, h, labels };
    let report = margins(&raw.w, &raw.h, &raw.labels, delta.as_slice(), LossKind::Ldt)?;
    if !(report.min > T::zero()) {
        return Err(Error::Numerical(format!("LDT realization has margin {}", report.min)));
    }
    Ok(raw.scaled(T::one() / report.min.sqrt()))
}

/// Centering residuals `(classifiers, means)`, each divided by the mean
/// column norm: `sum w_c / delta_c` and `sum mu_c` for CDT (and CE),
/// `sum w_c` and `sum delta_c mu_c` for LDT.
pub fn centering_check<T: Real>(w: &DMatrix<T>, m: &DMatrix<T>, delta: &[T], loss: LossKind) -> Result<(T, T)> {
    let k = w.ncols();
    if m.ncols() != k || delta.len() != k {
        return domain(format!(
            "need k = {k} columns everywhere, got M with {} and delta with {}",
            m.ncols(),
            delta.len()
        ));
    }
    let one = |_: usize| T::one();
    let d = |c: usize| delta[c];
    let inv = |c: usize| T::one() / delta[c];
    let (wf, mf): (&dyn Fn(usize) -> T, &dyn Fn(usize) -> T) = match loss {
        LossKind::Ldt => (&one, &d),
        LossKind::Cdt | LossKind::Ce => (&inv, &one),
    };
    Ok((weighted_residual(w, wf), weighted_residual(m, mf)))
}

fn weighted_residual<T: Real>(a: &DMatrix<T>, weight: &dyn Fn(usize) -> T) -> T {
    let mut sum = DVector::zeros(a.nrows());
    let mut norms = T::zero();
    for (c, col) in a.column_iter().enumerate() {
        sum += col * weight(c);
        norms += col.norm();
    }
    let mean = norms / T::from_usize_lossy(a.ncols());
    if mean > T::zero() {
        sum.norm() / mean
    } else {
        sum.norm()
    }
}
