use nalgebra::{DMatrix, DVector};

use super::basis::basis_or_empty;
use super::setting::StepSetting;
use super::xi::SelMatrix;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Cutoff (relative to the largest eigenvalue of `Z Z^T`) below which an
/// eigenvalue counts as zero.
const RANK_CUTOFF: f64 = 1e-9;

/// Compact SVD factors `(V, Lambda, U)` of a SEL matrix, without the
/// replicated right factor. Valid for any real `R > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelFactors<T: Real> {
    /// `k x (k-1)`, orthonormal columns.
    pub v: DMatrix<T>,
    /// `k - 1` positive values in block order: majority, mixed, minority.
    pub lambda: DVector<T>,
    /// `k x (k-1)`.
    pub u: DMatrix<T>,
}

impl<T: Real> SelFactors<T> {
    /// `V Lambda V^T`.
    pub fn v_lambda_vt(&self) -> DMatrix<T> {
        sandwich(&self.v, &self.lambda)
    }

    /// `U Lambda U^T`.
    pub fn u_lambda_ut(&self) -> DMatrix<T> {
        sandwich(&self.u, &self.lambda)
    }

    /// `V Lambda U^T`, which equals `Xi`.
    pub fn v_lambda_ut(&self) -> DMatrix<T> {
        &self.v * DMatrix::from_diagonal(&self.lambda) * self.u.transpose()
    }
}

fn sandwich<T: Real>(a: &DMatrix<T>, lambda: &DVector<T>) -> DMatrix<T> {
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= lambda[j];
    }
    scaled * a.transpose()
}

/// Closed-form factors with `delta_minor = 1`, `alpha = 1`, `delta_maj = big_delta`.
///
/// `majority` is the number of majority classes (`(1 - rho) k`); `r` may be
/// any positive real, in which case the replication in `U_otimes` is to be
/// read as a per-class weight.
pub fn closed_form_factors<T: Real>(k: usize, majority: usize, r: T, big_delta: T) -> Result<SelFactors<T>> {
    if majority == 0 || majority >= k {
        return domain(format!("need 1 <= majority classes < k, got {majority} of {k}"));
    }
    if !(r > T::zero() && big_delta > T::zero()) {
        return domain(format!("R and Delta must be positive, got ({r}, {big_delta})"));
    }
    let minority = k - majority;
    let kf = T::from_usize_lossy(k);
    let rho = T::from_usize_lossy(minority) / kf;
    let rho_bar = T::from_usize_lossy(majority) / kf;
    let d2 = big_delta * big_delta;

    let mut v = DMatrix::zeros(k, k - 1);
    let mut u = DMatrix::zeros(k, k - 1);
    let mut lambda = DVector::zeros(k - 1);

    let p_maj = basis_or_empty::<T>(majority);
    let p_min = basis_or_empty::<T>(minority);
    let inv_sqrt_r = T::one() / r.sqrt();
    for j in 0..majority - 1 {
        lambda[j] = r.sqrt() / big_delta;
        for i in 0..majority {
            v[(i, j)] = p_maj[(i, j)];
            u[(i, j)] = p_maj[(i, j)] * inv_sqrt_r;
        }
    }

    let mid = majority - 1;
    lambda[mid] = ((rho_bar + r * rho) / (rho_bar + rho * d2)).sqrt();
    let v_scale = T::one() / (kf * (rho_bar + rho * d2)).sqrt();
    let u_scale = T::one() / (kf * (rho_bar + r * rho)).sqrt();
    let maj_entry = (rho / rho_bar).sqrt();
    let min_entry = (rho_bar / rho).sqrt();
    for i in 0..k {
        if i < majority {
            v[(i, mid)] = -big_delta * maj_entry * v_scale;
            u[(i, mid)] = -maj_entry * u_scale;
        } else {
            v[(i, mid)] = min_entry * v_scale;
            u[(i, mid)] = min_entry * u_scale;
        }
    }

    for j in 0..minority - 1 {
        let col = majority + j;
        lambda[col] = T::one();
        for i in 0..minority {
            v[(majority + i, col)] = p_min[(i, j)];
            u[(majority + i, col)] = p_min[(i, j)];
        }
    }
    Ok(SelFactors { v, lambda, u })
}

/// Compact SVD of a SEL matrix: `Z = V diag(Lambda) U_otimes^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelSvd<T: Real> {
    pub factors: SelFactors<T>,
    /// `n x (k-1)`: rows of `U` replicated per the SEL column pattern.
    pub u_otimes: DMatrix<T>,
    /// Number of `U_otimes` rows belonging to each class.
    pub counts: Vec<usize>,
}

impl<T: Real> SelSvd<T> {
    pub fn v(&self) -> &DMatrix<T> {
        &self.factors.v
    }

    pub fn lambda(&self) -> &DVector<T> {
        &self.factors.lambda
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.factors.u
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        self.v() * DMatrix::from_diagonal(self.lambda()) * self.u_otimes.transpose()
    }

    /// Singular values sorted in descending order.
    pub fn sorted_singular_values(&self) -> Vec<T> {
        let mut s: Vec<T> = self.lambda().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
        s
    }

    /// Class label of every `U_otimes` row.
    pub fn labels(&self) -> Vec<usize> {
        super::setting::labels_from_sizes(&self.counts)
    }

    pub fn nuclear_norm(&self) -> T {
        self.lambda().iter().fold(T::zero(), |a, &b| a + b)
    }

    /// `max |V^T V - I|` and `max |U_otimes^T U_otimes - I|`.
    pub fn orthonormality_residuals(&self) -> (T, T) {
        let r = self.v().ncols();
        let eye = DMatrix::<T>::identity(r, r);
        (
            (self.v().transpose() * self.v() - &eye).amax(),
            (self.u_otimes.transpose() * &self.u_otimes - &eye).amax(),
        )
    }
}

fn replicate_rows<T: Real>(u: &DMatrix<T>, counts: &[usize]) -> DMatrix<T> {
    let n: usize = counts.iter().sum();
    let mut out = DMatrix::zeros(n, u.ncols());
    let mut row = 0;
    for (c, &reps) in counts.iter().enumerate() {
        for _ in 0..reps {
            out.set_row(row, &u.row(c));
            row += 1;
        }
    }
    out
}

/// Closed-form SVD of the setting's SEL matrix.
///
/// The block formulas are evaluated with `delta_minor = 1` and `alpha = 1`,
/// then `Lambda` is scaled by `sqrt(alpha) / delta_minor` and `U` by
/// `1 / sqrt(alpha)`.
pub fn closed_form_svd<T: Real>(setting: &StepSetting<T>) -> Result<SelSvd<T>> {
    setting.validate()?;
    let mut factors = closed_form_factors(
        setting.k(),
        setting.majority_classes(),
        setting.r(),
        setting.big_delta(),
    )?;
    let sqrt_alpha = T::lit(setting.alpha() as f64).sqrt();
    factors.lambda *= sqrt_alpha / setting.delta_minor();
    factors.u /= sqrt_alpha;
    let counts = setting.sel_replication();
    let u_otimes = replicate_rows(&factors.u, &counts);
    Ok(SelSvd { factors, u_otimes, counts })
}

/// Compact rank-`(k-1)` SVD from a dense symmetric eigensolver applied to
/// `Z Z^T` (k x k): `V` are its eigenvectors, `Lambda` the square roots of
/// its eigenvalues and `U_otimes = Z^T V Lambda^-1`.
///
/// nalgebra's SVD with singular vectors loses accuracy on some SEL matrices
/// (errors around 1e-3 in a singular value), so it is not used here.
pub fn numerical_svd<T: Real>(sel: &SelMatrix<T>) -> Result<SelSvd<T>> {
    let k = sel.k();
    let z = sel.matrix();
    let eig = (z * z.transpose()).symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let sv = |i: usize| eig.eigenvalues[i].max(T::zero()).sqrt();
    let cutoff = eig.eigenvalues[order[0]] * T::lit(RANK_CUTOFF);
    let kept: Vec<usize> = order.into_iter().filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    if kept.len() != k - 1 {
        return Err(Error::Numerical(format!(
            "SEL matrix has numerical rank {} (expected {})",
            kept.len(),
            k - 1
        )));
    }
    let v = DMatrix::from_fn(k, k - 1, |i, j| eig.eigenvectors[(i, kept[j])]);
    let lambda = DVector::from_fn(k - 1, |j, _| sv(kept[j]));
    let mut u_otimes = z.transpose() * &v;
    for (j, mut col) in u_otimes.column_iter_mut().enumerate() {
        col /= lambda[j];
    }
    let starts = sel.block_starts();
    let u = DMatrix::from_fn(k, k - 1, |c, j| u_otimes[(starts[c], j)]);
    Ok(SelSvd {
        factors: SelFactors { v, lambda, u },
        u_otimes,
        counts: sel.column_counts().to_vec(),
    })
}

/// `B* = U_otimes V^T` (n x k), the dual certificate.
pub fn b_star<T: Real>(svd: &SelSvd<T>) -> DMatrix<T> {
    &svd.u_otimes * svd.v().transpose()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignReport<T> {
    /// Every entry of `B ⊙ Z^T` is strictly positive.
    pub strictly_positive: bool,
    pub min_product: T,
}

/// Elementwise sign agreement between `b` (n x k) and `Z^T`.
pub fn check_sign_agreement<T: Real>(b: &DMatrix<T>, sel: &SelMatrix<T>) -> Result<SignReport<T>> {
    if b.shape() != (sel.n(), sel.k()) {
        return domain(format!(
            "expected an {} x {} matrix, got {:?}",
            sel.n(),
            sel.k(),
            b.shape()
        ));
    }
    let z = sel.matrix();
    let mut min_product = T::max_value().expect("bounded float");
    for i in 0..sel.n() {
        for c in 0..sel.k() {
            let p = b[(i, c)] * z[(c, i)];
            if p < min_product {
                min_product = p;
            }
        }
    }
    Ok(SignReport { strictly_positive: min_product > T::zero(), min_product })
}
