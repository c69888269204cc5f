use serde::{Deserialize, Serialize};

use super::setting::StepSetting;
use super::svd::{b_star, check_sign_agreement, closed_form_svd, numerical_svd};
use super::xi::build_sel;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Settings swept by [`verify_grid`]. Combinations with non-integral
/// `rho k` are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ks: Vec<usize>,
    pub rhos: Vec<f64>,
    pub rs: Vec<u64>,
    pub gammas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            ks: vec![2, 4, 6, 10],
            rhos: vec![0.5, 0.25],
            rs: vec![1, 2, 5, 10],
            gammas: vec![-1.0, -0.5, 0.0, 1.0 / 6.0, 0.5, 1.0],
        }
    }
}

impl GridSpec {
    pub fn settings<T: Real>(&self) -> Vec<StepSetting<T>> {
        let mut out = Vec::new();
        for &k in &self.ks {
            for &rho in &self.rhos {
                for &r in &self.rs {
                    let Ok(base) = StepSetting::<T>::integer(k, rho, r) else { continue };
                    for &g in &self.gammas {
                        out.push(base.clone().with_gamma(T::lit(g)));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport<T> {
    pub k: usize,
    pub minority_classes: usize,
    pub r: T,
    pub gamma: Option<T>,
    /// Largest gap between the sorted closed-form and numerical singular values.
    pub singular_value_dev: T,
    /// `|V Lambda U_otimes^T - Z|_F / |Z|_F`.
    pub reconstruction_rel: T,
    /// Orthonormality residual of `V` and `U_otimes`.
    pub orthonormality: T,
    /// Smallest entry of `B* ⊙ Z^T`.
    pub min_sign_product: T,
}

impl<T: Real> CaseReport<T> {
    pub fn passed(&self, tol: T) -> bool {
        self.singular_value_dev < tol
            && self.reconstruction_rel < tol
            && self.orthonormality < tol
            && self.min_sign_product > T::lit(1e-12)
    }
}

/// Closed-form SVD checked against a dense numerical SVD. `fault` multiplies
/// the leading closed-form singular value by `1 + fault` (a test hook).
pub fn verify_case<T: Real>(setting: &StepSetting<T>, fault: T) -> Result<CaseReport<T>> {
    let mut closed = closed_form_svd(setting)?;
    closed.factors.lambda[0] *= T::one() + fault;
    let sel = build_sel(setting)?;
    let numeric = numerical_svd(&sel)?;
    let singular_value_dev = closed
        .sorted_singular_values()
        .iter()
        .zip(numeric.sorted_singular_values())
        .fold(T::zero(), |m, (a, b)| m.max((*a - b).abs()));
    let z = sel.matrix();
    let reconstruction_rel = (closed.reconstruct() - z).norm() / z.norm();
    let (ov, ou) = closed.orthonormality_residuals();
    let sign = check_sign_agreement(&b_star(&closed), &sel)?;
    Ok(CaseReport {
        k: setting.k(),
        minority_classes: setting.minority_classes(),
        r: setting.r(),
        gamma: setting.gamma(),
        singular_value_dev,
        reconstruction_rel,
        orthonormality: ov.max(ou),
        min_sign_product: sign.min_product,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport<T> {
    pub cases: usize,
    pub max_singular_value_dev: T,
    pub max_reconstruction_rel: T,
    pub max_orthonormality: T,
    pub min_sign_product: T,
    pub tolerance: T,
    pub passed: bool,
    pub failures: Vec<CaseReport<T>>,
}

pub fn verify_grid<T: Real>(grid: &GridSpec, tol: T, fault: T) -> Result<GridReport<T>> {
    let settings = grid.settings::<T>();
    if settings.is_empty() {
        return Err(Error::Config("the verification grid is empty".into()));
    }
    let mut report = GridReport {
        cases: 0,
        max_singular_value_dev: T::zero(),
        max_reconstruction_rel: T::zero(),
        max_orthonormality: T::zero(),
        min_sign_product: T::lit(f64::INFINITY),
        tolerance: tol,
        passed: true,
        failures: Vec::new(),
    };
    for s in &settings {
        let c = verify_case(s, fault)?;
        report.cases += 1;
        report.max_singular_value_dev = report.max_singular_value_dev.max(c.singular_value_dev);
        report.max_reconstruction_rel = report.max_reconstruction_rel.max(c.reconstruction_rel);
        report.max_orthonormality = report.max_orthonormality.max(c.orthonormality);
        report.min_sign_product = report.min_sign_product.min(c.min_sign_product);
        if !c.passed(tol) {
            report.passed = false;
            report.failures.push(c);
        }
    }
    Ok(report)
}
