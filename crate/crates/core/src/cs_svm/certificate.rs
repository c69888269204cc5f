use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::LossKind;
use crate::scalar::Real;
use crate::geometry::{cdt_realization, ldt_realization};
use crate::sel::{build_sel, numerical_svd, SelMatrix, StepSetting};

/// A constraint counts as active when its margin is within this of 1.
pub const ACTIVE_TOL: f64 = 1e-8;

/// All `n (k - 1)` CS-SVM margins of a candidate solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport<T> {
    #[serde(skip)]
    pub values: Vec<T>,
    pub min: T,
    pub max: T,
    pub n_active: usize,
    pub n_total: usize,
}

impl<T: Real> MarginReport<T> {
    fn from_values(values: Vec<T>) -> Self {
        let min = values.iter().copied().fold(T::max_value().expect("bounded float"), |a, b| a.min(b));
        let max = values.iter().copied().fold(T::min_value().expect("bounded float"), |a, b| a.max(b));
        let tol = T::lit(ACTIVE_TOL);
        let n_active = values.iter().filter(|&&m| (m - T::one()).abs() < tol).count();
        Self { n_total: values.len(), values, min, max, n_active }
    }

    /// Largest `|margin - 1|`.
    pub fn max_deviation_from_one(&self) -> T {
        (self.min - T::one()).abs().max((self.max - T::one()).abs())
    }

    pub fn all_tight(&self, tol: T) -> bool {
        self.max_deviation_from_one() <= tol
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("margin report serializes")
    }
}

/// Margins `(delta_y w_y - delta_c w_c)^T h_i` (CDT) or
/// `delta_y (w_y - w_c)^T h_i` (LDT) for every sample `i` and `c != y_i`.
/// `Ce` uses unit deltas.
pub fn margins<T: Real>(
    w: &DMatrix<T>,
    h: &DMatrix<T>,
    labels: &[usize],
    delta: &[T],
    loss: LossKind,
) -> Result<MarginReport<T>> {
    let k = w.ncols();
    if w.nrows() != h.nrows() {
        return domain(format!("W has {} rows but H has {}", w.nrows(), h.nrows()));
    }
    if h.ncols() != labels.len() {
        return domain(format!("H has {} columns but there are {} labels", h.ncols(), labels.len()));
    }
    if delta.len() != k {
        return domain(format!("delta has {} entries, expected {k}", delta.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return domain(format!("label {bad} out of range for k = {k}"));
    }
    let logits = w.transpose() * h;
    let d = |c: usize| if loss == LossKind::Ce { T::one() } else { delta[c] };
    let mut values = Vec::with_capacity(labels.len() * k.saturating_sub(1));
    for (i, &y) in labels.iter().enumerate() {
        for c in (0..k).filter(|&c| c != y) {
            values.push(match loss {
                LossKind::Ldt => d(y) * (logits[(y, i)] - logits[(c, i)]),
                LossKind::Cdt | LossKind::Ce => d(y) * logits[(y, i)] - d(c) * logits[(c, i)],
            });
        }
    }
    Ok(MarginReport::from_values(values))
}

/// `||W||_F^2 / 2 + ||H||_F^2 / 2`.
pub fn objective<T: Real>(w: &DMatrix<T>, h: &DMatrix<T>) -> T {
    (w.norm_squared() + h.norm_squared()) / T::lit(2.0)
}

/// Sum of singular values, from the dense SVD.
pub fn nuclear_norm<T: Real>(sel: &SelMatrix<T>) -> Result<T> {
    Ok(numerical_svd(sel)?.nuclear_norm())
}

/// Optimality report for the constructed CS-SVM solution of a setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate<T> {
    pub loss: LossKind,
    pub k: usize,
    pub minority_classes: usize,
    pub r: T,
    pub gamma: Option<T>,
    pub n_min: u64,
    pub margins: MarginReport<T>,
    pub objective: T,
    /// `|Z|_*` of the SEL matrix with `alpha = n_min` (CDT and CE only).
    pub nuclear_norm: Option<T>,
    pub passed: bool,
}

/// Builds the predicted optimum in `d` dimensions and checks it: for CDT
/// (and CE) every margin must equal 1 and the objective must equal the
/// nuclear norm, both within `tol`; for LDT the smallest margin must be 1.
pub fn certify<T: Real>(setting: &StepSetting<T>, loss: LossKind, d: usize, seed: u64, tol: T) -> Result<Certificate<T>> {
    let setting = match loss {
        LossKind::Ce => setting.clone().with_deltas(T::one(), T::one())?,
        _ => setting.clone(),
    };
    let delta = setting.deltas();
    let (real, nuclear) = match loss {
        LossKind::Ldt => (ldt_realization(&setting, d, seed)?, None),
        LossKind::Cdt | LossKind::Ce => {
            let sel = build_sel(&setting.clone().with_alpha(setting.n_min())?)?;
            (cdt_realization(&setting, d, seed)?, Some(nuclear_norm(&sel)?))
        }
    };
    let report = margins(&real.w, &real.h, &real.labels, delta.as_slice(), loss)?;
    let value = objective(&real.w, &real.h);
    let passed = match nuclear {
        Some(nuc) => report.all_tight(tol) && (value - nuc).abs() <= tol,
        None => (report.min - T::one()).abs() <= tol,
    };
    Ok(Certificate {
        loss,
        k: setting.k(),
        minority_classes: setting.minority_classes(),
        r: setting.r(),
        gamma: setting.gamma(),
        n_min: setting.n_min(),
        margins: report,
        objective: value,
        nuclear_norm: nuclear,
        passed,
    })
}
