use nalgebra::DMatrix;

use super::LossKind;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sel::{build_xi, closed_form_factors, StepSetting};

const SYMMETRY_ABS: f64 = 1e-12;
const PSD_FLOOR: f64 = 1e-10;
const RANK_REL: f64 = 1e-9;

/// Gram matrices `W^T W`, `M^T M` and `W^T M` of a geometry (all `k x k`).
#[derive(Debug, Clone, PartialEq)]
pub struct GramTriple<T: Real> {
    pub wtw: DMatrix<T>,
    pub mtm: DMatrix<T>,
    pub wtm: DMatrix<T>,
}

impl<T: Real> GramTriple<T> {
    /// Grams of classifiers `w` (d x k) and class means `m` (d x k).
    pub fn from_params(w: &DMatrix<T>, m: &DMatrix<T>) -> Self {
        Self {
            wtw: w.transpose() * w,
            mtm: m.transpose() * m,
            wtm: w.transpose() * m,
        }
    }

    pub fn k(&self) -> usize {
        self.wtw.nrows()
    }

    /// Symmetry, positive semi-definiteness and rank `k - 1` of both
    /// Gram matrices. Tolerances are relative to the largest entry.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        for (name, g) in [("W^T W", &self.wtw), ("M^T M", &self.mtm)] {
            if g.shape() != (k, k) {
                return Err(Error::Structural(format!("{name} is {:?}, expected {k} x {k}", g.shape())));
            }
            let scale = g.amax().max(T::one());
            let asym = (g - g.transpose()).amax();
            if asym > T::lit(SYMMETRY_ABS) * scale {
                return Err(Error::Structural(format!("{name} is not symmetric (residual {asym})")));
            }
            let eig = g.clone().symmetric_eigen().eigenvalues;
            let min = eig.min();
            if min < -T::lit(PSD_FLOOR) * scale {
                return Err(Error::Structural(format!("{name} has eigenvalue {min}")));
            }
            let cutoff = eig.max() * T::lit(RANK_REL);
            let rank = eig.iter().filter(|&&e| e > cutoff).count();
            if rank != k - 1 {
                return Err(Error::Structural(format!("{name} has rank {rank}, expected {}", k - 1)));
            }
        }
        if self.wtm.shape() != (k, k) {
            return Err(Error::Structural("W^T M must be k x k".into()));
        }
        Ok(())
    }
}

fn two_group<T: Real>(setting: &StepSetting<T>, r: T, big_delta: T) -> Result<crate::sel::SelFactors<T>> {
    closed_form_factors(setting.k(), setting.majority_classes(), r, big_delta)
}

/// `(delta, R)`-SELI Grams with unit scale split: `V Lambda V^T`,
/// `U Lambda U^T` and `Xi`.
pub fn predict_cdt_grams<T: Real>(setting: &StepSetting<T>) -> Result<GramTriple<T>> {
    setting.validate()?;
    let mut f = two_group(setting, setting.r(), setting.big_delta())?;
    f.lambda /= setting.delta_minor();
    Ok(GramTriple {
        wtw: f.v_lambda_vt(),
        mtm: f.u_lambda_ut(),
        wtm: build_xi(setting.deltas().as_slice())?.0,
    })
}

/// `(W, M D)` follow the `(1_k, R~)`-SELI geometry; the returned Grams are
/// for `(W, M)`, i.e. with `D^-1` applied on the embedding side.
///
/// `R~` need not be rational: the block formulas are evaluated directly.
pub fn predict_ldt_grams<T: Real>(setting: &StepSetting<T>) -> Result<GramTriple<T>> {
    setting.validate()?;
    let f = two_group(setting, setting.r_tilde(), T::one())?;
    let delta = setting.deltas();
    let k = setting.k();
    let inv = |c: usize| T::one() / delta.get(c);
    let reduced = f.u_lambda_ut();
    let centering = build_xi(&vec![T::one(); k])?.0;
    Ok(GramTriple {
        wtw: f.v_lambda_vt(),
        mtm: DMatrix::from_fn(k, k, |i, j| reduced[(i, j)] * inv(i) * inv(j)),
        wtm: DMatrix::from_fn(k, k, |i, j| centering[(i, j)] * inv(j)),
    })
}

/// Dispatch on the loss; `Ce` ignores the setting's deltas.
pub fn predict_grams<T: Real>(loss: LossKind, setting: &StepSetting<T>) -> Result<GramTriple<T>> {
    match loss {
        LossKind::Cdt => predict_cdt_grams(setting),
        LossKind::Ldt => predict_ldt_grams(setting),
        LossKind::Ce => predict_cdt_grams(&setting.clone().with_deltas(T::one(), T::one())?),
    }
}
