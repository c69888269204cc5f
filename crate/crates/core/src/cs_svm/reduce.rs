use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sel::StepSetting;

const RATIONAL_TOL: f64 = 1e-12;
const MAX_DENOM: u64 = 10_000;

/// Best rational approximation with denominator at most `max_denom`, if it
/// is within relative distance `tol` of `x`. Uses continued fractions.
pub fn rational_approx(x: f64, max_denom: u64, tol: f64) -> Option<Ratio<u64>> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > u64::MAX as f64 / 2.0 {
            return None;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_denom {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if ((p1 as f64 / q1 as f64) - x).abs() <= tol * x {
            return Some(Ratio::new(p1, q1));
        }
        let frac = rest - a as f64;
        if frac <= 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    (q1 > 0 && ((p1 as f64 / q1 as f64) - x).abs() <= tol * x).then(|| Ratio::new(p1, q1))
}

/// The LDT program rewritten in the rescaled means `delta_c mu_c`: a
/// balanced-delta program with imbalance `R~` and embedding weight `beta^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem<T> {
    pub r_tilde: T,
    /// `R~` as a fraction when it is (numerically) rational.
    pub r_tilde_exact: Option<Ratio<u64>>,
    /// Smallest `alpha` with `alpha R~` integral, or 1 if `R~` is irrational.
    pub alpha: u64,
    /// `alpha R~` for majorities and `alpha` for minorities; real-valued
    /// weights in the irrational case.
    pub tilde_counts: Vec<T>,
    /// `n_min / (alpha delta_minor^2)`.
    pub beta_sq: T,
}

impl<T: Real> ReducedProblem<T> {
    pub fn is_rational(&self) -> bool {
        self.r_tilde_exact.is_some()
    }

    /// The balanced-delta setting with ratio `R~` (rational case only).
    pub fn setting(&self, original: &StepSetting<T>) -> Result<StepSetting<T>> {
        let ratio = self
            .r_tilde_exact
            .ok_or_else(|| Error::Domain(format!("R~ = {} is not rational", self.r_tilde)))?;
        StepSetting::with_minority_classes(original.k(), original.minority_classes(), ratio)?.with_alpha(self.alpha)
    }
}

pub fn reduce_ldt<T: Real>(setting: &StepSetting<T>) -> Result<ReducedProblem<T>> {
    setting.validate()?;
    let r_tilde = setting.r_tilde();
    let exact = rational_approx(r_tilde.as_f64(), MAX_DENOM, RATIONAL_TOL);
    let alpha = exact.map_or(1, |r| *r.denom());
    let a = T::lit(alpha as f64);
    let tilde_counts = (0..setting.k())
        .map(|c| if setting.is_majority(c) { a * r_tilde } else { a })
        .collect();
    let dm = setting.delta_minor();
    Ok(ReducedProblem {
        r_tilde,
        r_tilde_exact: exact,
        alpha,
        tilde_counts,
        beta_sq: T::lit(setting.n_min() as f64) / (a * dm * dm),
    })
}
