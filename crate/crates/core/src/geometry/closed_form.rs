//! Scalar formulas for norms and angles of the optimal geometry.
//!
//! They are written for two equal groups (`rho = 1/2`) with
//! `delta_minor = 1`; since every returned quantity is scale free, the
//! setting's own `delta_minor` is irrelevant and only `Delta` is used.

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::sel::StepSetting;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierForms<T> {
    pub w_maj_sq: T,
    pub w_min_sq: T,
    pub norm_ratio_sq: T,
    pub cos_maj_maj: Option<T>,
    pub cos_min_min: Option<T>,
    pub cos_maj_min: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingForms<T> {
    pub h_maj_sq: T,
    pub h_min_sq: T,
    pub norm_ratio_sq: T,
    pub cos_maj_maj: Option<T>,
    pub cos_min_min: Option<T>,
    pub cos_maj_min: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdtForms<T> {
    pub w_norm_ratio_sq: T,
    pub h_norm_ratio_sq: T,
    pub cos_w_maj_maj: Option<T>,
    pub cos_w_min_min: Option<T>,
}

struct Scalars<T> {
    k: T,
    r: T,
    d: T,
    within: bool,
}

fn scalars<T: Real>(setting: &StepSetting<T>) -> Result<Scalars<T>> {
    setting.validate()?;
    if setting.majority_classes() != setting.minority_classes() {
        return domain(format!(
            "closed-form angles need equal groups, got {} majority and {} minority classes",
            setting.majority_classes(),
            setting.minority_classes()
        ));
    }
    Ok(Scalars {
        k: T::from_usize_lossy(setting.k()),
        r: setting.r(),
        d: setting.big_delta(),
        within: setting.k() >= 4,
    })
}

pub fn cdt_classifier_stats<T: Real>(setting: &StepSetting<T>) -> Result<ClassifierForms<T>> {
    let Scalars { k, r, d, within } = scalars(setting)?;
    let two = T::lit(2.0);
    let sr = r.sqrt();
    let sr1 = (r + T::one()).sqrt();
    let d2 = d * d;
    let cube = (T::one() + d2).sqrt().powi(3);
    let cube_inv = (T::one() + T::one() / d2).sqrt().powi(3);
    let frac = T::one() - two / k;

    let w_maj_sq = sr / d * frac + two * d2 * sr1 / (k * cube);
    let w_min_sq = frac + two * sr1 / (k * cube);
    let norm_ratio_sq = (sr / d * (k - two) * cube + two * d2 * sr1) / ((k - two) * cube + two * sr1);
    let cos_maj_maj = (-two * sr + two * sr1 / cube_inv) / ((k - two) * sr + two * sr1 / cube_inv);
    let cos_min_min = (-two + two * sr1 / cube) / (k - two + two * sr1 / cube);
    let cos_maj_min = -(two * d * sr1) / (k * cube * w_maj_sq.sqrt() * w_min_sq.sqrt());
    Ok(ClassifierForms {
        w_maj_sq,
        w_min_sq,
        norm_ratio_sq,
        cos_maj_maj: within.then_some(cos_maj_maj),
        cos_min_min: within.then_some(cos_min_min),
        cos_maj_min,
    })
}

pub fn cdt_embedding_stats<T: Real>(setting: &StepSetting<T>) -> Result<EmbeddingForms<T>> {
    let Scalars { k, r, d, within } = scalars(setting)?;
    let two = T::lit(2.0);
    let sr = r.sqrt();
    let sr1 = (r + T::one()).sqrt();
    let sd = (d * d + T::one()).sqrt();
    let sd_inv = (T::one() / (d * d) + T::one()).sqrt();
    let frac = T::one() - two / k;

    let h_maj_sq = frac / (d * sr) + two / (k * sr1 * sd);
    let h_min_sq = frac + two / (k * sr1 * sd);
    let norm_ratio_sq = ((k - two) * sr1 * sd / (d * sr) + two) / ((k - two) * sr1 * sd + two);
    let cos_maj_maj = (-two * sd_inv * sr1 + two * sr) / ((k - two) * sd_inv * sr1 + two * sr);
    let cos_min_min = (-two * sd * sr1 + two) / ((k - two) * sd * sr1 + two);
    let cos_maj_min = -two / (k * sd * sr1 * h_maj_sq.sqrt() * h_min_sq.sqrt());
    Ok(EmbeddingForms {
        h_maj_sq,
        h_min_sq,
        norm_ratio_sq,
        cos_maj_maj: within.then_some(cos_maj_maj),
        cos_min_min: within.then_some(cos_min_min),
        cos_maj_min,
    })
}

/// `(cos(w_maj, h_maj), cos(w_min, h_min))`.
pub fn cdt_alignment<T: Real>(setting: &StepSetting<T>) -> Result<(T, T)> {
    let Scalars { k, d, .. } = scalars(setting)?;
    let two = T::lit(2.0);
    let w = cdt_classifier_stats(setting)?;
    let h = cdt_embedding_stats(setting)?;
    let d2 = d * d;
    let maj = (k * d2 + (k - two)) / (k * d * (d2 + T::one()) * (w.w_maj_sq * h.h_maj_sq).sqrt());
    let min = (k / d2 + (k - two)) / (k * (T::one() / d2 + T::one()) * (w.w_min_sq * h.h_min_sq).sqrt());
    Ok((maj, min))
}

/// Norm ratios and classifier angles for LDT. The embedding ratio is for
/// the unscaled means `M`.
pub fn ldt_stats<T: Real>(setting: &StepSetting<T>) -> Result<LdtForms<T>> {
    let Scalars { k, r, d, within } = scalars(setting)?;
    let two = T::lit(2.0);
    let sr = r.sqrt();
    let q = ((r + d * d) / two).sqrt();
    let km2 = k - two;
    Ok(LdtForms {
        w_norm_ratio_sq: (km2 * sr + q) / (km2 * d + q),
        h_norm_ratio_sq: (km2 / sr + T::one() / q) / (km2 * d + d * d / q),
        cos_w_maj_maj: within.then(|| (-two * sr + q) / (km2 * sr + q)),
        cos_w_min_min: within.then(|| (-two * d + q) / (km2 * d + q)),
    })
}
