//! Predicted implicit geometry of the CDT and LDT losses.
//!
//! [`predict_grams`] gives the Gram matrices of the global CS-SVM optimum,
//! [`stats_from_grams`] reduces them to norm ratios and cosines, and the
//! `closed_form` functions evaluate the same quantities from scalar formulas
//! (two-group, equal-split settings only). [`asymptotic_angles`] tabulates
//! the limits for `Delta = R^gamma`, `R -> infinity`. Realizations give
//! explicit `(W, H)` pairs with the predicted Grams.

mod asymptotics;
mod closed_form;
mod grams;
mod loss;
mod realization;
mod stats;

pub use asymptotics::{asymptotic_angles, AsymptoticAngles, BREAKPOINT_TOL};
pub use closed_form::{
    cdt_alignment, cdt_classifier_stats, cdt_embedding_stats, ldt_stats, ClassifierForms,
    EmbeddingForms, LdtForms,
};
pub use grams::{predict_cdt_grams, predict_grams, predict_ldt_grams, GramTriple};
pub use loss::LossKind;
pub use realization::{
    cdt_realization, centering_check, class_means_of, construct_realization, ldt_realization, orthonormal_frame,
    Realization,
};
pub use stats::{average_stats, stats_from_grams, GeometryStats, GEOMETRY_COLUMNS, SYMMETRY_TOL};
