//! STEP-imbalanced settings, the SEL encoding matrix and its SVD.
//!
//! Everything downstream (predicted geometry, optimality certificates,
//! convergence targets) is expressed through the SVD factors of the
//! `(delta, R)`-SEL matrix built here. Two independent routes to those
//! factors are provided: [`closed_form_svd`] evaluates the block formulas
//! directly, while [`numerical_svd`] runs a general dense SVD and is used as
//! the oracle.

mod basis;
mod setting;
mod svd;
mod verify;
mod xi;

pub use basis::simplex_basis;
pub use setting::{DeltaVector, StepSetting};
pub use svd::{
    b_star, check_sign_agreement, closed_form_factors, closed_form_svd, numerical_svd, SelFactors,
    SelSvd, SignReport,
};
pub use verify::{verify_case, verify_grid, CaseReport, GridReport, GridSpec};
pub use xi::{build_sel, build_xi, SelMatrix, XiMatrix};
