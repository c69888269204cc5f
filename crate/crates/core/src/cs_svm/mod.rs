//! Optimality certificates for the cost-sensitive SVM.
//!
//! [`margins`] and [`objective`] check a candidate `(W, H)` against the
//! CS-SVM constraints and the nuclear-norm value of the dual; [`reduce_ldt`]
//! maps the LDT program onto a balanced-delta one; [`solve_binary_margin`]
//! handles the two-class linear max-margin problems directly.

mod binary;
mod certificate;
mod reduce;

pub use binary::{
    random_separable, solve_binary_margin, verify_binary_lemma, BinaryConstraint, BinaryLemmaReport,
    BinarySolution, SolverOptions,
};
pub use certificate::{certify, margins, nuclear_norm, objective, Certificate, MarginReport, ACTIVE_TOL};
pub use reduce::{rational_approx, reduce_ldt, ReducedProblem};
