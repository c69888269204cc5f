//! Implicit geometry of cost-sensitive cross-entropy losses (CDT and LDT)
//! under the unconstrained features model.
//!
//! The crate is organised bottom-up:
//!
//! - [`sel`]: the STEP-imbalanced setting, the SEL encoding matrix and its
//!   closed-form SVD, plus a numerical SVD used as an oracle.
//! - [`geometry`]: predicted Gram matrices, closed-form norms and angles,
//!   asymptotic limits and explicit parameter realizations.
//! - [`cs_svm`]: margin/objective certificates for the cost-sensitive SVM,
//!   the LDT reduction and a small binary max-margin solver.
//! - [`ufm`]: gradient-descent training of the unconstrained features model.
//! - [`gmm`]: Monte Carlo balanced error under a Gaussian mixture and the
//!   post-hoc rescaling of majority classifiers.
//! - [`cli`]: the experiment driver behind the `seli` binary.
//!
//! Numerical code is generic over [`Real`] (`f32`/`f64`); the exact
//! constructions of the encoding matrix also accept [`Field`] scalars such as
//! [`Rational`]. Concrete `f64` aliases live at the crate root.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cs_svm;
pub mod error;
pub mod geometry;
pub mod gmm;
pub mod scalar;
pub mod sel;
pub mod ufm;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

/// Exact rational scalar used by the rational constructions and oracles.
pub type Rational = num_rational::Ratio<i64>;

pub type Setting = sel::StepSetting<f64>;
pub type Delta = sel::DeltaVector<f64>;
pub type Xi = sel::XiMatrix<f64>;
pub type Sel = sel::SelMatrix<f64>;
pub type Svd = sel::SelSvd<f64>;
pub type Grams = geometry::GramTriple<f64>;
pub type Stats = geometry::GeometryStats<f64>;
pub type Realization = geometry::Realization<f64>;
pub type Margins = cs_svm::MarginReport<f64>;
pub type Params = ufm::UfmParams<f64>;
pub type Mixture = gmm::GmmModel<f64>;
