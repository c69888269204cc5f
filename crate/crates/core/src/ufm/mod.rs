//! Unconstrained features model: free classifiers `W` and embeddings `H`
//! trained by (stochastic) gradient descent on the CDT/LDT losses, with the
//! distance to the predicted geometry tracked along the way.

mod metrics;
mod objective;
mod train;

pub use metrics::{center_embeddings, gram_distance, nc_metric, train_error};
pub use objective::{grad, loss, loss_and_grad, UfmParams};
pub use train::{train, trained_stats, TrainConfig, TrainError, TrainTrace, TraceRow, TRACE_COLUMNS};
