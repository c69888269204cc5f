use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{center_embeddings, gram_distance, nc_metric, train_error};
use super::objective::{loss, sample_loss, UfmParams};
use crate::error::{Error, Result};
use crate::geometry::{
    average_stats, centering_check, class_means_of, predict_grams, GeometryStats, GramTriple, LossKind,
};
use crate::scalar::Real;
use crate::sel::StepSetting;

pub const TRACE_COLUMNS: [&str; 8] =
    ["epoch", "loss", "train_error", "gramdist_w", "gramdist_m", "nc", "center_w", "center_m"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    pub d: usize,
    pub setting: StepSetting<T>,
    pub lr: T,
    pub epochs: usize,
    /// Samples per step; 0 means full batch.
    pub batch_size: usize,
    /// Decoupled weight decay applied to `W` and `H` every step.
    pub weight_decay: T,
    pub seed: u64,
    pub loss: LossKind,
    /// Rescale `delta` so that it sums to `k`.
    pub normalize_delta: bool,
    pub init_std: f64,
    pub log_every: usize,
}

impl<T: Real> TrainConfig<T> {
    /// k = 10, two equal groups, R = 10, n_min = 5 (n = 275), d = 20,
    /// batch 5, 6000 epochs, `delta_maj / delta_minor = R^gamma`.
    pub fn standard(loss: LossKind, gamma: T) -> Result<Self> {
        let setting = StepSetting::integer(10, 0.5, 10)?.with_n_min(5)?.with_gamma(gamma);
        Ok(Self {
            d: 20,
            setting,
            lr: T::lit(0.5),
            epochs: 6000,
            batch_size: 5,
            weight_decay: T::zero(),
            seed: 0,
            loss,
            normalize_delta: true,
            init_std: 0.1,
            log_every: 50,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.setting.validate()?;
        if !(self.lr > T::zero()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.weight_decay < T::zero() {
            return Err(Error::Config("weight decay must be non-negative".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log interval must be at least 1".into()));
        }
        if self.d + 1 < self.setting.k() {
            return Err(Error::Config(format!("d = {} is below k - 1", self.d)));
        }
        Ok(())
    }

    /// The `delta` actually used in the loss.
    pub fn delta(&self) -> Vec<T> {
        let base = self.setting.deltas();
        match (self.loss, self.normalize_delta) {
            (LossKind::Ce, _) => vec![T::one(); self.setting.k()],
            (_, true) => base.normalized().as_slice().to_vec(),
            (_, false) => base.as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow<T> {
    pub epoch: usize,
    /// Mean loss over all samples.
    pub loss: T,
    pub train_error: T,
    pub gramdist_w: T,
    pub gramdist_m: T,
    pub nc: T,
    pub center_w: T,
    pub center_m: T,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainTrace<T> {
    pub rows: Vec<TraceRow<T>>,
}

impl<T: Real> TrainTrace<T> {
    pub fn last(&self) -> Option<&TraceRow<T>> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = TRACE_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let fields = [r.loss, r.train_error, r.gramdist_w, r.gramdist_m, r.nc, r.center_w, r.center_m];
            out.push_str(&r.epoch.to_string());
            for f in fields {
                out.push(',');
                out.push_str(&f.to_string());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug)]
pub enum TrainError<T: Real> {
    Invalid(Error),
    /// Non-finite parameters or loss; carries the state at the end of the
    /// last finite epoch.
    Diverged {
        epoch: usize,
        last_valid: Box<UfmParams<T>>,
        trace: TrainTrace<T>,
    },
}

impl<T: Real> From<Error> for TrainError<T> {
    fn from(e: Error) -> Self {
        TrainError::Invalid(e)
    }
}

impl<T: Real> From<TrainError<T>> for Error {
    fn from(e: TrainError<T>) -> Self {
        match e {
            TrainError::Invalid(e) => e,
            TrainError::Diverged { epoch, .. } => Error::Divergence { epoch, reason: "non-finite parameters".into() },
        }
    }
}

/// Grams of `W` and of the loss-specific centered class means.
pub(crate) fn trained_grams<T: Real>(p: &UfmParams<T>, labels: &[usize], delta: &[T], kind: LossKind) -> Result<GramTriple<T>> {
    let means = class_means_of(&p.h, labels, p.k());
    let centered = center_embeddings(&means, delta, kind)?;
    Ok(GramTriple::from_params(&p.w, &centered))
}

/// Group-averaged geometry of trained parameters.
pub fn trained_stats<T: Real>(p: &UfmParams<T>, config: &TrainConfig<T>) -> Result<GeometryStats<T>> {
    let labels = config.setting.labels();
    let g = trained_grams(p, &labels, &config.delta(), config.loss)?;
    average_stats(&g, &config.setting)
}

fn observe<T: Real>(
    epoch: usize,
    p: &UfmParams<T>,
    labels: &[usize],
    delta: &[T],
    kind: LossKind,
    target: &GramTriple<T>,
) -> Result<TraceRow<T>> {
    let n = T::from_usize_lossy(labels.len());
    let means = class_means_of(&p.h, labels, p.k());
    let g = trained_grams(p, labels, delta, kind)?;
    let (center_w, center_m) = centering_check(&p.w, &means, delta, kind)?;
    Ok(TraceRow {
        epoch,
        loss: loss(p, labels, delta, kind)? / n,
        train_error: train_error(&p.w, &p.h, labels),
        gramdist_w: gram_distance(&g.wtw, &target.wtw)?,
        gramdist_m: gram_distance(&g.mtm, &target.mtm)?,
        nc: nc_metric(&p.h, labels, p.k())?,
        center_w,
        center_m,
    })
}

/// (Stochastic) gradient descent with batch-mean gradients, a fresh
/// shuffle every epoch and a row logged every `log_every` epochs and at the
/// last epoch.
pub fn train<T: Real>(config: &TrainConfig<T>) -> std::result::Result<(UfmParams<T>, TrainTrace<T>), TrainError<T>> {
    config.validate()?;
    let setting = &config.setting;
    let (k, n) = (setting.k(), setting.n_samples());
    let labels = setting.labels();
    let delta = config.delta();
    let kind = config.loss;
    let target = predict_grams(kind, setting)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut p = UfmParams::gaussian(config.d, k, n, config.init_std, &mut rng)?;
    let batch = if config.batch_size == 0 { n } else { config.batch_size.min(n) };
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = TrainTrace { rows: Vec::new() };
    let decay = T::one() - config.lr * config.weight_decay;
    let mut logits = vec![T::zero(); k];
    let mut gcol = vec![T::zero(); k];

    for epoch in 1..=config.epochs {
        let last_valid = p.clone();
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let scale = config.lr / T::from_usize_lossy(chunk.len());
            let mut g = DMatrix::zeros(k, chunk.len());
            for (j, &i) in chunk.iter().enumerate() {
                let h = p.h.column(i);
                for (c, z) in logits.iter_mut().enumerate() {
                    *z = p.w.column(c).dot(&h);
                }
                sample_loss(&logits, labels[i], &delta, kind, Some(&mut gcol[..]));
                for c in 0..k {
                    g[(c, j)] = gcol[c];
                }
            }
            let hb = p.h.select_columns(chunk);
            let dw = &hb * g.transpose();
            let dh = &p.w * &g;
            if config.weight_decay > T::zero() {
                p.w *= decay;
                p.h *= decay;
            }
            p.w -= dw * scale;
            for (j, &i) in chunk.iter().enumerate() {
                let mut col = p.h.column_mut(i);
                col -= dh.column(j) * scale;
            }
        }
        if !p.is_finite() {
            return Err(TrainError::Diverged { epoch, last_valid: Box::new(last_valid), trace });
        }
        if epoch % config.log_every == 0 || epoch == config.epochs {
            let row = observe(epoch, &p, &labels, &delta, kind, &target)?;
            if !row.loss.is_finite() {
                return Err(TrainError::Diverged { epoch, last_valid: Box::new(last_valid), trace });
            }
            trace.rows.push(row);
        }
    }
    Ok((p, trace))
}
