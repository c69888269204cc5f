//! Balanced test error of a geometry when embeddings follow a Gaussian
//! mixture `h | y = c ~ N(mu_c, sigma_c^2 I)`, plus the post-hoc rescaling of
//! majority classifiers (R-LDT).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{cdt_realization, ldt_realization, LossKind};
use crate::scalar::Real;
use crate::sel::StepSetting;

/// Monte Carlo draws handled by one task; fixed so that results do not
/// depend on the number of worker threads.
const CHUNK: usize = 4096;

pub const GAMMA_GRID: [f64; 8] = [-1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5];

pub const GMM_COLUMNS: [&str; 12] = [
    "loss", "gamma", "beta", "alpha_var", "R", "k", "err_balanced", "err_maj", "err_min", "stderr", "n_samples", "seed",
];

/// `beta = -1, -0.75, ..., 1`.
pub fn default_betas<T: Real>() -> Vec<T> {
    (-4..=4).map(|i| T::lit(f64::from(i) * 0.25)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmConfig<T> {
    /// Draws per class.
    pub samples: usize,
    pub seed: u64,
    /// Variance exponent: `sigma_min^2 / sigma_maj^2 = R^alpha_var`.
    pub alpha_var: T,
    /// Target of `|mu_maj|^2 / sigma_maj^2 + |mu_min|^2 / sigma_min^2`.
    pub snr: T,
}

impl<T: Real> Default for GmmConfig<T> {
    fn default() -> Self {
        Self { samples: 200_000, seed: 0, alpha_var: T::one(), snr: T::lit(25.0) }
    }
}

impl<T: Real> GmmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(crate::Error::Config("need at least one sample per class".into()));
        }
        if !(self.alpha_var >= T::zero()) {
            return Err(crate::Error::Config("alpha_var must be non-negative".into()));
        }
        if !(self.snr > T::zero()) {
            return Err(crate::Error::Config("SNR target must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel<T: Real> {
    /// Class means (d x k).
    pub means: DMatrix<T>,
    /// Per-class standard deviations.
    pub sigma: Vec<T>,
    /// Classifiers (d x k).
    pub w: DMatrix<T>,
    pub majority: Vec<bool>,
}

impl<T: Real> GmmModel<T> {
    pub fn new(means: DMatrix<T>, sigma: Vec<T>, w: DMatrix<T>, majority: Vec<bool>) -> Result<Self> {
        let k = means.ncols();
        if w.shape() != means.shape() || sigma.len() != k || majority.len() != k {
            return domain(format!(
                "means {:?}, classifiers {:?}, {} sigmas and {} group flags do not agree",
                means.shape(),
                w.shape(),
                sigma.len(),
                majority.len()
            ));
        }
        if sigma.iter().any(|&s| !(s > T::zero())) {
            return domain("standard deviations must be positive");
        }
        Ok(Self { means, sigma, w, majority })
    }

    /// Geometry of `loss` at `setting` realised in `d = k - 1` dimensions,
    /// with the STEP variance profile (means not yet normalised).
    pub fn from_setting(loss: LossKind, setting: &StepSetting<T>, alpha_var: T, seed: u64) -> Result<Self> {
        let k = setting.k();
        let real = match loss {
            LossKind::Cdt => cdt_realization(setting, k - 1, seed)?,
            LossKind::Ce => cdt_realization(&setting.clone().with_deltas(T::one(), T::one())?, k - 1, seed)?,
            LossKind::Ldt => ldt_realization(setting, k - 1, seed)?,
        };
        let (maj, min) = sigma_profile(setting.r(), alpha_var)?;
        let majority: Vec<bool> = (0..k).map(|c| setting.is_majority(c)).collect();
        let sigma = majority.iter().map(|&m| if m { maj.sqrt() } else { min.sqrt() }).collect();
        Self::new(real.class_means(), sigma, real.w, majority)
    }

    pub fn k(&self) -> usize {
        self.means.ncols()
    }

    pub fn d(&self) -> usize {
        self.means.nrows()
    }

    /// Group-averaged `|mu|^2 / sigma^2`, summed over the two groups.
    pub fn snr(&self) -> T {
        let group = |flag: bool| {
            let (sum, count) = (0..self.k()).filter(|&c| self.majority[c] == flag).fold((T::zero(), 0), |(s, n), c| {
                (s + self.means.column(c).norm_squared() / (self.sigma[c] * self.sigma[c]), n + 1)
            });
            if count == 0 { T::zero() } else { sum / T::from_usize_lossy(count) }
        };
        group(true) + group(false)
    }
}

/// `(sigma_maj^2, sigma_min^2) = (1, R^alpha_var)`.
pub fn sigma_profile<T: Real>(r: T, alpha_var: T) -> Result<(T, T)> {
    if !(r >= T::one()) || !(alpha_var >= T::zero()) {
        return domain(format!("need R >= 1 and alpha_var >= 0, got R = {r}, alpha_var = {alpha_var}"));
    }
    Ok((T::one(), r.powf(alpha_var)))
}

/// Scales all means by one factor so that [`GmmModel::snr`] equals `target`.
pub fn snr_normalize<T: Real>(model: &GmmModel<T>, target: T) -> Result<GmmModel<T>> {
    let current = model.snr();
    if !(current > T::zero()) {
        return domain("cannot normalise the SNR of zero means");
    }
    if !(target > T::zero()) {
        return domain(format!("SNR target must be positive, got {target}"));
    }
    let mut out = model.clone();
    out.means *= (target / current).sqrt();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedError<T> {
    pub balanced: T,
    pub per_class: Vec<T>,
    pub maj: T,
    pub min: T,
    pub stderr: T,
    pub n_samples: usize,
}

fn class_errors<T: Real>(model: &GmmModel<T>, y: usize, chunk: usize, samples: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((y as u64) << 32) | chunk as u64);
    let (d, k) = (model.d(), model.k());
    let wt = model.w.transpose();
    let base = &wt * model.means.column(y);
    let sigma = model.sigma[y];
    let start = chunk * CHUNK;
    let count = CHUNK.min(samples - start);
    let mut z = DVector::<T>::zeros(d);
    let mut wrong = 0;
    for _ in 0..count {
        for v in z.iter_mut() {
            let x: f64 = StandardNormal.sample(&mut rng);
            *v = T::lit(x);
        }
        let logits = &base + &wt * &z * sigma;
        if (0..k).any(|c| c != y && logits[c] >= logits[y]) {
            wrong += 1;
        }
    }
    wrong
}

/// Monte Carlo balanced error. Ties count as errors. The noise of draw `i`
/// of class `y` depends only on `(seed, y, i)`, so different models are
/// compared on common random numbers.
pub fn balanced_error<T: Real>(model: &GmmModel<T>, config: &GmmConfig<T>) -> Result<BalancedError<T>> {
    config.validate()?;
    let (k, n) = (model.k(), config.samples);
    let chunks = n.div_ceil(CHUNK);
    let tasks: Vec<(usize, usize)> = (0..k).flat_map(|y| (0..chunks).map(move |j| (y, j))).collect();
    let counts: Vec<(usize, usize)> =
        tasks.par_iter().map(|&(y, j)| (y, class_errors(model, y, j, n, config.seed))).collect();
    let mut wrong = vec![0usize; k];
    for (y, e) in counts {
        wrong[y] += e;
    }
    let nt = T::from_usize_lossy(n);
    let per_class: Vec<T> = wrong.iter().map(|&e| T::from_usize_lossy(e) / nt).collect();
    let kt = T::from_usize_lossy(k);
    let mean_of = |flag: bool| {
        let vals: Vec<T> = (0..k).filter(|&c| model.majority[c] == flag).map(|c| per_class[c]).collect();
        if vals.is_empty() {
            T::lit(f64::NAN)
        } else {
            vals.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(vals.len())
        }
    };
    let var = per_class.iter().fold(T::zero(), |a, &p| a + p * (T::one() - p));
    Ok(BalancedError {
        balanced: per_class.iter().fold(T::zero(), |a, &b| a + b) / kt,
        maj: mean_of(true),
        min: mean_of(false),
        stderr: (var / nt).sqrt() / kt,
        per_class,
        n_samples: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmRow<T> {
    pub loss: LossKind,
    pub gamma: T,
    pub beta: Option<T>,
    pub alpha_var: T,
    pub r: T,
    pub k: usize,
    pub err_balanced: T,
    pub err_maj: T,
    pub err_min: T,
    pub stderr: T,
    pub n_samples: usize,
    pub seed: u64,
}

impl<T: Real> GmmRow<T> {
    fn from_error(loss: LossKind, gamma: T, beta: Option<T>, setting: &StepSetting<T>, config: &GmmConfig<T>, e: &BalancedError<T>) -> Self {
        Self {
            loss,
            gamma,
            beta,
            alpha_var: config.alpha_var,
            r: setting.r(),
            k: setting.k(),
            err_balanced: e.balanced,
            err_maj: e.maj,
            err_min: e.min,
            stderr: e.stderr,
            n_samples: e.n_samples,
            seed: config.seed,
        }
    }

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.loss.to_string(),
            self.gamma.to_string(),
            self.beta.map(|b| b.to_string()).unwrap_or_default(),
            self.alpha_var.to_string(),
            self.r.to_string(),
            self.k.to_string(),
            self.err_balanced.to_string(),
            self.err_maj.to_string(),
            self.err_min.to_string(),
            self.stderr.to_string(),
            self.n_samples.to_string(),
            self.seed.to_string(),
        ]
    }
}

pub fn rows_to_csv<T: Real>(rows: &[GmmRow<T>]) -> String {
    let mut out = GMM_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_record().join(","));
        out.push('\n');
    }
    out
}

/// Balanced error of the `loss` geometry for each `gamma`, with `template`
/// supplying `k`, `rho` and `R`.
pub fn sweep_gamma<T: Real>(loss: LossKind, gammas: &[T], template: &StepSetting<T>, config: &GmmConfig<T>) -> Result<Vec<GmmRow<T>>> {
    if gammas.is_empty() {
        return domain("empty gamma grid");
    }
    gammas
        .iter()
        .map(|&g| {
            let setting = template.clone().with_gamma(g);
            let model = GmmModel::from_setting(loss, &setting, config.alpha_var, config.seed)?;
            let model = snr_normalize(&model, config.snr)?;
            let e = balanced_error(&model, config)?;
            Ok(GmmRow::from_error(loss, g, None, &setting, config, &e))
        })
        .collect()
}

/// Multiplies the majority columns of `w` by `R^(beta gamma)`.
pub fn rldt_rescale<T: Real>(w: &DMatrix<T>, setting: &StepSetting<T>, beta: T) -> Result<DMatrix<T>> {
    let Some(gamma) = setting.gamma() else {
        return domain("R-LDT rescaling needs a setting with Delta = R^gamma");
    };
    if w.ncols() != setting.k() {
        return domain(format!("W has {} columns, expected {}", w.ncols(), setting.k()));
    }
    let factor = setting.r().powf(beta * gamma);
    let mut out = w.clone();
    for (c, mut col) in out.column_iter_mut().enumerate() {
        if setting.is_majority(c) {
            col *= factor;
        }
    }
    Ok(out)
}

/// Balanced error of the LDT geometry after rescaling the majority
/// classifiers by `R^(beta gamma)`, for each `beta`.
pub fn rldt_sweep<T: Real>(setting: &StepSetting<T>, betas: &[T], config: &GmmConfig<T>) -> Result<Vec<GmmRow<T>>> {
    let Some(gamma) = setting.gamma() else {
        return domain("R-LDT sweep needs a setting with Delta = R^gamma");
    };
    if betas.is_empty() {
        return domain("empty beta grid");
    }
    let base = GmmModel::from_setting(LossKind::Ldt, setting, config.alpha_var, config.seed)?;
    let base = snr_normalize(&base, config.snr)?;
    betas
        .iter()
        .map(|&b| {
            let mut model = base.clone();
            model.w = rldt_rescale(&base.w, setting, b)?;
            let e = balanced_error(&model, config)?;
            Ok(GmmRow::from_error(LossKind::Ldt, gamma, Some(b), setting, config, &e))
        })
        .collect()
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            r[t] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (average ranks for ties); `None` when either
/// input is constant or the lengths differ.
pub fn rank_correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
