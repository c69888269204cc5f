use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// An `(R, rho)`-STEP imbalanced setting with STEP logit adjustment.
///
/// The first `(1 - rho) k` classes are majorities with `R n_min` samples
/// each, the remaining `rho k` classes are minorities with `n_min` samples.
/// `alpha` is the replication factor of the SEL matrix (`alpha R` must be an
/// integer); it defaults to the denominator of `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSetting<T> {
    k: usize,
    minority_classes: usize,
    ratio: Ratio<u64>,
    n_min: u64,
    alpha: u64,
    delta_maj: T,
    delta_minor: T,
    gamma: Option<T>,
}

impl<T: Real> StepSetting<T> {
    /// Balanced logit adjustment (`delta = 1_k`), `n_min = 1`, smallest `alpha`.
    pub fn new(k: usize, rho: f64, ratio: Ratio<u64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need k >= 2 classes, got {k}")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Config(format!("minority fraction must be in (0,1), got {rho}")));
        }
        let minor = rho * k as f64;
        let minority_classes = minor.round();
        if (minor - minority_classes).abs() > 1e-9 || minority_classes < 1.0 || minority_classes >= k as f64 {
            return Err(Error::Config(format!(
                "rho * k = {minor} must be an integer in [1, k-1]"
            )));
        }
        Self::with_minority_classes(k, minority_classes as usize, ratio)
    }

    pub fn with_minority_classes(k: usize, minority_classes: usize, ratio: Ratio<u64>) -> Result<Self> {
        if k < 2 || minority_classes == 0 || minority_classes >= k {
            return Err(Error::Config(format!(
                "need 1 <= minority classes < k, got {minority_classes} of {k}"
            )));
        }
        if *ratio.numer() == 0 || *ratio.denom() == 0 {
            return Err(Error::Config("imbalance ratio must be positive".into()));
        }
        let ratio = ratio.reduced();
        Ok(Self {
            k,
            minority_classes,
            alpha: *ratio.denom(),
            n_min: *ratio.denom(),
            ratio,
            delta_maj: T::one(),
            delta_minor: T::one(),
            gamma: None,
        })
    }

    /// Integer imbalance ratio shorthand.
    pub fn integer(k: usize, rho: f64, r: u64) -> Result<Self> {
        Self::new(k, rho, Ratio::from_integer(r))
    }

    pub fn with_n_min(mut self, n_min: u64) -> Result<Self> {
        if n_min == 0 || !n_min.is_multiple_of(*self.ratio.denom()) {
            return Err(Error::Config(format!(
                "n_min = {n_min} must be a positive multiple of {}",
                self.ratio.denom()
            )));
        }
        self.n_min = n_min;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: u64) -> Result<Self> {
        if alpha == 0 || !alpha.is_multiple_of(*self.ratio.denom()) {
            return Err(Error::Config(format!(
                "alpha * R must be an integer: alpha = {alpha}, R = {}",
                self.ratio
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_deltas(mut self, delta_maj: T, delta_minor: T) -> Result<Self> {
        if !(delta_maj > T::zero() && delta_minor > T::zero()) {
            return Err(Error::Config(format!(
                "deltas must be positive, got ({delta_maj}, {delta_minor})"
            )));
        }
        self.delta_maj = delta_maj;
        self.delta_minor = delta_minor;
        self.gamma = None;
        Ok(self)
    }

    /// Sets `delta_maj = R^gamma * delta_minor`, keeping `delta_minor`.
    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.delta_maj = self.r().powf(gamma) * self.delta_minor;
        self.gamma = Some(gamma);
        self
    }

    /// Rescales both deltas by `c > 0`, keeping `gamma`.
    pub fn scaled_deltas(mut self, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return domain(format!("delta scale must be positive, got {c}"));
        }
        self.delta_maj *= c;
        self.delta_minor *= c;
        Ok(self)
    }

    /// Checks every invariant; constructors already enforce all but the
    /// gamma consistency, which can drift after deserialisation.
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_multiple_of(*self.ratio.denom()) || !self.n_min.is_multiple_of(*self.ratio.denom()) {
            return Err(Error::Config("alpha R and n_min R must be integers".into()));
        }
        if !(self.delta_maj > T::zero() && self.delta_minor > T::zero()) {
            return Err(Error::Config("deltas must be positive".into()));
        }
        if let Some(g) = self.gamma {
            let want = self.r().powf(g);
            let got = self.big_delta();
            if (want - got).abs() > T::lit(1e-12) * want.max(T::one()) {
                return Err(Error::Config(format!(
                    "delta_maj / delta_minor = {got} but R^gamma = {want}"
                )));
            }
        }
        let per_majority = self.alpha as u128 * *self.ratio.numer() as u128 / *self.ratio.denom() as u128;
        let columns = per_majority * self.majority_classes() as u128 + (self.alpha as u128) * self.minority_classes as u128;
        if columns < self.k as u128 {
            return Err(Error::Config("SEL matrix has fewer columns than classes".into()));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn majority_classes(&self) -> usize {
        self.k - self.minority_classes
    }

    pub fn minority_classes(&self) -> usize {
        self.minority_classes
    }

    pub fn is_majority(&self, class: usize) -> bool {
        class < self.majority_classes()
    }

    pub fn rho(&self) -> T {
        T::from_usize_lossy(self.minority_classes) / T::from_usize_lossy(self.k)
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.ratio
    }

    pub fn r(&self) -> T {
        T::lit(*self.ratio.numer() as f64) / T::lit(*self.ratio.denom() as f64)
    }

    pub fn n_min(&self) -> u64 {
        self.n_min
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn delta_maj(&self) -> T {
        self.delta_maj
    }

    pub fn delta_minor(&self) -> T {
        self.delta_minor
    }

    /// `Delta = delta_maj / delta_minor`.
    pub fn big_delta(&self) -> T {
        self.delta_maj / self.delta_minor
    }

    pub fn gamma(&self) -> Option<T> {
        self.gamma
    }

    /// `R~ = R (delta_minor / delta_maj)^2`, the effective LDT imbalance.
    pub fn r_tilde(&self) -> T {
        let inv = self.delta_minor / self.delta_maj;
        self.r() * inv * inv
    }

    pub fn deltas(&self) -> DeltaVector<T> {
        DeltaVector {
            values: (0..self.k)
                .map(|c| if self.is_majority(c) { self.delta_maj } else { self.delta_minor })
                .collect(),
            normalized: false,
        }
    }

    fn per_class(&self, unit: u64) -> Vec<usize> {
        let maj = (unit * self.ratio.numer() / self.ratio.denom()) as usize;
        (0..self.k)
            .map(|c| if self.is_majority(c) { maj } else { unit as usize })
            .collect()
    }

    /// Training-set class sizes: `R n_min` for majorities, `n_min` otherwise.
    pub fn class_sizes(&self) -> Vec<usize> {
        self.per_class(self.n_min)
    }

    pub fn n_samples(&self) -> usize {
        self.class_sizes().iter().sum()
    }

    /// Sample labels in class order.
    pub fn labels(&self) -> Vec<usize> {
        labels_from_sizes(&self.class_sizes())
    }

    /// Column replication pattern of the SEL matrix (`alpha R` / `alpha`).
    pub fn sel_replication(&self) -> Vec<usize> {
        self.per_class(self.alpha)
    }

    /// `n = alpha k (R (1 - rho) + rho)`.
    pub fn sel_columns(&self) -> usize {
        self.sel_replication().iter().sum()
    }
}

pub(crate) fn labels_from_sizes(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect()
}

/// Per-class positive logit-adjustment factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaVector<T> {
    values: Vec<T>,
    normalized: bool,
}

impl<T: Real> DeltaVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return domain("empty delta vector");
        }
        if let Some(bad) = values.iter().find(|v| !(**v > T::zero())) {
            return domain(format!("delta entries must be positive, found {bad}"));
        }
        Ok(Self { values, normalized: false })
    }

    pub fn ones(k: usize) -> Self {
        Self { values: vec![T::one(); k], normalized: false }
    }

    /// Rescaled copy with `1^T delta = k`.
    pub fn normalized(&self) -> Self {
        let k = T::from_usize_lossy(self.values.len());
        let sum = self.values.iter().fold(T::zero(), |a, &b| a + b);
        Self {
            values: self.values.iter().map(|&v| v * k / sum).collect(),
            normalized: true,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, c: usize) -> T {
        self.values[c]
    }
}
