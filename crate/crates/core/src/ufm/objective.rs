use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Error, Result};
use crate::geometry::LossKind;
use crate::scalar::Real;

/// Classifiers `w` (d x k) and one embedding per sample `h` (d x n).
#[derive(Debug, Clone, PartialEq)]
pub struct UfmParams<T: Real> {
    pub w: DMatrix<T>,
    pub h: DMatrix<T>,
}

impl<T: Real> UfmParams<T> {
    pub fn new(w: DMatrix<T>, h: DMatrix<T>) -> Result<Self> {
        let p = Self { w, h };
        p.validate()?;
        Ok(p)
    }

    /// I.i.d. `N(0, std^2)` entries.
    pub fn gaussian<R: Rng>(d: usize, k: usize, n: usize, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, std).map_err(|e| Error::Config(format!("init std {std}: {e}")))?;
        let mut draw = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| T::lit(normal.sample(rng)));
        let w = draw(d, k);
        let h = draw(d, n);
        Self::new(w, h)
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    pub fn k(&self) -> usize {
        self.w.ncols()
    }

    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.h.iter()).all(|x| x.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.nrows() != self.h.nrows() {
            return domain(format!("W has {} rows but H has {}", self.w.nrows(), self.h.nrows()));
        }
        if self.d() + 1 < self.k() {
            return domain(format!("d = {} is below k - 1 = {}", self.d(), self.k() - 1));
        }
        if !self.is_finite() {
            return Err(Error::Numerical("non-finite parameter".into()));
        }
        Ok(())
    }
}

fn check<T: Real>(p: &UfmParams<T>, labels: &[usize], delta: &[T]) -> Result<()> {
    if labels.len() != p.n() {
        return domain(format!("{} labels for {} embeddings", labels.len(), p.n()));
    }
    if delta.len() != p.k() {
        return domain(format!("delta has {} entries, expected {}", delta.len(), p.k()));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= p.k()) {
        return domain(format!("label {y} out of range"));
    }
    if delta.iter().any(|&x| !(x > T::zero())) {
        return domain("delta entries must be positive");
    }
    Ok(())
}

/// Loss of one sample and `dL/dz` written into `g` (k entries), given its
/// plain logits `z`.
pub(crate) fn sample_loss<T: Real>(z: &[T], y: usize, delta: &[T], kind: LossKind, g: Option<&mut [T]>) -> T {
    let k = z.len();
    let d = |c: usize| if kind == LossKind::Ce { T::one() } else { delta[c] };
    let margin = |c: usize| match kind {
        LossKind::Ldt => d(y) * (z[y] - z[c]),
        LossKind::Cdt | LossKind::Ce => d(y) * z[y] - d(c) * z[c],
    };
    // log(1 + sum_c exp(-m_c)) = LSE over {0} and {-m_c}.
    let top = (0..k).filter(|&c| c != y).map(|c| -margin(c)).fold(T::zero(), |a, b| a.max(b));
    let base = (-top).exp();
    let total = (0..k).filter(|&c| c != y).fold(base, |acc, c| acc + (-margin(c) - top).exp());
    let value = top + total.ln();
    if let Some(g) = g {
        let mut mass = T::zero();
        for c in (0..k).filter(|&c| c != y) {
            let p = (-margin(c) - top).exp() / total;
            mass += p;
            g[c] = match kind {
                LossKind::Ldt => d(y) * p,
                LossKind::Cdt | LossKind::Ce => d(c) * p,
            };
        }
        g[y] = -d(y) * mass;
    }
    value
}

/// Summed loss and, optionally, `dL/dZ` (k x n) for the plain logits `Z = W^T H`.
fn logit_pass<T: Real>(p: &UfmParams<T>, labels: &[usize], delta: &[T], kind: LossKind, want_grad: bool) -> (T, DMatrix<T>) {
    let z = p.w.transpose() * &p.h;
    let k = p.k();
    let mut g = DMatrix::zeros(if want_grad { k } else { 0 }, p.n());
    let mut total = T::zero();
    let mut scratch = vec![T::zero(); k];
    for (i, &y) in labels.iter().enumerate() {
        let col: Vec<T> = z.column(i).iter().copied().collect();
        total += sample_loss(&col, y, delta, kind, want_grad.then_some(&mut scratch[..]));
        if want_grad {
            for c in 0..k {
                g[(c, i)] = scratch[c];
            }
        }
    }
    (total, g)
}

/// `sum_i log(1 + sum_{c != y_i} exp(-margin_ic))`, stabilised.
pub fn loss<T: Real>(p: &UfmParams<T>, labels: &[usize], delta: &[T], kind: LossKind) -> Result<T> {
    check(p, labels, delta)?;
    Ok(logit_pass(p, labels, delta, kind, false).0)
}

/// Analytic gradients `(dW, dH)` of [`loss`].
pub fn grad<T: Real>(p: &UfmParams<T>, labels: &[usize], delta: &[T], kind: LossKind) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (_, dw, dh) = loss_and_grad(p, labels, delta, kind)?;
    Ok((dw, dh))
}

pub fn loss_and_grad<T: Real>(
    p: &UfmParams<T>,
    labels: &[usize],
    delta: &[T],
    kind: LossKind,
) -> Result<(T, DMatrix<T>, DMatrix<T>)> {
    check(p, labels, delta)?;
    let (value, g) = logit_pass(p, labels, delta, kind, true);
    Ok((value, &p.h * g.transpose(), &p.w * g))
}
