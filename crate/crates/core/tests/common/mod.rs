//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use seli_geometry::geometry::LossKind;
use seli_geometry::ufm::{loss, UfmParams};
use seli_geometry::Rational;

/// `Xi[c, j] = delta_c^-1 ([c == j] - delta_j^-2 / S)`, `S = sum_c delta_c^-2`,
/// evaluated entry by entry in exact arithmetic.
pub fn xi_rational(delta: &[Rational]) -> Vec<Vec<Rational>> {
    let inv: Vec<Rational> = delta.iter().map(|d| d.recip()).collect();
    let s: Rational = inv.iter().map(|x| x * x).sum();
    let k = delta.len();
    (0..k)
        .map(|c| {
            (0..k)
                .map(|j| {
                    let eye = if c == j { Rational::from_integer(1) } else { Rational::from_integer(0) };
                    inv[c] * (eye - inv[j] * inv[j] / s)
                })
                .collect()
        })
        .collect()
}

/// Central finite differences of the summed loss with respect to every
/// entry of `W` and `H`.
pub fn fd_gradient(p: &UfmParams<f64>, labels: &[usize], delta: &[f64], kind: LossKind, step: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let f = |q: &UfmParams<f64>| loss(q, labels, delta, kind).unwrap();
    let mut dw = DMatrix::zeros(p.w.nrows(), p.w.ncols());
    for idx in 0..p.w.len() {
        let (mut a, mut b) = (p.clone(), p.clone());
        a.w[idx] += step;
        b.w[idx] -= step;
        dw[idx] = (f(&a) - f(&b)) / (2.0 * step);
    }
    let mut dh = DMatrix::zeros(p.h.nrows(), p.h.ncols());
    for idx in 0..p.h.len() {
        let (mut a, mut b) = (p.clone(), p.clone());
        a.h[idx] += step;
        b.h[idx] -= step;
        dh[idx] = (f(&a) - f(&b)) / (2.0 * step);
    }
    (dw, dh)
}

/// `|(A, B) - (C, D)|_F / |(C, D)|_F`.
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>, ra: &DMatrix<f64>, rb: &DMatrix<f64>) -> f64 {
    let num = ((a - ra).norm_squared() + (b - rb).norm_squared()).sqrt();
    let den = (ra.norm_squared() + rb.norm_squared()).sqrt();
    num / den.max(1e-300)
}

/// Random `(params, labels, delta)` with `k <= 4`, `d <= 5`, `n <= 12`;
/// every class has at least one sample.
pub fn random_instance(seed: u64) -> (UfmParams<f64>, Vec<usize>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=4);
    let d = rng.random_range(k - 1..=5);
    let n = rng.random_range(k..=12);
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    labels.sort_unstable();
    let delta: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..3.0)).collect();
    let mut draw = |r, c| DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let w: DMatrix<f64> = draw(d, k);
    let h: DMatrix<f64> = draw(d, n);
    (UfmParams::new(w, h).unwrap(), labels, delta)
}

/// Random orthogonal `d x d` matrix (QR of a Gaussian).
pub fn random_rotation(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    g.qr().q()
}
