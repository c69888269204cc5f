use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Constraint family of a two-class linear max-margin problem. `delta` is
/// `(delta_1, delta_2)` for classes `+1` and `-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinaryConstraint<T> {
    /// `v_i w^T x_i >= 1`.
    Plain,
    /// `v_i delta_{v_i} w^T x_i >= 1`.
    Vs { delta: (T, T) },
    /// `(delta_y w_y - delta_c w_c)^T x_i >= 1` over `W = [w_1, w_2]`.
    Cdt { delta: (T, T) },
    /// `delta_y (w_y - w_c)^T x_i >= 1` over `W = [w_1, w_2]`.
    Ldt { delta: (T, T) },
}

impl<T: Real> BinaryConstraint<T> {
    fn columns(&self) -> usize {
        match self {
            Self::Plain | Self::Vs { .. } => 1,
            Self::Cdt { .. } | Self::Ldt { .. } => 2,
        }
    }

    /// Coefficients `(a_1, a_2)` such that the constraint reads
    /// `a_1 w_1^T x + a_2 w_2^T x >= 1`.
    fn coefficients(&self, positive: bool) -> (T, T) {
        let s = if positive { T::one() } else { -T::one() };
        match *self {
            Self::Plain => (s, T::zero()),
            Self::Vs { delta: (d1, d2) } => (s * if positive { d1 } else { d2 }, T::zero()),
            Self::Cdt { delta: (d1, d2) } => (s * d1, -s * d2),
            Self::Ldt { delta: (d1, d2) } => {
                let d = if positive { d1 } else { d2 };
                (s * d, -s * d)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter: 100_000, gap_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution<T: Real> {
    /// `d x 1` or `d x 2`, feasible (smallest margin exactly 1).
    pub w: DMatrix<T>,
    pub dual: DVector<T>,
    pub gap: T,
    pub iterations: usize,
}

fn constraint_matrix<T: Real>(points: &DMatrix<T>, labels: &[i8], kind: &BinaryConstraint<T>) -> DMatrix<T> {
    let d = points.nrows();
    let cols = kind.columns();
    DMatrix::from_fn(labels.len(), d * cols, |i, j| {
        let (a1, a2) = kind.coefficients(labels[i] > 0);
        let a = if j < d { a1 } else { a2 };
        a * points[(j % d, i)]
    })
}

struct Evaluation<T: Real> {
    x: DVector<T>,
    gap: T,
}

/// Primal point `x = A^T lambda / m` (m = smallest margin) and its gap.
fn evaluate<T: Real>(a: &DMatrix<T>, lambda: &DVector<T>) -> Option<Evaluation<T>> {
    let x = a.transpose() * lambda;
    let m = (a * &x).min();
    if !(m > T::zero()) {
        return None;
    }
    let half = T::lit(0.5);
    let xx = x.norm_squared();
    let dual = lambda.sum() - half * xx;
    let primal = half * xx / (m * m);
    Some(Evaluation { x: x / m, gap: primal - dual })
}

/// Solve the KKT system on the current support exactly.
fn polish<T: Real>(a: &DMatrix<T>, lambda: &DVector<T>) -> Option<DVector<T>> {
    let cutoff = lambda.max() * T::lit(1e-9);
    let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > cutoff).collect();
    if support.is_empty() {
        return None;
    }
    let sub = a.select_rows(&support);
    let gram = &sub * sub.transpose();
    let rhs = DVector::from_element(support.len(), T::one());
    let sol = gram.svd(true, true).solve(&rhs, T::lit(1e-13)).ok()?;
    if sol.iter().any(|&v| v < T::zero()) {
        return None;
    }
    let mut out = DVector::zeros(lambda.len());
    for (pos, &i) in support.iter().enumerate() {
        out[i] = sol[pos];
    }
    Some(out)
}

fn pack<T: Real>(x: &DVector<T>, d: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_fn(d, cols, |i, c| x[c * d + i])
}

/// Hard-margin solution via accelerated projected gradient on the dual
/// `max 1^T l - |A^T l|^2 / 2, l >= 0`, with adaptive restart and an exact
/// solve on the detected support.
pub fn solve_binary_margin<T: Real>(
    points: &DMatrix<T>,
    labels: &[i8],
    kind: BinaryConstraint<T>,
    opts: SolverOptions,
) -> Result<BinarySolution<T>> {
    let m = labels.len();
    if points.ncols() != m || m == 0 {
        return domain(format!("{} points but {m} labels", points.ncols()));
    }
    if labels.iter().any(|&v| v != 1 && v != -1) {
        return domain("labels must be +1 or -1");
    }
    let (d, cols) = (points.nrows(), kind.columns());
    let a = constraint_matrix(points, labels, &kind);
    let gram = &a * a.transpose();
    let lip = gram.clone().symmetric_eigen().eigenvalues.max();
    if !(lip > T::zero()) {
        return Err(Error::Solver("all points are zero".into()));
    }
    let step = T::one() / lip;
    let tol = T::lit(opts.gap_tol);
    let ones = DVector::from_element(m, T::one());

    let mut lambda = DVector::<T>::zeros(m);
    let mut y = lambda.clone();
    let mut t = T::one();
    for iter in 1..=opts.max_iter {
        let grad = &gram * &y - &ones;
        let next = (&y - grad * step).map(|v| v.max(T::zero()));
        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
        let restart = (&y - &next).dot(&(&next - &lambda)) > T::zero();
        if restart {
            y = next.clone();
            t = T::one();
        } else {
            y = &next + (&next - &lambda) * ((t - T::one()) / t_next);
            t = t_next;
        }
        lambda = next;
        if iter % 25 == 0 {
            for cand in [polish(&a, &lambda), Some(lambda.clone())].into_iter().flatten() {
                if let Some(ev) = evaluate(&a, &cand) {
                    if ev.gap.abs() <= tol {
                        return Ok(BinarySolution { w: pack(&ev.x, d, cols), dual: cand, gap: ev.gap, iterations: iter });
                    }
                }
            }
        }
    }
    Err(Error::Solver(format!(
        "no certificate within {} iterations (data may not be separable)",
        opts.max_iter
    )))
}

/// Relations between the two-class solutions for one `delta` pair.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BinaryLemmaReport<T> {
    /// `cos(w_1 - w_2, w_vs)` for LDT.
    pub cos_ldt_vs: T,
    /// `cos(w_1 - w_2, w_ce)` for CDT.
    pub cos_cdt_ce: T,
    /// `|w_1 + w_2|` for LDT.
    pub ldt_centering: T,
    /// `|w_1 / delta_1 + w_2 / delta_2|` for CDT.
    pub cdt_centering: T,
    /// `|w_1 - w_vs / 2|` for LDT.
    pub ldt_half_residual: T,
    /// `|(w_1 - w_2) - (d_1 + d_2) / (d_1^2 + d_2^2) w_ce|` for CDT.
    pub cdt_factor_residual: T,
}

impl<T: Real> BinaryLemmaReport<T> {
    pub fn passed(&self, cos_tol: T, centering_tol: T) -> bool {
        self.cos_ldt_vs >= T::one() - cos_tol
            && self.cos_cdt_ce >= T::one() - cos_tol
            && self.ldt_centering <= centering_tol
            && self.cdt_centering <= centering_tol
    }
}

fn cosine<T: Real>(a: &DVector<T>, b: &DVector<T>) -> T {
    a.dot(b) / (a.norm() * b.norm())
}

pub fn verify_binary_lemma<T: Real>(
    points: &DMatrix<T>,
    labels: &[i8],
    delta: (T, T),
    opts: SolverOptions,
) -> Result<BinaryLemmaReport<T>> {
    let solve = |kind| solve_binary_margin(points, labels, kind, opts);
    let ce: DVector<T> = solve(BinaryConstraint::Plain)?.w.column(0).into();
    let vs: DVector<T> = solve(BinaryConstraint::Vs { delta })?.w.column(0).into();
    let cdt = solve(BinaryConstraint::Cdt { delta })?.w;
    let ldt = solve(BinaryConstraint::Ldt { delta })?.w;
    let (d1, d2) = delta;
    let col = |w: &DMatrix<T>, c: usize| -> DVector<T> { w.column(c).into() };
    let cdt_dir = col(&cdt, 0) - col(&cdt, 1);
    let ldt_dir = col(&ldt, 0) - col(&ldt, 1);
    let factor = (d1 + d2) / (d1 * d1 + d2 * d2);
    Ok(BinaryLemmaReport {
        cos_ldt_vs: cosine(&ldt_dir, &vs),
        cos_cdt_ce: cosine(&cdt_dir, &ce),
        ldt_centering: (col(&ldt, 0) + col(&ldt, 1)).norm(),
        cdt_centering: (col(&cdt, 0) / d1 + col(&cdt, 1) / d2).norm(),
        ldt_half_residual: (col(&ldt, 0) - &vs / T::lit(2.0)).norm(),
        cdt_factor_residual: (&cdt_dir - &ce * factor).norm(),
    })
}

/// `m` points in `d` dimensions, linearly separable through the origin with
/// normalized margin at least 0.1; both classes are present.
pub fn random_separable(seed: u64, m: usize, d: usize) -> (DMatrix<f64>, Vec<i8>) {
    assert!(m >= 2 && d >= 1, "need at least two points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(&mut rng)).normalize();
    let mut points = DMatrix::zeros(d, m);
    let mut labels = Vec::with_capacity(m);
    let mut i = 0;
    while i < m {
        let x = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let s = truth.dot(&x);
        let want = match i {
            0 => Some(true),
            1 => Some(false),
            _ => None,
        };
        if s.abs() < 0.1 || want.is_some_and(|p| p != (s > 0.0)) {
            continue;
        }
        points.set_column(i, &x);
        labels.push(if s > 0.0 { 1 } else { -1 });
        i += 1;
    }
    (points, labels)
}
