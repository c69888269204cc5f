use nalgebra::DMatrix;

use super::setting::StepSetting;
use crate::error::{domain, Result};
use crate::scalar::{Field, Real};

/// The `k x k` matrix `Xi` whose replicated columns form the SEL matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct XiMatrix<F: Field>(pub DMatrix<F>);

/// Builds `Xi` from per-class deltas:
/// `Xi[c, c] = (1 - d_c^-2 / S) / d_c`, `Xi[c, j] = -d_j^-2 / (S d_c)`
/// with `S = sum_c d_c^-2`.
pub fn build_xi<F: Field>(delta: &[F]) -> Result<XiMatrix<F>> {
    if delta.is_empty() {
        return domain("empty delta vector");
    }
    if delta.iter().any(|d| !(*d > F::zero())) {
        return domain("delta entries must be positive");
    }
    let inv: Vec<F> = delta.iter().map(|d| F::one() / d.clone()).collect();
    let inv_sq: Vec<F> = inv.iter().map(|x| x.clone() * x.clone()).collect();
    let total = inv_sq.iter().cloned().fold(F::zero(), |a, b| a + b);
    let k = delta.len();
    Ok(XiMatrix(DMatrix::from_fn(k, k, |c, j| {
        let share = inv_sq[j].clone() / total.clone();
        if c == j {
            inv[c].clone() * (F::one() - share)
        } else {
            -(inv[c].clone() * share)
        }
    })))
}

impl<F: Field> XiMatrix<F> {
    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<F> {
        &self.0
    }

    /// `sum_c Xi[c, j] / delta_c` for every column `j`; zero by construction.
    pub fn weighted_column_sums(&self, delta: &[F]) -> Vec<F> {
        (0..self.k())
            .map(|j| {
                (0..self.k()).fold(F::zero(), |acc, c| acc + self.0[(c, j)].clone() / delta[c].clone())
            })
            .collect()
    }
}

/// The `(delta, R)`-SEL matrix: column `j` of `Xi` repeated `counts[j]` times.
#[derive(Debug, Clone, PartialEq)]
pub struct SelMatrix<F: Field> {
    z: DMatrix<F>,
    xi: XiMatrix<F>,
    delta: Vec<F>,
    counts: Vec<usize>,
}

impl<F: Field> SelMatrix<F> {
    pub fn from_xi(xi: XiMatrix<F>, delta: Vec<F>, counts: Vec<usize>) -> Result<Self> {
        let k = xi.k();
        if counts.len() != k || delta.len() != k {
            return domain(format!(
                "replication pattern ({}) and delta ({}) must have k = {k} entries",
                counts.len(),
                delta.len()
            ));
        }
        if counts.contains(&0) {
            return domain("every class needs at least one column");
        }
        let n: usize = counts.iter().sum();
        let mut z = DMatrix::from_element(k, n, F::zero());
        let mut col = 0;
        for (j, &reps) in counts.iter().enumerate() {
            for _ in 0..reps {
                z.set_column(col, &xi.0.column(j));
                col += 1;
            }
        }
        Ok(Self { z, xi, delta, counts })
    }

    pub fn matrix(&self) -> &DMatrix<F> {
        &self.z
    }

    pub fn xi(&self) -> &XiMatrix<F> {
        &self.xi
    }

    pub fn delta(&self) -> &[F] {
        &self.delta
    }

    /// Number of columns per class (`alpha R` or `alpha`).
    pub fn column_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.z.nrows()
    }

    pub fn n(&self) -> usize {
        self.z.ncols()
    }

    /// First column index of each class block.
    pub fn block_starts(&self) -> Vec<usize> {
        self.counts
            .iter()
            .scan(0, |acc, &c| {
                let start = *acc;
                *acc += c;
                Some(start)
            })
            .collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        super::setting::labels_from_sizes(&self.counts)
    }

    /// `Z^T D^-1 1_k`, which vanishes identically.
    pub fn weighted_null(&self) -> Vec<F> {
        (0..self.n())
            .map(|i| {
                (0..self.k()).fold(F::zero(), |acc, c| acc + self.z[(c, i)].clone() / self.delta[c].clone())
            })
            .collect()
    }
}

/// SEL matrix of a STEP setting with its own `alpha`.
pub fn build_sel<T: Real>(setting: &StepSetting<T>) -> Result<SelMatrix<T>> {
    setting.validate()?;
    let delta = setting.deltas().as_slice().to_vec();
    let xi = build_xi(&delta)?;
    SelMatrix::from_xi(xi, delta, setting.sel_replication())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn uniform_delta_gives_centering_matrix() {
        let xi = build_xi(&[1.0f64; 3]).unwrap();
        for c in 0..3 {
            for j in 0..3 {
                let want = if c == j { 2.0 / 3.0 } else { -1.0 / 3.0 };
                assert!((xi.0[(c, j)] - want).abs() < 1e-15);
            }
        }
        let c = 2.5f64;
        let scaled = build_xi(&[c; 4]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let centering = if i == j { 0.75 } else { -0.25 };
                assert!((scaled.0[(i, j)] - centering / c).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_two_class_values() {
        let r = |n: i64, d: i64| Rational::new(n, d);
        let xi = build_xi(&[r(2, 1), r(1, 1)]).unwrap();
        assert_eq!(xi.0[(0, 0)], r(2, 5));
        assert_eq!(xi.0[(0, 1)], r(-2, 5));
        assert_eq!(xi.0[(1, 0)], r(-1, 5));
        assert_eq!(xi.0[(1, 1)], r(1, 5));
        assert!(xi.weighted_column_sums(&[r(2, 1), r(1, 1)]).iter().all(|v| *v == r(0, 1)));
    }

    #[test]
    fn rejects_non_positive_delta() {
        assert!(build_xi(&[1.0, 0.0]).is_err());
        assert!(build_xi(&[1.0, -1.0]).is_err());
        assert!(build_xi::<f64>(&[]).is_err());
    }

    #[test]
    fn exact_sel_for_small_setting() {
        let r = |n: i64, d: i64| Rational::new(n, d);
        let delta = vec![r(1, 1), r(1, 1)];
        let xi = build_xi(&delta).unwrap();
        let sel = SelMatrix::from_xi(xi, delta, vec![2, 1]).unwrap();
        let half = r(1, 2);
        let want = DMatrix::from_row_slice(2, 3, &[half, half, -half, -half, -half, half]);
        assert_eq!(sel.matrix(), &want);
        assert!(sel.weighted_null().iter().all(|v| *v == r(0, 1)));
    }

    #[test]
    fn balanced_sel_equals_xi() {
        let s = StepSetting::<f64>::integer(5, 0.4, 1).unwrap().with_deltas(3.0, 1.0).unwrap();
        let sel = build_sel(&s).unwrap();
        assert_eq!(sel.n(), 5);
        assert_eq!(sel.matrix(), sel.xi().matrix());
    }
}
