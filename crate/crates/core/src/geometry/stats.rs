use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GramTriple, LossKind};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sel::StepSetting;

/// Relative tolerance for the within-group symmetry check (raised to 256
/// machine epsilons for scalars coarser than `f64`).
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Column names of the geometry CSV.
pub const GEOMETRY_COLUMNS: [&str; 15] = [
    "gamma",
    "R",
    "k",
    "rho",
    "loss",
    "w_norm_ratio_sq",
    "h_norm_ratio_sq",
    "cos_w_maj_maj",
    "cos_w_min_min",
    "cos_w_maj_min",
    "cos_h_maj_maj",
    "cos_h_min_min",
    "cos_h_maj_min",
    "align_maj",
    "align_min",
];

/// Scalar summary of a two-group geometry.
///
/// Within-group cosines are `None` when the group has a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryStats<T> {
    pub w_norm_ratio_sq: T,
    pub h_norm_ratio_sq: T,
    pub cos_w_maj_maj: Option<T>,
    pub cos_w_min_min: Option<T>,
    pub cos_w_maj_min: T,
    pub cos_h_maj_maj: Option<T>,
    pub cos_h_min_min: Option<T>,
    pub cos_h_maj_min: T,
    pub align_maj: T,
    pub align_min: T,
}

impl<T: Real> GeometryStats<T> {
    /// Cosines lie in `[-1, 1 + 1e-12]` and norm ratios are positive.
    pub fn check(&self) -> Result<()> {
        let top = T::one() + T::lit(1e-12);
        let bad = self.cosines().into_iter().flatten().find(|&c| !(c >= -top && c <= top));
        if let Some(c) = bad {
            return Err(Error::Numerical(format!("cosine {c} outside [-1, 1]")));
        }
        if !(self.w_norm_ratio_sq > T::zero() && self.h_norm_ratio_sq > T::zero()) {
            return Err(Error::Numerical("norm ratios must be positive".into()));
        }
        Ok(())
    }

    /// The eight cosines in CSV order.
    pub fn cosines(&self) -> [Option<T>; 8] {
        [
            self.cos_w_maj_maj,
            self.cos_w_min_min,
            Some(self.cos_w_maj_min),
            self.cos_h_maj_maj,
            self.cos_h_min_min,
            Some(self.cos_h_maj_min),
            Some(self.align_maj),
            Some(self.align_min),
        ]
    }

    /// All ten values in CSV order.
    pub fn values(&self) -> [Option<T>; 10] {
        let c = self.cosines();
        [
            Some(self.w_norm_ratio_sq),
            Some(self.h_norm_ratio_sq),
            c[0],
            c[1],
            c[2],
            c[3],
            c[4],
            c[5],
            c[6],
            c[7],
        ]
    }

    /// Largest absolute difference over the fields present in both.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values()
            .iter()
            .zip(other.values())
            .filter_map(|(a, b)| Some(((*a)? - b?).abs()))
            .fold(T::zero(), |m, d| m.max(d))
    }

    /// One CSV record matching [`GEOMETRY_COLUMNS`].
    pub fn csv_record(&self, gamma: Option<T>, r: T, k: usize, rho: T, loss: LossKind) -> Vec<String> {
        let mut out = vec![fmt_opt(gamma), r.to_string(), k.to_string(), rho.to_string(), loss.to_string()];
        out.extend(self.values().iter().map(|v| fmt_opt(*v)));
        out
    }
}

fn fmt_opt<T: Real>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cos<T: Real>(g: &DMatrix<T>, i: usize, j: usize) -> T {
    g[(i, j)] / (g[(i, i)] * g[(j, j)]).sqrt()
}

fn align<T: Real>(grams: &GramTriple<T>, c: usize) -> T {
    grams.wtm[(c, c)] / (grams.wtw[(c, c)] * grams.mtm[(c, c)]).sqrt()
}

fn groups<T: Real>(grams: &GramTriple<T>, setting: &StepSetting<T>) -> Result<(Vec<usize>, Vec<usize>)> {
    if grams.k() != setting.k() {
        return Err(Error::Structural(format!(
            "Grams are {0} x {0} but the setting has k = {1}",
            grams.k(),
            setting.k()
        )));
    }
    let maj = setting.majority_classes();
    Ok(((0..maj).collect(), (maj..setting.k()).collect()))
}

fn assert_uniform<T: Real>(name: &str, values: impl Iterator<Item = T>, scale: T) -> Result<()> {
    let values: Vec<T> = values.collect();
    if let Some(&first) = values.first() {
        // Never below a few hundred ulps, so single precision gets a usable bound.
        let tol = T::lit(SYMMETRY_TOL).max(T::default_epsilon() * T::lit(256.0)) * scale.max(T::one());
        if let Some(v) = values.iter().find(|&&v| (v - first).abs() > tol) {
            return Err(Error::Structural(format!("{name}: {v} differs from {first}")));
        }
    }
    Ok(())
}

fn check_blocks<T: Real>(name: &str, g: &DMatrix<T>, maj: &[usize], min: &[usize]) -> Result<()> {
    let scale = g.amax();
    for (group, label) in [(maj, "majority"), (min, "minority")] {
        assert_uniform(&format!("{name} {label} diagonal"), group.iter().map(|&c| g[(c, c)]), scale)?;
        let off = group.iter().flat_map(|&a| group.iter().filter(move |&&b| b != a).map(move |&b| g[(a, b)]));
        assert_uniform(&format!("{name} {label} off-diagonal"), off, scale)?;
    }
    let cross = maj.iter().flat_map(|&a| min.iter().flat_map(move |&b| [g[(a, b)], g[(b, a)]]));
    assert_uniform(&format!("{name} cross block"), cross, scale)
}

/// Reads stats from the first two majority and first two minority classes
/// after checking that every class pair of the same kind agrees.
pub fn stats_from_grams<T: Real>(grams: &GramTriple<T>, setting: &StepSetting<T>) -> Result<GeometryStats<T>> {
    let (maj, min) = groups(grams, setting)?;
    check_blocks("W^T W", &grams.wtw, &maj, &min)?;
    check_blocks("M^T M", &grams.mtm, &maj, &min)?;
    let wtm_scale = grams.wtm.amax();
    for (group, label) in [(&maj, "majority"), (&min, "minority")] {
        assert_uniform(
            &format!("W^T M {label} diagonal"),
            group.iter().map(|&c| grams.wtm[(c, c)]),
            wtm_scale,
        )?;
    }
    let (a, b) = (maj[0], min[0]);
    let pair = |group: &[usize], g: &DMatrix<T>| (group.len() >= 2).then(|| cos(g, group[0], group[1]));
    Ok(GeometryStats {
        w_norm_ratio_sq: grams.wtw[(a, a)] / grams.wtw[(b, b)],
        h_norm_ratio_sq: grams.mtm[(a, a)] / grams.mtm[(b, b)],
        cos_w_maj_maj: pair(&maj, &grams.wtw),
        cos_w_min_min: pair(&min, &grams.wtw),
        cos_w_maj_min: cos(&grams.wtw, a, b),
        cos_h_maj_maj: pair(&maj, &grams.mtm),
        cos_h_min_min: pair(&min, &grams.mtm),
        cos_h_maj_min: cos(&grams.mtm, a, b),
        align_maj: align(grams, a),
        align_min: align(grams, b),
    })
}

fn mean<T: Real>(it: impl Iterator<Item = T>) -> Option<T> {
    let (sum, n) = it.fold((T::zero(), 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / T::from_usize_lossy(n))
}

/// Group-averaged stats for Grams that are only approximately symmetric
/// (trained parameters): norms, cosines and alignments are averaged over
/// classes or class pairs of the same kind.
pub fn average_stats<T: Real>(grams: &GramTriple<T>, setting: &StepSetting<T>) -> Result<GeometryStats<T>> {
    let (maj, min) = groups(grams, setting)?;
    let within = |group: &[usize], g: &DMatrix<T>| {
        mean(group.iter().flat_map(|&a| group.iter().filter(move |&&b| b > a).map(move |&b| cos(g, a, b))))
    };
    let across = |g: &DMatrix<T>| {
        mean(maj.iter().flat_map(|&a| min.iter().map(move |&b| cos(g, a, b)))).expect("both groups non-empty")
    };
    let diag = |group: &[usize], g: &DMatrix<T>| mean(group.iter().map(|&c| g[(c, c)])).expect("non-empty group");
    let al = |group: &[usize]| mean(group.iter().map(|&c| align(grams, c))).expect("non-empty group");
    Ok(GeometryStats {
        w_norm_ratio_sq: diag(&maj, &grams.wtw) / diag(&min, &grams.wtw),
        h_norm_ratio_sq: diag(&maj, &grams.mtm) / diag(&min, &grams.mtm),
        cos_w_maj_maj: within(&maj, &grams.wtw),
        cos_w_min_min: within(&min, &grams.wtw),
        cos_w_maj_min: across(&grams.wtw),
        cos_h_maj_maj: within(&maj, &grams.mtm),
        cos_h_min_min: within(&min, &grams.mtm),
        cos_h_maj_min: across(&grams.mtm),
        align_maj: al(&maj),
        align_min: al(&min),
    })
}
