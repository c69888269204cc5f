//! Worked examples checked against independent oracles: exact rational
//! evaluation, dense numerical decompositions and hand computations.

mod common;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use seli_geometry::cs_svm::{
    margins, nuclear_norm, objective, reduce_ldt, solve_binary_margin, BinaryConstraint, SolverOptions,
};
use seli_geometry::geometry::{
    asymptotic_angles, cdt_realization, centering_check, construct_realization, ldt_realization, predict_cdt_grams,
    predict_ldt_grams, stats_from_grams, LossKind,
};
use seli_geometry::gmm::{rldt_rescale, sigma_profile, snr_normalize, GmmModel};
use seli_geometry::sel::{build_sel, build_xi, closed_form_svd, numerical_svd, simplex_basis, SelMatrix, StepSetting};
use seli_geometry::ufm::{gram_distance, loss, nc_metric};
use seli_geometry::{Rational, Setting};

fn q(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

fn setting(k: usize, rho: f64, r: u64, big_delta: f64) -> Setting {
    StepSetting::integer(k, rho, r).unwrap().with_deltas(big_delta, 1.0).unwrap()
}

#[test]
fn xi_matches_exact_oracle() {
    for delta in [vec![q(2, 1), q(1, 1)], vec![q(1, 1); 3], vec![q(3, 2), q(3, 2), q(1, 3), q(5, 1)]] {
        let got = build_xi(&delta).unwrap();
        let want = common::xi_rational(&delta);
        for (c, row) in want.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(got.matrix()[(c, j)], *v, "entry ({c}, {j}) for delta {delta:?}");
            }
        }
    }
    let two = build_xi(&[q(2, 1), q(1, 1)]).unwrap();
    assert_eq!(two.matrix(), &DMatrix::from_row_slice(2, 2, &[q(2, 5), q(-2, 5), q(-1, 5), q(1, 5)]));
    let balanced = build_xi(&[q(1, 1); 3]).unwrap();
    assert_eq!(balanced.matrix()[(0, 0)], q(2, 3));
    assert_eq!(balanced.matrix()[(0, 1)], q(-1, 3));
}

#[test]
fn sel_two_class_example() {
    let xi = build_xi(&[q(1, 1), q(1, 1)]).unwrap();
    let sel = SelMatrix::from_xi(xi, vec![q(1, 1); 2], vec![2, 1]).unwrap();
    let half = q(1, 2);
    assert_eq!(sel.matrix(), &DMatrix::from_row_slice(2, 3, &[half, half, -half, -half, -half, half]));
    let float = build_sel(&StepSetting::<f64>::integer(2, 0.5, 2).unwrap()).unwrap();
    assert_eq!(float.matrix(), &DMatrix::from_row_slice(2, 3, &[0.5, 0.5, -0.5, -0.5, -0.5, 0.5]));
}

#[test]
fn simplex_basis_examples() {
    let p2 = simplex_basis::<f64>(2).unwrap();
    assert!((p2[(0, 0)].abs() - 0.5f64.sqrt()).abs() < 1e-15 && (p2[(0, 0)] + p2[(1, 0)]).abs() < 1e-15);
    let p5 = simplex_basis::<f64>(5).unwrap();
    let proj = &p5 * p5.transpose();
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j { 0.8 } else { -0.2 };
            assert!((proj[(i, j)] - want).abs() < 1e-14);
        }
    }
    assert!(simplex_basis::<f64>(1).is_err());
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Singular values of the dense matrix, computed without any of the crate's
/// own decomposition code.
fn dense_singular_values(z: &DMatrix<f64>) -> Vec<f64> {
    sorted(z.clone().svd(false, false).singular_values.iter().copied().filter(|s| *s > 1e-9).collect())
}

#[test]
fn lambda_examples_against_dense_svd() {
    let tuned = closed_form_svd(&setting(4, 0.5, 4, 2.0)).unwrap();
    for l in tuned.lambda().iter() {
        assert!((l - 1.0).abs() < 1e-12);
    }
    let plain = setting(4, 0.5, 4, 1.0);
    let svd = closed_form_svd(&plain).unwrap();
    let want = [2.0, 2.5f64.sqrt(), 1.0];
    for (a, b) in svd.lambda().iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    let dense = dense_singular_values(build_sel(&plain).unwrap().matrix());
    for (a, b) in dense.iter().zip(sorted(want.to_vec())) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn numerical_svd_matches_dense_values() {
    for (k, rho, r, d) in [(4, 0.5, 4, 1.0), (6, 0.5, 5, 3.0), (4, 0.25, 2, 0.7), (10, 0.5, 10, 0.1)] {
        let s = setting(k, rho, r, d);
        let sel = build_sel(&s).unwrap();
        let ours = sorted(numerical_svd(&sel).unwrap().sorted_singular_values());
        let dense = dense_singular_values(sel.matrix());
        assert_eq!(ours.len(), k - 1);
        for (a, b) in ours.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10, "{s:?}: {a} vs {b}");
        }
    }
    let bal = build_sel(&StepSetting::<f64>::integer(2, 0.5, 1).unwrap()).unwrap();
    let sv = numerical_svd(&bal).unwrap().sorted_singular_values();
    assert!((sv[0] - bal.matrix().norm()).abs() < 1e-14);
}

#[test]
fn b_star_has_unit_spectral_norm() {
    for s in [setting(4, 0.5, 4, 1.0), setting(6, 0.5, 5, 0.3), setting(4, 0.25, 10, 3.0)] {
        let svd = closed_form_svd(&s).unwrap();
        let b = seli_geometry::sel::b_star(&svd);
        let top = b.clone().svd(false, false).singular_values.max();
        assert!((top - 1.0).abs() < 1e-10);
        let dinv = DVector::from_iterator(s.k(), s.deltas().as_slice().iter().map(|d| 1.0 / d));
        assert!((&b * dinv).amax() < 1e-12);
    }
}

#[test]
fn eigenvalues_of_predicted_classifier_gram() {
    let g = predict_cdt_grams(&setting(4, 0.5, 4, 1.0)).unwrap();
    let eig = sorted(g.wtw.symmetric_eigen().eigenvalues.iter().copied().collect());
    let want = sorted(vec![0.0, 1.0, 2.5f64.sqrt(), 2.0]);
    for (a, b) in eig.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn etf_and_alignment_corollaries() {
    let s = setting(10, 0.5, 10, 10f64.sqrt());
    let l = stats_from_grams(&predict_ldt_grams(&s).unwrap(), &s).unwrap();
    assert!((l.cos_w_min_min.unwrap() + 1.0 / 9.0).abs() < 1e-12);
    let c = stats_from_grams(&predict_cdt_grams(&s).unwrap(), &s).unwrap();
    assert!((c.align_maj - 1.0).abs() < 1e-12 && (c.align_min - 1.0).abs() < 1e-12);
}

#[test]
fn table_breakpoints() {
    let l = asymptotic_angles(LossKind::Ldt, 0.5, 10).unwrap();
    assert_eq!((l.w_min, l.w_maj), (-1.0 / 9.0, -1.0 / 9.0));
    assert_eq!(asymptotic_angles(LossKind::Cdt, 1.0 / 6.0, 10).unwrap().w_min, 0.0);
    assert_eq!(asymptotic_angles(LossKind::Cdt, -1.0, 10).unwrap().w_maj, -0.25);
}

#[test]
fn realization_margins_objective_and_centering() {
    let s = setting(4, 0.5, 4, 1.0);
    let real = cdt_realization(&s, 5, 9).unwrap();
    let m = margins(&real.w, &real.h, &real.labels, s.deltas().as_slice(), LossKind::Cdt).unwrap();
    assert!(m.all_tight(1e-8));
    let nuc = nuclear_norm(&build_sel(&s).unwrap()).unwrap();
    assert!((nuc - (3.0 + 2.5f64.sqrt())).abs() < 1e-10);
    assert!((objective(&real.w, &real.h) - nuc).abs() < 1e-8);
    let (cw, cm) = centering_check(&real.w, &real.class_means(), s.deltas().as_slice(), LossKind::Cdt).unwrap();
    assert!(cw < 1e-10 && cm < 1e-10);
    assert!(nc_metric(&real.h, &real.labels, 4).unwrap() < 1e-24);

    let ls = setting(4, 0.5, 4, 1.5);
    let lr = ldt_realization(&ls, 3, 2).unwrap();
    let (cw, cm) = centering_check(&lr.w, &lr.class_means(), ls.deltas().as_slice(), LossKind::Ldt).unwrap();
    assert!(cw < 1e-10 && cm < 1e-10);
    let lm = margins(&lr.w, &lr.h, &lr.labels, ls.deltas().as_slice(), LossKind::Ldt).unwrap();
    assert!((lm.min - 1.0).abs() < 1e-8);

    let svd = closed_form_svd(&s).unwrap();
    let a = construct_realization(&svd, 6, 1).unwrap();
    let b = construct_realization(&svd, 6, 2).unwrap();
    assert!((&a.w - &b.w).amax() > 1e-3);
    assert!((a.w.transpose() * &a.w - b.w.transpose() * &b.w).amax() < 1e-12);
    assert!(construct_realization(&svd, 2, 0).is_err());
}

#[test]
fn scaled_realization_drives_loss_to_zero() {
    let s = setting(4, 0.5, 2, 1.3);
    let real = cdt_realization(&s, 3, 0).unwrap();
    let delta = s.deltas();
    let mut prev = f64::INFINITY;
    for scale in [1.0, 3.0, 10.0, 30.0] {
        let p = seli_geometry::Params::new(&real.w * scale, &real.h * scale).unwrap();
        let v = loss(&p, &real.labels, delta.as_slice(), LossKind::Cdt).unwrap();
        assert!(v <= prev);
        prev = v;
    }
    assert!(prev < 1e-30);
}

#[test]
fn gram_distance_hand_value() {
    let eye = DMatrix::<f64>::identity(2, 2);
    let ones = DMatrix::<f64>::from_element(2, 2, 1.0);
    let d = gram_distance(&eye, &ones).unwrap();
    assert!((d - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-15);
    assert!((gram_distance(&(-&ones), &ones).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn ldt_reduction_arithmetic() {
    let s = setting(4, 0.5, 10, 2f64.sqrt());
    let red = reduce_ldt(&s).unwrap();
    assert!((red.r_tilde - 5.0).abs() < 1e-12);
    assert_eq!(red.alpha, 1);
    assert_eq!(red.r_tilde_exact, Some(Ratio::new(5, 1)));
    let tuned = reduce_ldt(&setting(4, 0.5, 9, 3.0)).unwrap();
    assert!((tuned.r_tilde - 1.0).abs() < 1e-12);
}

#[test]
fn binary_one_dimensional_example() {
    let x = DMatrix::<f64>::from_row_slice(1, 2, &[1.0, -1.0]);
    let y = [1i8, -1];
    let opts = SolverOptions::default();
    let ce = solve_binary_margin(&x, &y, BinaryConstraint::Plain, opts).unwrap();
    assert!((ce.w[(0, 0)] - 1.0).abs() < 1e-8);
    let cdt = solve_binary_margin(&x, &y, BinaryConstraint::Cdt { delta: (2.0, 1.0) }, opts).unwrap();
    assert!((cdt.w[(0, 0)] - cdt.w[(0, 1)] - 0.6).abs() < 1e-8);
    let vs = solve_binary_margin(&x, &y, BinaryConstraint::Vs { delta: (2.0, 1.0) }, opts).unwrap();
    let ldt = solve_binary_margin(&x, &y, BinaryConstraint::Ldt { delta: (2.0, 1.0) }, opts).unwrap();
    assert!((ldt.w[(0, 0)] - vs.w[(0, 0)] / 2.0).abs() < 1e-8);
}

#[test]
fn gmm_profile_and_rescaling() {
    assert_eq!(sigma_profile(10.0, 1.0).unwrap(), (1.0, 10.0));
    assert_eq!(sigma_profile(10.0, 0.0).unwrap(), (1.0, 1.0));
    assert_eq!(sigma_profile(1.0, 2.0).unwrap(), (1.0, 1.0));

    let s = StepSetting::<f64>::integer(10, 0.5, 10).unwrap().with_gamma(0.5);
    let model = GmmModel::from_setting(LossKind::Ldt, &s, 1.0, 0).unwrap();
    let normed = snr_normalize(&model, 50.0).unwrap();
    assert!((normed.snr() - 50.0).abs() < 1e-12);
    let shrunk = rldt_rescale(&model.w, &s, -1.0).unwrap();
    for c in 0..10 {
        let ratio = shrunk.column(c).norm() / model.w.column(c).norm();
        let want = if s.is_majority(c) { 1.0 / 10f64.sqrt() } else { 1.0 };
        assert!((ratio - want).abs() < 1e-15);
    }
}

#[test]
fn single_precision_pipeline() {
    let s = StepSetting::<f32>::integer(6, 0.5, 5).unwrap().with_gamma(0.5);
    let r = seli_geometry::sel::verify_case(&s, 0.0).unwrap();
    assert!(r.passed(1e-4), "{r:?}");
    let l = stats_from_grams(&predict_ldt_grams(&s).unwrap(), &s).unwrap();
    assert!((l.cos_w_min_min.unwrap() + 0.2).abs() < 1e-5);
    let c = seli_geometry::cs_svm::certify(&s, LossKind::Cdt, 5, 0, 1e-4).unwrap();
    assert!(c.passed, "{c:?}");
    let mut cfg = seli_geometry::ufm::TrainConfig::<f32>::standard(LossKind::Ldt, 0.5).unwrap();
    cfg.epochs = 20;
    let (_, trace) = seli_geometry::ufm::train(&cfg).unwrap();
    assert!(trace.rows.iter().all(|r| r.loss.is_finite()));
}
