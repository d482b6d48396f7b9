mod common;

use std::f64::consts::PI;

use common::within_se;
use flagquer::flag::sample_frame;
use flagquer::functional::*;
use flagquer::quermass::phi_r;
use flagquer::{Body, Frame, IndexSeq, McConfig, RngSpec};
use nalgebra::{DMatrix, DVector};

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

fn seq(n: usize, idx: &[usize]) -> IndexSeq {
    IndexSeq::new(n, idx.to_vec()).unwrap()
}

fn gaussian(m: DMatrix<f64>) -> QuasiConcaveFn {
    QuasiConcaveFn::Gaussian(GaussianFn::new(m).unwrap())
}

fn cube_stack(scale: f64) -> LevelStack {
    LevelStack::new(vec![
        Level { t: 2.0 * scale, body: Body::cube(3, 0.5).unwrap() },
        Level { t: scale, body: Body::cube(3, 1.0).unwrap() },
    ])
    .unwrap()
}

#[test]
fn standard_gaussian_functional_values() {
    let f = QuasiConcaveFn::Gaussian(GaussianFn::standard(4));
    let cfg = McConfig::new(2000, 1);
    for s in IndexSeq::all(4, 3) {
        let est = functional_i(&f, &s, &cfg).unwrap();
        let want = PI.powf((s.last() * 4) as f64 / 2.0);
        assert!((est.mean - want).abs() < 1e-10 * want, "{s}: {} vs {want}", est.mean);
    }
}

#[test]
fn single_index_matches_grassmannian_sampling() {
    let f = gaussian(diag(&[4.0, 0.25, 1.0]));
    let cfg = McConfig::new(50_000, 21);
    let est = functional_i(&f, &seq(3, &[2]), &cfg).unwrap();
    let rng = RngSpec::new(22);
    let xs: Vec<f64> = (0..50_000u64)
        .map(|i| f.restriction_l1(&sample_frame(3, 2, &mut rng.stream(i))).unwrap().powi(3))
        .collect();
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let se = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64 / xs.len() as f64).sqrt();
    assert!(within_se(est.mean, est.std_error, m, se, 3.0), "{est:?} vs {m} ± {se}");
}

#[test]
fn dpp_ratio_is_dilation_invariant() {
    let s = seq(3, &[1, 2]);
    let cfg = McConfig::new(5000, 4);
    let m = diag(&[4.0, 0.25, 1.0]);
    let a = dpp_flag_ratio(&gaussian(m.clone()), &s, &cfg).unwrap();
    let lambda = 1.7;
    let b = dpp_flag_ratio(&gaussian(m / (lambda * lambda)), &s, &cfg).unwrap();
    assert!((a.ratio() - b.ratio()).abs() < 1e-12 * a.ratio());
    let stack = cube_stack(1.0);
    let a = dpp_flag_ratio(&QuasiConcaveFn::LevelStack(stack.clone()), &s, &cfg).unwrap();
    let b = dpp_flag_ratio(&QuasiConcaveFn::LevelStack(stack.dilate(lambda).unwrap()), &s, &cfg).unwrap();
    assert!((a.ratio() - b.ratio()).abs() < 1e-12 * a.ratio());
}

#[test]
fn single_function_reduces_to_ext_profile() {
    let s = seq(3, &[1, 2]);
    let cfg = McConfig::new(3000, 9);
    let f = gaussian(diag(&[2.0, 0.5, 1.0]));
    let multi = multi_function_ratio(&[&f], &s, &cfg).unwrap();
    let direct = profile_statistic(&[&f], &s, &NormProfile::ext(&s), &cfg).unwrap();
    assert!((multi.lhs.mean - direct.mean).abs() <= 1e-12 * direct.mean);
    assert!((multi.rhs - ext_constant(&s) * f.l1_norm()).abs() < 1e-12 * multi.rhs);
}

#[test]
fn multi_function_ratio_is_one_homogeneous_in_each_function() {
    let s = seq(3, &[1, 2]);
    let cfg = McConfig::new(3000, 10);
    let a = multi_function_ratio(&[&QuasiConcaveFn::LevelStack(cube_stack(1.0))], &s, &cfg).unwrap();
    let b = multi_function_ratio(&[&QuasiConcaveFn::LevelStack(cube_stack(3.5))], &s, &cfg).unwrap();
    assert!((b.lhs.mean / a.lhs.mean - 3.5).abs() < 1e-12 * 3.5);
    assert!((a.ratio() - b.ratio()).abs() < 1e-12 * a.ratio());
}

#[test]
fn q_out_of_range_is_rejected() {
    let s = seq(3, &[1, 2]);
    let f = QuasiConcaveFn::Gaussian(GaussianFn::standard(3));
    let cfg = McConfig::new(10, 0);
    assert!(multi_function_ratio(&[], &s, &cfg).is_err());
    assert!(multi_function_ratio(&[&f, &f], &s, &cfg).is_err());
}

#[test]
fn phi_r_of_indicator_is_phi_r_of_body() {
    let s = seq(3, &[1, 2]);
    let cfg = McConfig::new(20_000, 3);
    let cube = Body::cube(3, 1.0).unwrap();
    let a = phi_r_of_function(&LevelStack::indicator(cube.clone()), &s, &cfg).unwrap();
    let b = phi_r(&cube, &s, &cfg).unwrap();
    assert!((a.mean - b.mean).abs() < 1e-12 * b.mean);
    assert!((a.std_error - b.std_error).abs() < 1e-9 * b.std_error);
}

#[test]
fn phi_r_of_function_affine_invariance_and_dilation() {
    let s = seq(3, &[1, 2]);
    let cfg = McConfig::new(30_000, 6);
    let f = cube_stack(1.0);
    let base = phi_r_of_function(&f, &s, &cfg).unwrap();
    let t = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5]);
    let moved = f.apply_linear(&t).unwrap().translate(&DVector::from_vec(vec![0.2, 0.1, -0.3])).unwrap();
    let m = phi_r_of_function(&moved, &s, &cfg.with_seed(7)).unwrap();
    assert!(within_se(m.mean, m.std_error, base.mean, base.std_error, 3.0), "{m:?} vs {base:?}");
    let d = phi_r_of_function(&f.dilate(2.0).unwrap(), &s, &cfg).unwrap();
    assert!((d.mean - 2.0 * base.mean).abs() < 1e-12 * d.mean);
}

#[test]
fn layer_cake_se_accounts_for_shared_flags() {
    // two identical levels: the sum is exactly twice one level, and so is its SE
    let s = seq(3, &[1, 2]);
    let cfg = McConfig::new(20_000, 12);
    let cube = Body::cube(3, 1.0).unwrap();
    let doubled = LevelStack::new(vec![
        Level { t: 2.0, body: cube.clone() },
        Level { t: 1.0, body: cube.clone() },
    ])
    .unwrap();
    let one = phi_r_of_function(&LevelStack::indicator(cube), &s, &cfg).unwrap();
    let two = phi_r_of_function(&doubled, &s, &cfg).unwrap();
    assert!((two.mean - 2.0 * one.mean).abs() < 1e-12 * two.mean);
    assert!((two.std_error - 2.0 * one.std_error).abs() < 1e-8 * two.std_error);
}

#[test]
fn rearrangement_ratio() {
    let s = seq(3, &[1, 2]);
    let cfg = McConfig::new(30_000, 13);
    let e = |m: &[f64]| Body::ellipsoid(diag(m)).unwrap();
    let ellipsoids = LevelStack::new(vec![
        Level { t: 2.0, body: e(&[16.0, 1.0, 1.0]) },
        Level { t: 1.0, body: e(&[4.0, 0.25, 1.0]) },
    ])
    .unwrap();
    let a = phi_r_of_function(&ellipsoids, &s, &cfg).unwrap();
    let b = phi_r_of_function(&rearrange(&ellipsoids).unwrap(), &s, &cfg).unwrap();
    assert!(within_se(a.mean, a.std_error, b.mean, b.std_error, 3.0), "{a:?} vs {b:?}");
    let c = phi_r_of_function(&cube_stack(1.0), &s, &cfg).unwrap();
    let r = phi_r_of_function(&rearrange(&cube_stack(1.0)).unwrap(), &s, &cfg).unwrap();
    let ratio = c.mean / r.mean;
    assert!(ratio.is_finite() && ratio > 0.0);
}

#[test]
fn rearranged_cube_indicator() {
    let r = rearrange(&LevelStack::indicator(Body::cube(3, 1.0).unwrap())).unwrap();
    let Body::Ball { radius, .. } = &r.levels()[0].body else { panic!() };
    let want = (8.0 / flagquer::special::unit_ball_volume(3)).powf(1.0 / 3.0);
    assert!((radius - want).abs() < 1e-14);
}

#[test]
fn level_stack_approximates_cube_section() {
    // thin shells around the cube: indicator-like stack with a tiny outer layer
    let stack = LevelStack::new(vec![
        Level { t: 1.0, body: Body::cube(3, 1.0).unwrap() },
        Level { t: 1e-6, body: Body::cube(3, 1.1).unwrap() },
    ])
    .unwrap();
    let f = QuasiConcaveFn::LevelStack(stack);
    let fr = Frame::coordinate(3, &[0, 1]).unwrap();
    assert!((f.restriction_l1(&fr).unwrap() - 4.0).abs() < 1e-5);
    assert_eq!(f.restriction_sup(&fr).unwrap(), 1.0);
}

#[test]
fn projected_stack_stays_nested() {
    let f = cube_stack(1.0);
    let fr = Frame::from_spanning(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0])).unwrap();
    let p = project_function(&f, &fr).unwrap();
    assert!(LevelStack::new(p.levels().to_vec()).is_ok());
    assert!(p.levels()[0].body.volume() < p.levels()[1].body.volume());
}

#[test]
fn gaussian_composition_preserves_restriction_norm() {
    let g = GaussianFn::new(diag(&[1.0, 2.0, 3.0])).unwrap();
    let t = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let h = QuasiConcaveFn::Gaussian(g.compose_inverse(&t).unwrap());
    let g = QuasiConcaveFn::Gaussian(g);
    assert!((h.l1_norm() - g.l1_norm()).abs() < 1e-12 * g.l1_norm());
}
