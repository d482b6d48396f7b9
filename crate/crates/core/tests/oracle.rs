mod common;

use common::{example2_oracle, gauss_legendre, sphere_average};
use flagquer::harness::CheckSpec;
use flagquer::quermass::example2_a;
use flagquer::McConfig;

#[test]
fn gauss_legendre_integrates_polynomials() {
    let (x, w) = gauss_legendre(7);
    let sum: f64 = w.iter().sum();
    assert!((sum - 2.0).abs() < 1e-14);
    let m12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
    assert!((m12 - 2.0 / 13.0).abs() < 1e-14);
}

#[test]
fn sphere_quadrature_moments() {
    assert!((sphere_average(64, |_| 1.0) - 1.0).abs() < 1e-13);
    assert!((sphere_average(64, |p| p[0] * p[0]) - 1.0 / 3.0).abs() < 1e-13);
    assert!((sphere_average(64, |p| p[2].powi(4)) - 0.2).abs() < 1e-13);
}

#[test]
fn frozen_example2_reference_matches_oracle() {
    let fixture: serde_json::Value =
        serde_json::from_str(include_str!("../fixtures/example2_reference.json")).unwrap();
    let frozen = fixture["value"].as_f64().unwrap();
    let tol = fixture["abs_tolerance"].as_f64().unwrap();
    let oracle = example2_oracle([1.0, 1.0, 1.0], 1000);
    assert!((oracle - frozen).abs() < tol, "oracle {oracle} fixture {frozen}");
    assert_eq!(frozen, flagquer_reference());
}

fn flagquer_reference() -> f64 {
    let report = flagquer::harness::run_check(&CheckSpec::new("example2-fixture").with_samples(1000)).unwrap();
    report.cases[0].rhs.mean
}

#[test]
fn monte_carlo_matches_quadrature_for_skewed_d() {
    let d = [1.0, 2.0, 0.5];
    let want = example2_oracle(d, 400);
    let est = example2_a(d, &McConfig::new(100_000, 11)).unwrap();
    assert!((est.mean - want).abs() <= 3.0 * est.std_error, "{est:?} vs {want}");
    assert!(want < example2_oracle([1.0, 1.0, 1.0], 400));
}
