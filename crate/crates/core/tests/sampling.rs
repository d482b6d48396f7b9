mod common;

use common::{ks_p_value, ks_statistic, ks_two_sample, ks_two_sample_p};
use flagquer::flag::{sample_frame, sample_orthogonal, sample_sphere};
use flagquer::{FlagSampler, FlagSampling, IndexSeq, RngSpec};
use nalgebra::DMatrix;

const N: usize = 20_000;

fn fixed_rotation() -> DMatrix<f64> {
    sample_orthogonal(3, &mut RngSpec::new(99).stream(0))
}

#[test]
fn sphere_coordinate_is_uniform_on_interval() {
    let rng = RngSpec::new(1);
    let xs: Vec<f64> = (0..N as u64).map(|i| sample_sphere(3, &mut rng.stream(i))[2]).collect();
    let d = ks_statistic(xs, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0));
    assert!(ks_p_value(d, N) > 1e-3, "D = {d}");
}

#[test]
fn flag_line_direction_is_rotation_invariant() {
    let s = IndexSeq::new(3, vec![1, 2]).unwrap();
    let sampler = FlagSampler::new(s, 5, FlagSampling::Direct);
    let r = fixed_rotation();
    let mut plain = Vec::with_capacity(N);
    let mut rotated = Vec::with_capacity(N);
    for i in 0..N as u64 {
        let flag = sampler.sample(i);
        let u = flag.frames()[0].basis().column(0).into_owned();
        plain.push(u[0].abs());
        rotated.push((&r * &u)[0].abs());
    }
    // |u₁| of a uniform direction in R³ is uniform on [0, 1]
    let d = ks_statistic(plain.clone(), |x| x.clamp(0.0, 1.0));
    assert!(ks_p_value(d, N) > 1e-3, "D = {d}");
    let d = ks_statistic(rotated, |x| x.clamp(0.0, 1.0));
    assert!(ks_p_value(d, N) > 1e-3, "D = {d}");
}

#[test]
fn plane_normal_is_uniform() {
    let rng = RngSpec::new(8);
    let xs: Vec<f64> = (0..N as u64)
        .map(|i| {
            let f = sample_frame(3, 2, &mut rng.stream(i));
            let b = f.basis();
            let n = b.column(0).cross(&b.column(1));
            n[1]
        })
        .collect();
    let d = ks_statistic(xs, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0));
    assert!(ks_p_value(d, N) > 1e-3, "D = {d}");
}

#[test]
fn samplers_agree_in_distribution() {
    let s = IndexSeq::new(4, vec![1, 3]).unwrap();
    let stat = |method: FlagSampling, seed: u64| -> Vec<f64> {
        let sampler = FlagSampler::new(s.clone(), seed, method);
        (0..N as u64)
            .map(|i| {
                let flag = sampler.sample(i);
                let line = flag.frames()[0].basis().column(0).into_owned();
                let top = flag.frames()[1].basis();
                // squared length of e₁ projected to F₂, and the line's first coordinate
                top.row(0).norm_squared() + line[0] * line[0]
            })
            .collect()
    };
    let direct = stat(FlagSampling::Direct, 1);
    for (m, seed) in [(FlagSampling::Nested, 2), (FlagSampling::Complete, 3)] {
        let d = ks_two_sample(direct.clone(), stat(m, seed));
        assert!(ks_two_sample_p(d, N, N) > 1e-3, "{m:?}: D = {d}");
    }
}

#[test]
fn mean_absolute_coordinate() {
    // E|θ₁| = Γ(n/2) / (√π Γ((n+1)/2))
    let cases = [(2usize, 2.0 / std::f64::consts::PI), (3, 0.5), (4, 4.0 / (3.0 * std::f64::consts::PI))];
    for (n, want) in cases {
        let rng = RngSpec::new(n as u64);
        let xs: Vec<f64> = (0..N as u64).map(|i| sample_sphere(n, &mut rng.stream(i))[0].abs()).collect();
        let mean = xs.iter().sum::<f64>() / N as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (N - 1) as f64;
        let se = (var / N as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * se, "n={n}: {mean} vs {want}");
    }
}

#[test]
fn haar_entry_moments() {
    let n = 4;
    let rng = RngSpec::new(77);
    let qs: Vec<f64> = (0..N as u64).map(|i| sample_orthogonal(n, &mut rng.stream(i))[(0, 0)]).collect();
    let mean = qs.iter().sum::<f64>() / N as f64;
    let second = qs.iter().map(|q| q * q).sum::<f64>() / N as f64;
    assert!(mean.abs() < 4.0 * (1.0 / (n as f64 * N as f64)).sqrt(), "{mean}");
    assert!((second - 1.0 / n as f64).abs() < 0.01, "{second}");
}

#[test]
fn grassmannian_projection_moment() {
    // E‖P_F e₁‖² = k/n
    let (n, k) = (5, 2);
    let rng = RngSpec::new(3);
    let mean = (0..N as u64)
        .map(|i| sample_frame(n, k, &mut rng.stream(i)).basis().row(0).norm_squared())
        .sum::<f64>()
        / N as f64;
    assert!((mean - k as f64 / n as f64).abs() < 0.01, "{mean}");
}
