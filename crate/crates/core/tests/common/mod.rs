#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Average of `f` over `S²` against the uniform probability measure, by
/// product Gauss–Legendre quadrature on each of the eight octants.
pub fn sphere_average(nodes: usize, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let half = PI / 4.0;
    let mut total = 0.0;
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                for (a, wa) in x.iter().zip(&w) {
                    let t = (a + 1.0) * half;
                    let (st, ct) = t.sin_cos();
                    for (b, wb) in x.iter().zip(&w) {
                        let p = (b + 1.0) * half;
                        let (sp, cp) = p.sin_cos();
                        let phi = [sx * st * cp, sy * st * sp, sz * ct];
                        total += wa * wb * half * half * st * f(&phi);
                    }
                }
            }
        }
    }
    total / (4.0 * PI)
}

/// Independent evaluation of the sphere functional `A(d)`.
pub fn example2_oracle(d: [f64; 3], nodes: usize) -> f64 {
    sphere_average(nodes, |phi| {
        let num: f64 = (0..3).map(|i| d[i] * (1.0 - phi[i] * phi[i]).max(0.0).sqrt()).sum();
        let den: f64 = (0..3).map(|j| phi[j].abs() / d[j]).sum();
        num / (den * den)
    })
}

/// One-sample Kolmogorov–Smirnov statistic against the CDF `cdf`.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov survival function `P(K > λ)`.
pub fn kolmogorov_p(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            (if k as i64 % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// p-value of a one-sample KS statistic `d` with `n` observations.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_p((sn + 0.12 + 0.11 / sn) * d)
}

/// p-value of a two-sample KS statistic.
pub fn ks_two_sample_p(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sn = ne.sqrt();
    kolmogorov_p((sn + 0.12 + 0.11 / sn) * d)
}

/// `|a - b| ≤ k · √(SE_a² + SE_b²)`.
pub fn within_se(a: f64, se_a: f64, b: f64, se_b: f64, k: f64) -> bool {
    (a - b).abs() <= k * se_a.hypot(se_b).max(1e-12 * b.abs())
}
