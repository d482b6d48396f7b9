//! Flag-averaged section and projection functionals.
//!
//! Every estimator averages a product statistic over Haar flags and then
//! applies the outer power, propagating the standard error by the delta
//! method. Two calls with the same seed and sampler see the same flags, so
//! comparisons between bodies use common random numbers automatically.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::exec::{accumulate, Accumulated, McConfig, MAX_REJECT_FRACTION};
use crate::flag::{derive_seed, sample_sphere, Flag, FlagSampler, FlagSampling, Frame, IndexSeq, RngSpec};
use crate::special::unit_ball_volume;

/// Volumes under a negative power smaller than this reject the sample.
pub const VANISHING_VOLUME: f64 = 1e-12;

/// Classical width over normalised mean width: the sphere-integral form of
/// `Φ_ω^{-3}` for `ω = (1,3,2)` averages full widths `h(θ) + h(-θ)`.
pub const EX1_WIDTH_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Section,
    Projection,
}

fn measure_volume(body: &Body, measure: Measure, frame: &Frame) -> Result<f64> {
    match measure {
        Measure::Section => body.section_volume(frame),
        Measure::Projection => body.projection_volume(frame),
    }
}

/// `∏_j vol(F_j)^{exponents[j]}`, or `None` when a vanishing volume meets a
/// negative exponent.
pub fn product_statistic(body: &Body, measure: Measure, flag: &Flag, exponents: &[f64]) -> Result<Option<f64>> {
    let mut prod = 1.0;
    for (frame, &e) in flag.frames().iter().zip(exponents) {
        if e == 0.0 {
            continue;
        }
        let v = measure_volume(body, measure, frame)?;
        if e < 0.0 && v < VANISHING_VOLUME {
            return Ok(None);
        }
        prod *= v.powf(e);
    }
    Ok(Some(prod))
}

pub(crate) fn check_rejections(rejected: usize, samples: usize) -> Result<()> {
    if rejected as f64 > MAX_REJECT_FRACTION * samples as f64 {
        return Err(Error::TooManyRejections { rejected, samples });
    }
    Ok(())
}

fn check_interior(body: &Body, measure: Measure, exponents: &[f64]) -> Result<()> {
    if measure == Measure::Section && exponents.iter().any(|&e| e < 0.0) && !body.contains_origin_interior() {
        return Err(Error::InteriorRequired(
            "negative powers of section volumes need the origin in the interior".into(),
        ));
    }
    Ok(())
}

/// Accumulated `∏_j vol(F_j)^{e_j}` with one component per body, all
/// components sharing the same flags. A sample is rejected for every
/// component as soon as one body rejects it.
pub fn flag_accumulate(
    bodies: &[&Body],
    measure: Measure,
    seq: &IndexSeq,
    exponents: &[f64],
    cfg: &McConfig,
    sampling: FlagSampling,
) -> Result<Accumulated> {
    if exponents.len() != seq.len() {
        return Err(Error::DimensionMismatch {
            expected: seq.len(),
            got: exponents.len(),
        });
    }
    for b in bodies {
        if b.n() != seq.n() {
            return Err(Error::DimensionMismatch {
                expected: seq.n(),
                got: b.n(),
            });
        }
        check_interior(b, measure, exponents)?;
    }
    let sampler = FlagSampler::new(seq.clone(), cfg.seed, sampling);
    let acc = accumulate(cfg, bodies.len(), |i, out| {
        let flag = sampler.sample(i);
        for (slot, body) in out.iter_mut().zip(bodies) {
            match product_statistic(body, measure, &flag, exponents)? {
                Some(v) => *slot = v,
                None => return Ok(false),
            }
        }
        Ok(true)
    })?;
    check_rejections(acc.rejected, cfg.samples)?;
    Ok(acc)
}

/// Raw flag averages of [`flag_accumulate`], one estimate per body.
pub fn flag_moments(
    bodies: &[&Body],
    measure: Measure,
    seq: &IndexSeq,
    exponents: &[f64],
    cfg: &McConfig,
    sampling: FlagSampling,
) -> Result<Vec<Estimate>> {
    let acc = flag_accumulate(bodies, measure, seq, exponents, cfg, sampling)?;
    Ok((0..bodies.len()).map(|c| Estimate::from_accumulated(&acc, c, cfg)).collect())
}

fn flag_moment(
    body: &Body,
    measure: Measure,
    seq: &IndexSeq,
    exponents: &[f64],
    cfg: &McConfig,
    sampling: FlagSampling,
) -> Result<Estimate> {
    Ok(flag_moments(&[body], measure, seq, exponents, cfg, sampling)?.remove(0))
}

fn seq_exponents(seq: &IndexSeq, sign: f64) -> Vec<f64> {
    seq.exponents().into_iter().map(|e| sign * e as f64).collect()
}

/// Dual flag quermassintegral `(E ∏_j |L ∩ F_j|^{i_{j+1} - i_{j-1}})^{1/(i_r n)}`.
pub fn psi_r(body: &Body, seq: &IndexSeq, cfg: &McConfig) -> Result<Estimate> {
    psi_r_with(body, seq, cfg, FlagSampling::Direct)
}

/// [`psi_r`] with an explicit flag sampler.
pub fn psi_r_with(body: &Body, seq: &IndexSeq, cfg: &McConfig, sampling: FlagSampling) -> Result<Estimate> {
    let m = flag_moment(body, Measure::Section, seq, &seq_exponents(seq, 1.0), cfg, sampling)?;
    Ok(m.power(1.0 / seq.degree() as f64))
}

/// Flag quermassintegral `(E ∏_j |P_{F_j} L|^{i_{j-1} - i_{j+1}})^{-1/(i_r n)}`.
pub fn phi_r(body: &Body, seq: &IndexSeq, cfg: &McConfig) -> Result<Estimate> {
    phi_r_with(body, seq, cfg, FlagSampling::Direct)
}

pub fn phi_r_with(body: &Body, seq: &IndexSeq, cfg: &McConfig, sampling: FlagSampling) -> Result<Estimate> {
    let m = flag_moment(body, Measure::Projection, seq, &seq_exponents(seq, -1.0), cfg, sampling)?;
    Ok(m.power(-1.0 / seq.degree() as f64))
}

/// Un-rooted flag average with an arbitrary exponent profile.
pub fn raw_flag_average(
    body: &Body,
    measure: Measure,
    seq: &IndexSeq,
    exponents: &[f64],
    cfg: &McConfig,
) -> Result<Estimate> {
    flag_moment(body, measure, seq, exponents, cfg, FlagSampling::Direct)
}

/// Complete-flag dual quermassintegral.
pub fn psi_full(body: &Body, cfg: &McConfig) -> Result<Estimate> {
    psi_omega(body, &Permutation::reversal(body.n())?, cfg)
}

/// Complete-flag quermassintegral.
pub fn phi_full(body: &Body, cfg: &McConfig) -> Result<Estimate> {
    phi_omega(body, &Permutation::reversal(body.n())?, cfg)
}

/// A permutation `ω` of `{1, …, n}`, stored one-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    values: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.values
    }
}

impl Permutation {
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidPermutation(format!(
                "need at least 2 entries, got {n}"
            )));
        }
        let mut seen = vec![false; n];
        for &v in &values {
            if v < 1 || v > n {
                return Err(Error::InvalidPermutation(format!("value {v} outside 1..={n}")));
            }
            if seen[v - 1] {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { values })
    }

    /// `(n, n-1, …, 1)`.
    pub fn reversal(n: usize) -> Result<Self> {
        Permutation::new((1..=n).rev().collect())
    }

    /// The permutation whose `δ` vanishes off `seq` and equals the flag
    /// exponents `i_{j+1} - i_{j-1}` on it.
    pub fn from_index_seq(seq: &IndexSeq) -> Result<Self> {
        let n = seq.n();
        let mut values = Vec::with_capacity(n);
        let mut w = (n - seq.indices()[0] + 1) as i64;
        values.push(w);
        for t in 1..n {
            w += 1;
            if let Some(j) = seq.indices().iter().position(|&i| i == t) {
                let j = j + 1;
                w += seq.padded(j - 1) as i64 - seq.padded(j + 1) as i64;
            }
            values.push(w);
        }
        if values.iter().any(|&v| v < 1) {
            return Err(Error::InvalidPermutation(format!("construction left the range 1..={n}")));
        }
        Permutation::new(values.into_iter().map(|v| v as usize).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// `ω(j)` for one-based `j`.
    pub fn at(&self, j: usize) -> usize {
        self.values[j - 1]
    }

    /// `δ(j) = ω(j) - ω(j+1) + 1` for `j = 1, …, n-1`.
    pub fn deltas(&self) -> Vec<i64> {
        self.values
            .windows(2)
            .map(|w| w[0] as i64 - w[1] as i64 + 1)
            .collect()
    }

    pub fn delta_sum(&self) -> i64 {
        self.deltas().iter().sum()
    }

    pub fn weighted_delta_sum(&self) -> i64 {
        self.deltas()
            .iter()
            .enumerate()
            .map(|(j, d)| (j as i64 + 1) * d)
            .sum()
    }

    /// `n (n - ω(n))`; zero exactly when the quantities are 0-homogeneous.
    pub fn degree(&self) -> usize {
        self.n() * (self.n() - self.at(self.n()))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn omega_moment(body: &Body, omega: &Permutation, measure: Measure, sign: f64, cfg: &McConfig) -> Result<Estimate> {
    let n = body.n();
    if omega.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: omega.n(),
        });
    }
    let seq = IndexSeq::complete(n)?;
    let exps: Vec<f64> = omega.deltas().into_iter().map(|d| sign * d as f64).collect();
    flag_moment(body, measure, &seq, &exps, cfg, FlagSampling::Direct)
}

/// `Ψ_ω`: complete-flag average of `∏ |L ∩ F_j|^{δ(j)}`, rooted by
/// `1/(n(n - ω(n)))` unless `ω(n) = n`.
pub fn psi_omega(body: &Body, omega: &Permutation, cfg: &McConfig) -> Result<Estimate> {
    let m = omega_moment(body, omega, Measure::Section, 1.0, cfg)?;
    Ok(match omega.degree() {
        0 => m,
        d => m.power(1.0 / d as f64),
    })
}

/// `Φ_ω`: complete-flag average of `∏ |P_{F_j} L|^{-δ(j)}`, rooted by
/// `-1/(n(n - ω(n)))` unless `ω(n) = n`.
pub fn phi_omega(body: &Body, omega: &Permutation, cfg: &McConfig) -> Result<Estimate> {
    let m = omega_moment(body, omega, Measure::Projection, -1.0, cfg)?;
    Ok(match omega.degree() {
        0 => m,
        d => m.power(-1.0 / d as f64),
    })
}

/// Value shared by every flag quermassintegral of the ball of radius `radius`.
pub fn ball_closed_form(seq: &IndexSeq, radius: f64) -> f64 {
    let exps: Vec<f64> = seq.exponents().into_iter().map(|e| e as f64).collect();
    ball_profile_value(seq.indices(), &exps, radius)
}

/// `radius · (∏_j ω_{k_j}^{e_j})^{1/Σ k_j e_j}` for a positive exponent profile.
pub fn ball_profile_value(dims: &[usize], exps: &[f64], radius: f64) -> f64 {
    let degree: f64 = dims.iter().zip(exps).map(|(&k, e)| k as f64 * e).sum();
    let log: f64 = dims
        .iter()
        .zip(exps)
        .map(|(&k, e)| e * unit_ball_volume(k).ln())
        .sum();
    radius * (log / degree).exp()
}

/// Exact `Ψ_ω` (equivalently `Φ_ω`) of the ball of radius `radius`.
pub fn ball_omega_closed_form(omega: &Permutation, radius: f64) -> f64 {
    let log: f64 = omega
        .deltas()
        .iter()
        .enumerate()
        .map(|(j, &d)| d as f64 * unit_ball_volume(j + 1).ln())
        .sum();
    match omega.degree() {
        0 => log.exp(),
        d => radius * (log / d as f64).exp(),
    }
}

/// `Ψ_r(E) = r_E · Ψ_r(B₂ⁿ)` for a centred ellipsoid.
pub fn ellipsoid_oracle_psi(body: &Body, seq: &IndexSeq) -> Result<f64> {
    let Body::Ellipsoid(e) = body else {
        return Err(Error::arg("ellipsoid oracle needs an ellipsoid"));
    };
    if e.center().iter().any(|&x| x != 0.0) {
        return Err(Error::arg("ellipsoid oracle needs a centred ellipsoid"));
    }
    if e.n() != seq.n() {
        return Err(Error::DimensionMismatch {
            expected: seq.n(),
            got: e.n(),
        });
    }
    let r_e = e.det().powf(-1.0 / (2.0 * e.n() as f64));
    Ok(ball_closed_form(seq, r_e))
}

/// Integrand of the sphere functional `A(d)` at a unit vector `φ`.
pub fn example2_integrand(d: &[f64; 3], phi: &[f64]) -> f64 {
    let num: f64 = (0..3).map(|i| d[i] * (1.0 - phi[i] * phi[i]).max(0.0).sqrt()).sum();
    let den: f64 = (0..3).map(|j| phi[j].abs() / d[j]).sum();
    num / (den * den)
}

fn check_example2_args(d: &[f64; 3]) -> Result<()> {
    if d.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::arg("all d_i must be positive"));
    }
    let prod = d[0] * d[1] * d[2];
    if (prod - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("d_1·d_2·d_3 must equal 1, got {prod}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `A(d) = ∫_{S²} Σ_i d_i √(1-φ_i²) / (Σ_j |φ_j|/d_j)² dσ(φ)`
/// against the uniform probability measure.
pub fn example2_a(d: [f64; 3], cfg: &McConfig) -> Result<Estimate> {
    check_example2_args(&d)?;
    let rng = RngSpec::new(cfg.seed);
    let acc = accumulate(cfg, 1, |i, out| {
        let phi = sample_sphere(3, &mut rng.stream(i));
        out[0] = example2_integrand(&d, phi.as_slice());
        Ok(true)
    })?;
    Ok(Estimate::from_accumulated(&acc, 0, cfg))
}

/// Both sides of the sphere identity for `Φ_ω^{-3}`, `ω = (1,3,2)`: the
/// complete-flag average and the sphere integral of
/// `EX1_WIDTH_FACTOR · W(P_{φ^⊥}L) / h_{ΠL}(φ)²`. The sphere side uses an
/// independent derived seed.
pub fn phi_omega_sphere_identity(body: &Body, cfg: &McConfig) -> Result<(Estimate, Estimate)> {
    if body.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: body.n(),
        });
    }
    let omega = Permutation::new(vec![1, 3, 2])?;
    let flag_side = omega_moment(body, &omega, Measure::Projection, -1.0, cfg)?;

    let sphere_cfg = cfg.with_seed(derive_seed(cfg.seed, 0x5ea1));
    let rng = RngSpec::new(sphere_cfg.seed);
    let acc = accumulate(&sphere_cfg, 1, |i, out| {
        let phi: DVector<f64> = sample_sphere(3, &mut rng.stream(i));
        let plane = Frame::orthogonal_complement(&phi)?;
        let h = body.projection_volume(&plane)?;
        if h < VANISHING_VOLUME {
            return Ok(false);
        }
        out[0] = EX1_WIDTH_FACTOR * body.planar_mean_width(&plane)? / (h * h);
        Ok(true)
    })?;
    check_rejections(acc.rejected, cfg.samples)?;
    let mut sphere_side = Estimate::from_accumulated(&acc, 0, &sphere_cfg);
    sphere_side.seed = cfg.seed;
    Ok((flag_side, sphere_side))
}
