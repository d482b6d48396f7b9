//! Functional forms: subspace restriction norms, flag integrals of
//! functions, and level-set quermassintegrals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::body::{Body, BodySpec, MatrixRepr, SYMMETRY_TOL};
use crate::error::{Error, Result};
use crate::estimate::{Estimate, Transform};
use crate::exec::{accumulate, McConfig};
use crate::flag::{sample_sphere, FlagSampler, FlagSampling, Frame, IndexSeq, RngSpec};
use crate::quermass::{check_rejections, flag_accumulate, Measure};
use crate::special::unit_ball_volume;

pub const MAX_LEVELS: usize = 64;
/// Boundary points per level used to check nesting of curved level sets.
pub const NESTING_PROBES: usize = 1000;

/// `f(x) = exp(-xᵀ M x)` with `M` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFn {
    m: DMatrix<f64>,
    det: f64,
}

impl GaussianFn {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::InvalidFunction("gaussian matrix must be square".into()));
        }
        if (&m - m.transpose()).amax() > SYMMETRY_TOL {
            return Err(Error::InvalidFunction("gaussian matrix is not symmetric".into()));
        }
        let m = (&m + m.transpose()) * 0.5;
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidFunction("gaussian matrix is not positive definite".into()))?;
        Ok(GaussianFn {
            det: chol.determinant(),
            m,
        })
    }

    pub fn standard(n: usize) -> Self {
        GaussianFn::new(DMatrix::identity(n, n)).expect("identity is positive definite")
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `x ↦ f(T⁻¹x)`, i.e. the matrix `T⁻ᵀ M T⁻¹`.
    pub fn compose_inverse(&self, t: &DMatrix<f64>) -> Result<Self> {
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular(t.determinant().abs()))?;
        let m = t_inv.transpose() * &self.m * t_inv;
        GaussianFn::new((&m + m.transpose()) * 0.5)
    }
}

/// One level `{f ≥ t}` of a level stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub t: f64,
    pub body: Body,
}

/// `f = Σ_i (t_i - t_{i+1}) 1_{K_i}` with `t_1 > … > t_m > 0`,
/// `K_1 ⊆ … ⊆ K_m` and `t_{m+1} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStack {
    levels: Vec<Level>,
}

fn boundary_probes(body: &Body, count: usize) -> Vec<DVector<f64>> {
    if let Some(v) = body.vertices() {
        return v.into_iter().map(DVector::from_vec).collect();
    }
    let n = body.n();
    let rng = RngSpec::new(0x6e65_7374);
    (0..count as u64)
        .map(|i| {
            let u = sample_sphere(n, &mut rng.stream(i));
            match body {
                Body::Ball { radius, center, .. } => center + u * *radius,
                Body::Ellipsoid(e) => {
                    let r = 1.0 / (e.matrix() * &u).dot(&u).sqrt();
                    e.center() + u * r
                }
                _ => unreachable!("polytopes handled above"),
            }
        })
        .collect()
}

impl LevelStack {
    /// Validates heights, dimension, the level cap and nesting.
    pub fn new(levels: Vec<Level>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidFunction("level stack is empty".into()));
        }
        if levels.len() > MAX_LEVELS {
            return Err(Error::InvalidFunction(format!(
                "level stacks hold at most {MAX_LEVELS} levels, got {}",
                levels.len()
            )));
        }
        let n = levels[0].body.n();
        if levels.iter().any(|l| l.body.n() != n) {
            return Err(Error::InvalidFunction("levels live in different dimensions".into()));
        }
        if levels.iter().any(|l| !(l.t.is_finite() && l.t > 0.0)) {
            return Err(Error::InvalidFunction("level heights must be positive".into()));
        }
        if levels.windows(2).any(|w| w[0].t <= w[1].t) {
            return Err(Error::InvalidFunction(
                "level heights must be strictly decreasing".into(),
            ));
        }
        for (i, w) in levels.windows(2).enumerate() {
            let bad = boundary_probes(&w[0].body, NESTING_PROBES)
                .iter()
                .filter(|x| !w[1].body.contains(x))
                .count();
            if bad > 0 {
                return Err(Error::InvalidFunction(format!(
                    "level {} is not contained in level {} ({bad} probe points outside)",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(LevelStack { levels })
    }

    /// Indicator function of one body.
    pub fn indicator(body: Body) -> Self {
        LevelStack {
            levels: vec![Level { t: 1.0, body }],
        }
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn n(&self) -> usize {
        self.levels[0].body.n()
    }

    /// Layer-cake weights `t_i - t_{i+1}`.
    pub fn weights(&self) -> Vec<f64> {
        let m = self.levels.len();
        (0..m)
            .map(|i| self.levels[i].t - if i + 1 < m { self.levels[i + 1].t } else { 0.0 })
            .collect()
    }

    pub fn bodies(&self) -> Vec<&Body> {
        self.levels.iter().map(|l| &l.body).collect()
    }

    fn map_bodies(&self, f: impl Fn(&Body) -> Result<Body>) -> Result<Self> {
        let levels = self
            .levels
            .iter()
            .map(|l| Ok(Level { t: l.t, body: f(&l.body)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(LevelStack { levels })
    }

    /// `f ∘ T`: every level mapped by `T`.
    pub fn apply_linear(&self, t: &DMatrix<f64>) -> Result<Self> {
        self.map_bodies(|b| b.apply_linear(t))
    }

    pub fn translate(&self, x: &DVector<f64>) -> Result<Self> {
        self.map_bodies(|b| b.translate(x))
    }

    /// `f_(λ)(x) = f(x/λ)`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        self.map_bodies(|b| b.scale(lambda))
    }

    /// Lower layer-cake approximation of a Gaussian with `levels` equally
    /// spaced heights, together with its deterministic `L¹` deficit.
    pub fn from_gaussian(g: &GaussianFn, levels: usize) -> Result<(Self, f64)> {
        if levels == 0 || levels > MAX_LEVELS {
            return Err(Error::InvalidFunction(format!("levels must be in 1..={MAX_LEVELS}")));
        }
        let mut out = Vec::with_capacity(levels);
        for i in 0..levels {
            let t = 1.0 - i as f64 / levels as f64;
            if t >= 1.0 {
                continue;
            }
            // {exp(-xᵀMx) ≥ t} = {xᵀ(M / ln(1/t))x ≤ 1}
            let body = Body::ellipsoid(g.matrix() / (1.0 / t).ln())?;
            out.push(Level { t, body });
        }
        let stack = LevelStack::new(out)?;
        let deficit = QuasiConcaveFn::Gaussian(g.clone()).l1_norm() - QuasiConcaveFn::LevelStack(stack.clone()).l1_norm();
        Ok((stack, deficit))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuasiConcaveFn {
    Gaussian(GaussianFn),
    LevelStack(LevelStack),
}

impl QuasiConcaveFn {
    pub fn n(&self) -> usize {
        match self {
            QuasiConcaveFn::Gaussian(g) => g.n(),
            QuasiConcaveFn::LevelStack(s) => s.n(),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match self {
            QuasiConcaveFn::Gaussian(g) => std::f64::consts::PI.powf(g.n() as f64 / 2.0) / g.det.sqrt(),
            QuasiConcaveFn::LevelStack(s) => s
                .weights()
                .iter()
                .zip(&s.levels)
                .map(|(w, l)| w * l.body.volume())
                .sum(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            QuasiConcaveFn::Gaussian(_) => 1.0,
            QuasiConcaveFn::LevelStack(s) => s.levels[0].t,
        }
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        if frame.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: frame.n(),
            });
        }
        Ok(())
    }

    /// `‖f|_F‖₁`, the integral of the restriction over `span(frame)`.
    pub fn restriction_l1(&self, frame: &Frame) -> Result<f64> {
        self.check_frame(frame)?;
        let u = frame.basis();
        let k = frame.k();
        match self {
            QuasiConcaveFn::Gaussian(g) => {
                let det = u.tr_mul(&(&g.m * u)).determinant();
                if !(det > 0.0) {
                    return Err(Error::NonIntegrable(format!(
                        "restricted quadratic form has determinant {det:e}"
                    )));
                }
                Ok(std::f64::consts::PI.powf(k as f64 / 2.0) / det.sqrt())
            }
            QuasiConcaveFn::LevelStack(s) => {
                let mut total = 0.0;
                for (w, l) in s.weights().iter().zip(&s.levels) {
                    total += w * l.body.section_volume(frame)?;
                }
                Ok(total)
            }
        }
    }

    /// `‖f|_F‖_∞`: the highest level whose body meets `span(frame)`.
    pub fn restriction_sup(&self, frame: &Frame) -> Result<f64> {
        self.check_frame(frame)?;
        match self {
            QuasiConcaveFn::Gaussian(_) => Ok(1.0),
            QuasiConcaveFn::LevelStack(s) => {
                let origin = DVector::zeros(s.n());
                for l in &s.levels {
                    if l.body.contains(&origin) || l.body.section_volume(frame)? > 0.0 {
                        return Ok(l.t);
                    }
                }
                Ok(0.0)
            }
        }
    }
}

/// Per-subspace exponents `a_j`, `b_j` of `∏_j ‖f|F_j‖₁^{a_j} · ‖f|F_j‖_∞^{-b_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormProfile {
    pub l1: Vec<f64>,
    pub sup: Vec<f64>,
}

impl NormProfile {
    /// `a_j = i_{j+1} - i_{j-1}`, `b_j = 0`: the integrand of `I(f)`.
    pub fn invariant(seq: &IndexSeq) -> Self {
        let l1: Vec<f64> = seq.exponents().into_iter().map(|e| e as f64).collect();
        NormProfile {
            sup: vec![0.0; l1.len()],
            l1,
        }
    }

    /// `a_j = i_{j+1} - i_{j-1}`, `b_j = i_{j+1} - i_j`.
    pub fn dpp(seq: &IndexSeq) -> Self {
        let r = seq.len();
        NormProfile {
            l1: seq.exponents().into_iter().map(|e| e as f64).collect(),
            sup: (1..=r).map(|j| (seq.padded(j + 1) - seq.padded(j)) as f64).collect(),
        }
    }

    /// Per-function exponents of the multi-function inequality:
    /// `i_2/i_1` and `(i_2 - i_1)/i_1` on `F_1`, `(i_{j+1} - i_j)/i_j` on both
    /// norms for `j ≥ 2`.
    pub fn ext(seq: &IndexSeq) -> Self {
        let r = seq.len();
        let mut l1 = Vec::with_capacity(r);
        let mut sup = Vec::with_capacity(r);
        for j in 1..=r {
            let (ij, next) = (seq.padded(j) as f64, seq.padded(j + 1) as f64);
            if j == 1 {
                l1.push(next / ij);
            } else {
                l1.push((next - ij) / ij);
            }
            sup.push((next - ij) / ij);
        }
        NormProfile { l1, sup }
    }

    /// Whether `a_j = i_{j+1} - i_{j-1}` for every `j`.
    pub fn is_balanced(&self, seq: &IndexSeq) -> bool {
        self.l1
            .iter()
            .zip(seq.exponents())
            .all(|(a, e)| (a - e as f64).abs() < 1e-12)
    }

    fn check(&self, seq: &IndexSeq) -> Result<()> {
        if self.l1.len() != seq.len() || self.sup.len() != seq.len() {
            return Err(Error::DimensionMismatch {
                expected: seq.len(),
                got: self.l1.len(),
            });
        }
        Ok(())
    }
}

fn profile_term(f: &QuasiConcaveFn, frame: &Frame, a: f64, b: f64) -> Result<f64> {
    let mut v = 1.0;
    if a != 0.0 {
        v *= f.restriction_l1(frame)?.powf(a);
    }
    if b != 0.0 {
        let s = f.restriction_sup(frame)?;
        if s <= 0.0 {
            return Err(Error::NonIntegrable("restriction vanishes identically".into()));
        }
        v /= s.powf(b);
    }
    Ok(v)
}

/// Flag average of `∏_k ∏_j ‖f_k|F_j‖₁^{a_j} / ‖f_k|F_j‖_∞^{b_j}`.
pub fn profile_statistic(
    fs: &[&QuasiConcaveFn],
    seq: &IndexSeq,
    profile: &NormProfile,
    cfg: &McConfig,
) -> Result<Estimate> {
    profile.check(seq)?;
    for f in fs {
        if f.n() != seq.n() {
            return Err(Error::DimensionMismatch {
                expected: seq.n(),
                got: f.n(),
            });
        }
    }
    let sampler = FlagSampler::new(seq.clone(), cfg.seed, FlagSampling::Direct);
    let acc = accumulate(cfg, 1, |i, out| {
        let flag = sampler.sample(i);
        let mut v = 1.0;
        for f in fs {
            for (j, frame) in flag.frames().iter().enumerate() {
                v *= profile_term(f, frame, profile.l1[j], profile.sup[j])?;
            }
        }
        out[0] = v;
        Ok(true)
    })?;
    Ok(Estimate::from_accumulated(&acc, 0, cfg))
}

/// `I(f) = E ∏_j ‖f|F_j‖₁^{i_{j+1} - i_{j-1}}` (no outer root).
pub fn functional_i(f: &QuasiConcaveFn, seq: &IndexSeq, cfg: &McConfig) -> Result<Estimate> {
    profile_statistic(&[f], seq, &NormProfile::invariant(seq), cfg)
}

/// A flag statistic next to its deterministic upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: Estimate,
    pub rhs: f64,
}

impl BoundReport {
    /// `(rhs - lhs) / SE`: positive when the bound holds.
    pub fn margin_se(&self) -> f64 {
        (self.rhs - self.lhs.mean) / self.lhs.effective_se()
    }

    pub fn ratio(&self) -> f64 {
        self.lhs.mean / self.rhs
    }
}

/// `∏_j ω_{i_j}^{i_{j+1}} / ω_{i_{j+1}}^{i_j}`.
pub fn dpp_constant(seq: &IndexSeq) -> f64 {
    (1..=seq.len())
        .map(|j| {
            let (a, b) = (seq.padded(j), seq.padded(j + 1));
            b as f64 * unit_ball_volume(a).ln() - a as f64 * unit_ball_volume(b).ln()
        })
        .sum::<f64>()
        .exp()
}

/// Flag integral of `∏_j ‖f|F_j‖₁^{i_{j+1}-i_{j-1}} / ‖f|F_j‖_∞^{i_{j+1}-i_j}`
/// against `∏_j ω_{i_j}^{i_{j+1}}/ω_{i_{j+1}}^{i_j} · ‖f‖₁^{i_r}`.
pub fn dpp_flag_ratio(f: &QuasiConcaveFn, seq: &IndexSeq, cfg: &McConfig) -> Result<BoundReport> {
    let sup = f.sup_norm();
    if !(sup.is_finite() && sup > 0.0) {
        return Err(Error::InvalidFunction("f must be bounded and nonzero".into()));
    }
    let lhs = profile_statistic(&[f], seq, &NormProfile::dpp(seq), cfg)?;
    let rhs = dpp_constant(seq) * f.l1_norm().powi(seq.last() as i32);
    Ok(BoundReport { lhs, rhs })
}

/// `(∏_j ω_{i_j}^{i_{j+1}/i_j} / ω_{i_{j+1}})`.
pub fn ext_constant(seq: &IndexSeq) -> f64 {
    (1..=seq.len())
        .map(|j| {
            let (a, b) = (seq.padded(j), seq.padded(j + 1));
            b as f64 / a as f64 * unit_ball_volume(a).ln() - unit_ball_volume(b).ln()
        })
        .sum::<f64>()
        .exp()
}

/// The `q`-function statistic with [`NormProfile::ext`] exponents against
/// `ext_constant(seq)^q · ∏_k ‖f_k‖₁`, for `1 ≤ q ≤ i_1`.
pub fn multi_function_ratio(fs: &[&QuasiConcaveFn], seq: &IndexSeq, cfg: &McConfig) -> Result<BoundReport> {
    let q = fs.len();
    if q < 1 || q > seq.indices()[0] {
        return Err(Error::arg(format!(
            "number of functions must lie in 1..={}, got {q}",
            seq.indices()[0]
        )));
    }
    for f in fs {
        let sup = f.sup_norm();
        if !(sup.is_finite() && sup > 0.0) {
            return Err(Error::InvalidFunction("every f_k must be bounded and nonzero".into()));
        }
    }
    let lhs = profile_statistic(fs, seq, &NormProfile::ext(seq), cfg)?;
    let rhs = ext_constant(seq).powi(q as i32) * fs.iter().map(|f| f.l1_norm()).product::<f64>();
    Ok(BoundReport { lhs, rhs })
}

/// `P_F f` as a level stack on `span(frame)`: `{P_F f ≥ t} = P_F {f ≥ t}`.
pub fn project_function(f: &LevelStack, frame: &Frame) -> Result<LevelStack> {
    f.map_bodies(|b| b.project_onto(frame))
}

/// `Φ_r(f) = Σ_i (t_i - t_{i+1}) Φ_r(K_i)`, all levels sharing flags. The
/// standard error comes from the delta method applied to the joint
/// covariance of the per-level flag averages.
pub fn phi_r_of_function(f: &LevelStack, seq: &IndexSeq, cfg: &McConfig) -> Result<Estimate> {
    let exps: Vec<f64> = seq.exponents().into_iter().map(|e| -(e as f64)).collect();
    let bodies = f.bodies();
    let acc = flag_accumulate(&bodies, Measure::Projection, seq, &exps, cfg, FlagSampling::Direct)?;
    check_rejections(acc.rejected, cfg.samples)?;
    let p = -1.0 / seq.degree() as f64;
    let weights = f.weights();
    let m = &acc.moments;
    let mut value = 0.0;
    let grad: Vec<f64> = (0..bodies.len())
        .map(|i| {
            value += weights[i] * m.mean[i].powf(p);
            weights[i] * p * m.mean[i].powf(p - 1.0)
        })
        .collect();
    let n = m.count.max(1) as f64;
    let mut var = 0.0;
    for (a, ga) in grad.iter().enumerate() {
        for (b, gb) in grad.iter().enumerate() {
            var += ga * gb * m.covariance(a, b);
        }
    }
    let base = Estimate::from_accumulated(&acc, 0, cfg);
    Ok(Estimate {
        mean: value,
        std_error: (var.max(0.0) / n).sqrt(),
        transform: Transform::Power { power: p },
        ..base
    })
}

/// Symmetric decreasing rearrangement: each level replaced by the centred
/// ball of equal volume.
pub fn rearrange(f: &LevelStack) -> Result<LevelStack> {
    let n = f.n();
    let mut levels = Vec::with_capacity(f.levels.len());
    for l in &f.levels {
        let body = match &l.body {
            Body::Ball { center, .. } if center.iter().all(|&x| x == 0.0) => l.body.clone(),
            b => {
                let r = b.volume_radius();
                if !(r > 0.0) {
                    log::warn!("dropping level t = {} with zero volume", l.t);
                    continue;
                }
                Body::ball(n, r)?
            }
        };
        levels.push(Level { t: l.t, body });
    }
    if levels.is_empty() {
        return Err(Error::InvalidFunction("every level has zero volume".into()));
    }
    Ok(LevelStack { levels })
}

/// JSON form of a [`QuasiConcaveFn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionSpec {
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        matrix: MatrixRepr,
    },
    LevelStack {
        levels: Vec<LevelSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub t: f64,
    pub body: BodySpec,
}

impl FunctionSpec {
    pub fn build(&self) -> Result<QuasiConcaveFn> {
        match self {
            FunctionSpec::Gaussian { n, matrix } => {
                let n = match (n, matrix) {
                    (Some(n), _) => *n,
                    (None, MatrixRepr::Rows(r)) => r.len(),
                    (None, MatrixRepr::Flat(v)) => {
                        let n = (v.len() as f64).sqrt().round() as usize;
                        if n * n != v.len() {
                            return Err(Error::InvalidFunction("flat matrix length is not a square".into()));
                        }
                        n
                    }
                };
                Ok(QuasiConcaveFn::Gaussian(GaussianFn::new(
                    matrix.to_matrix(n).map_err(|e| Error::InvalidFunction(e.to_string()))?,
                )?))
            }
            FunctionSpec::LevelStack { levels } => {
                let levels = levels
                    .iter()
                    .map(|l| Ok(Level { t: l.t, body: l.body.build()? }))
                    .collect::<Result<Vec<_>>>()?;
                Ok(QuasiConcaveFn::LevelStack(LevelStack::new(levels)?))
            }
        }
    }

    pub fn parse(json: &str) -> Result<QuasiConcaveFn> {
        let spec: FunctionSpec = serde_json::from_str(json)?;
        spec.build()
    }
}

impl QuasiConcaveFn {
    pub fn to_spec(&self) -> FunctionSpec {
        match self {
            QuasiConcaveFn::Gaussian(g) => FunctionSpec::Gaussian {
                n: Some(g.n()),
                matrix: MatrixRepr::from_matrix(&g.m),
            },
            QuasiConcaveFn::LevelStack(s) => FunctionSpec::LevelStack {
                levels: s
                    .levels
                    .iter()
                    .map(|l| LevelSpec {
                        t: l.t,
                        body: l.body.to_spec(),
                    })
                    .collect(),
            },
        }
    }
}
