use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Assertion, CaseReport, CheckSpec};
use crate::body::Body;
use crate::error::Result;
use crate::estimate::Estimate;
use crate::exec::{with_threads, McConfig};
use crate::flag::{derive_seed, sample_orthogonal, FlagSampling, IndexSeq, RngSpec};
use crate::functional::{
    dpp_flag_ratio, functional_i, multi_function_ratio, profile_statistic, GaussianFn, Level, LevelStack, NormProfile,
    QuasiConcaveFn,
};
use crate::quermass::{
    ball_closed_form, example2_a, phi_omega_sphere_identity, phi_r, psi_omega, psi_r, psi_r_with,
    raw_flag_average, Measure, Permutation,
};

type CheckFn = fn(&CheckSpec) -> Result<Vec<CaseReport>>;

/// A registered check and the acceptance criterion it belongs to.
pub struct CheckDef {
    pub name: &'static str,
    pub criterion: u8,
    pub description: &'static str,
    pub run: CheckFn,
}

/// Acceptance criteria covered by the registry, in order.
pub const CRITERIA: [(u8, &str); 12] = [
    (1, "ball closed form"),
    (2, "SL(n) and affine invariance"),
    (3, "Busemann-Straus/Grinberg extension"),
    (4, "omega = (2,1,3) constant 4/pi"),
    (5, "sphere functional A(d)"),
    (6, "flag/sphere identity for omega = (1,3,2)"),
    (7, "partial versus complete flags"),
    (8, "Santalo pair"),
    (9, "mean-width sandwich"),
    (10, "functional invariance"),
    (11, "functional flag inequalities"),
    (12, "infrastructure properties"),
];

/// Fixed seed for the random test bodies, so the bodies do not change with
/// the suite seed.
const BODY_SEED: u64 = 0xb0d1e5;

const FIXTURE: &str = include_str!("../../fixtures/example2_reference.json");

static REGISTRY: [CheckDef; 21] = [
    CheckDef {
        name: "ball-closed-form",
        criterion: 1,
        description: "psi_r and phi_r of balls in n = 3, 4, 5 for every index sequence with r <= 3",
        run: ball_closed_form_check,
    },
    CheckDef {
        name: "sln-invariance",
        criterion: 2,
        description: "psi_r of the cube and cross-polytope under diagonal, shear and rotated diagonal maps",
        run: sln_invariance,
    },
    CheckDef {
        name: "affine-invariance-phi",
        criterion: 2,
        description: "phi_r of the cube and cross-polytope under volume-preserving affine maps",
        run: affine_invariance_phi,
    },
    CheckDef {
        name: "sln-invariance-negative-control",
        criterion: 2,
        description: "an unbalanced section profile drifts under diag(4, 1/4, 1)",
        run: negative_control,
    },
    CheckDef {
        name: "busemann-straus-cube",
        criterion: 3,
        description: "psi_r(cube) lies strictly below psi_r of the ball of equal volume",
        run: busemann_straus_cube,
    },
    CheckDef {
        name: "busemann-straus-ellipsoid",
        criterion: 3,
        description: "centred ellipsoids of volume |B| attain the ball value",
        run: busemann_straus_ellipsoid,
    },
    CheckDef {
        name: "example1-4-over-pi",
        criterion: 4,
        description: "psi_omega with omega = (2,1,3) equals 4/pi",
        run: example1,
    },
    CheckDef {
        name: "example2-ordering",
        criterion: 5,
        description: "A(1,2,1/2) < A(1,1,1) by more than 5 combined SE",
        run: example2_ordering,
    },
    CheckDef {
        name: "example2-fixture",
        criterion: 5,
        description: "A(1,1,1) matches the frozen quadrature reference",
        run: example2_fixture,
    },
    CheckDef {
        name: "example2-symmetry",
        criterion: 5,
        description: "A(d) is symmetric under permutations of d",
        run: example2_symmetry,
    },
    CheckDef {
        name: "ex1-sphere-identity",
        criterion: 6,
        description: "complete-flag and sphere-integral forms of Phi_omega^-3, omega = (1,3,2)",
        run: ex1_sphere_identity,
    },
    CheckDef {
        name: "partial-vs-full-flag",
        criterion: 7,
        description: "psi_r from partial flags, nested flags and complete flags agree",
        run: partial_vs_full,
    },
    CheckDef {
        name: "santalo-pair",
        criterion: 8,
        description: "phi_r(L polar) psi_r(L) is at most the ball value",
        run: santalo_pair,
    },
    CheckDef {
        name: "sandwich-upper",
        criterion: 9,
        description: "phi_r(L)/phi_r(B) is at most the mean width of L",
        run: sandwich_upper,
    },
    CheckDef {
        name: "functional-invariance",
        criterion: 10,
        description: "I(f) for Gaussians exp(-|gx|^2), g in SL(3), equals the standard Gaussian value",
        run: functional_invariance,
    },
    CheckDef {
        name: "dpp-flag-inequality",
        criterion: 11,
        description: "flag inequality for one function, strict for Gaussians and cube stacks, equality for balls",
        run: dpp_inequality,
    },
    CheckDef {
        name: "multi-function-ext",
        criterion: 11,
        description: "q-function flag inequality, strict for Gaussians, equality for ball indicators",
        run: multi_function_ext,
    },
    CheckDef {
        name: "determinism-threads",
        criterion: 12,
        description: "estimates are bit-identical across worker counts and execution modes",
        run: determinism_threads,
    },
    CheckDef {
        name: "se-scaling",
        criterion: 12,
        description: "doubling the sample count shrinks the SE by sqrt(2) within 20%",
        run: se_scaling,
    },
    CheckDef {
        name: "homogeneity",
        criterion: 12,
        description: "degree-1 and degree-0 homogeneity under dilation with shared flags",
        run: homogeneity,
    },
    CheckDef {
        name: "index-permutation-identities",
        criterion: 12,
        description: "exponent sums of index sequences and permutations, exhaustively",
        run: index_permutation_identities,
    },
];

pub fn registry() -> &'static [CheckDef] {
    &REGISTRY
}

fn cfg(job: &CheckSpec) -> McConfig {
    McConfig::new(job.samples, job.seed)
}

fn seq(n: usize, idx: &[usize]) -> IndexSeq {
    IndexSeq::new(n, idx.to_vec()).expect("registry index sequences are valid")
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

fn shear() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0])
}

fn rotation(tag: u64) -> DMatrix<f64> {
    let mut q = sample_orthogonal(3, &mut RngSpec::new(BODY_SEED).stream(tag));
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Random `g` with `det g = 1`.
fn random_sl(n: usize, tag: u64) -> DMatrix<f64> {
    let mut rng = RngSpec::new(BODY_SEED ^ 0x51).stream(tag);
    loop {
        let mut g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let det = g.determinant();
        if det.abs() < 0.05 {
            continue;
        }
        if det < 0.0 {
            g.row_mut(0).neg_mut();
        }
        return g / det.abs().powf(1.0 / n as f64);
    }
}

fn random_points(count: usize, tag: u64) -> Vec<Vec<f64>> {
    let mut rng = RngSpec::new(BODY_SEED).stream(1000 + tag);
    (0..count)
        .map(|_| (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Convex hull of 10 Gaussian points and their reflections.
pub(crate) fn random_symmetric_polytope() -> Result<Body> {
    let mut pts = random_points(10, 0);
    let neg: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| -x).collect()).collect();
    pts.extend(neg);
    Body::polytope_v(3, pts)
}

/// Convex hull of 12 Gaussian points.
pub(crate) fn random_polytope() -> Result<Body> {
    Body::polytope_v(3, random_points(12, 1))
}

pub(crate) fn centred_tetrahedron() -> Result<Body> {
    Body::polytope_v(
        3,
        vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ],
    )
}

fn ball_closed_form_check(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let mut cases = Vec::new();
    for n in 3..=5 {
        let ball = Body::ball(n, 1.0)?;
        for s in IndexSeq::all(n, 3) {
            let want = ball_closed_form(&s, 1.0);
            cases.push(CaseReport::exact(format!("psi_r B{n} {s}"), psi_r(&ball, &s, &cfg)?, want, Assertion::equal()));
            cases.push(CaseReport::exact(format!("phi_r B{n} {s}"), phi_r(&ball, &s, &cfg)?, want, Assertion::equal()));
        }
    }
    let big = Body::ball(3, 2.5)?;
    for s in IndexSeq::all(3, 3) {
        let want = ball_closed_form(&s, 2.5);
        cases.push(CaseReport::exact(format!("psi_r 2.5 B3 {s}"), psi_r(&big, &s, &cfg)?, want, Assertion::equal()));
        cases.push(CaseReport::exact(format!("phi_r 2.5 B3 {s}"), phi_r(&big, &s, &cfg)?, want, Assertion::equal()));
    }
    Ok(cases)
}

fn test_maps() -> Vec<(&'static str, DMatrix<f64>)> {
    vec![
        ("diag(2,1,1/2)", diag(&[2.0, 1.0, 0.5])),
        ("shear", shear()),
        ("rotation*diag(3,1,1/3)", rotation(0) * diag(&[3.0, 1.0, 1.0 / 3.0])),
    ]
}

fn test_bodies() -> Result<Vec<(&'static str, Body)>> {
    Ok(vec![("cube", Body::cube(3, 1.0)?), ("cross-polytope", Body::cross_polytope(3, 1.0)?)])
}

fn sln_invariance(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let s = seq(3, &[1, 2]);
    let mut cases = Vec::new();
    for (bname, body) in test_bodies()? {
        let base = psi_r(&body, &s, &cfg)?;
        for (tname, t) in test_maps() {
            let moved = psi_r(&body.apply_linear(&t)?, &s, &cfg)?;
            cases.push(CaseReport::new(format!("{bname} {tname}"), moved, base.clone(), Assertion::equal()));
        }
    }
    Ok(cases)
}

fn affine_invariance_phi(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let s = seq(3, &[1, 2]);
    let shift = DVector::from_vec(vec![0.3, -0.2, 0.1]);
    let mut cases = Vec::new();
    for (bname, body) in test_bodies()? {
        let base = phi_r(&body, &s, &cfg)?;
        let moved = phi_r(&body.translate(&shift)?, &s, &cfg)?;
        cases.push(CaseReport::new(format!("{bname} translation"), moved, base.clone(), Assertion::equal()));
        for (tname, t) in test_maps() {
            let moved = phi_r(&body.apply_linear(&t)?.translate(&shift)?, &s, &cfg)?;
            cases.push(CaseReport::new(format!("{bname} {tname} + translation"), moved, base.clone(), Assertion::equal()));
        }
    }
    Ok(cases)
}

fn negative_control(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let s = seq(3, &[1, 2]);
    let t = diag(&[4.0, 0.25, 1.0]);
    let mut cases = Vec::new();
    for (bname, body) in test_bodies()? {
        let moved = body.apply_linear(&t)?;
        let unbalanced = [1.0, 1.0];
        cases.push(CaseReport::new(
            format!("{bname} exponents (1,1)"),
            raw_flag_average(&moved, Measure::Section, &s, &unbalanced, &cfg)?,
            raw_flag_average(&body, Measure::Section, &s, &unbalanced, &cfg)?,
            Assertion::Drift { min: 5.0 },
        ));
        let balanced = [2.0, 2.0];
        cases.push(CaseReport::new(
            format!("{bname} balanced exponents without root"),
            raw_flag_average(&moved, Measure::Section, &s, &balanced, &cfg)?,
            raw_flag_average(&body, Measure::Section, &s, &balanced, &cfg)?,
            Assertion::ReportOnly,
        ));
    }
    Ok(cases)
}

fn busemann_straus_cube(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let cube = Body::cube(3, 1.0)?;
    let r = cube.volume_radius();
    let mut cases = Vec::new();
    for idx in [&[1, 2][..], &[2][..]] {
        let s = seq(3, idx);
        cases.push(CaseReport::exact(
            format!("cube {s} vs ball of radius r_cube"),
            psi_r(&cube, &s, &cfg)?,
            ball_closed_form(&s, r),
            Assertion::below(),
        ));
    }
    // Lines only: E|L ∩ ℓ|ⁿ is a multiple of |L| for every symmetric body.
    let s = seq(3, &[1]);
    cases.push(CaseReport::exact(
        format!("cube {s} equals the ball value"),
        psi_r(&cube, &s, &cfg)?,
        ball_closed_form(&s, r),
        Assertion::equal(),
    ));
    Ok(cases)
}

fn busemann_straus_ellipsoid(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let s = seq(3, &[1, 2]);
    let want = ball_closed_form(&s, 1.0);
    let g = random_sl(3, 0);
    let ellipsoids = [
        ("diag(4,1/4,1)", Body::ellipsoid(diag(&[4.0, 0.25, 1.0]))?),
        ("g^T g", Body::ellipsoid(g.transpose() * &g)?),
    ];
    let mut cases = Vec::new();
    for (name, e) in ellipsoids {
        cases.push(CaseReport::exact(format!("ellipsoid {name}"), psi_r(&e, &s, &cfg)?, want, Assertion::equal()));
    }
    Ok(cases)
}

fn example1(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let omega = Permutation::new(vec![2, 1, 3])?;
    let want = 4.0 / PI;
    Ok(vec![
        CaseReport::exact("cube", psi_omega(&Body::cube(3, 1.0)?, &omega, &cfg)?, want, Assertion::equal()),
        CaseReport::exact(
            "random symmetric polytope",
            psi_omega(&random_symmetric_polytope()?, &omega, &cfg)?,
            want,
            Assertion::equal(),
        ),
    ])
}

fn example2_ordering(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    Ok(vec![CaseReport::new(
        "A(1,2,1/2) vs A(1,1,1)",
        example2_a([1.0, 2.0, 0.5], &cfg)?,
        example2_a([1.0, 1.0, 1.0], &cfg)?,
        Assertion::StrictlyBelow { min: 5.0 },
    )])
}

/// Frozen `A(1,1,1)`.
pub fn example2_reference() -> f64 {
    let v: serde_json::Value = serde_json::from_str(FIXTURE).expect("fixture is valid JSON");
    v["value"].as_f64().expect("fixture has a value")
}

fn example2_fixture(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job).with_seed(derive_seed(job.seed, 0xa2));
    Ok(vec![CaseReport::exact(
        "A(1,1,1) vs quadrature",
        example2_a([1.0, 1.0, 1.0], &cfg)?,
        example2_reference(),
        Assertion::equal(),
    )])
}

fn example2_symmetry(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let base_cfg = cfg(job);
    let base = example2_a([1.0, 2.0, 0.5], &base_cfg)?;
    let mut cases = Vec::new();
    for (k, d) in [[2.0, 0.5, 1.0], [0.5, 1.0, 2.0], [2.0, 1.0, 0.5]].into_iter().enumerate() {
        let c = base_cfg.with_seed(derive_seed(job.seed, 0xa3 + k as u64));
        cases.push(CaseReport::new(
            format!("A({},{},{}) vs A(1,2,1/2)", d[0], d[1], d[2]),
            example2_a(d, &c)?,
            base.clone(),
            Assertion::equal(),
        ));
    }
    Ok(cases)
}

fn ex1_sphere_identity(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let ball_value = 2.0 / (PI * PI);
    let cube = Body::cube(3, 1.0)?;
    let (flag, sphere) = phi_omega_sphere_identity(&cube, &cfg)?;
    let (bflag, bsphere) = phi_omega_sphere_identity(&Body::ball(3, 1.0)?, &cfg)?;
    let dq = cube.apply_linear(&diag(&[1.0, 2.0, 0.5]))?;
    let (_, dq_sphere) = phi_omega_sphere_identity(&dq, &cfg)?;
    Ok(vec![
        CaseReport::new("cube flag vs sphere", flag, sphere.clone(), Assertion::equal()),
        CaseReport::exact("ball flag side", bflag, ball_value, Assertion::equal()),
        CaseReport::exact("ball sphere side", bsphere, ball_value, Assertion::equal()),
        CaseReport::new("diag(1,2,1/2) cube vs cube, sphere side", dq_sphere, sphere, Assertion::ReportOnly),
    ])
}

fn partial_vs_full(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let cfg = cfg(job);
    let bodies = [
        ("cube", Body::cube(3, 1.0)?),
        ("ellipsoid diag(4,1/4,1)", Body::ellipsoid(diag(&[4.0, 0.25, 1.0]))?),
    ];
    let mut cases = Vec::new();
    for (name, body) in &bodies {
        for idx in [&[1][..], &[2][..]] {
            let s = seq(3, idx);
            let direct = psi_r_with(body, &s, &cfg, FlagSampling::Direct)?;
            let complete = psi_r_with(body, &s, &cfg.with_seed(derive_seed(job.seed, 7)), FlagSampling::Complete)?;
            let nested = psi_r_with(body, &s, &cfg.with_seed(derive_seed(job.seed, 8)), FlagSampling::Nested)?;
            cases.push(CaseReport::new(format!("{name} {s} complete"), complete, direct.clone(), Assertion::equal()));
            cases.push(CaseReport::new(format!("{name} {s} nested"), nested, direct, Assertion::equal()));
        }
    }
    let e4 = Body::ellipsoid(diag(&[4.0, 0.5, 1.0, 0.5]))?;
    let s = seq(4, &[1, 3]);
    let direct = psi_r_with(&e4, &s, &cfg, FlagSampling::Direct)?;
    let complete = psi_r_with(&e4, &s, &cfg.with_seed(derive_seed(job.seed, 7)), FlagSampling::Complete)?;
    cases.push(CaseReport::new("ellipsoid in R^4 (1,3) complete", complete, direct, Assertion::equal()));
    Ok(cases)
}

fn santalo_pair(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let s = seq(3, &[1, 2]);
    let ball = ball_closed_form(&s, 1.0);
    let bound = ball * ball;
    let psi_cfg = cfg(job);
    let phi_cfg = psi_cfg.with_seed(derive_seed(job.seed, 0x5a));
    let mut bodies = test_bodies()?;
    bodies.push(("ellipsoid diag(4,1/4,1)", Body::ellipsoid(diag(&[4.0, 0.25, 1.0]))?));
    let mut cases = Vec::new();
    for (name, body) in bodies {
        let prod = phi_r(&body.polar()?, &s, &phi_cfg)?.product(&psi_r(&body, &s, &psi_cfg)?);
        let assertion = if name.starts_with("ellipsoid") {
            Assertion::equal()
        } else {
            Assertion::at_most()
        };
        cases.push(CaseReport::exact(name, prod.clone(), bound, assertion));
        cases.push(CaseReport::exact(
            format!("{name} reverse ratio"),
            prod.scale(1.0 / bound),
            1.0,
            Assertion::ReportOnly,
        ));
    }
    Ok(cases)
}

fn sandwich_upper(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let c = cfg(job);
    let width_cfg = c.with_seed(derive_seed(job.seed, 0x3d));
    let s = seq(3, &[1, 2]);
    let ball = ball_closed_form(&s, 1.0);
    let bodies = [
        ("cube", Body::cube(3, 1.0)?),
        ("centred tetrahedron", centred_tetrahedron()?),
        ("random polytope", random_polytope()?),
    ];
    let mut cases = Vec::new();
    for (name, body) in bodies {
        let ratio = phi_r(&body, &s, &c)?.scale(1.0 / ball);
        let width = body.mean_width(&width_cfg)?;
        cases.push(CaseReport::new(format!("{name} vs mean width"), ratio.clone(), width, Assertion::at_most()));
        cases.push(CaseReport::exact(
            format!("{name} lower ratio over r_L"),
            ratio.scale(1.0 / body.volume_radius()),
            1.0,
            Assertion::ReportOnly,
        ));
    }
    Ok(cases)
}

fn functional_invariance(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let c = cfg(job);
    let s = seq(3, &[1, 2]);
    let want = PI.powf((s.last() * s.n()) as f64 / 2.0);
    let standard = QuasiConcaveFn::Gaussian(GaussianFn::standard(3));
    let mut cases = vec![CaseReport::exact("standard Gaussian", functional_i(&standard, &s, &c)?, want, Assertion::equal())];
    for k in 0..10 {
        let g = random_sl(3, 100 + k);
        let f = QuasiConcaveFn::Gaussian(GaussianFn::new(g.transpose() * &g)?);
        cases.push(CaseReport::exact(format!("g_{k}"), functional_i(&f, &s, &c)?, want, Assertion::equal()));
    }
    let t = diag(&[4.0, 0.25, 1.0]);
    let stretched = QuasiConcaveFn::Gaussian(GaussianFn::new(t.transpose() * &t)?);
    let unbalanced = NormProfile {
        l1: vec![1.0, 1.0],
        sup: vec![0.0, 0.0],
    };
    cases.push(CaseReport::new(
        "unbalanced L1 profile under diag(4,1/4,1)",
        profile_statistic(&[&stretched], &s, &unbalanced, &c)?,
        profile_statistic(&[&standard], &s, &unbalanced, &c)?,
        Assertion::Drift { min: 5.0 },
    ));
    Ok(cases)
}

fn cube_stack() -> Result<LevelStack> {
    LevelStack::new(vec![
        Level {
            t: 2.0,
            body: Body::cube(3, 0.5)?,
        },
        Level {
            t: 1.0,
            body: Body::cube(3, 1.0)?,
        },
    ])
}

fn dpp_inequality(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let c = cfg(job);
    let s3 = seq(3, &[1, 2]);
    let s4 = seq(4, &[2, 3]);
    let strict: Vec<(&str, QuasiConcaveFn, &IndexSeq)> = vec![
        ("standard Gaussian R^3", QuasiConcaveFn::Gaussian(GaussianFn::standard(3)), &s3),
        (
            "Gaussian diag(4,1/4,1)",
            QuasiConcaveFn::Gaussian(GaussianFn::new(diag(&[4.0, 0.25, 1.0]))?),
            &s3,
        ),
        ("cube stack", QuasiConcaveFn::LevelStack(cube_stack()?), &s3),
        (
            "tetrahedron indicator",
            QuasiConcaveFn::LevelStack(LevelStack::indicator(centred_tetrahedron()?)),
            &s3,
        ),
        ("standard Gaussian R^4", QuasiConcaveFn::Gaussian(GaussianFn::standard(4)), &s4),
    ];
    let mut cases = Vec::new();
    for (name, f, s) in &strict {
        let r = dpp_flag_ratio(f, s, &c)?;
        cases.push(CaseReport::exact(format!("{name} {s}"), r.lhs, r.rhs, Assertion::below()));
    }
    for s in [&s3, &s4] {
        let ball = QuasiConcaveFn::LevelStack(LevelStack::indicator(Body::ball(s.n(), 1.0)?));
        let r = dpp_flag_ratio(&ball, s, &c)?;
        cases.push(CaseReport::exact(format!("ball indicator {s}"), r.lhs, r.rhs, Assertion::equal()));
    }
    Ok(cases)
}

fn multi_function_ext(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let c = cfg(job);
    let s3 = seq(3, &[1, 2]);
    let s4 = seq(4, &[2, 3]);
    let g3 = QuasiConcaveFn::Gaussian(GaussianFn::standard(3));
    let g3b = QuasiConcaveFn::Gaussian(GaussianFn::new(diag(&[4.0, 0.25, 1.0]))?);
    let g4 = QuasiConcaveFn::Gaussian(GaussianFn::standard(4));
    let g4b = QuasiConcaveFn::Gaussian(GaussianFn::new(diag(&[2.0, 0.5, 1.0, 3.0]))?);
    let cube = QuasiConcaveFn::LevelStack(cube_stack()?);
    let strict: Vec<(&str, Vec<&QuasiConcaveFn>, &IndexSeq)> = vec![
        ("q=1 standard Gaussian", vec![&g3], &s3),
        ("q=1 Gaussian diag(4,1/4,1)", vec![&g3b], &s3),
        ("q=1 cube stack", vec![&cube], &s3),
        ("q=2 identical Gaussians", vec![&g4, &g4], &s4),
        ("q=2 mixed Gaussians", vec![&g4, &g4b], &s4),
    ];
    let mut cases = Vec::new();
    for (name, fs, s) in &strict {
        let r = multi_function_ratio(fs, s, &c)?;
        cases.push(CaseReport::exact(format!("{name} {s}"), r.lhs, r.rhs, Assertion::below()));
    }
    let b4 = QuasiConcaveFn::LevelStack(LevelStack::indicator(Body::ball(4, 1.0)?));
    let r = multi_function_ratio(&[&b4, &b4], &s4, &c)?;
    cases.push(CaseReport::exact(format!("q=2 ball indicators {s4}"), r.lhs, r.rhs, Assertion::equal()));
    Ok(cases)
}

fn determinism_threads(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let c = cfg(job);
    let cube = Body::cube(3, 1.0)?;
    let s = seq(3, &[1, 2]);
    let one = with_threads(Some(1), || psi_r(&cube, &s, &c))?;
    let four = with_threads(Some(4), || psi_r(&cube, &s, &c))?;
    let sequential = psi_r(&cube, &s, &c.sequential())?;
    let phi_one = with_threads(Some(1), || phi_r(&cube, &s, &c))?;
    let phi_four = with_threads(Some(4), || phi_r(&cube, &s, &c))?;
    Ok(vec![
        CaseReport::new("psi_r 1 vs 4 threads", one.clone(), four, Assertion::Identical),
        CaseReport::new("psi_r parallel vs sequential", one, sequential, Assertion::Identical),
        CaseReport::new("phi_r 1 vs 4 threads", phi_one, phi_four, Assertion::Identical),
    ])
}

fn se_ratio(half: &Estimate, full: &Estimate) -> CaseReport {
    let r = Estimate::exact(half.std_error / full.std_error);
    CaseReport::exact("", r, 2f64.sqrt(), Assertion::WithinAbs { tol: 0.2 * 2f64.sqrt() })
}

fn se_scaling(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let full = cfg(job);
    let half = full.with_samples(job.samples / 2);
    let cube = Body::cube(3, 1.0)?;
    let s = seq(3, &[1, 2]);
    let mut a = se_ratio(&psi_r(&cube, &s, &half)?, &psi_r(&cube, &s, &full)?);
    a.label = "psi_r cube SE(N/2)/SE(N)".into();
    let mut b = se_ratio(&phi_r(&cube, &s, &half)?, &phi_r(&cube, &s, &full)?);
    b.label = "phi_r cube SE(N/2)/SE(N)".into();
    let mut d = se_ratio(&example2_a([1.0, 1.0, 1.0], &half)?, &example2_a([1.0, 1.0, 1.0], &full)?);
    d.label = "A(1,1,1) SE(N/2)/SE(N)".into();
    Ok(vec![a, b, d])
}

fn homogeneity(job: &CheckSpec) -> Result<Vec<CaseReport>> {
    let c = cfg(job);
    let lambda = 2.5;
    let cube = Body::cube(3, 1.0)?;
    let big = cube.scale(lambda)?;
    let s = seq(3, &[1, 2]);
    let rel = |e: &Estimate| Assertion::WithinAbs { tol: 1e-12 * e.mean.abs() };
    let mut cases = Vec::new();
    let base = psi_r(&cube, &s, &c)?;
    cases.push(CaseReport::new("psi_r", psi_r(&big, &s, &c)?, base.scale(lambda), rel(&base)));
    let base = phi_r(&cube, &s, &c)?;
    cases.push(CaseReport::new("phi_r", phi_r(&big, &s, &c)?, base.scale(lambda), rel(&base)));
    let w1 = Permutation::new(vec![1, 3, 2])?;
    let base = psi_omega(&cube, &w1, &c)?;
    cases.push(CaseReport::new("psi_omega (1,3,2)", psi_omega(&big, &w1, &c)?, base.scale(lambda), rel(&base)));
    let w0 = Permutation::new(vec![2, 1, 3])?;
    let base = psi_omega(&cube, &w0, &c)?;
    cases.push(CaseReport::new("psi_omega (2,1,3), degree 0", psi_omega(&big, &w0, &c)?, base.clone(), rel(&base)));
    Ok(cases)
}

fn count_case(label: String, failures: usize) -> CaseReport {
    CaseReport::exact(label, Estimate::exact(failures as f64), 0.0, Assertion::Identical)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![1]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n);
            out.push(q);
        }
    }
    out
}

fn index_permutation_identities(_spec: &CheckSpec) -> Result<Vec<CaseReport>> {
    let mut cases = Vec::new();
    for n in 2..=10 {
        let bad = IndexSeq::all(n, n)
            .iter()
            .filter(|s| s.weighted_exponent_sum() != s.last() * n)
            .count();
        cases.push(count_case(format!("n={n}: sum i_j(i_(j+1) - i_(j-1)) = i_r n, violations"), bad));
    }
    for n in 2..=7 {
        let mut bad_sum = 0;
        let mut bad_weighted = 0;
        for v in permutations(n) {
            let w = Permutation::new(v)?;
            let (first, last) = (w.at(1) as i64, w.at(n) as i64);
            let n = n as i64;
            if w.delta_sum() != n - last + first - 1 {
                bad_sum += 1;
            }
            if w.weighted_delta_sum() != n * (n - last) {
                bad_weighted += 1;
            }
        }
        cases.push(count_case(format!("n={n}: sum delta = n - w(n) + w(1) - 1, violations"), bad_sum));
        cases.push(count_case(format!("n={n}: sum j delta = n(n - w(n)), violations"), bad_weighted));
    }
    Ok(cases)
}
