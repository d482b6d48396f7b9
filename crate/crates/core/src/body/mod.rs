//! Convex bodies and the geometric primitives the estimators consume.

mod schema;

use nalgebra::{DMatrix, DVector};

pub use schema::{BodySpec, MatrixRepr};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::exec::{accumulate, McConfig};
use crate::flag::{Frame, RngSpec};
use crate::geometry::{self, Hull};
use crate::special::{combinations, unit_ball_volume};

/// Ambient dimension cap for balls, ellipsoids and cubes.
pub const MAX_DIM_CLOSED: usize = 8;
/// Ambient dimension cap for general polytopes.
pub const MAX_DIM_POLYTOPE: usize = 6;
/// Distance the origin must keep from the boundary for polar bodies.
pub const INTERIOR_MARGIN: f64 = 1e-9;
/// Symmetry tolerance for ellipsoid matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest `|det T|` accepted by [`Body::apply_linear`].
pub const SINGULAR_TOL: f64 = 1e-12;

const PLANAR_WIDTH_NODES: usize = 512;

/// `{x : (x - c)ᵀ M (x - c) ≤ 1}` with cached inverse and determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    det: f64,
    center: DVector<f64>,
}

impl Ellipsoid {
    pub fn new(m: DMatrix<f64>, center: Option<DVector<f64>>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || n == 0 {
            return Err(Error::body("ellipsoid matrix must be square and nonempty"));
        }
        if n > MAX_DIM_CLOSED {
            return Err(Error::body(format!(
                "ellipsoids are supported up to dimension {MAX_DIM_CLOSED}"
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::body("ellipsoid matrix has non-finite entries"));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::body(format!(
                "ellipsoid matrix is not symmetric (max |M - Mᵀ| = {asym:e})"
            )));
        }
        let m = (&m + m.transpose()) * 0.5;
        let min_eig = m.clone().symmetric_eigen().eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(Error::body(format!(
                "ellipsoid matrix is not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::body("ellipsoid matrix is not positive definite"))?;
        let m_inv = chol.inverse();
        let m_inv = (&m_inv + m_inv.transpose()) * 0.5;
        let det = chol.determinant();
        let center = center.unwrap_or_else(|| DVector::zeros(n));
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        Ok(Ellipsoid {
            m,
            m_inv,
            det,
            center,
        })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    fn is_centered(&self) -> bool {
        self.center.iter().all(|&x| x == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    V(Vec<Vec<f64>>),
    H(DMatrix<f64>, Vec<f64>),
}

/// Full-dimensional polytope with both representations cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    n: usize,
    vertices: Vec<Vec<f64>>,
    a: DMatrix<f64>,
    b: Vec<f64>,
    volume: f64,
    circumradius: f64,
    source: Source,
}

impl Polytope {
    fn check_dim(n: usize) -> Result<()> {
        if n == 0 || n > MAX_DIM_POLYTOPE {
            return Err(Error::body(format!(
                "polytopes are supported in dimensions 1..={MAX_DIM_POLYTOPE}, got {n}"
            )));
        }
        Ok(())
    }

    pub fn from_vertices(n: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_dim(n)?;
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::body("vertex coordinates must be finite"));
        }
        let hull = Hull::new(vertices.clone(), n)?;
        Ok(Self::assemble(n, &hull, None, Source::V(vertices)))
    }

    pub fn from_halfspaces(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let n = a.ncols();
        Self::check_dim(n)?;
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::body("halfspace data must be finite"));
        }
        if !rows_positively_span(&a) {
            return Err(Error::Unbounded);
        }
        let verts = geometry::enumerate_vertices(&a, &b)?;
        let hull = Hull::new(verts, n).map_err(|_| Error::Degenerate)?;
        Ok(Self::assemble(n, &hull, Some((a.clone(), b.clone())), Source::H(a, b)))
    }

    fn assemble(n: usize, hull: &Hull, h: Option<(DMatrix<f64>, Vec<f64>)>, source: Source) -> Self {
        let vertices: Vec<Vec<f64>> = hull
            .vertex_indices()
            .into_iter()
            .map(|i| hull.points()[i].clone())
            .collect();
        let (a, b) = h.unwrap_or_else(|| {
            let hs = hull.halfspaces();
            let a = DMatrix::from_fn(hs.len(), n, |r, c| hs[r].normal[c]);
            (a, hs.iter().map(|h| h.offset).collect())
        });
        let circumradius = vertices
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Polytope {
            n,
            volume: hull.volume(),
            vertices,
            a,
            b,
            circumradius,
            source,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Extreme points.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Facet description `A x ≤ b`.
    pub fn halfspaces(&self) -> (&DMatrix<f64>, &[f64]) {
        (&self.a, &self.b)
    }

    /// Distance from the origin to the nearest facet plane, negative when the
    /// origin lies outside.
    fn origin_margin(&self) -> f64 {
        (0..self.a.nrows())
            .map(|i| self.b[i] / self.a.row(i).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Whether the rows of `a` positively span `R^n`, i.e. `{A x ≤ 0} = {0}`.
fn rows_positively_span(a: &DMatrix<f64>) -> bool {
    let n = a.ncols();
    let rows: Vec<Vec<f64>> = (0..a.nrows())
        .filter_map(|i| {
            let norm = a.row(i).norm();
            (norm > 1e-14).then(|| a.row(i).iter().map(|x| x / norm).collect())
        })
        .collect();
    if n == 1 {
        return rows.iter().any(|r| r[0] > 0.0) && rows.iter().any(|r| r[0] < 0.0);
    }
    match Hull::new(rows, n) {
        Ok(h) => h.halfspaces().iter().all(|f| f.offset > 1e-9),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Ball {
        n: usize,
        radius: f64,
        center: DVector<f64>,
    },
    Ellipsoid(Ellipsoid),
    Cube {
        n: usize,
        half_width: f64,
    },
    PolytopeV(Polytope),
    PolytopeH(Polytope),
}

fn ball_section(k: usize, radius: f64, center: &DVector<f64>, u: &DMatrix<f64>) -> f64 {
    let c2 = center.norm_squared();
    let s = if c2 == 0.0 {
        radius * radius
    } else {
        radius * radius - c2 + u.tr_mul(center).norm_squared()
    };
    if s <= 0.0 {
        0.0
    } else {
        unit_ball_volume(k) * s.powf(k as f64 / 2.0)
    }
}

fn cube_vertices(n: usize, h: f64) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|m| (0..n).map(|i| if m >> i & 1 == 1 { h } else { -h }).collect())
        .collect()
}

fn cube_halfspaces(n: usize, h: f64) -> (DMatrix<f64>, Vec<f64>) {
    let mut a = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        a[(n + i, i)] = -1.0;
    }
    (a, vec![h; 2 * n])
}

/// `s` with `T = s·P` for a signed permutation `P`, if any.
fn signed_permutation_scale(t: &DMatrix<f64>) -> Option<f64> {
    let n = t.nrows();
    let mut scale = None;
    for r in 0..n {
        let nz: Vec<f64> = t.row(r).iter().copied().filter(|x| *x != 0.0).collect();
        if nz.len() != 1 {
            return None;
        }
        let s = nz[0].abs();
        match scale {
            None => scale = Some(s),
            Some(prev) if prev != s => return None,
            _ => {}
        }
    }
    for c in 0..n {
        if t.column(c).iter().filter(|x| **x != 0.0).count() != 1 {
            return None;
        }
    }
    scale
}

impl Body {
    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        Self::ball_at(n, radius, DVector::zeros(n))
    }

    pub fn ball_at(n: usize, radius: f64, center: DVector<f64>) -> Result<Self> {
        if n == 0 || n > MAX_DIM_CLOSED {
            return Err(Error::body(format!(
                "balls are supported in dimensions 1..={MAX_DIM_CLOSED}, got {n}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::body(format!("radius must be positive, got {radius}")));
        }
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        Ok(Body::Ball { n, radius, center })
    }

    pub fn ellipsoid(m: DMatrix<f64>) -> Result<Self> {
        Ok(Body::Ellipsoid(Ellipsoid::new(m, None)?))
    }

    pub fn cube(n: usize, half_width: f64) -> Result<Self> {
        if n == 0 || n > MAX_DIM_CLOSED {
            return Err(Error::body(format!(
                "cubes are supported in dimensions 1..={MAX_DIM_CLOSED}, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::body(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        Ok(Body::Cube { n, half_width })
    }

    pub fn polytope_v(n: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Body::PolytopeV(Polytope::from_vertices(n, vertices)?))
    }

    pub fn polytope_h(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        Ok(Body::PolytopeH(Polytope::from_halfspaces(a, b)?))
    }

    /// `conv{±e_i / h}`.
    pub fn cross_polytope(n: usize, h: f64) -> Result<Self> {
        let mut v = Vec::with_capacity(2 * n);
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; n];
                p[i] = s * h;
                v.push(p);
            }
        }
        Body::polytope_v(n, v)
    }

    pub fn n(&self) -> usize {
        match self {
            Body::Ball { n, .. } | Body::Cube { n, .. } => *n,
            Body::Ellipsoid(e) => e.n(),
            Body::PolytopeV(p) | Body::PolytopeH(p) => p.n,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Body::Ball { .. } => "ball",
            Body::Ellipsoid(_) => "ellipsoid",
            Body::Cube { .. } => "cube",
            Body::PolytopeV(_) => "polytope_v",
            Body::PolytopeH(_) => "polytope_h",
        }
    }

    pub fn volume(&self) -> f64 {
        let n = self.n();
        match self {
            Body::Ball { radius, .. } => unit_ball_volume(n) * radius.powi(n as i32),
            Body::Ellipsoid(e) => unit_ball_volume(n) / e.det.sqrt(),
            Body::Cube { half_width, .. } => (2.0 * half_width).powi(n as i32),
            Body::PolytopeV(p) | Body::PolytopeH(p) => p.volume,
        }
    }

    /// `r_L` with `|r_L B₂ⁿ| = |L|`.
    pub fn volume_radius(&self) -> f64 {
        (self.volume() / unit_ball_volume(self.n())).powf(1.0 / self.n() as f64)
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

    /// Largest norm of a point of the body.
    pub fn circumradius(&self) -> f64 {
        match self {
            Body::Ball { radius, center, .. } => radius + center.norm(),
            Body::Ellipsoid(e) => {
                let lmax = e.m_inv.clone().symmetric_eigen().eigenvalues.max();
                lmax.sqrt() + e.center.norm()
            }
            Body::Cube { n, half_width } => half_width * (*n as f64).sqrt(),
            Body::PolytopeV(p) | Body::PolytopeH(p) => p.circumradius,
        }
    }

    /// `k`-volume of `L ∩ span(frame)`; empty sections give 0.
    pub fn section_volume(&self, frame: &Frame) -> Result<f64> {
        self.check_frame(frame)?;
        let k = frame.k();
        let u = frame.basis();
        if k == self.n() {
            return Ok(self.volume());
        }
        match self {
            Body::Ball { radius, center, .. } => Ok(ball_section(k, *radius, center, u)),
            Body::Ellipsoid(e) => {
                let mk = u.tr_mul(&(&e.m * u));
                let det = mk.determinant();
                if det <= 0.0 {
                    return Ok(0.0);
                }
                let s = if e.is_centered() {
                    1.0
                } else {
                    let mc = &e.m * &e.center;
                    let g = u.tr_mul(&mc);
                    let sol = mk
                        .clone()
                        .cholesky()
                        .map(|c| c.solve(&g))
                        .ok_or(Error::Degenerate)?;
                    1.0 - e.center.dot(&mc) + g.dot(&sol)
                };
                if s <= 0.0 {
                    return Ok(0.0);
                }
                Ok(unit_ball_volume(k) * s.powf(k as f64 / 2.0) / det.sqrt())
            }
            Body::Cube { n, half_width } => {
                let mut a = DMatrix::zeros(2 * n, k);
                for i in 0..*n {
                    for c in 0..k {
                        a[(i, c)] = u[(i, c)];
                        a[(n + i, c)] = -u[(i, c)];
                    }
                }
                geometry::polytope_volume(&a, &vec![*half_width; 2 * n], self.circumradius())
            }
            Body::PolytopeV(p) | Body::PolytopeH(p) => {
                let a = &p.a * u;
                geometry::polytope_volume(&a, &p.b, p.circumradius)
            }
        }
    }

    /// `k`-volume of the orthogonal projection onto `span(frame)`.
    pub fn projection_volume(&self, frame: &Frame) -> Result<f64> {
        self.check_frame(frame)?;
        let k = frame.k();
        let u = frame.basis();
        if k == self.n() {
            return Ok(self.volume());
        }
        match self {
            Body::Ball { radius, .. } => Ok(unit_ball_volume(k) * radius.powi(k as i32)),
            Body::Ellipsoid(e) => {
                let s = u.tr_mul(&(&e.m_inv * u));
                Ok(unit_ball_volume(k) * s.determinant().max(0.0).sqrt())
            }
            Body::Cube { n, half_width } => {
                // Zonotope with generators 2h·Uᵀe_i.
                let mut sum = 0.0;
                let mut sub = DMatrix::zeros(k, k);
                for rows in combinations(*n, k) {
                    for (r, &i) in rows.iter().enumerate() {
                        for c in 0..k {
                            sub[(r, c)] = u[(i, c)];
                        }
                    }
                    sum += sub.determinant().abs();
                }
                Ok((2.0 * half_width).powi(k as i32) * sum)
            }
            Body::PolytopeV(p) | Body::PolytopeH(p) => Ok(projected_hull_volume(&p.vertices, u)),
        }
    }

    /// Vertices of the body when it is a polytope (cube included).
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Body::Cube { n, half_width } => Some(cube_vertices(*n, *half_width)),
            Body::PolytopeV(p) | Body::PolytopeH(p) => Some(p.vertices.clone()),
            _ => None,
        }
    }

    /// Facet description when the body is a polytope (cube included).
    pub fn halfspaces(&self) -> Option<(DMatrix<f64>, Vec<f64>)> {
        match self {
            Body::Cube { n, half_width } => Some(cube_halfspaces(*n, *half_width)),
            Body::PolytopeV(p) | Body::PolytopeH(p) => Some((p.a.clone(), p.b.clone())),
            _ => None,
        }
    }

    /// `h_L(θ) = max_{x∈L} ⟨x, θ⟩`.
    pub fn support(&self, theta: &DVector<f64>) -> f64 {
        match self {
            Body::Ball { radius, center, .. } => radius * theta.norm() + center.dot(theta),
            Body::Ellipsoid(e) => (e.m_inv.clone() * theta).dot(theta).max(0.0).sqrt() + e.center.dot(theta),
            Body::Cube { half_width, .. } => half_width * theta.iter().map(|x| x.abs()).sum::<f64>(),
            Body::PolytopeV(p) | Body::PolytopeH(p) => p
                .vertices
                .iter()
                .map(|v| v.iter().zip(theta.iter()).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Average of `h_L` over the uniform probability measure on the sphere.
    /// Antithetic pairs `±θ` are averaged per sample.
    pub fn mean_width(&self, cfg: &McConfig) -> Result<Estimate> {
        if let Body::Ball { radius, .. } = self {
            let mut e = Estimate::exact(*radius);
            e.samples = cfg.samples;
            e.seed = cfg.seed;
            return Ok(e);
        }
        let n = self.n();
        let rng = RngSpec::new(cfg.seed);
        let acc = accumulate(cfg, 1, |i, out| {
            let theta = crate::flag::sample_sphere(n, &mut rng.stream(i));
            out[0] = 0.5 * (self.support(&theta) + self.support(&-theta));
            Ok(true)
        })?;
        Ok(Estimate::from_accumulated(&acc, 0, cfg))
    }

    /// Average of the support function of `P_F L` over the unit circle of a
    /// 2-dimensional subspace `F`.
    pub fn planar_mean_width(&self, frame: &Frame) -> Result<f64> {
        self.check_frame(frame)?;
        if frame.k() != 2 {
            return Err(Error::arg("planar mean width needs a 2-dimensional frame"));
        }
        let u = frame.basis();
        match self {
            Body::Ball { radius, .. } => Ok(*radius),
            Body::Ellipsoid(e) => {
                let s = u.tr_mul(&(&e.m_inv * u));
                let m = PLANAR_WIDTH_NODES;
                let total: f64 = (0..m)
                    .map(|j| {
                        let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                        let (sn, cs) = t.sin_cos();
                        (s[(0, 0)] * cs * cs + 2.0 * s[(0, 1)] * cs * sn + s[(1, 1)] * sn * sn)
                            .max(0.0)
                            .sqrt()
                    })
                    .sum();
                Ok(total / m as f64)
            }
            _ => {
                let verts = self.vertices().expect("polytope has vertices");
                let pts: Vec<[f64; 2]> = verts
                    .iter()
                    .map(|v| {
                        let mut y = [0.0; 2];
                        for (r, x) in v.iter().enumerate() {
                            y[0] += u[(r, 0)] * x;
                            y[1] += u[(r, 1)] * x;
                        }
                        y
                    })
                    .collect();
                let poly = geometry::polygon_hull(&pts);
                Ok(geometry::polygon_perimeter(&poly) / (2.0 * std::f64::consts::PI))
            }
        }
    }

    /// `h_{ΠL}(φ) = |P_{φ^⊥} L|` for a unit vector `φ`.
    pub fn projection_body_support(&self, phi: &DVector<f64>) -> Result<f64> {
        let frame = Frame::orthogonal_complement(phi)?;
        self.projection_volume(&frame)
    }

    /// Whether `x` lies in the body (boundary included, with a relative slack).
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        const SLACK: f64 = 1e-12;
        match self {
            Body::Ball { radius, center, .. } => (x - center).norm() <= radius * (1.0 + SLACK),
            Body::Ellipsoid(e) => {
                let d = x - &e.center;
                (&e.m * &d).dot(&d) <= 1.0 + SLACK
            }
            Body::Cube { half_width, .. } => x.iter().all(|c| c.abs() <= half_width * (1.0 + SLACK)),
            Body::PolytopeV(p) | Body::PolytopeH(p) => (0..p.a.nrows()).all(|i| {
                let s: f64 = p.a.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                s <= p.b[i] + SLACK * (1.0 + p.b[i].abs())
            }),
        }
    }

    /// Lower bound on the distance from the origin to the boundary; negative
    /// when the origin lies outside.
    pub fn origin_margin(&self) -> f64 {
        match self {
            Body::Ball { radius, center, .. } => radius - center.norm(),
            Body::Ellipsoid(e) => {
                let q = (&e.m * &e.center).dot(&e.center).sqrt();
                let lmax = e.m.clone().symmetric_eigen().eigenvalues.max();
                (1.0 - q) / lmax.sqrt()
            }
            Body::Cube { half_width, .. } => *half_width,
            Body::PolytopeV(p) | Body::PolytopeH(p) => p.origin_margin(),
        }
    }

    pub fn contains_origin_interior(&self) -> bool {
        self.origin_margin() > INTERIOR_MARGIN
    }

    /// Polar body `{y : ⟨x, y⟩ ≤ 1 for all x ∈ L}`.
    pub fn polar(&self) -> Result<Body> {
        if !self.contains_origin_interior() {
            return Err(Error::PolarUndefined);
        }
        let n = self.n();
        match self {
            Body::Ball { radius, center, .. } if center.iter().all(|&x| x == 0.0) => {
                Body::ball(n, 1.0 / radius)
            }
            Body::Ball { radius, center, .. } => {
                let m = DMatrix::identity(n, n) / (radius * radius);
                Ellipsoid::new(m, Some(center.clone()))?.polar()
            }
            Body::Ellipsoid(e) => e.polar(),
            Body::Cube { half_width, .. } => Body::cross_polytope(n, 1.0 / half_width),
            Body::PolytopeV(p) => {
                let m = p.vertices.len();
                let a = DMatrix::from_fn(m, n, |r, c| p.vertices[r][c]);
                Body::polytope_h(a, vec![1.0; m])
            }
            Body::PolytopeH(p) => {
                let (a, b) = match &p.source {
                    Source::H(a, b) => (a, b),
                    Source::V(_) => (&p.a, &p.b),
                };
                let v = (0..a.nrows())
                    .map(|i| a.row(i).iter().map(|x| x / b[i]).collect())
                    .collect();
                Body::polytope_v(n, v)
            }
        }
    }

    /// Image `T L` under an invertible linear map.
    pub fn apply_linear(&self, t: &DMatrix<f64>) -> Result<Body> {
        let n = self.n();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: t.nrows(),
            });
        }
        let det = t.determinant();
        if det.abs() <= SINGULAR_TOL {
            return Err(Error::Singular(det.abs()));
        }
        let t_inv = t.clone().try_inverse().ok_or(Error::Singular(det.abs()))?;
        match self {
            Body::Ball { radius, center, .. } => {
                let gram = t.tr_mul(t);
                let s2 = gram.trace() / n as f64;
                let c = t * center;
                if (gram - DMatrix::identity(n, n) * s2).amax() <= 1e-12 * s2 {
                    Body::ball_at(n, radius * s2.sqrt(), c)
                } else {
                    let m = t_inv.transpose() * &t_inv / (radius * radius);
                    let m = (&m + m.transpose()) * 0.5;
                    Ok(Body::Ellipsoid(Ellipsoid::new(m, Some(c))?))
                }
            }
            Body::Ellipsoid(e) => {
                let m = t_inv.transpose() * &e.m * &t_inv;
                let m = (&m + m.transpose()) * 0.5;
                Ok(Body::Ellipsoid(Ellipsoid::new(m, Some(t * &e.center))?))
            }
            Body::Cube { half_width, .. } => match signed_permutation_scale(t) {
                Some(s) => Body::cube(n, half_width * s),
                None => Body::polytope_v(n, map_points(&cube_vertices(n, *half_width), t)),
            },
            Body::PolytopeV(p) => {
                let src = match &p.source {
                    Source::V(v) => v.clone(),
                    Source::H(..) => p.vertices.clone(),
                };
                Body::polytope_v(n, map_points(&src, t))
            }
            Body::PolytopeH(p) => {
                let (a, b) = match &p.source {
                    Source::H(a, b) => (a.clone(), b.clone()),
                    Source::V(_) => (p.a.clone(), p.b.clone()),
                };
                Body::polytope_h(a * t_inv, b)
            }
        }
    }

    /// Translate `L + x`.
    pub fn translate(&self, x: &DVector<f64>) -> Result<Body> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let shift = |pts: &[Vec<f64>]| -> Vec<Vec<f64>> {
            pts.iter()
                .map(|p| p.iter().zip(x.iter()).map(|(a, b)| a + b).collect())
                .collect()
        };
        match self {
            Body::Ball { radius, center, .. } => Body::ball_at(n, *radius, center + x),
            Body::Ellipsoid(e) => Ok(Body::Ellipsoid(Ellipsoid::new(e.m.clone(), Some(&e.center + x))?)),
            Body::Cube { half_width, .. } => Body::polytope_v(n, shift(&cube_vertices(n, *half_width))),
            Body::PolytopeV(p) => {
                let src = match &p.source {
                    Source::V(v) => v.clone(),
                    Source::H(..) => p.vertices.clone(),
                };
                Body::polytope_v(n, shift(&src))
            }
            Body::PolytopeH(p) => {
                let (a, b) = match &p.source {
                    Source::H(a, b) => (a.clone(), b.clone()),
                    Source::V(_) => (p.a.clone(), p.b.clone()),
                };
                let ax = &a * x;
                let b = b.iter().zip(ax.iter()).map(|(bi, s)| bi + s).collect();
                Body::polytope_h(a, b)
            }
        }
    }

    /// Dilation `λ L` about the origin.
    pub fn scale(&self, lambda: f64) -> Result<Body> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::arg(format!("scale factor must be positive, got {lambda}")));
        }
        self.apply_linear(&(DMatrix::identity(self.n(), self.n()) * lambda))
    }

    /// The projection `P_F L` as a body in the coordinates of `F`.
    pub fn project_onto(&self, frame: &Frame) -> Result<Body> {
        self.check_frame(frame)?;
        let k = frame.k();
        let u = frame.basis();
        match self {
            Body::Ball { radius, center, .. } => Body::ball_at(k, *radius, u.tr_mul(center)),
            Body::Ellipsoid(e) => {
                let s = u.tr_mul(&(&e.m_inv * u));
                let s = (&s + s.transpose()) * 0.5;
                let m = s.try_inverse().ok_or(Error::Degenerate)?;
                let m = (&m + m.transpose()) * 0.5;
                Ok(Body::Ellipsoid(Ellipsoid::new(m, Some(u.tr_mul(&e.center)))?))
            }
            _ => {
                let verts = self.vertices().expect("polytope has vertices");
                let pts = verts
                    .iter()
                    .map(|v| u.tr_mul(&DVector::from_column_slice(v)).iter().copied().collect())
                    .collect();
                Body::polytope_v(k, pts)
            }
        }
    }
}

impl Ellipsoid {
    fn polar(&self) -> Result<Body> {
        if self.is_centered() {
            return Ok(Body::Ellipsoid(Ellipsoid::new(self.m_inv.clone(), None)?));
        }
        // h(y) = ⟨c, y⟩ + √(yᵀM⁻¹y) ≤ 1 rearranges to a shifted quadric.
        let c = &self.center;
        let p = &self.m_inv - c * c.transpose();
        let p = (&p + p.transpose()) * 0.5;
        let chol = p.clone().cholesky().ok_or(Error::PolarUndefined)?;
        let pc = chol.solve(c);
        let scale = 1.0 + c.dot(&pc);
        Ok(Body::Ellipsoid(Ellipsoid::new(p / scale, Some(-pc))?))
    }
}

fn map_points(points: &[Vec<f64>], t: &DMatrix<f64>) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| (t * DVector::from_column_slice(p)).iter().copied().collect())
        .collect()
}

fn projected_hull_volume(vertices: &[Vec<f64>], u: &DMatrix<f64>) -> f64 {
    let k = u.ncols();
    if k == 2 {
        let pts: Vec<[f64; 2]> = vertices
            .iter()
            .map(|v| {
                let mut y = [0.0; 2];
                for (r, x) in v.iter().enumerate() {
                    y[0] += u[(r, 0)] * x;
                    y[1] += u[(r, 1)] * x;
                }
                y
            })
            .collect();
        return geometry::polygon_area(&geometry::polygon_hull(&pts));
    }
    let pts: Vec<Vec<f64>> = vertices
        .iter()
        .map(|v| {
            (0..k)
                .map(|c| v.iter().enumerate().map(|(r, x)| u[(r, c)] * x).sum())
                .collect()
        })
        .collect();
    geometry::hull_volume(&pts, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn frame(cols: &[&[f64]]) -> Frame {
        let n = cols[0].len();
        let m = DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r]);
        Frame::from_spanning(m).unwrap()
    }

    #[test]
    fn closed_form_volumes() {
        assert_eq!(Body::cube(3, 1.0).unwrap().volume(), 8.0);
        let e = Body::ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.25, 1.0]))).unwrap();
        assert!((e.volume() - 4.0 * PI / 3.0).abs() < 1e-12);
        let x = Body::cross_polytope(3, 1.0).unwrap();
        assert!((x.volume() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cube_sections() {
        let c = Body::cube(3, 1.0).unwrap();
        let f = Frame::coordinate(3, &[0, 1]).unwrap();
        assert!((c.section_volume(&f).unwrap() - 4.0).abs() < 1e-12);
        let s = 0.5f64.sqrt();
        let f = frame(&[&[s, s, 0.0], &[0.0, 0.0, 1.0]]);
        assert!((c.section_volume(&f).unwrap() - 4.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cube_projections() {
        let c = Body::cube(3, 1.0).unwrap();
        let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!((c.projection_body_support(&e3).unwrap() - 4.0).abs() < 1e-12);
        let d = DVector::from_vec(vec![1.0, 1.0, 1.0]) / 3f64.sqrt();
        let want = 4.0 * 3f64.sqrt();
        assert!((c.projection_body_support(&d).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_projection_axis_aligned() {
        let e = Body::ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 1.0]))).unwrap();
        let f = Frame::coordinate(3, &[0, 1]).unwrap();
        assert!((e.projection_volume(&f).unwrap() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn representations_agree() {
        let cube = Body::cube(3, 1.0).unwrap();
        let v = Body::polytope_v(3, cube.vertices().unwrap()).unwrap();
        let (a, b) = cube.halfspaces().unwrap();
        let h = Body::polytope_h(a, b).unwrap();
        let mut rng = RngSpec::new(5).stream(0);
        for _ in 0..20 {
            for k in 1..=2 {
                let fr = crate::flag::sample_frame(3, k, &mut rng);
                let s0 = cube.section_volume(&fr).unwrap();
                let p0 = cube.projection_volume(&fr).unwrap();
                for b in [&v, &h] {
                    assert!((b.section_volume(&fr).unwrap() - s0).abs() < 1e-9);
                    assert!((b.projection_volume(&fr).unwrap() - p0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn polar_examples() {
        match Body::ball(3, 2.0).unwrap().polar().unwrap() {
            Body::Ball { radius, .. } => assert_eq!(radius, 0.5),
            other => panic!("{other:?}"),
        }
        let p = Body::cube(3, 1.0).unwrap().polar().unwrap();
        assert!((p.volume() - 4.0 / 3.0).abs() < 1e-12);
        let e = Body::ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.25, 1.0]))).unwrap();
        let ep = e.polar().unwrap();
        let w = unit_ball_volume(3);
        assert!((e.volume() * ep.volume() - w * w).abs() < 1e-9);
        let shifted = Body::cube(3, 1.0).unwrap().translate(&DVector::from_vec(vec![2.0, 0.0, 0.0])).unwrap();
        assert!(matches!(shifted.polar(), Err(Error::PolarUndefined)));
    }

    #[test]
    fn off_center_ellipsoid_polar_support() {
        let e = Ellipsoid::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])),
            Some(DVector::from_vec(vec![0.3, -0.2])),
        )
        .unwrap();
        let body = Body::Ellipsoid(e);
        let polar = body.polar().unwrap();
        // Boundary points y of the polar satisfy h_L(y) = 1.
        for j in 0..16 {
            let t = j as f64 * PI / 8.0;
            let dir = DVector::from_vec(vec![t.cos(), t.sin()]);
            let r = 1.0 / body.support(&dir);
            let y = dir * r;
            let Body::Ellipsoid(pe) = &polar else { panic!() };
            let d = &y - pe.center();
            assert!(((pe.matrix() * &d).dot(&d) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_images() {
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 0.5]));
        let e = Body::ball(3, 1.0).unwrap().apply_linear(&t).unwrap();
        assert!(matches!(e, Body::Ellipsoid(_)));
        assert!((e.volume() - unit_ball_volume(3)).abs() < 1e-12);
        let c = Body::cube(3, 1.0).unwrap();
        assert_eq!(c.apply_linear(&DMatrix::identity(3, 3)).unwrap(), c);
        let r = crate::flag::sample_orthogonal(3, &mut RngSpec::new(1).stream(0));
        let rc = c.apply_linear(&r).unwrap();
        assert!(matches!(rc, Body::PolytopeV(_)));
        assert!((rc.volume() - 8.0).abs() < 1e-9);
        assert!(matches!(c.apply_linear(&DMatrix::zeros(3, 3)), Err(Error::Singular(_))));
    }

    #[test]
    fn unbounded_and_degenerate() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(Body::polytope_h(a, vec![1.0; 3]), Err(Error::Unbounded)));
        let flat = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(Body::polytope_v(3, flat), Err(Error::Degenerate)));
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        assert!(matches!(Body::polytope_h(a, vec![1.0, -2.0, 1.0, 1.0]), Err(Error::Degenerate)));
    }

    #[test]
    fn off_center_sections() {
        let ball = Body::ball_at(3, 1.0, DVector::from_vec(vec![0.0, 0.0, 0.5])).unwrap();
        let f = Frame::coordinate(3, &[0, 1]).unwrap();
        assert!((ball.section_volume(&f).unwrap() - PI * 0.75).abs() < 1e-12);
        let as_ell = Ellipsoid::new(DMatrix::identity(3, 3), Some(DVector::from_vec(vec![0.0, 0.0, 0.5]))).unwrap();
        let v = Body::Ellipsoid(as_ell).section_volume(&f).unwrap();
        assert!((v - PI * 0.75).abs() < 1e-12);
        let far = Body::ball_at(3, 1.0, DVector::from_vec(vec![0.0, 0.0, 2.0])).unwrap();
        assert_eq!(far.section_volume(&f).unwrap(), 0.0);
    }

    #[test]
    fn planar_width_of_square_and_disk() {
        let f = Frame::coordinate(3, &[0, 1]).unwrap();
        let c = Body::cube(3, 1.0).unwrap();
        assert!((c.planar_mean_width(&f).unwrap() - 8.0 / (2.0 * PI)).abs() < 1e-12);
        let e = Body::ellipsoid(DMatrix::identity(3, 3) * 0.25).unwrap();
        assert!((e.planar_mean_width(&f).unwrap() - 2.0).abs() < 1e-12);
    }
}
