//! Intersections of halfspaces `{y : A y ≤ b}` in low dimension.

use nalgebra::{DMatrix, DVector};

use super::hull::{hull_volume, polygon_area};
use crate::error::{Error, Result};
use crate::special::{binomial, combinations};

/// Largest number of facets accepted by vertex enumeration.
pub const MAX_FACETS: usize = 64;
/// Largest number of facet subsets vertex enumeration will try.
pub const MAX_SUBSETS: u128 = 4_000_000;

const FEAS_TOL: f64 = 1e-9;

/// Rows rescaled to unit length. Rows that vanish are dropped when their
/// offset is nonnegative; `None` signals an infeasible system.
fn normalized(a: &DMatrix<f64>, b: &[f64]) -> Option<(DMatrix<f64>, Vec<f64>)> {
    let k = a.ncols();
    let mut rows: Vec<f64> = Vec::with_capacity(a.len());
    let mut offs = Vec::with_capacity(b.len());
    for i in 0..a.nrows() {
        let norm = a.row(i).norm();
        if norm < 1e-14 {
            if b[i] < -FEAS_TOL {
                return None;
            }
            continue;
        }
        rows.extend(a.row(i).iter().map(|x| x / norm));
        offs.push(b[i] / norm);
    }
    Some((DMatrix::from_row_slice(offs.len(), k, &rows), offs))
}

/// Vertices of `{x : A x ≤ b}` by exhaustive facet-subset solving.
pub fn enumerate_vertices(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = a.ncols();
    let Some((a, b)) = normalized(a, b) else {
        return Ok(Vec::new());
    };
    let m = a.nrows();
    if m > MAX_FACETS {
        return Err(Error::arg(format!(
            "vertex enumeration supports at most {MAX_FACETS} facets, got {m}"
        )));
    }
    if binomial(m, n) > MAX_SUBSETS {
        return Err(Error::arg(format!(
            "vertex enumeration over {} facet subsets is too large",
            binomial(m, n)
        )));
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for subset in combinations(m, n) {
        let sys = DMatrix::from_fn(n, n, |r, c| a[(subset[r], c)]);
        let rhs = DVector::from_fn(n, |r, _| b[subset[r]]);
        let lu = sys.lu();
        if lu.determinant().abs() < 1e-10 {
            continue;
        }
        let Some(x) = lu.solve(&rhs) else { continue };
        let feasible = (0..m).all(|i| {
            let s: f64 = (0..n).map(|c| a[(i, c)] * x[c]).sum();
            s <= b[i] + FEAS_TOL * (1.0 + b[i].abs())
        });
        if !feasible {
            continue;
        }
        let x: Vec<f64> = x.iter().copied().collect();
        let dup = out.iter().any(|v| {
            v.iter()
                .zip(&x)
                .all(|(p, q)| (p - q).abs() <= 1e-9 * (1.0 + p.abs()))
        });
        if !dup {
            out.push(x);
        }
    }
    Ok(out)
}

/// Length of `{t : a_i t ≤ b_i}`.
fn interval_length(a: &DMatrix<f64>, b: &[f64]) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..a.nrows() {
        let ai = a[(i, 0)];
        if ai > 1e-14 {
            hi = hi.min(b[i] / ai);
        } else if ai < -1e-14 {
            lo = lo.max(b[i] / ai);
        } else if b[i] < 0.0 {
            return 0.0;
        }
    }
    (hi - lo).max(0.0)
}

/// Clip a polygon to `a·p ≤ c` (one Sutherland–Hodgman pass).
fn clip(poly: &[[f64; 2]], a: [f64; 2], c: f64, out: &mut Vec<[f64; 2]>) {
    out.clear();
    let m = poly.len();
    for i in 0..m {
        let p = poly[i];
        let q = poly[(i + 1) % m];
        let fp = a[0] * p[0] + a[1] * p[1] - c;
        let fq = a[0] * q[0] + a[1] * q[1] - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
}

fn polygon_from_halfplanes(a: &DMatrix<f64>, b: &[f64], bound: f64) -> Vec<[f64; 2]> {
    let r = bound * (1.0 + 1e-6) + 1e-12;
    let mut poly = vec![[r, r], [-r, r], [-r, -r], [r, -r]];
    let mut buf = Vec::with_capacity(8);
    for i in 0..a.nrows() {
        clip(&poly, [a[(i, 0)], a[(i, 1)]], b[i], &mut buf);
        std::mem::swap(&mut poly, &mut buf);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    poly
}

/// Volume of the bounded polytope `{y ∈ R^k : A y ≤ b}`, which must lie in the
/// centred ball of radius `bound`. Empty or lower-dimensional sets give 0.
pub fn polytope_volume(a: &DMatrix<f64>, b: &[f64], bound: f64) -> Result<f64> {
    match a.ncols() {
        0 => Ok(1.0),
        1 => Ok(interval_length(a, b)),
        2 => Ok(polygon_area(&polygon_from_halfplanes(a, b, bound))),
        k => {
            let verts = enumerate_vertices(a, b)?;
            if verts.len() <= k {
                return Ok(0.0);
            }
            Ok(hull_volume(&verts, k))
        }
    }
}

/// Polygon `{y ∈ R² : A y ≤ b}` as a counter-clockwise vertex list.
pub fn polygon(a: &DMatrix<f64>, b: &[f64], bound: f64) -> Vec<[f64; 2]> {
    polygon_from_halfplanes(a, b, bound)
}
