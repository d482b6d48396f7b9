//! Convex hulls and hull volumes in low dimension.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Hyperplane `normal · x ≤ offset` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone)]
struct Facet {
    verts: Vec<usize>,
    plane: Halfspace,
}

/// Simplicial convex hull of a full-dimensional point set.
#[derive(Debug, Clone)]
pub struct Hull {
    dim: usize,
    points: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    interior: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scale_of(points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300)
}

/// Unit normal of the hyperplane through `d` points of `R^d`, by cofactor
/// expansion of the difference matrix. `None` when the points are affinely
/// dependent.
fn hyperplane(pts: &[&[f64]], d: usize) -> Option<Vec<f64>> {
    let base = pts[0];
    let diffs = DMatrix::from_fn(d - 1, d, |r, c| pts[r + 1][c] - base[c]);
    let mut normal = vec![0.0; d];
    for (c, nc) in normal.iter_mut().enumerate() {
        let minor = diffs.clone().remove_column(c);
        let det = if d == 1 { 1.0 } else { minor.determinant() };
        *nc = if c % 2 == 0 { det } else { -det };
    }
    let len = dot(&normal, &normal).sqrt();
    let scale = (0..d - 1)
        .map(|r| diffs.row(r).norm())
        .product::<f64>()
        .max(1e-300);
    if len <= 1e-12 * scale {
        return None;
    }
    normal.iter_mut().for_each(|x| *x /= len);
    Some(normal)
}

impl Hull {
    /// Incremental beneath-beyond hull. Fails with [`Error::Degenerate`]
    /// when the points do not span `R^dim`.
    pub fn new(points: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("hull dimension must be positive"));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::arg("point dimension does not match hull dimension"));
        }
        if points.len() < dim + 1 {
            return Err(Error::Degenerate);
        }
        let scale = scale_of(&points);
        let eps = 1e-10 * scale;

        if dim == 1 {
            let (lo, hi) = extreme_pair(&points);
            if points[hi][0] - points[lo][0] <= eps {
                return Err(Error::Degenerate);
            }
            let interior = vec![0.5 * (points[hi][0] + points[lo][0])];
            let facets = vec![
                Facet {
                    verts: vec![hi],
                    plane: Halfspace {
                        normal: vec![1.0],
                        offset: points[hi][0],
                    },
                },
                Facet {
                    verts: vec![lo],
                    plane: Halfspace {
                        normal: vec![-1.0],
                        offset: -points[lo][0],
                    },
                },
            ];
            return Ok(Hull {
                dim,
                points,
                facets,
                interior,
            });
        }

        let simplex = initial_simplex(&points, dim, eps)?;
        let mut interior = vec![0.0; dim];
        for &i in &simplex {
            for c in 0..dim {
                interior[c] += points[i][c] / (dim + 1) as f64;
            }
        }
        let mut hull = Hull {
            dim,
            points,
            facets: Vec::new(),
            interior,
        };
        for skip in 0..=dim {
            let verts: Vec<usize> = simplex
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != skip)
                .map(|(_, &v)| v)
                .collect();
            let f = hull.make_facet(verts).ok_or(Error::Degenerate)?;
            hull.facets.push(f);
        }

        for p in 0..hull.points.len() {
            if simplex.contains(&p) {
                continue;
            }
            hull.add_point(p, eps);
        }
        Ok(hull)
    }

    fn make_facet(&self, mut verts: Vec<usize>) -> Option<Facet> {
        verts.sort_unstable();
        let pts: Vec<&[f64]> = verts.iter().map(|&v| self.points[v].as_slice()).collect();
        let mut normal = hyperplane(&pts, self.dim)?;
        let mut offset = dot(&normal, pts[0]);
        if dot(&normal, &self.interior) > offset {
            normal.iter_mut().for_each(|x| *x = -*x);
            offset = -offset;
        }
        Some(Facet {
            verts,
            plane: Halfspace { normal, offset },
        })
    }

    fn add_point(&mut self, p: usize, eps: f64) {
        let point = &self.points[p];
        let visible: Vec<bool> = self
            .facets
            .iter()
            .map(|f| dot(&f.plane.normal, point) - f.plane.offset > eps)
            .collect();
        if !visible.iter().any(|&v| v) {
            return;
        }
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for (f, _) in self.facets.iter().zip(&visible).filter(|(_, v)| **v) {
            for skip in 0..f.verts.len() {
                let ridge: Vec<usize> = f
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<Facet> = self
            .facets
            .drain(..)
            .zip(visible)
            .filter(|(_, v)| !v)
            .map(|(f, _)| f)
            .collect();
        let mut horizon: Vec<Vec<usize>> = ridges
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(r, _)| r)
            .collect();
        horizon.sort();
        for mut ridge in horizon {
            ridge.push(p);
            if let Some(f) = self.make_facet(ridge) {
                kept.push(f);
            }
        }
        self.facets = kept;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Sum of the simplex volumes spanned by the facets and the interior point.
    pub fn volume(&self) -> f64 {
        if self.dim == 1 {
            let (lo, hi) = extreme_pair(&self.points);
            return self.points[hi][0] - self.points[lo][0];
        }
        let d = self.dim;
        let fact: f64 = (1..=d).map(|i| i as f64).product();
        self.facets
            .iter()
            .map(|f| {
                let m = DMatrix::from_fn(d, d, |r, c| self.points[f.verts[r]][c] - self.interior[c]);
                m.determinant().abs()
            })
            .sum::<f64>()
            / fact
    }

    /// Indices of the points that are vertices of the hull.
    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().flat_map(|f| f.verts.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Facet halfspaces with coplanar simplicial facets merged.
    pub fn halfspaces(&self) -> Vec<Halfspace> {
        let scale = scale_of(&self.points);
        let mut out: Vec<Halfspace> = Vec::new();
        for f in &self.facets {
            let dup = out.iter().any(|h| {
                (h.offset - f.plane.offset).abs() <= 1e-9 * scale
                    && h.normal
                        .iter()
                        .zip(&f.plane.normal)
                        .all(|(a, b)| (a - b).abs() <= 1e-9)
            });
            if !dup {
                out.push(f.plane.clone());
            }
        }
        out
    }

    pub fn interior_point(&self) -> &[f64] {
        &self.interior
    }
}

fn extreme_pair(points: &[Vec<f64>]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, p) in points.iter().enumerate() {
        if p[0] < points[lo][0] {
            lo = i;
        }
        if p[0] > points[hi][0] {
            hi = i;
        }
    }
    (lo, hi)
}

/// Greedy affinely independent `dim + 1` points: start from the point with the
/// smallest first coordinate and repeatedly add the point farthest from the
/// affine span of those chosen.
fn initial_simplex(points: &[Vec<f64>], dim: usize, eps: f64) -> Result<Vec<usize>> {
    let first = extreme_pair(points).0;
    let origin = &points[first];
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while chosen.len() < dim + 1 {
        let mut best = (0.0, usize::MAX, Vec::new());
        for (i, p) in points.iter().enumerate() {
            let mut r: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let dist = dot(&r, &r).sqrt();
            if dist > best.0 {
                best = (dist, i, r);
            }
        }
        if best.0 <= eps {
            return Err(Error::Degenerate);
        }
        let (len, idx, r) = best;
        basis.push(r.into_iter().map(|x| x / len).collect());
        chosen.push(idx);
    }
    Ok(chosen)
}

/// Counter-clockwise hull of planar points (Andrew's monotone chain).
pub fn polygon_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

pub fn polygon_perimeter(poly: &[[f64; 2]]) -> f64 {
    match poly.len() {
        0 | 1 => 0.0,
        2 => 2.0 * ((poly[1][0] - poly[0][0]).hypot(poly[1][1] - poly[0][1])),
        m => (0..m)
            .map(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % m];
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum(),
    }
}

/// Volume of the convex hull of `points` in `R^dim`; zero for degenerate sets.
pub fn hull_volume(points: &[Vec<f64>], dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => {
            if points.is_empty() {
                return 0.0;
            }
            let (lo, hi) = extreme_pair(points);
            points[hi][0] - points[lo][0]
        }
        2 => {
            let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
            polygon_area(&polygon_hull(&pts))
        }
        _ => match Hull::new(points.to_vec(), dim) {
            Ok(h) => h.volume(),
            Err(_) => 0.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_vertices(d: usize, h: f64) -> Vec<Vec<f64>> {
        (0..1usize << d)
            .map(|m| (0..d).map(|i| if m >> i & 1 == 1 { h } else { -h }).collect())
            .collect()
    }

    fn cross_polytope(d: usize) -> Vec<Vec<f64>> {
        let mut v = Vec::new();
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; d];
                p[i] = s;
                v.push(p);
            }
        }
        v
    }

    #[test]
    fn cube_volumes() {
        for d in 1..=6 {
            let v = hull_volume(&cube_vertices(d, 1.0), d);
            assert!((v - 2f64.powi(d as i32)).abs() < 1e-9 * v, "d={d} v={v}");
        }
    }

    #[test]
    fn cross_polytope_volumes() {
        for d in 2..=6 {
            let fact: f64 = (1..=d).map(|i| i as f64).product();
            let want = 2f64.powi(d as i32) / fact;
            let v = hull_volume(&cross_polytope(d), d);
            assert!((v - want).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn cube_facets_merge() {
        let h = Hull::new(cube_vertices(3, 1.0), 3).unwrap();
        assert_eq!(h.halfspaces().len(), 6);
        assert_eq!(h.vertex_indices().len(), 8);
        let h = Hull::new(cross_polytope(4), 4).unwrap();
        assert_eq!(h.halfspaces().len(), 16);
    }

    #[test]
    fn interior_points_are_dropped() {
        let mut pts = cube_vertices(3, 1.0);
        pts.push(vec![0.1, 0.2, -0.3]);
        pts.push(vec![1.0, 0.0, 0.0]);
        let h = Hull::new(pts, 3).unwrap();
        assert_eq!(h.vertex_indices().len(), 8);
        assert!((h.volume() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sets() {
        let flat = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
        ];
        assert!(matches!(Hull::new(flat.clone(), 3), Err(Error::Degenerate)));
        assert_eq!(hull_volume(&flat, 3), 0.0);
    }

    #[test]
    fn polygon_helpers() {
        let sq = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [0.0, 0.0]];
        let h = polygon_hull(&sq);
        assert_eq!(h.len(), 4);
        assert!((polygon_area(&h) - 4.0).abs() < 1e-15);
        assert!((polygon_perimeter(&h) - 8.0).abs() < 1e-15);
    }
}
