//! Gauss rules on segments, triangles and polygons.
//!
//! Triangle rules are conical products of Gauss-Legendre rules (Duffy
//! collapse of the unit square), so every weight is positive and any degree
//! is available.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::{Error, Result, Vec2};

/// Highest polynomial degree served by [`polygon_quadrature`].
pub const MAX_POLYGON_DEGREE: usize = 10;

/// Points and weights in physical coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of weights, i.e. the measure of the integration domain.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(Vec2) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn append(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

const MAX_CACHED_DEGREE: usize = 16;

type RefRule = Vec<([f64; 2], f64)>;

/// Rule on the reference triangle `(0,0), (1,0), (0,1)` exact for total
/// degree `degree`; weights sum to 1/2.
pub fn reference_triangle_rule(degree: usize) -> &'static [([f64; 2], f64)] {
    static CACHE: OnceLock<Vec<RefRule>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=MAX_CACHED_DEGREE).map(build_collapsed_rule).collect());
    &cache[degree.min(MAX_CACHED_DEGREE)]
}

fn build_collapsed_rule(degree: usize) -> RefRule {
    // The collapsed integrand has degree `degree + 1` in the collapsed direction.
    let n = (degree + 2).div_ceil(2).max(1);
    let (a, wa) = gauss_legendre_unit(n);
    let mut rule = Vec::with_capacity(n * n);
    for (&b, &wb) in a.iter().zip(&wa) {
        for (&s, &ws) in a.iter().zip(&wa) {
            rule.push(([s * (1.0 - b), b], ws * wb * (1.0 - b)));
        }
    }
    rule
}

/// Signed area of a triangle (positive for counterclockwise order).
pub fn triangle_signed_area(t: &[Vec2; 3]) -> f64 {
    0.5 * cross(t[1] - t[0], t[2] - t[0])
}

pub(crate) fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Shoelace signed area.
pub fn polygon_signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += cross(poly[i], poly[(i + 1) % n]);
    }
    0.5 * s
}

/// Rule on a physical triangle exact for polynomials of total degree `degree`.
pub fn triangle_rule(t: &[Vec2; 3], degree: usize) -> QuadratureRule {
    let mut rule = QuadratureRule::default();
    push_triangle_rule(&mut rule, t, degree);
    rule
}

pub(crate) fn push_triangle_rule(rule: &mut QuadratureRule, t: &[Vec2; 3], degree: usize) {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let jac = cross(e1, e2).abs();
    for &([s, r], w) in reference_triangle_rule(degree) {
        rule.points.push(t[0] + e1 * s + e2 * r);
        rule.weights.push(w * jac);
    }
}

/// Rule on a convex polygon by fan triangulation from its first vertex.
///
/// Either orientation is accepted. Nonconvex, self-intersecting and
/// zero-area polygons are rejected.
pub fn polygon_quadrature(polygon: &[Vec2], degree: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_POLYGON_DEGREE).contains(&degree) {
        return Err(Error::Precondition(format!(
            "polygon quadrature degree {degree} outside [1, {MAX_POLYGON_DEGREE}]"
        )));
    }
    check_convex(polygon)?;
    let mut rule = QuadratureRule::default();
    for i in 1..polygon.len() - 1 {
        let t = [polygon[0], polygon[i], polygon[i + 1]];
        if triangle_signed_area(&t).abs() > 0.0 {
            push_triangle_rule(&mut rule, &t, degree);
        }
    }
    Ok(rule)
}

fn check_convex(polygon: &[Vec2]) -> Result<()> {
    let n = polygon.len();
    if n < 3 {
        return Err(Error::Geometry(format!("polygon with {n} vertices")));
    }
    let area = polygon_signed_area(polygon);
    let scale = polygon.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    if area.abs() <= 1e-14 * scale {
        return Err(Error::Geometry("polygon has zero area".into()));
    }
    let orient = area.signum();
    let mut turning = 0.0;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let c = polygon[(i + 2) % n];
        let (d1, d2) = (b - a, c - b);
        let cr = cross(d1, d2);
        if cr * orient < -1e-12 * d1.norm() * d2.norm() {
            return Err(Error::Geometry("polygon is not convex".into()));
        }
        turning += cr.atan2(d1.dot(&d2));
    }
    if (turning.abs() - 2.0 * PI).abs() > 1e-6 {
        return Err(Error::Geometry("polygon is self-intersecting".into()));
    }
    Ok(())
}

/// Ear-clipping triangulation of a simple counterclockwise polygon.
///
/// Collinear vertices are dropped without emitting zero-area triangles.
pub fn triangulate_simple_polygon(polygon: &[Vec2]) -> Result<Vec<[Vec2; 3]>> {
    let mut idx: Vec<usize> = (0..polygon.len()).collect();
    let mut out = Vec::with_capacity(polygon.len().saturating_sub(2));
    let scale = bbox_diameter(polygon);
    let tol = 1e-14 * scale * scale;
    let mut guard = 0;
    while idx.len() > 3 {
        guard += 1;
        if guard > 4 * polygon.len() * polygon.len() + 16 {
            return Err(Error::Geometry("ear clipping did not terminate".into()));
        }
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let t = [polygon[ia], polygon[ib], polygon[ic]];
            let area = triangle_signed_area(&t);
            if area.abs() <= tol {
                // Collinear (or repeated) vertex: drop it.
                idx.remove(k);
                clipped = true;
                break;
            }
            if area < 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && strictly_inside(&t, polygon[j], tol)
            });
            if !blocked {
                out.push(t);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::Geometry("polygon is not simple".into()));
        }
    }
    if idx.len() == 3 {
        let t = [polygon[idx[0]], polygon[idx[1]], polygon[idx[2]]];
        let area = triangle_signed_area(&t);
        if area < -tol {
            return Err(Error::Geometry("polygon is clockwise or not simple".into()));
        }
        if area > tol {
            out.push(t);
        }
    }
    Ok(out)
}

fn strictly_inside(t: &[Vec2; 3], p: Vec2, tol: f64) -> bool {
    let d0 = cross(t[1] - t[0], p - t[0]);
    let d1 = cross(t[2] - t[1], p - t[1]);
    let d2 = cross(t[0] - t[2], p - t[2]);
    d0 > tol && d1 > tol && d2 > tol
}

fn bbox_diameter(points: &[Vec2]) -> f64 {
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm().max(f64::MIN_POSITIVE)
}

/// Gauss rule along each segment of a polyline, exact for univariate
/// polynomials of degree `2 * points_per_segment - 1` on every segment.
///
/// Zero-length segments are skipped; the second value counts them.
pub fn segment_quadrature(polyline: &[Vec2], points_per_segment: usize) -> (QuadratureRule, usize) {
    let (s, w) = gauss_legendre_unit(points_per_segment.max(1));
    let mut rule = QuadratureRule::default();
    let mut skipped = 0;
    for seg in polyline.windows(2) {
        let d = seg[1] - seg[0];
        let len = d.norm();
        if len == 0.0 {
            skipped += 1;
            log::warn!("skipping zero-length interface segment at ({}, {})", seg[0].x, seg[0].y);
            continue;
        }
        for (&t, &wt) in s.iter().zip(&w) {
            rule.points.push(seg[0] + d * t);
            rule.weights.push(wt * len);
        }
    }
    (rule, skipped)
}
