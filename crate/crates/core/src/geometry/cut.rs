//! Triangle/interface intersection and cut-cell decomposition.

use super::level_set::LevelSet;
use super::quadrature::{
    cross, polygon_signed_area, push_triangle_rule, segment_quadrature, triangle_signed_area,
    triangulate_simple_polygon, QuadratureRule,
};
use crate::{Error, Result, Side, Vec2};

/// Cells whose smaller cut fraction falls below this are treated as uncut.
pub const EPS_GEO: f64 = 1e-12;

/// Options controlling how a cut cell is resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutOptions {
    /// Bisection levels used to bend the chord onto a curved interface.
    pub polyline_depth: usize,
    /// Polynomial degree of the stored volume rules.
    pub volume_degree: usize,
    /// Gauss points per interface segment in the stored interface rule.
    pub interface_points: usize,
}

impl Default for CutOptions {
    fn default() -> Self {
        CutOptions { polyline_depth: 2, volume_degree: 4, interface_points: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellClass {
    Inside1,
    Inside2,
    Cut,
}

impl CellClass {
    pub fn inside(side: Side) -> Self {
        match side {
            Side::One => CellClass::Inside1,
            Side::Two => CellClass::Inside2,
        }
    }

    /// Whether a cell of this class belongs to the submesh of `side`.
    pub fn in_submesh(self, side: Side) -> bool {
        match self {
            CellClass::Cut => true,
            CellClass::Inside1 => side == Side::One,
            CellClass::Inside2 => side == Side::Two,
        }
    }
}

/// Interface quadrature: points, weights and the unit normal (subdomain one
/// towards subdomain two) at every point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterfaceRule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub normals: Vec<Vec2>,
}

impl InterfaceRule {
    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec2, f64, Vec2)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .zip(&self.normals)
            .map(|((&x, &w), &n)| (x, w, n))
    }
}

/// Decomposition of one cut triangle.
#[derive(Clone, Debug)]
pub struct CutGeometry {
    pub cell_id: usize,
    pub triangle: [Vec2; 3],
    /// Counterclockwise polygon `K ∩ Ω1` (chord replaced by the polyline).
    pub poly1: Vec<Vec2>,
    pub poly2: Vec<Vec2>,
    pub tris1: Vec<[Vec2; 3]>,
    pub tris2: Vec<[Vec2; 3]>,
    /// Chord endpoints on the cell boundary.
    pub segment: [Vec2; 2],
    /// Interface approximation from `segment[0]` to `segment[1]`; subdomain
    /// one lies to its left.
    pub polyline: Vec<Vec2>,
    /// Unit chord normal pointing from subdomain one to subdomain two.
    pub normal: Vec2,
    pub cell_area: f64,
    pub area1: f64,
    pub area2: f64,
    pub k1: f64,
    pub k2: f64,
    pub quad1: QuadratureRule,
    pub quad2: QuadratureRule,
    pub quad_gamma: InterfaceRule,
}

impl CutGeometry {
    pub fn area(&self, side: Side) -> f64 {
        match side {
            Side::One => self.area1,
            Side::Two => self.area2,
        }
    }

    /// Area fraction `k^i = |K_i| / |K|`.
    pub fn fraction(&self, side: Side) -> f64 {
        match side {
            Side::One => self.k1,
            Side::Two => self.k2,
        }
    }

    pub fn polygon(&self, side: Side) -> &[Vec2] {
        match side {
            Side::One => &self.poly1,
            Side::Two => &self.poly2,
        }
    }

    pub fn quad(&self, side: Side) -> &QuadratureRule {
        match side {
            Side::One => &self.quad1,
            Side::Two => &self.quad2,
        }
    }

    /// Volume rule on `K ∩ Ω_side` of arbitrary degree.
    pub fn volume_rule(&self, side: Side, degree: usize) -> QuadratureRule {
        let tris = match side {
            Side::One => &self.tris1,
            Side::Two => &self.tris2,
        };
        let mut rule = QuadratureRule::default();
        for t in tris {
            push_triangle_rule(&mut rule, t, degree);
        }
        rule
    }

    /// Interface rule with `points` Gauss points per polyline segment.
    pub fn interface_rule(&self, points: usize) -> InterfaceRule {
        interface_rule(&self.polyline, points)
    }

    /// Length of the interface approximation inside the cell.
    pub fn interface_length(&self) -> f64 {
        self.polyline.windows(2).map(|s| (s[1] - s[0]).norm()).sum()
    }
}

fn interface_rule(polyline: &[Vec2], points: usize) -> InterfaceRule {
    let mut out = InterfaceRule::default();
    for seg in polyline.windows(2) {
        let d = seg[1] - seg[0];
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let n = Vec2::new(d.y, -d.x) / len;
        let (rule, _) = segment_quadrature(seg, points);
        for (x, w) in rule.iter() {
            out.points.push(x);
            out.weights.push(w);
            out.normals.push(n);
        }
    }
    out
}

/// Point on `[a, b]` where `phi` vanishes.
///
/// Requires `phi(a) * phi(b) < 0`. The result does not depend on the order
/// of `a` and `b`, so neighbouring cells agree bitwise on shared crossings.
pub fn intersect_edge(phi: &LevelSet, a: Vec2, b: Vec2) -> Result<Vec2> {
    let (sa, sb) = (phi.eval(a), phi.eval(b));
    if !(sa * sb < 0.0) {
        return Err(Error::Precondition(format!(
            "level set does not change sign on the segment ({}, {}) -> ({}, {})",
            a.x, a.y, b.x, b.y
        )));
    }
    let (a, b, sa) = if (a.x, a.y) <= (b.x, b.y) { (a, b, sa) } else { (b, a, sb) };
    Ok(root_on_segment(phi, a, b, sa))
}

fn root_on_segment(phi: &LevelSet, a: Vec2, b: Vec2, sa: f64) -> Vec2 {
    let d = b - a;
    if let LevelSet::VerticalLine { x0 } = phi {
        let t = ((x0 - a.x) / d.x).clamp(0.0, 1.0);
        return Vec2::new(*x0, a.y + t * d.y);
    }
    if let Some((qa, qb, qc)) = phi.along_line(a, d) {
        if let Some(t) = quadratic_root_in_unit(qa, qb, qc) {
            return a + d * t;
        }
    }
    bisect(phi, a, b, sa)
}

fn quadratic_root_in_unit(a: f64, b: f64, c: f64) -> Option<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return None;
    }
    let in_unit = |t: f64| t.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&t);
    if a.abs() <= 1e-14 * scale {
        let t = -c / b;
        return in_unit(t).then(|| t.clamp(0.0, 1.0));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let candidates = [q / a, if q != 0.0 { c / q } else { f64::NAN }];
    candidates.into_iter().find(|&t| in_unit(t)).map(|t| t.clamp(0.0, 1.0))
}

fn bisect(phi: &LevelSet, a: Vec2, b: Vec2, sa: f64) -> Vec2 {
    let d = b - a;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut flo = sa;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let fm = phi.eval(a + d * mid);
        if fm == 0.0 {
            return a + d * mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let fhi = phi.eval(a + d * hi);
    let t = if fhi != flo { lo - flo * (hi - lo) / (fhi - flo) } else { 0.5 * (lo + hi) };
    a + d * t.clamp(lo, hi)
}

enum Analysis {
    Inside(Side),
    Cut(Box<CutGeometry>),
}

/// Classifies a triangle against the interface.
pub fn classify_cell(phi: &LevelSet, triangle: &[Vec2; 3]) -> Result<CellClass> {
    let opts = CutOptions { polyline_depth: 0, ..CutOptions::default() };
    Ok(match analyze(phi, usize::MAX, triangle, &opts, false)? {
        Analysis::Inside(side) => CellClass::inside(side),
        Analysis::Cut(_) => CellClass::Cut,
    })
}

/// Splits a cut triangle into its two subdomain parts.
///
/// Returns a geometry error when the cell is not actually cut (after the
/// [`EPS_GEO`] degeneracy filter).
pub fn cut_triangle(
    phi: &LevelSet,
    cell_id: usize,
    triangle: &[Vec2; 3],
    opts: &CutOptions,
) -> Result<CutGeometry> {
    match analyze(phi, cell_id, triangle, opts, true)? {
        Analysis::Cut(g) => Ok(*g),
        Analysis::Inside(_) => Err(Error::Precondition(format!("cell {cell_id} is not cut"))),
    }
}

/// Classification plus, for cut cells, the full decomposition.
pub(crate) fn classify_and_cut(
    phi: &LevelSet,
    cell_id: usize,
    triangle: &[Vec2; 3],
    opts: &CutOptions,
) -> Result<(CellClass, Option<CutGeometry>)> {
    Ok(match analyze(phi, cell_id, triangle, opts, true)? {
        Analysis::Inside(side) => (CellClass::inside(side), None),
        Analysis::Cut(g) => (CellClass::Cut, Some(*g)),
    })
}

#[derive(Clone, Copy)]
enum Item {
    Vertex(Vec2, f64),
    Crossing(Vec2),
}

impl Item {
    fn point(&self) -> Vec2 {
        match *self {
            Item::Vertex(p, _) | Item::Crossing(p) => p,
        }
    }

    fn on_interface(&self) -> bool {
        matches!(*self, Item::Crossing(_) | Item::Vertex(_, 0.0))
    }
}

fn analyze(
    phi: &LevelSet,
    cell_id: usize,
    tri: &[Vec2; 3],
    opts: &CutOptions,
    build: bool,
) -> Result<Analysis> {
    let cell_area = triangle_signed_area(tri);
    if !(cell_area > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "cell {cell_id} is degenerate or clockwise (signed area {cell_area:e})"
        )));
    }
    let s = [phi.eval(tri[0]), phi.eval(tri[1]), phi.eval(tri[2])];
    if !phi.is_affine() {
        check_single_crossings(phi, cell_id, tri, &s)?;
    }
    if s.iter().all(|&v| v > 0.0) {
        return Ok(Analysis::Inside(Side::Two));
    }
    if s.iter().all(|&v| v < 0.0) {
        return Ok(Analysis::Inside(Side::One));
    }

    let mut items = Vec::with_capacity(5);
    for j in 0..3 {
        let k = (j + 1) % 3;
        items.push(Item::Vertex(tri[j], s[j]));
        if s[j] * s[k] < 0.0 {
            items.push(Item::Crossing(intersect_edge(phi, tri[j], tri[k])?));
        }
    }
    let marks: Vec<usize> = (0..items.len()).filter(|&i| items[i].on_interface()).collect();
    let majority = if s.iter().sum::<f64>() >= 0.0 { Side::Two } else { Side::One };
    if marks.len() < 2 {
        // Interface only touches a vertex.
        let side = if s.iter().any(|&v| v > 0.0) { Side::Two } else { Side::One };
        return Ok(Analysis::Inside(side));
    }
    if marks.len() > 2 {
        return Err(Error::RefineMesh { cell: cell_id });
    }
    let (ia, ib) = (marks[0], marks[1]);
    let n = items.len();
    let path_ab: Vec<Item> = (ia..=ib).map(|i| items[i]).collect();
    let path_ba: Vec<Item> = (ib..ia + n + 1).map(|i| items[i % n]).collect();
    let side_of = |path: &[Item]| -> Option<Side> {
        path[1..path.len() - 1].iter().find_map(|it| match *it {
            Item::Vertex(_, v) if v < 0.0 => Some(Side::One),
            Item::Vertex(_, v) if v > 0.0 => Some(Side::Two),
            _ => None,
        })
    };
    let (side_ab, side_ba) = (side_of(&path_ab), side_of(&path_ba));
    let (path1, path2) = match (side_ab, side_ba) {
        (Some(Side::One), Some(Side::Two)) => (path_ab, path_ba),
        (Some(Side::Two), Some(Side::One)) => (path_ba, path_ab),
        // Interface runs along an edge: one part is empty.
        (Some(side), None) | (None, Some(side)) => return Ok(Analysis::Inside(side)),
        _ => return Ok(Analysis::Inside(majority)),
    };

    let p1_path: Vec<Vec2> = path1.iter().map(Item::point).collect();
    let p2_path: Vec<Vec2> = path2.iter().map(Item::point).collect();
    let chord_start = *p1_path.last().unwrap();
    let chord_end = p1_path[0];
    let straight1 = polygon_signed_area(&p1_path);
    let straight2 = polygon_signed_area(&p2_path);
    if straight1.min(straight2) < EPS_GEO * cell_area {
        let side = if straight1 >= straight2 { Side::One } else { Side::Two };
        return Ok(Analysis::Inside(side));
    }
    if !build {
        return Ok(Analysis::Cut(Box::new(placeholder(cell_id, tri, cell_area))));
    }

    let depth = if phi.is_affine() { 0 } else { opts.polyline_depth };
    let mut geometry = None;
    for d in [depth, 0] {
        let polyline = refine_chord(phi, tri, chord_start, chord_end, d);
        match assemble_parts(cell_id, tri, cell_area, &p1_path, &p2_path, polyline, opts) {
            Ok(g) => {
                geometry = Some(g);
                break;
            }
            Err(e) if d > 0 => {
                log::warn!("cell {cell_id}: curved interface rejected ({e}); using the chord");
            }
            Err(e) => return Err(e),
        }
    }
    let g = geometry.ok_or_else(|| Error::Internal("cut geometry missing".into()))?;
    if g.k1.min(g.k2) < EPS_GEO {
        let side = if g.k1 >= g.k2 { Side::One } else { Side::Two };
        return Ok(Analysis::Inside(side));
    }
    Ok(Analysis::Cut(Box::new(g)))
}

fn placeholder(cell_id: usize, tri: &[Vec2; 3], cell_area: f64) -> CutGeometry {
    CutGeometry {
        cell_id,
        triangle: *tri,
        poly1: Vec::new(),
        poly2: Vec::new(),
        tris1: Vec::new(),
        tris2: Vec::new(),
        segment: [tri[0], tri[0]],
        polyline: Vec::new(),
        normal: Vec2::new(1.0, 0.0),
        cell_area,
        area1: 0.0,
        area2: 0.0,
        k1: 0.0,
        k2: 0.0,
        quad1: QuadratureRule::default(),
        quad2: QuadratureRule::default(),
        quad_gamma: InterfaceRule::default(),
    }
}

fn assemble_parts(
    cell_id: usize,
    tri: &[Vec2; 3],
    cell_area: f64,
    p1_path: &[Vec2],
    p2_path: &[Vec2],
    polyline: Vec<Vec2>,
    opts: &CutOptions,
) -> Result<CutGeometry> {
    let inner = &polyline[1..polyline.len() - 1];
    let mut poly1 = p1_path.to_vec();
    poly1.extend(inner.iter().copied());
    let mut poly2 = p2_path.to_vec();
    poly2.extend(inner.iter().rev().copied());

    let tris1 = triangulate_simple_polygon(&poly1)?;
    let tris2 = triangulate_simple_polygon(&poly2)?;
    let area1 = polygon_signed_area(&poly1);
    let area2 = polygon_signed_area(&poly2);
    if !(area1 > 0.0 && area2 > 0.0) {
        return Err(Error::Geometry(format!("cell {cell_id}: nonpositive cut area")));
    }
    let chord = polyline[polyline.len() - 1] - polyline[0];
    let normal = Vec2::new(chord.y, -chord.x).normalize();
    let mut quad1 = QuadratureRule::default();
    for t in &tris1 {
        push_triangle_rule(&mut quad1, t, opts.volume_degree);
    }
    let mut quad2 = QuadratureRule::default();
    for t in &tris2 {
        push_triangle_rule(&mut quad2, t, opts.volume_degree);
    }
    let quad_gamma = interface_rule(&polyline, opts.interface_points);
    Ok(CutGeometry {
        cell_id,
        triangle: *tri,
        poly1,
        poly2,
        tris1,
        tris2,
        segment: [polyline[0], polyline[polyline.len() - 1]],
        polyline,
        normal,
        cell_area,
        area1,
        area2,
        k1: area1 / cell_area,
        k2: area2 / cell_area,
        quad1,
        quad2,
        quad_gamma,
    })
}

/// Bends the chord onto the zero contour by recursive midpoint projection
/// along segment normals. Projected points are kept inside the triangle.
fn refine_chord(phi: &LevelSet, tri: &[Vec2; 3], a: Vec2, b: Vec2, depth: usize) -> Vec<Vec2> {
    let mut line = vec![a, b];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(2 * line.len() - 1);
        for seg in line.windows(2) {
            next.push(seg[0]);
            next.push(project_midpoint(phi, tri, seg[0], seg[1]));
        }
        next.push(*line.last().unwrap());
        line = next;
    }
    line
}

fn project_midpoint(phi: &LevelSet, tri: &[Vec2; 3], p: Vec2, q: Vec2) -> Vec2 {
    let m = 0.5 * (p + q);
    let d = q - p;
    let len = d.norm();
    if len == 0.0 {
        return m;
    }
    let n = Vec2::new(d.y, -d.x) / len;
    let fm = phi.eval(m);
    if fm == 0.0 {
        return m;
    }
    let Some((t_lo, t_hi)) = clip_line_to_triangle(tri, m, n) else {
        return m;
    };
    let (t_lo, t_hi) = (t_lo.max(-len), t_hi.min(len));
    for t in [t_hi, t_lo] {
        if t == 0.0 {
            continue;
        }
        let end = m + n * t;
        let fe = phi.eval(end);
        if fe * fm < 0.0 {
            let (a, b, sa) = if (m.x, m.y) <= (end.x, end.y) { (m, end, fm) } else { (end, m, fe) };
            return root_on_segment(phi, a, b, sa);
        }
    }
    m
}

/// Parameter interval of `m + t n` inside the (counterclockwise) triangle.
fn clip_line_to_triangle(tri: &[Vec2; 3], m: Vec2, n: Vec2) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..3 {
        let a = tri[j];
        let e = tri[(j + 1) % 3] - a;
        // Inside means cross(e, x - a) >= 0.
        let c0 = cross(e, m - a);
        let c1 = cross(e, n);
        if c1.abs() < 1e-300 {
            if c0 < 0.0 {
                return None;
            }
            continue;
        }
        let t = -c0 / c1;
        if c1 > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    (lo <= 0.0 && hi >= 0.0).then_some((lo.min(0.0), hi.max(0.0)))
}

/// Detects edges crossed twice by a curved interface (same-sign endpoints
/// with an interior sign change) or crossed more than once.
fn check_single_crossings(phi: &LevelSet, cell_id: usize, tri: &[Vec2; 3], s: &[f64; 3]) -> Result<()> {
    const SAMPLES: usize = 8;
    for j in 0..3 {
        let k = (j + 1) % 3;
        let (a, b) = (tri[j], tri[k]);
        let mut changes = 0;
        let mut prev = s[j];
        for i in 1..=SAMPLES {
            let cur = if i == SAMPLES { s[k] } else { phi.eval(a + (b - a) * (i as f64 / SAMPLES as f64)) };
            if prev * cur < 0.0 {
                changes += 1;
            }
            if cur != 0.0 {
                prev = cur;
            }
        }
        if changes > 1 {
            return Err(Error::RefineMesh { cell: cell_id });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    const UNIT: [Vec2; 3] = [
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
    ];

    #[test]
    fn classify_examples() {
        let far = LevelSet::circle(5.0, 5.0, 1.0);
        assert_eq!(classify_cell(&far, &UNIT).unwrap(), CellClass::Inside2);
        let line = LevelSet::vertical_line(0.5);
        assert_eq!(classify_cell(&line, &UNIT).unwrap(), CellClass::Cut);
    }

    #[test]
    fn near_vertex_line_is_reclassified() {
        let x0 = 1.0 - 1e-15;
        let line = LevelSet::vertical_line(x0);
        // Shoelace oracle for the clipped sliver {x > x0} of the unit triangle:
        // a right triangle with legs (1 - x0) along both axes directions.
        let leg = 1.0 - x0;
        let sliver = 0.5 * leg * leg;
        assert!(sliver < EPS_GEO * 0.5);
        assert_eq!(classify_cell(&line, &UNIT).unwrap(), CellClass::Inside1);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let flat = [v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0)];
        let line = LevelSet::vertical_line(0.5);
        assert!(matches!(classify_cell(&line, &flat), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn intersect_examples() {
        let line = LevelSet::vertical_line(0.5);
        assert_eq!(intersect_edge(&line, v(0.0, 0.0), v(1.0, 0.0)).unwrap(), v(0.5, 0.0));
        let c = LevelSet::circle(0.0, 0.0, 1.0 / 6.0);
        let x = intersect_edge(&c, v(0.0, 0.0), v(1.0, 0.0)).unwrap();
        assert!((x - v(1.0 / 6.0, 0.0)).norm() < 1e-16);
        let e = LevelSet::ellipse(0.0, 0.0, 1.0 / 6.0, 1.0 / 7.0);
        let x = intersect_edge(&e, v(0.0, 0.0), v(0.0, 1.0)).unwrap();
        assert!((x - v(0.0, 1.0 / 7.0)).norm() < 1e-16);
        assert!(matches!(
            intersect_edge(&line, v(0.0, 0.0), v(0.2, 0.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn intersect_custom_by_bisection() {
        let phi = LevelSet::custom(|p| p.x.powi(3) + p.y - 0.3);
        let x = intersect_edge(&phi, v(0.0, 0.0), v(1.0, 0.2)).unwrap();
        assert!(phi.eval(x).abs() < 1e-13);
        // Order independence.
        let y = intersect_edge(&phi, v(1.0, 0.2), v(0.0, 0.0)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn cut_unit_triangle_by_line() {
        let line = LevelSet::vertical_line(0.5);
        let g = cut_triangle(&line, 0, &UNIT, &CutOptions::default()).unwrap();
        assert!((g.area1 - 0.375).abs() < 1e-15);
        assert!((g.area2 - 0.125).abs() < 1e-15);
        assert!((g.k1 - 0.75).abs() < 1e-15);
        assert!((g.k2 - 0.25).abs() < 1e-15);
        assert!((g.normal - v(1.0, 0.0)).norm() < 1e-15);
        assert!((g.quad1.measure() - 0.375).abs() < 1e-15);
        assert!((g.quad_gamma.length() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cut_circle_matches_monte_carlo() {
        let r0 = 1.0 / 6.0;
        let phi = LevelSet::circle(0.0, 0.0, r0);
        let tri = [v(0.1, 0.1), v(0.25, 0.1), v(0.1, 0.25)];
        // Deep polyline so the chord error sits far below the sampling noise.
        let deep = CutOptions {
            polyline_depth: 6,
            ..CutOptions::default()
        };
        let g = cut_triangle(&phi, 7, &tri, &deep).unwrap();
        let coarse = cut_triangle(&phi, 7, &tri, &CutOptions::default()).unwrap();
        // Containment oracle with uniform samples in the triangle.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples = 10_000_000usize;
        let mut inside = 0usize;
        for _ in 0..samples {
            let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let p = tri[0] + (tri[1] - tri[0]) * a + (tri[2] - tri[0]) * b;
            if p.norm_squared() < r0 * r0 {
                inside += 1;
            }
        }
        let frac = inside as f64 / samples as f64;
        let sigma = (frac * (1.0 - frac) / samples as f64).sqrt();
        let mc_area1 = frac * g.cell_area;
        assert!((g.k1 - frac).abs() < 3.0 * sigma + 1e-5, "k1={} mc={frac}", g.k1);
        // Closed form: the disc meets only the two legs x = 0.1 and y = 0.1.
        let prim = |x: f64| 0.5 * (x * (r0 * r0 - x * x).sqrt() + r0 * r0 * (x / r0).asin());
        let xm = (r0 * r0 - 0.01).sqrt();
        let exact = prim(xm) - prim(0.1) - 0.1 * (xm - 0.1);
        assert!((mc_area1 - exact).abs() < 3.0 * sigma * g.cell_area + 1e-12);
        let rel = (g.area1 - exact).abs() / exact;
        assert!(rel < 5e-4, "3 significant digits: {rel}");
        // Default depth loses only the chord segments of a 1/6-radius arc.
        let rel = (coarse.area1 - mc_area1).abs() / mc_area1;
        assert!(rel < 1e-2, "default depth: {rel}");
        assert!(coarse.area1 <= g.area1 + 1e-15);
    }

    #[test]
    fn polyline_arc_length() {
        let r0 = 1.0 / 6.0;
        let phi = LevelSet::circle(0.0, 0.0, r0);
        let tri = [v(0.0, 0.0), v(0.3, 0.0), v(0.0, 0.3)];
        let g = cut_triangle(&phi, 0, &tri, &CutOptions::default()).unwrap();
        assert_eq!(g.polyline.len(), 5);
        // Quarter circle inside this cell: arc length r0 * pi / 2.
        let arc = r0 * std::f64::consts::FRAC_PI_2;
        let rel = (g.quad_gamma.length() - arc).abs() / arc;
        assert!(rel < 1e-2, "rel {rel}");
        // Four segments on a quarter arc: chord-sum error ~ (pi/16)^2/6.
        let segs = 4.0;
        let half = std::f64::consts::FRAC_PI_2 / (2.0 * segs);
        let polyline_exact = 2.0 * segs * r0 * half.sin();
        assert!((g.interface_length() - polyline_exact).abs() < 1e-14);
    }

    #[test]
    fn polyline_arc_length_small_cell() {
        let r0 = 1.0 / 6.0;
        let phi = LevelSet::circle(0.0, 0.0, r0);
        let h = 1.0 / 32.0;
        let tri = [v(5.0 * h, 0.0), v(6.0 * h, 0.0), v(6.0 * h, h)];
        let g = cut_triangle(&phi, 0, &tri, &CutOptions::default()).unwrap();
        let (a, b) = (g.segment[0], g.segment[1]);
        let dtheta = (a.y.atan2(a.x) - b.y.atan2(b.x)).abs();
        let arc = r0 * dtheta;
        let rel = (g.quad_gamma.length() - arc).abs() / arc;
        assert!(rel < 1e-4, "rel {rel}");
    }

    #[test]
    fn vertex_on_interface() {
        // Line through vertex (0,0) and the midpoint of the opposite edge.
        let phi = LevelSet::custom(|p| p.x - p.y);
        let g = cut_triangle(&phi, 0, &UNIT, &CutOptions::default()).unwrap();
        assert!((g.area1 - 0.25).abs() < 1e-14);
        assert!((g.area2 - 0.25).abs() < 1e-14);
        // Interface along an edge: uncut.
        let edge = LevelSet::custom(|p| p.y);
        assert_eq!(classify_cell(&edge, &UNIT).unwrap(), CellClass::Inside2);
    }

    #[test]
    fn double_crossing_requests_refinement() {
        // Circle bulging through the bottom edge only.
        let phi = LevelSet::circle(0.5, -0.05, 0.1);
        let tri = [v(0.0, 0.0), v(1.0, 0.0), v(0.5, 1.0)];
        assert!(matches!(
            cut_triangle(&phi, 3, &tri, &CutOptions::default()),
            Err(Error::RefineMesh { cell: 3 })
        ));
    }

    fn random_cut_case(rng: &mut ChaCha8Rng) -> Option<(LevelSet, [Vec2; 3])> {
        let mut tri = [Vec2::zeros(); 3];
        for p in tri.iter_mut() {
            *p = v(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        }
        if triangle_signed_area(&tri) < 0.0 {
            tri.swap(1, 2);
        }
        if triangle_signed_area(&tri) < 1e-4 {
            return None;
        }
        let phi = match rng.random_range(0..3) {
            0 => LevelSet::vertical_line(rng.random_range(-0.1..0.1)),
            1 => {
                let c = v(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                let r = c.norm() + rng.random_range(-0.05..0.05);
                LevelSet::circle(c.x, c.y, r.abs().max(0.05))
            }
            _ => LevelSet::ellipse(0.0, 0.0, rng.random_range(0.05..0.2), rng.random_range(0.05..0.2)),
        };
        Some((phi, tri))
    }

    #[test]
    fn partition_and_orientation_on_random_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut cut = 0;
        while cut < 2000 {
            let Some((phi, tri)) = random_cut_case(&mut rng) else { continue };
            let Ok((CellClass::Cut, Some(g))) = classify_and_cut(&phi, 0, &tri, &CutOptions::default()) else {
                continue;
            };
            cut += 1;
            assert!(((g.area1 + g.area2) - g.cell_area).abs() <= 1e-12 * g.cell_area);
            assert!((g.k1 + g.k2 - 1.0).abs() < 1e-12);
            assert!((g.normal.norm() - 1.0).abs() < 1e-14);
            assert!(g.quad1.weights.iter().chain(&g.quad2.weights).all(|&w| w > 0.0));
            assert!((g.quad1.measure() - g.area1).abs() <= 1e-12 * g.cell_area);
            // Quadrature consistency for a degree-4 polynomial.
            let poly = |p: Vec2| 1.0 + p.x - 2.0 * p.y * p.x + p.x.powi(3) * p.y - p.y.powi(4);
            let whole = super::super::quadrature::triangle_rule(&tri, 4).integrate(poly);
            let parts = g.quad1.integrate(poly) + g.quad2.integrate(poly);
            assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(g.cell_area));
            // Normal orientation at the polyline vertices, which lie on the zero set.
            let hk = (0..3).map(|j| (tri[j] - tri[(j + 1) % 3]).norm()).fold(0.0, f64::max);
            let eps = 1e-6 * hk;
            for seg in g.polyline.windows(2) {
                let d = seg[1] - seg[0];
                let n = Vec2::new(d.y, -d.x).normalize();
                for x in seg {
                    assert!(phi.eval(x + n * eps) > 0.0 && phi.eval(x - n * eps) < 0.0);
                }
            }
        }
    }
}
