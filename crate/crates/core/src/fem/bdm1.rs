use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix6};

use crate::geometry::{gauss_legendre_unit, QuadratureRule};
use crate::{Error, Result, Vec2};

/// Gauss points per edge used for interpolation moments.
pub const EDGE_INTERPOLATION_POINTS: usize = 4;

/// Coefficients of the reference basis in the monomial basis
/// `(1,0), (0,1), (x,0), (y,0), (0,x), (0,y)`; column `i` is basis `i`.
///
/// Local functional `2j` is the outward flux through reference edge `j`
/// (from vertex `j` to vertex `j+1`), functional `2j+1` the flux weighted by
/// the edge parameter `s` in `[-1/2, 1/2]`.
pub fn reference_basis() -> &'static Matrix6<f64> {
    static BASIS: OnceLock<Matrix6<f64>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let verts = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let monomials: [fn(Vec2) -> Vec2; 6] = [
            |_| Vec2::new(1.0, 0.0),
            |_| Vec2::new(0.0, 1.0),
            |p| Vec2::new(p.x, 0.0),
            |p| Vec2::new(p.y, 0.0),
            |p| Vec2::new(0.0, p.x),
            |p| Vec2::new(0.0, p.y),
        ];
        let mut d = Matrix6::zeros();
        for j in 0..3 {
            let (a, b) = (verts[j], verts[(j + 1) % 3]);
            for (k, m) in monomials.iter().enumerate() {
                let mom = outward_moments(a, b, m, 2);
                d[(2 * j, k)] = mom[0];
                d[(2 * j + 1, k)] = mom[1];
            }
        }
        d.try_inverse().expect("reference BDM1 moment matrix is invertible")
    })
}

/// Flux moments `(∫ q·n ds, ∫ q·n s ds)` on the segment from `a` to `b`,
/// with `n` the tangent rotated clockwise and `s` in `[-1/2, 1/2]`.
fn outward_moments<F: Fn(Vec2) -> Vec2 + ?Sized>(a: Vec2, b: Vec2, q: &F, npts: usize) -> [f64; 2] {
    let d = b - a;
    let len = d.norm();
    let n = Vec2::new(d.y, -d.x) / len;
    let (x, w) = gauss_legendre_unit(npts);
    let mut out = [0.0; 2];
    for (&t, &wt) in x.iter().zip(&w) {
        let s = t - 0.5;
        let qn = q(a + d * t).dot(&n) * wt * len;
        out[0] += qn;
        out[1] += qn * s;
    }
    out
}

/// Global moments of `field` on an edge oriented from `lo` to `hi`.
pub fn edge_moments<F: Fn(Vec2) -> Vec2 + ?Sized>(lo: Vec2, hi: Vec2, field: &F) -> [f64; 2] {
    outward_moments(lo, hi, field, EDGE_INTERPOLATION_POINTS)
}

/// Affine map from the reference triangle to a physical cell.
#[derive(Clone, Copy, Debug)]
pub struct CellMap {
    pub origin: Vec2,
    pub jac: Matrix2<f64>,
    pub det: f64,
    inv: Matrix2<f64>,
}

impl CellMap {
    pub fn new(tri: &[Vec2; 3]) -> Result<Self> {
        let e1 = tri[1] - tri[0];
        let e2 = tri[2] - tri[0];
        let jac = Matrix2::new(e1.x, e2.x, e1.y, e2.y);
        let det = jac.determinant();
        let scale = e1.norm_squared().max(e2.norm_squared());
        if !(det.abs() > 1e-14 * scale) || !det.is_finite() || det < 0.0 {
            return Err(Error::InvalidMesh(format!("degenerate cell Jacobian (det {det:e})")));
        }
        let inv = jac.try_inverse().ok_or_else(|| Error::InvalidMesh("singular Jacobian".into()))?;
        Ok(CellMap { origin: tri[0], jac, det, inv })
    }

    pub fn to_reference(&self, x: Vec2) -> Vec2 {
        self.inv * (x - self.origin)
    }

    /// Physical values and divergences of the six local basis functions.
    ///
    /// The point may lie outside the cell; the basis is then extrapolated.
    pub fn eval(&self, x: Vec2) -> ([Vec2; 6], [f64; 6]) {
        let c = reference_basis();
        let r = self.to_reference(x);
        let mut vals = [Vec2::zeros(); 6];
        let mut divs = [0.0; 6];
        for i in 0..6 {
            let qx = c[(0, i)] + c[(2, i)] * r.x + c[(3, i)] * r.y;
            let qy = c[(1, i)] + c[(4, i)] * r.x + c[(5, i)] * r.y;
            vals[i] = self.jac * Vec2::new(qx, qy) / self.det;
            divs[i] = (c[(2, i)] + c[(5, i)]) / self.det;
        }
        (vals, divs)
    }

    /// Local basis values with global orientation applied: the flux moment
    /// of local edge `j` flips when `signs[j] < 0`.
    pub fn eval_oriented(&self, x: Vec2, signs: &[f64; 3]) -> ([Vec2; 6], [f64; 6]) {
        let (mut vals, mut divs) = self.eval(x);
        for j in 0..3 {
            vals[2 * j] *= signs[j];
            divs[2 * j] *= signs[j];
        }
        (vals, divs)
    }
}

/// Coefficients of the BDM1 interpolant in the oriented local basis of
/// [`CellMap::eval_oriented`]: the global edge moments of `field`.
pub fn interpolate_bdm1<F: Fn(Vec2) -> Vec2 + ?Sized>(
    tri: &[Vec2; 3],
    signs: &[f64; 3],
    field: &F,
) -> [f64; 6] {
    let mut out = [0.0; 6];
    for j in 0..3 {
        let (a, b) = (tri[j], tri[(j + 1) % 3]);
        let (lo, hi) = if signs[j] > 0.0 { (a, b) } else { (b, a) };
        let m = edge_moments(lo, hi, field);
        out[2 * j] = m[0];
        out[2 * j + 1] = m[1];
    }
    out
}

/// Interpolant of `field` in the unoriented local basis of [`CellMap::eval`].
pub fn interpolate_cell<F: Fn(Vec2) -> Vec2 + ?Sized>(tri: &[Vec2; 3], field: &F) -> [f64; 6] {
    interpolate_bdm1(tri, &[1.0; 3], field)
}

/// Weighted mean of `f` over the region covered by `rule`.
pub fn project_p0<F: FnMut(Vec2) -> f64>(rule: &QuadratureRule, f: F) -> Result<f64> {
    let w = rule.measure();
    if !(w > 0.0) {
        return Err(Error::Precondition("projection over a region of zero measure".into()));
    }
    Ok(rule.integrate(f) / w)
}
