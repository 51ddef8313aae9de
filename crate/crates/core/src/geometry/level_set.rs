use std::fmt;
use std::sync::Arc;

use crate::Vec2;

/// Scalar field used by [`LevelSet::Custom`].
pub type ScalarField = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;

/// Implicit interface description.
///
/// Negative values mark subdomain one, positive values subdomain two and the
/// zero contour is the interface.
#[derive(Clone)]
pub enum LevelSet {
    /// `|x - c|^2 - r^2`, subdomain one is the disc.
    Circle { center: Vec2, radius: f64 },
    /// `((x-cx)/a)^2 + ((y-cy)/b)^2 - 1`.
    Ellipse { center: Vec2, a: f64, b: f64 },
    /// `x - x0`, subdomain one lies to the left.
    VerticalLine { x0: f64 },
    Custom(ScalarField),
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelSet::Circle { center, radius } => f
                .debug_struct("Circle")
                .field("center", &(center.x, center.y))
                .field("radius", radius)
                .finish(),
            LevelSet::Ellipse { center, a, b } => f
                .debug_struct("Ellipse")
                .field("center", &(center.x, center.y))
                .field("a", a)
                .field("b", b)
                .finish(),
            LevelSet::VerticalLine { x0 } => f.debug_struct("VerticalLine").field("x0", x0).finish(),
            LevelSet::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl LevelSet {
    pub fn circle(cx: f64, cy: f64, radius: f64) -> Self {
        LevelSet::Circle { center: Vec2::new(cx, cy), radius }
    }

    pub fn ellipse(cx: f64, cy: f64, a: f64, b: f64) -> Self {
        LevelSet::Ellipse { center: Vec2::new(cx, cy), a, b }
    }

    pub fn vertical_line(x0: f64) -> Self {
        LevelSet::VerticalLine { x0 }
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(Vec2) -> f64 + Send + Sync + 'static,
    {
        LevelSet::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            LevelSet::Circle { center, radius } => (x - center).norm_squared() - radius * radius,
            LevelSet::Ellipse { center, a, b } => {
                let d = x - center;
                (d.x / a).powi(2) + (d.y / b).powi(2) - 1.0
            }
            LevelSet::VerticalLine { x0 } => x.x - x0,
            LevelSet::Custom(f) => f(x),
        }
    }

    /// True when the field is affine, so chords coincide with the interface.
    pub fn is_affine(&self) -> bool {
        matches!(self, LevelSet::VerticalLine { .. })
    }

    /// Coefficients `(A, B, C)` of `phi(a + t d) = A t^2 + B t + C` for the
    /// quadratic level sets.
    pub(crate) fn along_line(&self, a: Vec2, d: Vec2) -> Option<(f64, f64, f64)> {
        match self {
            LevelSet::Circle { center, radius } => {
                let r = a - center;
                Some((d.norm_squared(), 2.0 * r.dot(&d), r.norm_squared() - radius * radius))
            }
            LevelSet::Ellipse { center, a: sa, b: sb } => {
                let r = a - center;
                let (ia, ib) = (1.0 / (sa * sa), 1.0 / (sb * sb));
                Some((
                    d.x * d.x * ia + d.y * d.y * ib,
                    2.0 * (r.x * d.x * ia + r.y * d.y * ib),
                    r.x * r.x * ia + r.y * r.y * ib - 1.0,
                ))
            }
            LevelSet::VerticalLine { x0 } => Some((0.0, d.x, a.x - x0)),
            LevelSet::Custom(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_convention() {
        let c = LevelSet::circle(0.0, 0.0, 1.0 / 6.0);
        assert!(c.eval(Vec2::zeros()) < 0.0);
        assert!(c.eval(Vec2::new(1.0, 0.0)) > 0.0);
        let l = LevelSet::vertical_line(0.5);
        assert!(l.eval(Vec2::new(0.0, 3.0)) < 0.0);
        assert!(l.eval(Vec2::new(0.75, -3.0)) > 0.0);
        let e = LevelSet::ellipse(0.0, 0.0, 1.0 / 6.0, 1.0 / 7.0);
        assert!(e.eval(Vec2::new(1.0 / 6.0, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn line_restriction_matches_evaluation() {
        let sets = [
            LevelSet::circle(0.1, -0.2, 0.3),
            LevelSet::ellipse(0.0, 0.0, 0.2, 0.4),
            LevelSet::vertical_line(0.25),
        ];
        let a = Vec2::new(-0.3, 0.7);
        let d = Vec2::new(0.9, -0.4);
        for s in &sets {
            let (qa, qb, qc) = s.along_line(a, d).unwrap();
            for &t in &[0.0, 0.3, 1.0, -2.0] {
                let direct = s.eval(a + d * t);
                assert!((qa * t * t + qb * t + qc - direct).abs() < 1e-13);
            }
        }
    }
}
