//! Manufactured solutions on `(-1, 1)^2`.
//!
//! Each problem supplies, per subdomain, the potential `u`, the flux `p`
//! with first and second derivatives, `div p` with its gradient, and the
//! source `f = -div p`, plus the interface jump data.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::JumpData;
use crate::geometry::LevelSet;
use crate::{Error, Result, Side, Vec2};

pub type ScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
/// Jacobian with entry `(i, j) = ∂_j p_i`.
pub type MatrixFn = Arc<dyn Fn(Vec2) -> Matrix2<f64> + Send + Sync>;
/// Hessians of the two flux components.
pub type HessianFn = Arc<dyn Fn(Vec2) -> [Matrix2<f64>; 2] + Send + Sync>;

/// Exact fields on one subdomain, analytic on all of the square.
#[derive(Clone)]
pub struct ExactFields {
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    pub p: VectorFn,
    pub grad_p: MatrixFn,
    pub hess_p: HessianFn,
    pub div_p: ScalarFn,
    pub grad_div_p: VectorFn,
    pub f: ScalarFn,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub level_set: LevelSet,
    pub alpha: [f64; 2],
    pub sides: [ExactFields; 2],
    pub jump: JumpData,
    /// Whether `p = α ∇u` holds on each side. When it does not, the
    /// residual `α⁻¹p − ∇u` enters the right-hand side.
    pub constitutive: bool,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("level_set", &self.level_set)
            .field("alpha", &self.alpha)
            .field("constitutive", &self.constitutive)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn fields(&self, side: Side) -> &ExactFields {
        &self.sides[side.index()]
    }

    pub fn alpha(&self, side: Side) -> f64 {
        self.alpha[side.index()]
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha[0].min(self.alpha[1])
    }

    /// Side containing `x` according to the level set (the interface itself
    /// is assigned to side one).
    pub fn side_of(&self, x: Vec2) -> Side {
        if self.level_set.eval(x) <= 0.0 {
            Side::One
        } else {
            Side::Two
        }
    }

    /// Same problem with `α` and `f` scaled by `lambda`; `u` is unchanged
    /// and `p` scales by `lambda`.
    pub fn scaled(&self, lambda: f64) -> ProblemSpec {
        let scale = |e: &ExactFields| {
            let (p, gp, hp, d, gd, f) =
                (e.p.clone(), e.grad_p.clone(), e.hess_p.clone(), e.div_p.clone(), e.grad_div_p.clone(), e.f.clone());
            ExactFields {
                u: e.u.clone(),
                grad_u: e.grad_u.clone(),
                p: Arc::new(move |x| p(x) * lambda),
                grad_p: Arc::new(move |x| gp(x) * lambda),
                hess_p: Arc::new(move |x| hp(x).map(|m| m * lambda)),
                div_p: Arc::new(move |x| d(x) * lambda),
                grad_div_p: Arc::new(move |x| gd(x) * lambda),
                f: Arc::new(move |x| f(x) * lambda),
            }
        };
        let gn = self.jump.g_n.clone();
        ProblemSpec {
            name: format!("{}x{lambda}", self.name),
            level_set: self.level_set.clone(),
            alpha: [self.alpha[0] * lambda, self.alpha[1] * lambda],
            sides: [scale(&self.sides[0]), scale(&self.sides[1])],
            jump: JumpData { g_d: self.jump.g_d.clone(), g_n: Arc::new(move |x, n| gn(x, n) * lambda) },
            constitutive: self.constitutive,
        }
    }
}

fn check_alpha(alpha1: f64, alpha2: f64) -> Result<()> {
    if !(alpha1 > 0.0 && alpha2 > 0.0 && alpha1.is_finite() && alpha2.is_finite()) {
        return Err(Error::Config(format!("conductivities must be positive, got ({alpha1}, {alpha2})")));
    }
    Ok(())
}

/// Builds the problem registered under `name`.
pub fn by_name(name: &str, alpha1: f64, alpha2: f64, xi: Option<f64>) -> Result<ProblemSpec> {
    match name {
        "example1" => example1(alpha1, alpha2),
        "example2" => example2(alpha1, alpha2),
        "example3" => example3(alpha1, alpha2, xi.unwrap_or(0.1)),
        "example4" => example4(alpha1, alpha2),
        "example5" => example5(alpha1, alpha2),
        other => Err(Error::Config(format!("unknown problem `{other}`"))),
    }
}

pub const PROBLEM_NAMES: [&str; 5] = ["example1", "example2", "example3", "example4", "example5"];

/// Fields `u = (U + shift) / α` for a flux `p = ∇U` shared by both sides.
#[allow(clippy::too_many_arguments)]
fn potential_side(
    alpha: f64,
    shift: f64,
    big_u: ScalarFn,
    p: VectorFn,
    grad_p: MatrixFn,
    hess_p: HessianFn,
    div_p: ScalarFn,
    grad_div_p: VectorFn,
) -> ExactFields {
    let (pc, dc) = (p.clone(), div_p.clone());
    ExactFields {
        u: Arc::new(move |x| big_u(x) / alpha + shift),
        grad_u: Arc::new(move |x| pc(x) / alpha),
        p,
        grad_p,
        hess_p,
        div_p,
        grad_div_p,
        f: Arc::new(move |x| -dc(x)),
    }
}

/// Circle of radius 1/6; `p = 5 r³ (x, y)`.
pub fn example1(alpha1: f64, alpha2: f64) -> Result<ProblemSpec> {
    check_alpha(alpha1, alpha2)?;
    let r0: f64 = 1.0 / 6.0;
    let big_u: ScalarFn = Arc::new(|x| x.norm().powi(5));
    let p: VectorFn = Arc::new(|x| x * (5.0 * x.norm().powi(3)));
    let grad_p: MatrixFn = Arc::new(|x| {
        let r = x.norm();
        let (a, b) = (5.0 * r.powi(3), 15.0 * r);
        Matrix2::new(a + b * x.x * x.x, b * x.x * x.y, b * x.x * x.y, a + b * x.y * x.y)
    });
    let hess_p: HessianFn = Arc::new(|x| {
        let r = x.norm();
        if r == 0.0 {
            return [Matrix2::zeros(); 2];
        }
        let (px, py) = (x.x, x.y);
        let hx = Matrix2::new(
            45.0 * px * r + 15.0 * px.powi(3) / r,
            15.0 * r * py + 15.0 * px * px * py / r,
            15.0 * r * py + 15.0 * px * px * py / r,
            15.0 * px * r + 15.0 * px * py * py / r,
        );
        let hy = Matrix2::new(
            15.0 * py * r + 15.0 * px * px * py / r,
            15.0 * px * r + 15.0 * px * py * py / r,
            15.0 * px * r + 15.0 * px * py * py / r,
            45.0 * py * r + 15.0 * py.powi(3) / r,
        );
        [hx, hy]
    });
    let div_p: ScalarFn = Arc::new(|x| 25.0 * x.norm().powi(3));
    let grad_div_p: VectorFn = Arc::new(|x| x * (75.0 * x.norm()));
    let shift = r0.powi(5) * (1.0 / alpha1 - 1.0 / alpha2);
    let side = |alpha, shift| {
        potential_side(alpha, shift, big_u.clone(), p.clone(), grad_p.clone(), hess_p.clone(), div_p.clone(), grad_div_p.clone())
    };
    Ok(ProblemSpec {
        name: "example1".into(),
        level_set: LevelSet::circle(0.0, 0.0, r0),
        alpha: [alpha1, alpha2],
        sides: [side(alpha1, 0.0), side(alpha2, shift)],
        jump: JumpData::zero(),
        constitutive: true,
    })
}

/// Ellipse with semi-axes 1/6 and 1/7; `u ∝ ρ^{5/2}` with
/// `ρ = x²/a² + y²/b²`.
pub fn example2(alpha1: f64, alpha2: f64) -> Result<ProblemSpec> {
    check_alpha(alpha1, alpha2)?;
    let (a, b) = (1.0 / 6.0, 1.0 / 7.0);
    let (ca, cb): (f64, f64) = (1.0 / (a * a), 1.0 / (b * b));
    let rho = move |x: Vec2| ca * x.x * x.x + cb * x.y * x.y;
    let big_u: ScalarFn = Arc::new(move |x| rho(x).powf(2.5));
    let p: VectorFn = Arc::new(move |x| Vec2::new(ca * x.x, cb * x.y) * (5.0 * rho(x).powf(1.5)));
    let grad_p: MatrixFn = Arc::new(move |x| {
        let r = rho(x);
        let (r15, r05) = (r.powf(1.5), r.sqrt());
        let xy = 15.0 * ca * cb * x.x * x.y * r05;
        Matrix2::new(
            5.0 * ca * r15 + 15.0 * ca * ca * x.x * x.x * r05,
            xy,
            xy,
            5.0 * cb * r15 + 15.0 * cb * cb * x.y * x.y * r05,
        )
    });
    let hess_p: HessianFn = Arc::new(move |x| {
        let r = rho(x);
        if r == 0.0 {
            return [Matrix2::zeros(); 2];
        }
        let (s, is) = (r.sqrt(), 1.0 / r.sqrt());
        let (px, py) = (x.x, x.y);
        let xxy = 15.0 * ca * cb * py * s + 15.0 * ca * ca * cb * px * px * py * is;
        let xyy = 15.0 * ca * cb * px * s + 15.0 * ca * cb * cb * px * py * py * is;
        let hx = Matrix2::new(45.0 * ca * ca * px * s + 15.0 * ca.powi(3) * px.powi(3) * is, xxy, xxy, xyy);
        let hy = Matrix2::new(xxy, xyy, xyy, 45.0 * cb * cb * py * s + 15.0 * cb.powi(3) * py.powi(3) * is);
        [hx, hy]
    });
    let div_p: ScalarFn = Arc::new(move |x| {
        let r = rho(x);
        5.0 * (ca + cb) * r.powf(1.5) + 15.0 * r.sqrt() * (ca * ca * x.x * x.x + cb * cb * x.y * x.y)
    });
    let grad_div_p: VectorFn = Arc::new(move |x| {
        let r = rho(x);
        if r == 0.0 {
            return Vec2::zeros();
        }
        let (s, is) = (r.sqrt(), 1.0 / r.sqrt());
        let q = ca * ca * x.x * x.x + cb * cb * x.y * x.y;
        Vec2::new(
            15.0 * ca * (ca + cb) * x.x * s + 15.0 * ca * x.x * is * q + 30.0 * ca * ca * x.x * s,
            15.0 * cb * (ca + cb) * x.y * s + 15.0 * cb * x.y * is * q + 30.0 * cb * cb * x.y * s,
        )
    });
    let shift = 1.0 / alpha1 - 1.0 / alpha2;
    let side = |alpha, shift| {
        potential_side(alpha, shift, big_u.clone(), p.clone(), grad_p.clone(), hess_p.clone(), div_p.clone(), grad_div_p.clone())
    };
    Ok(ProblemSpec {
        name: "example2".into(),
        level_set: LevelSet::ellipse(0.0, 0.0, a, b),
        alpha: [alpha1, alpha2],
        sides: [side(alpha1, 0.0), side(alpha2, shift)],
        jump: JumpData::zero(),
        constitutive: true,
    })
}

/// Vertical line `x = -(π/6 + ξ)`; `U = (x + π/6 + ξ)(x² − 1)(y² − 1)`.
pub fn example3(alpha1: f64, alpha2: f64, xi: f64) -> Result<ProblemSpec> {
    check_alpha(alpha1, alpha2)?;
    let c = PI / 6.0 + xi;
    if !(c.is_finite() && c.abs() < 1.0) {
        return Err(Error::Config(format!("interface offset xi = {xi} leaves the domain")));
    }
    let w = move |x: f64| (x + c) * (x * x - 1.0);
    let dw = move |x: f64| 3.0 * x * x + 2.0 * c * x - 1.0;
    let ddw = move |x: f64| 6.0 * x + 2.0 * c;
    let g = |y: f64| y * y - 1.0;
    let big_u: ScalarFn = Arc::new(move |x| w(x.x) * g(x.y));
    let p: VectorFn = Arc::new(move |x| Vec2::new(dw(x.x) * g(x.y), 2.0 * x.y * w(x.x)));
    let grad_p: MatrixFn = Arc::new(move |x| {
        Matrix2::new(ddw(x.x) * g(x.y), 2.0 * x.y * dw(x.x), 2.0 * x.y * dw(x.x), 2.0 * w(x.x))
    });
    let hess_p: HessianFn = Arc::new(move |x| {
        let hx = Matrix2::new(6.0 * g(x.y), 2.0 * x.y * ddw(x.x), 2.0 * x.y * ddw(x.x), 2.0 * dw(x.x));
        let hy = Matrix2::new(2.0 * x.y * ddw(x.x), 2.0 * dw(x.x), 2.0 * dw(x.x), 0.0);
        [hx, hy]
    });
    let div_p: ScalarFn = Arc::new(move |x| ddw(x.x) * g(x.y) + 2.0 * w(x.x));
    let grad_div_p: VectorFn =
        Arc::new(move |x| Vec2::new(6.0 * g(x.y) + 2.0 * dw(x.x), 2.0 * x.y * ddw(x.x)));
    let side = |alpha| {
        potential_side(alpha, 0.0, big_u.clone(), p.clone(), grad_p.clone(), hess_p.clone(), div_p.clone(), grad_div_p.clone())
    };
    Ok(ProblemSpec {
        name: "example3".into(),
        level_set: LevelSet::vertical_line(-c),
        alpha: [alpha1, alpha2],
        sides: [side(alpha1), side(alpha2)],
        jump: JumpData::zero(),
        constitutive: true,
    })
}

/// Vertical line `x = 1/3` with `u = y³ + 2`, `p = (0, 3y²)` on the left
/// and `u = 2y³`, `p = (0, 6y)` on the right; `p` is independent of `α`.
pub fn example4(alpha1: f64, alpha2: f64) -> Result<ProblemSpec> {
    check_alpha(alpha1, alpha2)?;
    let m = |a, b, c, d| Matrix2::new(a, b, c, d);
    let left = ExactFields {
        u: Arc::new(|x| x.y.powi(3) + 2.0),
        grad_u: Arc::new(|x| Vec2::new(0.0, 3.0 * x.y * x.y)),
        p: Arc::new(|x| Vec2::new(0.0, 3.0 * x.y * x.y)),
        grad_p: Arc::new(move |x| m(0.0, 0.0, 0.0, 6.0 * x.y)),
        hess_p: Arc::new(move |_| [Matrix2::zeros(), m(0.0, 0.0, 0.0, 6.0)]),
        div_p: Arc::new(|x| 6.0 * x.y),
        grad_div_p: Arc::new(|_| Vec2::new(0.0, 6.0)),
        f: Arc::new(|x| -6.0 * x.y),
    };
    let right = ExactFields {
        u: Arc::new(|x| 2.0 * x.y.powi(3)),
        grad_u: Arc::new(|x| Vec2::new(0.0, 6.0 * x.y * x.y)),
        p: Arc::new(|x| Vec2::new(0.0, 6.0 * x.y)),
        grad_p: Arc::new(move |_| m(0.0, 0.0, 0.0, 6.0)),
        hess_p: Arc::new(|_| [Matrix2::zeros(); 2]),
        div_p: Arc::new(|_| 6.0),
        grad_div_p: Arc::new(|_| Vec2::zeros()),
        f: Arc::new(|_| -6.0),
    };
    Ok(ProblemSpec {
        name: "example4".into(),
        level_set: LevelSet::vertical_line(1.0 / 3.0),
        alpha: [alpha1, alpha2],
        sides: [left, right],
        jump: JumpData { g_d: Arc::new(|x| 2.0 - x.y.powi(3)), g_n: Arc::new(|_, _| 0.0) },
        constitutive: false,
    })
}

/// Vertical line `x = 1/3` with `u = (x² − 1)(y² − 1)/α_i`, discontinuous
/// across the interface when `α1 ≠ α2`.
pub fn example5(alpha1: f64, alpha2: f64) -> Result<ProblemSpec> {
    check_alpha(alpha1, alpha2)?;
    let big_u: ScalarFn = Arc::new(|x| (x.x * x.x - 1.0) * (x.y * x.y - 1.0));
    let p: VectorFn =
        Arc::new(|x| Vec2::new(2.0 * x.x * (x.y * x.y - 1.0), 2.0 * x.y * (x.x * x.x - 1.0)));
    let grad_p: MatrixFn = Arc::new(|x| {
        let xy = 4.0 * x.x * x.y;
        Matrix2::new(2.0 * (x.y * x.y - 1.0), xy, xy, 2.0 * (x.x * x.x - 1.0))
    });
    let hess_p: HessianFn = Arc::new(|x| {
        [Matrix2::new(0.0, 4.0 * x.y, 4.0 * x.y, 4.0 * x.x), Matrix2::new(4.0 * x.y, 4.0 * x.x, 4.0 * x.x, 0.0)]
    });
    let div_p: ScalarFn = Arc::new(|x| 2.0 * (x.y * x.y - 1.0) + 2.0 * (x.x * x.x - 1.0));
    let grad_div_p: VectorFn = Arc::new(|x| Vec2::new(4.0 * x.x, 4.0 * x.y));
    let side = |alpha| {
        potential_side(alpha, 0.0, big_u.clone(), p.clone(), grad_p.clone(), hess_p.clone(), div_p.clone(), grad_div_p.clone())
    };
    let jump_u = big_u.clone();
    let factor = 1.0 / alpha1 - 1.0 / alpha2;
    Ok(ProblemSpec {
        name: "example5".into(),
        level_set: LevelSet::vertical_line(1.0 / 3.0),
        alpha: [alpha1, alpha2],
        sides: [side(alpha1), side(alpha2)],
        jump: JumpData { g_d: Arc::new(move |x| factor * jump_u(x)), g_n: Arc::new(|_, _| 0.0) },
        constitutive: true,
    })
}

/// Worst relative discrepancies found by [`check_invariants`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvariantReport {
    pub constitutive: f64,
    pub source: f64,
    pub jump_dirichlet: f64,
    pub jump_neumann: f64,
    pub derivatives: f64,
}

impl InvariantReport {
    pub fn max(&self) -> f64 {
        [self.constitutive, self.source, self.jump_dirichlet, self.jump_neumann, self.derivatives]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / (scale.max(a.abs()).max(b.abs())).max(1e-300)
}

/// Samples the problem's closures and measures how well they satisfy the
/// defining relations: `p = α∇u` (when constitutive), `f = −div p`, the jump
/// data on the interface, and central-difference agreement of all
/// derivatives (step `1e-6`).
pub fn check_invariants(problem: &ProblemSpec, samples: usize, seed: u64) -> InvariantReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = InvariantReport::default();
    let step = 1e-6;
    for side in Side::BOTH {
        let e = problem.fields(side);
        let alpha = problem.alpha(side);
        let mut count = 0;
        let mut guard = 0;
        while count < samples && guard < 100 * samples {
            guard += 1;
            let x = Vec2::new(rng.random_range(-0.999..0.999), rng.random_range(-0.999..0.999));
            if problem.side_of(x) != side || x.norm() < 1e-3 {
                continue;
            }
            count += 1;
            let p = (e.p)(x);
            let pscale = p.norm().max(1e-2);
            if problem.constitutive {
                let g = (e.grad_u)(x) * alpha;
                rep.constitutive = rep.constitutive.max((g - p).norm() / pscale);
            }
            rep.source = rep.source.max(rel((e.f)(x), -(e.div_p)(x), 1e-2));
            let gp = (e.grad_p)(x);
            rep.derivatives = rep.derivatives.max(rel(gp[(0, 0)] + gp[(1, 1)], (e.div_p)(x), 1e-2));
            let hp = (e.hess_p)(x);
            let gd = (e.grad_div_p)(x);
            let gscale = gp.norm().max(1e-2);
            let hscale = hp[0].norm().max(hp[1].norm()).max(1e-2);
            let dscale = gd.norm().max(1e-2);
            for (dir, unit) in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)].into_iter().enumerate() {
                let (xp, xm) = (x + unit * step, x - unit * step);
                let du = ((e.u)(xp) - (e.u)(xm)) / (2.0 * step);
                let gu = (e.grad_u)(x)[dir];
                rep.derivatives = rep.derivatives.max((du - gu).abs() / (e.grad_u)(x).norm().max(1e-2));
                let dp = ((e.p)(xp) - (e.p)(xm)) / (2.0 * step);
                for i in 0..2 {
                    rep.derivatives = rep.derivatives.max((dp[i] - gp[(i, dir)]).abs() / gscale);
                }
                let dgp = ((e.grad_p)(xp) - (e.grad_p)(xm)) / (2.0 * step);
                for i in 0..2 {
                    for j in 0..2 {
                        rep.derivatives = rep.derivatives.max((dgp[(i, j)] - hp[i][(j, dir)]).abs() / hscale);
                    }
                }
                let dd = ((e.div_p)(xp) - (e.div_p)(xm)) / (2.0 * step);
                rep.derivatives = rep.derivatives.max((dd - gd[dir]).abs() / dscale);
            }
        }
    }
    let (e1, e2) = (problem.fields(Side::One), problem.fields(Side::Two));
    for x in interface_samples(&problem.level_set, samples.min(200), &mut rng) {
        let n = interface_normal(&problem.level_set, x);
        let gd = (problem.jump.g_d)(x);
        let du = (e1.u)(x) - (e2.u)(x);
        rep.jump_dirichlet = rep.jump_dirichlet.max(rel(gd, du, 1e-2));
        let dp = ((e1.p)(x) - (e2.p)(x)).dot(&n);
        let gn = (problem.jump.g_n)(x, n);
        rep.jump_neumann = rep.jump_neumann.max(rel(gn, dp, (e1.p)(x).norm().max(1e-2)));
    }
    rep
}

fn interface_samples(phi: &LevelSet, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    (0..n)
        .map(|_| match phi {
            LevelSet::Circle { center, radius } => {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                center + Vec2::new(t.cos(), t.sin()) * *radius
            }
            LevelSet::Ellipse { center, a, b } => {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                center + Vec2::new(a * t.cos(), b * t.sin())
            }
            LevelSet::VerticalLine { x0 } => Vec2::new(*x0, rng.random_range(-1.0..1.0)),
            LevelSet::Custom(_) => Vec2::zeros(),
        })
        .collect()
}

fn interface_normal(phi: &LevelSet, x: Vec2) -> Vec2 {
    let h = 1e-7;
    let g = Vec2::new(
        phi.eval(x + Vec2::new(h, 0.0)) - phi.eval(x - Vec2::new(h, 0.0)),
        phi.eval(x + Vec2::new(0.0, h)) - phi.eval(x - Vec2::new(0.0, h)),
    );
    g.normalize()
}
