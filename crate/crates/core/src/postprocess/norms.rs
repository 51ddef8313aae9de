//! Mesh-dependent norms of flux and potential fields on the two submeshes.

use crate::assembly::region_rule;
use crate::mesh::{MeshClassification, Triangulation};
use crate::parallel::{configured_threads, map_indexed};
use crate::{Side, Vec2};

/// Flux value and divergence of the side-`Side` field on a cell.
pub type FluxFn<'a> = dyn Fn(Side, usize, Vec2) -> (Vec2, f64) + Sync + 'a;
/// Potential value of the side-`Side` field on a cell.
pub type PotentialFn<'a> = dyn Fn(Side, usize, Vec2) -> f64 + Sync + 'a;

/// Mesh, coefficients and quadrature orders shared by all norm evaluations.
#[derive(Clone, Copy)]
pub struct NormContext<'a> {
    pub tri: &'a Triangulation,
    pub class: &'a MeshClassification,
    pub alpha: [f64; 2],
    pub volume_degree: usize,
    /// Gauss points per interface segment.
    pub interface_points: usize,
}

impl<'a> NormContext<'a> {
    pub fn new(tri: &'a Triangulation, class: &'a MeshClassification, alpha: [f64; 2]) -> Self {
        NormContext { tri, class, alpha, volume_degree: 6, interface_points: 5 }
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha[0].min(self.alpha[1])
    }

    /// `Σ_i ∫_{Ω_i} f(i, K, x)`, summed in a fixed cell order.
    pub fn integrate_regions(&self, f: &(dyn Fn(Side, usize, Vec2) -> f64 + Sync)) -> f64 {
        let items: Vec<(Side, usize)> = Side::BOTH
            .iter()
            .flat_map(|&s| self.class.submesh(s).iter().map(move |&k| (s, k)))
            .collect();
        let parts = map_indexed(items.len(), configured_threads(), |i| {
            let (side, k) = items[i];
            region_rule(self.tri, self.class, k, side, self.volume_degree).integrate(|x| f(side, k, x))
        });
        parts.iter().sum()
    }

    /// `Σ_{K ∈ G_h} weight(K) ∫_{Γ_K} f(K, x, n)`.
    pub fn integrate_interface(
        &self,
        weight: &(dyn Fn(usize) -> f64 + Sync),
        f: &(dyn Fn(usize, Vec2, Vec2) -> f64 + Sync),
    ) -> f64 {
        let cells = &self.class.cut_cells;
        let parts = map_indexed(cells.len(), configured_threads(), |i| {
            let k = cells[i];
            let g = &self.class.cut_geometry[i];
            let s: f64 = g.interface_rule(self.interface_points).iter().map(|(x, w, n)| w * f(k, x, n)).sum();
            weight(k) * s
        });
        parts.iter().sum()
    }
}

/// Squared summands of `‖p̃‖_h`: `[‖α^{-1/2} p̃‖², ‖α^{-1/2} div p̃‖²,
/// h⁻² Σ_K h_K ‖α_min^{-1/2} [p̃·n]‖²_{Γ_K}]`.
pub fn norm_h_components(ctx: &NormContext<'_>, flux: &FluxFn<'_>) -> [f64; 3] {
    let alpha = ctx.alpha;
    let mass = ctx.integrate_regions(&|s, k, x| flux(s, k, x).0.norm_squared() / alpha[s.index()]);
    let div = ctx.integrate_regions(&|s, k, x| flux(s, k, x).1.powi(2) / alpha[s.index()]);
    let h = ctx.tri.h;
    let am = ctx.alpha_min();
    let jump = ctx.integrate_interface(&|k| ctx.tri.cell_diameter[k] / (h * h * am), &|k, x, n| {
        (flux(Side::One, k, x).0 - flux(Side::Two, k, x).0).dot(&n).powi(2)
    });
    [mass, div, jump]
}

pub fn norm_h(ctx: &NormContext<'_>, flux: &FluxFn<'_>) -> f64 {
    norm_h_components(ctx, flux).iter().sum::<f64>().sqrt()
}

/// Squared summands of `‖ṽ‖_⋆`: `[‖α^{1/2} ṽ‖², Σ_K h_K α_min ‖{ṽ}‖²_{Γ_K}]`
/// with `{ṽ} = k¹ṽ₁ + k²ṽ₂`.
pub fn norm_star_components(ctx: &NormContext<'_>, potential: &PotentialFn<'_>) -> [f64; 2] {
    let alpha = ctx.alpha;
    let mass = ctx.integrate_regions(&|s, k, x| alpha[s.index()] * potential(s, k, x).powi(2));
    let am = ctx.alpha_min();
    let class = ctx.class;
    let avg = ctx.integrate_interface(&|k| ctx.tri.cell_diameter[k] * am, &|k, x, _| {
        let g = class.cut(k).expect("cut cell geometry");
        (g.k1 * potential(Side::One, k, x) + g.k2 * potential(Side::Two, k, x)).powi(2)
    });
    [mass, avg]
}

pub fn norm_star(ctx: &NormContext<'_>, potential: &PotentialFn<'_>) -> f64 {
    norm_star_components(ctx, potential).iter().sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CutOptions, LevelSet};
    use crate::mesh::{build_structured, classify, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, phi: LevelSet, domain: Rect) -> (Triangulation, MeshClassification) {
        let tri = build_structured(n, domain).unwrap();
        let class = classify(&tri, &phi, &CutOptions::default()).unwrap();
        (tri, class)
    }

    #[test]
    fn constant_flux_on_unit_area_has_mass_only() {
        let tri = Triangulation::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let class = classify(&tri, &LevelSet::vertical_line(5.0), &CutOptions::default()).unwrap();
        let ctx = NormContext::new(&tri, &class, [1.0, 1.0]);
        let v = norm_h(&ctx, &|_, _, _| (Vec2::new(1.0, 0.0), 0.0));
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unit_potential_on_reference_square() {
        let (tri, class) = setup(4, LevelSet::vertical_line(5.0), Rect::REFERENCE);
        let ctx = NormContext::new(&tri, &class, [1.0, 1.0]);
        assert!((norm_star(&ctx, &|_, _, _| 1.0) - 2.0).abs() < 1e-13);
        assert_eq!(norm_star(&ctx, &|_, _, _| 0.0), 0.0);
    }

    #[test]
    fn continuous_normal_flux_has_no_jump_term() {
        let (tri, class) = setup(8, LevelSet::vertical_line(0.3), Rect::REFERENCE);
        assert!(!class.cut_cells.is_empty());
        let ctx = NormContext::new(&tri, &class, [1.0, 10.0]);
        // Side two differs only in the tangential component.
        let c = norm_h_components(&ctx, &|s, _, x| {
            let base = Vec2::new(x.y, 1.0 - x.x);
            (if s == Side::One { base } else { base + Vec2::new(0.0, 5.0 * x.y) }, 0.0)
        });
        assert!(c[2].abs() < 1e-28);
        let d = norm_h_components(&ctx, &|s, _, _| (if s == Side::One { Vec2::new(1.0, 0.0) } else { Vec2::zeros() }, 0.0));
        assert!(d[2] > 0.0);
    }

    #[test]
    fn norms_are_homogeneous() {
        let (tri, class) = setup(8, LevelSet::circle(0.02, 0.01, 0.5), Rect::REFERENCE);
        let ctx = NormContext::new(&tri, &class, [1.0, 10.0]);
        let flux = |s: Side, _: usize, x: Vec2| {
            let t = if s == Side::One { 1.0 } else { -2.0 };
            (Vec2::new(x.x * x.y + t, x.y.sin()), t * x.x)
        };
        let pot = |s: Side, k: usize, _: Vec2| (k as f64).cos() + s.index() as f64;
        let (n1, s1) = (norm_h(&ctx, &flux), norm_star(&ctx, &pot));
        for lambda in [-3.5, 1e-3, 7.0] {
            let nl = norm_h(&ctx, &|s, k, x| {
                let (p, d) = flux(s, k, x);
                (p * lambda, d * lambda)
            });
            let sl = norm_star(&ctx, &|s, k, x| lambda * pot(s, k, x));
            assert!((nl - lambda.abs() * n1).abs() <= 1e-14 * nl);
            assert!((sl - lambda.abs() * s1).abs() <= 1e-14 * sl);
        }
    }

    #[test]
    fn triangle_inequality_on_random_fields() {
        let (tri, class) = setup(8, LevelSet::circle(0.0, 0.0, 0.45), Rect::REFERENCE);
        let ctx = NormContext::new(&tri, &class, [2.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a: [f64; 8] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let b: [f64; 8] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let field = |c: [f64; 8]| {
                move |s: Side, _: usize, x: Vec2| {
                    let o = 4 * s.index();
                    (Vec2::new(c[o] + c[o + 1] * x.x, c[o + 2] * x.y), c[o + 3])
                }
            };
            let (fa, fb) = (field(a), field(b));
            let sum = norm_h(&ctx, &|s, k, x| {
                let (p, d) = fa(s, k, x);
                let (q, e) = fb(s, k, x);
                (p + q, d + e)
            });
            assert!(sum <= norm_h(&ctx, &fa) + norm_h(&ctx, &fb) + 1e-12);
            let pa = |s: Side, k: usize, _: Vec2| a[(k + s.index()) % 8];
            let pb = |s: Side, k: usize, _: Vec2| b[(2 * k + s.index()) % 8];
            let ps = norm_star(&ctx, &|s, k, x| pa(s, k, x) + pb(s, k, x));
            assert!(ps <= norm_star(&ctx, &pa) + norm_star(&ctx, &pb) + 1e-12);
        }
    }

    #[test]
    fn interface_average_obeys_inverse_estimate() {
        // Ratio of the interface term to the volume term of ‖·‖_⋆ for random
        // piecewise constants stays bounded under refinement.
        let mut worst = Vec::new();
        for n in [8, 16, 32] {
            let (tri, class) = setup(n, LevelSet::circle(0.0, 0.0, 0.6), Rect::REFERENCE);
            let ctx = NormContext::new(&tri, &class, [1.0, 100.0]);
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let mut max_ratio: f64 = 0.0;
            for _ in 0..50 {
                let vals: Vec<[f64; 2]> =
                    (0..tri.num_cells()).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
                let c = norm_star_components(&ctx, &|s, k, _| vals[k][s.index()]);
                max_ratio = max_ratio.max(c[1] / c[0]);
            }
            worst.push(max_ratio);
        }
        assert!(worst.iter().all(|r| r.is_finite() && *r < 1.0), "ratios {worst:?}");
        assert!(worst[2] <= 1.5 * worst[0], "ratio grows under refinement: {worst:?}");
    }
}
