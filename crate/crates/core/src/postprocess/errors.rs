//! Errors of discrete solutions against manufactured solutions, and
//! observed convergence orders.

use super::norms::{norm_h_components, norm_star_components, NormContext};
use crate::assembly::cell_map;
use crate::fem::{build_dofmap, interpolate_bdm1, DofMap};
use crate::geometry::{triangle_rule, CutOptions};
use crate::mesh::{build_structured, classify, MeshClassification, Rect, Triangulation};
use crate::problems::ProblemSpec;
use crate::{Error, Result, Side, Vec2};

/// Coefficient vector in the global numbering of a [`DofMap`], evaluable
/// per side and cell.
#[derive(Clone, Copy)]
pub struct DiscreteSolution<'a> {
    pub tri: &'a Triangulation,
    pub dofs: &'a DofMap,
    pub coeffs: &'a [f64],
}

impl<'a> DiscreteSolution<'a> {
    pub fn new(tri: &'a Triangulation, dofs: &'a DofMap, coeffs: &'a [f64]) -> Result<Self> {
        if coeffs.len() != dofs.total_dofs() {
            return Err(Error::Precondition(format!(
                "solution has {} entries, dof map {}",
                coeffs.len(),
                dofs.total_dofs()
            )));
        }
        Ok(DiscreteSolution { tri, dofs, coeffs })
    }

    /// Flux and its divergence; the cell must belong to the side's submesh.
    pub fn flux(&self, side: Side, cell: usize, x: Vec2) -> (Vec2, f64) {
        let idx = self.dofs.flux_dofs(self.tri, side, cell).expect("cell outside the submesh");
        let map = cell_map(self.tri, cell).expect("validated mesh");
        let (vals, divs) = map.eval_oriented(x, &self.tri.cell_edge_signs[cell]);
        let mut p = Vec2::zeros();
        let mut d = 0.0;
        for a in 0..6 {
            p += vals[a] * self.coeffs[idx[a]];
            d += divs[a] * self.coeffs[idx[a]];
        }
        (p, d)
    }

    pub fn potential(&self, side: Side, cell: usize) -> f64 {
        self.coeffs[self.dofs.cell_dof(side, cell).expect("cell outside the submesh")]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorOptions {
    pub volume_degree: usize,
    pub interface_points: usize,
}

impl Default for ErrorOptions {
    fn default() -> Self {
        ErrorOptions { volume_degree: 6, interface_points: 5 }
    }
}

/// Squared summands of the triple norm `‖(p̃, ũ)‖² = ‖p̃‖_h² + ‖ũ‖_⋆²`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorComponents {
    pub flux_mass: f64,
    pub flux_div: f64,
    pub flux_jump: f64,
    pub potential_mass: f64,
    pub potential_average: f64,
}

impl ErrorComponents {
    pub fn sum(&self) -> f64 {
        self.flux_mass + self.flux_div + self.flux_jump + self.potential_mass + self.potential_average
    }

    pub fn flux_part(&self) -> f64 {
        self.flux_mass + self.flux_div + self.flux_jump
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// `‖α^{-1/2}(p − p_h)‖₀ / ‖div p‖₁`.
    pub e_p: f64,
    /// `‖p − p_h‖₀ / ‖div p‖₁` without the conductivity weight.
    pub e_p_unweighted: f64,
    /// `‖(p − p_h, u − u_h)‖ / ‖(p, u)‖_*`.
    pub e_up: f64,
    /// Same numerator over the root of the summed squares of the three
    /// terms of `‖(p, u)‖_*`.
    pub e_up_rss: f64,
    pub components: ErrorComponents,
    pub triple_norm: f64,
    pub denominator_star: f64,
    pub denominator_rss: f64,
    /// Unweighted `‖p − p_h‖₀` over both subdomains.
    pub flux_l2: f64,
    /// `‖div p‖₁`, broken over the subdomains.
    pub div_p_h1: f64,
}

/// Triple norm of `(p − p_h, u − u_h)` split into its squared summands.
pub fn error_components(
    ctx: &NormContext<'_>,
    problem: &ProblemSpec,
    sol: &DiscreteSolution<'_>,
) -> ErrorComponents {
    let flux = |s: Side, k: usize, x: Vec2| {
        let e = problem.fields(s);
        let (ph, dh) = sol.flux(s, k, x);
        ((e.p)(x) - ph, (e.div_p)(x) - dh)
    };
    let pot = |s: Side, k: usize, x: Vec2| (problem.fields(s).u)(x) - sol.potential(s, k);
    let [flux_mass, flux_div, flux_jump] = norm_h_components(ctx, &flux);
    let [potential_mass, potential_average] = norm_star_components(ctx, &pot);
    ErrorComponents { flux_mass, flux_div, flux_jump, potential_mass, potential_average }
}

/// The three terms `[α_min^{-1/2} ‖p‖₂, ‖α^{1/2} u‖₁, ‖α^{-1/2} div p‖₁]` of
/// `‖(p, u)‖_*`, all broken over the subdomains.
pub fn star_terms(ctx: &NormContext<'_>, problem: &ProblemSpec) -> [f64; 3] {
    let alpha = ctx.alpha;
    let p2 = ctx.integrate_regions(&|s, _, x| {
        let e = problem.fields(s);
        let hess = (e.hess_p)(x);
        (e.p)(x).norm_squared()
            + (e.grad_p)(x).norm_squared()
            + hess[0].norm_squared()
            + hess[1].norm_squared()
    });
    let u1 = ctx.integrate_regions(&|s, _, x| {
        let e = problem.fields(s);
        alpha[s.index()] * ((e.u)(x).powi(2) + (e.grad_u)(x).norm_squared())
    });
    let d1 = ctx.integrate_regions(&|s, _, x| {
        let e = problem.fields(s);
        ((e.div_p)(x).powi(2) + (e.grad_div_p)(x).norm_squared()) / alpha[s.index()]
    });
    [(p2 / ctx.alpha_min()).sqrt(), u1.sqrt(), d1.sqrt()]
}

/// `‖(p, u)‖_*`, the sum of [`star_terms`].
pub fn star_denominator(ctx: &NormContext<'_>, problem: &ProblemSpec) -> f64 {
    star_terms(ctx, problem).iter().sum()
}

/// `e_p` and `e_up` of a discrete solution.
pub fn compute_errors(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    problem: &ProblemSpec,
    coeffs: &[f64],
    opts: &ErrorOptions,
) -> Result<ErrorReport> {
    let sol = DiscreteSolution::new(tri, dofs, coeffs)?;
    let ctx = NormContext {
        volume_degree: opts.volume_degree,
        interface_points: opts.interface_points,
        ..NormContext::new(tri, class, problem.alpha)
    };
    let components = error_components(&ctx, problem, &sol);
    let flux_l2 = ctx
        .integrate_regions(&|s, k, x| ((problem.fields(s).p)(x) - sol.flux(s, k, x).0).norm_squared())
        .sqrt();
    let div_p_h1 = ctx
        .integrate_regions(&|s, _, x| {
            let e = problem.fields(s);
            (e.div_p)(x).powi(2) + (e.grad_div_p)(x).norm_squared()
        })
        .sqrt();
    let terms = star_terms(&ctx, problem);
    let denominator_star: f64 = terms.iter().sum();
    let denominator_rss = terms.iter().map(|t| t * t).sum::<f64>().sqrt();
    let triple_norm = components.sum().sqrt();
    if !(div_p_h1 > 0.0 && denominator_star > 0.0) {
        return Err(Error::Precondition("exact solution has vanishing reference norms".into()));
    }
    Ok(ErrorReport {
        e_p: components.flux_mass.sqrt() / div_p_h1,
        e_p_unweighted: flux_l2 / div_p_h1,
        e_up: triple_norm / denominator_star,
        e_up_rss: triple_norm / denominator_rss,
        components,
        triple_norm,
        denominator_star,
        denominator_rss,
        flux_l2,
        div_p_h1,
    })
}

/// Observed order `log₂(e_coarse / e_fine)` for a halved mesh size; `None`
/// when either error is not positive.
pub fn order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite()).then(|| (coarse / fine).log2())
}

/// Measured quantities of one mesh in a refinement study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub e_p: f64,
    pub e_up: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub row: StudyRow,
    pub order_p: Option<f64>,
    pub order_up: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Orders of `e_p` and `e_up` between the first and last rows, averaged
    /// over the refinement levels they span.
    pub fn overall_orders(&self) -> Option<(f64, f64)> {
        let (first, last) = (self.rows.first()?.row, self.rows.last()?.row);
        let levels = (last.n as f64 / first.n as f64).log2();
        if !(levels > 0.0) {
            return None;
        }
        Some((order(first.e_p, last.e_p)? / levels, order(first.e_up, last.e_up)? / levels))
    }
}

/// Orders between consecutive rows, filled only where `N` doubles.
pub fn convergence_orders(rows: &[StudyRow]) -> ConvergenceTable {
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| rows[j]).filter(|p| 2 * p.n == r.n);
        out.push(ConvergenceRow {
            row: *r,
            order_p: prev.and_then(|p| order(p.e_p, r.e_p)),
            order_up: prev.and_then(|p| order(p.e_up, r.e_up)),
        });
    }
    ConvergenceTable { rows: out }
}

/// `(Π_h* p, I_h* u)`: the BDM1 interpolant of each side's flux extension on
/// its submesh, and the cell mean of each potential extension over whole
/// cells.
pub fn interpolant(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    problem: &ProblemSpec,
    degree: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dofs.total_dofs()];
    for side in Side::BOTH {
        let e = problem.fields(side);
        for &k in class.submesh(side) {
            let t = tri.triangle(k);
            let idx = dofs
                .flux_dofs(tri, side, k)
                .ok_or_else(|| Error::Internal(format!("cell {k} missing flux dofs")))?;
            let coeffs = interpolate_bdm1(&t, &tri.cell_edge_signs[k], &*e.p);
            for a in 0..6 {
                out[idx[a]] = coeffs[a];
            }
            let rule = triangle_rule(&t, degree);
            let mean = rule.integrate(|x| (e.u)(x)) / rule.measure();
            let u = dofs
                .cell_dof(side, k)
                .ok_or_else(|| Error::Internal(format!("cell {k} missing potential dof")))?;
            out[u] = mean;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationRow {
    pub n: usize,
    pub h: f64,
    /// `‖(p − Π_h* p, u − I_h* u)‖`.
    pub triple_norm: f64,
    /// Unweighted `‖p − Π_h* p‖₀`.
    pub flux_l2: f64,
    pub order_triple: Option<f64>,
    pub order_flux: Option<f64>,
}

/// Interpolation errors on structured meshes of the reference square.
pub fn interpolation_study(
    problem: &ProblemSpec,
    sizes: &[usize],
    cut: &CutOptions,
    opts: &ErrorOptions,
) -> Result<Vec<InterpolationRow>> {
    let mut rows: Vec<InterpolationRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let tri = build_structured(n, Rect::REFERENCE)?;
        let class = classify(&tri, &problem.level_set, cut)?;
        let dofs = build_dofmap(&tri, &class);
        let coeffs = interpolant(&tri, &class, &dofs, problem, opts.volume_degree)?;
        let report = compute_errors(&tri, &class, &dofs, problem, &coeffs, opts)?;
        let prev = rows.last().filter(|p| 2 * p.n == n).copied();
        rows.push(InterpolationRow {
            n,
            h: tri.h,
            triple_norm: report.triple_norm,
            flux_l2: report.flux_l2,
            order_triple: prev.and_then(|p| order(p.triple_norm, report.triple_norm)),
            order_flux: prev.and_then(|p| order(p.flux_l2, report.flux_l2)),
        });
    }
    Ok(rows)
}
