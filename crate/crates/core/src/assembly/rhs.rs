//! Load vector and data corrections.

use super::forms::{cell_dof, cell_map, collect, flux_dofs, j1_h, region_rule};
use super::{AssemblyParams, HPolicy};
use crate::fem::DofMap;
use crate::geometry::{intersect_edge, segment_quadrature, CellClass};
use crate::mesh::{MeshClassification, Triangulation};
use crate::problems::ProblemSpec;
use crate::{Result, Side, Vec2};

/// Gauss points per segment for boundary and interface data integrals.
const DATA_POINTS: usize = 5;

/// Which right-hand-side pieces enter the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RhsOptions {
    /// Terms carrying the interface jumps `g_D`, `g_N`.
    pub jump_corrections: bool,
    /// Dirichlet trace of the exact potential on `∂Ω`.
    pub boundary_data: bool,
    /// `α⁻¹p − ∇u` for problems whose flux is not `α∇u`.
    pub constitutive_residual: bool,
}

impl Default for RhsOptions {
    fn default() -> Self {
        RhsOptions { jump_corrections: true, boundary_data: true, constitutive_residual: true }
    }
}

/// Right-hand side split by origin; every vector has the global length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RhsParts {
    /// `∫ f v − ∫ α⁻¹ f div q`.
    pub load: Vec<f64>,
    /// `∫_Γ g_D {q·n}_⋆ + γ h_K⁻¹ α_min⁻¹ ∫_Γ g_N [q·n] + ∫_Γ g_N {v}`.
    pub jump: Vec<f64>,
    /// `γ2 α_min h_K ∫_Γ g_D [v]`.
    pub jump_penalty: Vec<f64>,
    /// `∫_{∂Ω} u q·n`.
    pub boundary: Vec<f64>,
    /// `γ1 α_min h ∫_{e_i} u v` on boundary cut edges.
    pub boundary_penalty: Vec<f64>,
    /// `∫ (α⁻¹p − ∇u)·q`.
    pub residual: Vec<f64>,
}

impl RhsParts {
    /// Sum of the pieces enabled by `opts`.
    pub fn total(&self, opts: &RhsOptions) -> Vec<f64> {
        let mut out = self.load.clone();
        let mut add = |v: &[f64]| out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        if opts.jump_corrections {
            add(&self.jump);
            add(&self.jump_penalty);
        }
        if opts.boundary_data {
            add(&self.boundary);
            add(&self.boundary_penalty);
        }
        if opts.constitutive_residual {
            add(&self.residual);
        }
        out
    }

    /// Consistency part: everything except the penalty data terms.
    pub fn consistent(&self, opts: &RhsOptions) -> Vec<f64> {
        let mut out = self.load.clone();
        let mut add = |v: &[f64]| out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        if opts.jump_corrections {
            add(&self.jump);
        }
        if opts.boundary_data {
            add(&self.boundary);
        }
        if opts.constitutive_residual {
            add(&self.residual);
        }
        out
    }
}

fn scatter(n: usize, entries: Vec<(usize, usize, f64)>) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (r, _, v) in entries {
        out[r] += v;
    }
    out
}

pub fn assemble_rhs(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
    problem: &ProblemSpec,
) -> Result<RhsParts> {
    let total = dofs.total_dofs();
    let nc = tri.num_cells();
    let keys: Vec<usize> = Side::BOTH
        .iter()
        .flat_map(|&s| class.submesh(s).iter().map(move |&k| s.index() * nc + k))
        .collect();
    let unpack = |key: usize| (if key < nc { Side::One } else { Side::Two }, key % nc);

    let volume = collect(&keys, |key| {
        let (side, k) = unpack(key);
        let e = problem.fields(side);
        let inv_alpha = 1.0 / params.alpha(side);
        let map = cell_map(tri, k)?;
        let signs = &tri.cell_edge_signs[k];
        let idx = flux_dofs(tri, dofs, side, k)?;
        let u = cell_dof(dofs, side, k)?;
        let rule = region_rule(tri, class, k, side, params.volume_degree);
        let fint = rule.integrate(|x| (e.f)(x));
        let (_, divs) = map.eval_oriented(tri.triangle(k)[0], signs);
        let mut out: Vec<(usize, usize, f64)> = (0..6).map(|a| (idx[a], 0, -inv_alpha * divs[a] * fint)).collect();
        out.push((u, 0, fint));
        if !problem.constitutive {
            for (x, w) in rule.iter() {
                let (vals, _) = map.eval_oriented(x, signs);
                let r = (e.p)(x) * inv_alpha - (e.grad_u)(x);
                for a in 0..6 {
                    out.push((idx[a], 1, w * r.dot(&vals[a])));
                }
            }
        }
        Ok(out)
    })?;
    let (mut load_e, mut resid_e) = (Vec::new(), Vec::new());
    for t in volume.entries {
        if t.1 == 0 { load_e.push(t) } else { resid_e.push(t) }
    }

    let jump = collect(&class.cut_cells, |k| {
        let g = class.cut(k).expect("cut cell geometry");
        let rule = g.interface_rule(DATA_POINTS);
        let map = cell_map(tri, k)?;
        let signs = &tri.cell_edge_signs[k];
        let hn = HPolicy::cell_h(params.h_policy.nitsche, tri, k);
        let nitsche = params.gamma / (hn * params.alpha_min());
        let hj = HPolicy::cell_h(params.h_policy.j2, tri, k);
        let idx = [flux_dofs(tri, dofs, Side::One, k)?, flux_dofs(tri, dofs, Side::Two, k)?];
        let cells = [cell_dof(dofs, Side::One, k)?, cell_dof(dofs, Side::Two, k)?];
        let mut q = [[0.0; 6]; 2];
        let (mut gn_int, mut gd_int) = (0.0, 0.0);
        for (x, w, nrm) in rule.iter() {
            let (vals, _) = map.eval_oriented(x, signs);
            let gd = (problem.jump.g_d)(x);
            let gn = (problem.jump.g_n)(x, nrm);
            for s in Side::BOTH {
                // {q·n}_⋆ weights side one by k² and side two by k¹.
                let star = g.fraction(s.other());
                for a in 0..6 {
                    let qn = vals[a].dot(&nrm);
                    q[s.index()][a] += w * (gd * star * qn + nitsche * gn * s.jump_sign() * qn);
                }
            }
            gn_int += w * gn;
            gd_int += w * gd;
        }
        let mut out = Vec::with_capacity(16);
        for s in Side::BOTH {
            for a in 0..6 {
                out.push((idx[s.index()][a], 0, q[s.index()][a]));
            }
            out.push((cells[s.index()], 0, g.fraction(s) * gn_int));
            let pen = params.gamma2 * params.alpha_min() * hj * gd_int * s.jump_sign();
            out.push((cells[s.index()], 1, pen));
        }
        Ok(out)
    })?;
    let (mut jump_e, mut jpen_e) = (Vec::new(), Vec::new());
    for t in jump.entries {
        if t.1 == 0 { jump_e.push(t) } else { jpen_e.push(t) }
    }

    let mut boundary_e = Vec::new();
    for side in Side::BOTH {
        let e = problem.fields(side);
        for &k in class.submesh(side) {
            let tr = tri.triangle(k);
            for (j, &edge) in tri.cell_edges[k].iter().enumerate() {
                if !tri.is_boundary_edge(edge) {
                    continue;
                }
                let Some(seg) = boundary_portion(class, side, k, tr[j], tr[(j + 1) % 3])? else {
                    continue;
                };
                let d = tr[(j + 1) % 3] - tr[j];
                let n_out = Vec2::new(d.y, -d.x) / d.norm();
                let map = cell_map(tri, k)?;
                let signs = &tri.cell_edge_signs[k];
                let idx = flux_dofs(tri, dofs, side, k)?;
                let (rule, _) = segment_quadrature(&seg, DATA_POINTS);
                for (x, w) in rule.iter() {
                    let (vals, _) = map.eval_oriented(x, signs);
                    let ux = (e.u)(x);
                    for a in 0..6 {
                        boundary_e.push((idx[a], 0, w * ux * vals[a].dot(&n_out)));
                    }
                }
            }
        }
    }

    let mut bpen_e = Vec::new();
    for side in Side::BOTH {
        let e = problem.fields(side);
        for ce in class.cut_edges(side) {
            if ce.cells.1.is_some() {
                continue;
            }
            let h = j1_h(tri, params, ce.cells.0, None);
            let (rule, _) = segment_quadrature(&ce.segment, DATA_POINTS);
            let trace = rule.integrate(|x| (e.u)(x));
            bpen_e.push((cell_dof(dofs, side, ce.cells.0)?, 0, params.gamma1 * params.alpha_min() * h * trace));
        }
    }

    Ok(RhsParts {
        load: scatter(total, load_e),
        jump: scatter(total, jump_e),
        jump_penalty: scatter(total, jpen_e),
        boundary: scatter(total, boundary_e),
        boundary_penalty: scatter(total, bpen_e),
        residual: scatter(total, resid_e),
    })
}

/// Part of the boundary edge `a → b` of `cell` lying in `Ω_side`.
fn boundary_portion(
    class: &MeshClassification,
    side: Side,
    cell: usize,
    a: Vec2,
    b: Vec2,
) -> Result<Option<[Vec2; 2]>> {
    match class.class(cell) {
        CellClass::Inside1 | CellClass::Inside2 => Ok(Some([a, b])),
        CellClass::Cut => {
            let phi = &class.level_set;
            let (fa, fb) = (phi.eval(a), phi.eval(b));
            let on_side = |f: f64| match side {
                Side::One => f <= 0.0,
                Side::Two => f >= 0.0,
            };
            if fa * fb < 0.0 {
                let x = intersect_edge(phi, a, b)?;
                let inside = if on_side(fa) { a } else { b };
                Ok(Some([inside, x]))
            } else if on_side(fa) && on_side(fb) && !(fa == 0.0 && fb == 0.0) {
                Ok(Some([a, b]))
            } else {
                Ok(None)
            }
        }
    }
}
