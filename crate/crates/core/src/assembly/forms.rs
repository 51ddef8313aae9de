//! Element kernels for `a_h`, `b_h`, `J1`, `J2`, and the exact-solution
//! form used by the consistency check.

use super::{AssemblyParams, HPolicy, Triplets};
use crate::fem::{CellMap, DofMap};
use crate::geometry::{segment_quadrature, triangle_rule, QuadratureRule};
use crate::mesh::{MeshClassification, Triangulation};
use crate::parallel::{configured_threads, map_indexed};
use crate::problems::ProblemSpec;
use crate::{Error, Result, Side};

type Entries = Vec<(usize, usize, f64)>;

/// Volume rule of `K ∩ Ω_side` (all of `K` for uncut cells).
pub(crate) fn region_rule(
    tri: &Triangulation,
    class: &MeshClassification,
    cell: usize,
    side: Side,
    degree: usize,
) -> QuadratureRule {
    match class.cut(cell) {
        Some(g) if degree == class.options.volume_degree => g.quad(side).clone(),
        Some(g) => g.volume_rule(side, degree),
        None => triangle_rule(&tri.triangle(cell), degree),
    }
}

pub(crate) fn cell_map(tri: &Triangulation, cell: usize) -> Result<CellMap> {
    CellMap::new(&tri.triangle(cell)).map_err(|e| match e {
        Error::InvalidMesh(m) => Error::InvalidMesh(format!("cell {cell}: {m}")),
        other => other,
    })
}

pub(crate) fn flux_dofs(tri: &Triangulation, dofs: &DofMap, side: Side, cell: usize) -> Result<[usize; 6]> {
    dofs.flux_dofs(tri, side, cell)
        .ok_or_else(|| Error::Internal(format!("cell {cell} has no flux dofs on {side:?}")))
}

pub(crate) fn cell_dof(dofs: &DofMap, side: Side, cell: usize) -> Result<usize> {
    dofs.cell_dof(side, cell)
        .ok_or_else(|| Error::Internal(format!("cell {cell} has no potential dof on {side:?}")))
}

/// Runs `f` per item and concatenates entries in item order.
pub(crate) fn collect<F>(items: &[usize], f: F) -> Result<Triplets>
where
    F: Fn(usize) -> Result<Entries> + Sync + Send,
{
    let parts = map_indexed(items.len(), configured_threads(), |i| f(items[i]));
    let mut t = Triplets::new();
    for p in parts {
        t.entries.extend(p?);
    }
    Ok(t)
}

/// `(side, cell)` pairs of both submeshes, side one first.
fn side_cells(class: &MeshClassification) -> Vec<usize> {
    let n = class.cell_class.len();
    Side::BOTH
        .iter()
        .flat_map(|&s| class.submesh(s).iter().map(move |&k| s.index() * n + k))
        .collect()
}

fn unpack(n: usize, key: usize) -> (Side, usize) {
    (if key < n { Side::One } else { Side::Two }, key % n)
}

/// `α_i⁻¹ (p, q) + α_i⁻¹ (div p, div q)` on each `K ∩ Ω_i`, plus the
/// Nitsche penalty `γ h_K⁻¹ α_min⁻¹ ∫_Γ [p·n][q·n]` on cut cells.
pub fn assemble_ah(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
) -> Result<Triplets> {
    let mut t = assemble_flux_volume(tri, class, dofs, params.alpha, params.volume_degree)?;
    let penalty = assemble_flux_jump(tri, class, dofs, &|k| {
        params.gamma / (HPolicy::cell_h(params.h_policy.nitsche, tri, k) * params.alpha_min())
    })?;
    t.entries.extend(penalty.entries);
    Ok(t)
}

/// `Σ_i α_i⁻¹ ∫_{K∩Ω_i} (p·q + div p div q)` over both submeshes.
pub fn assemble_flux_volume(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    alpha: [f64; 2],
    degree: usize,
) -> Result<Triplets> {
    let n = tri.num_cells();
    collect(&side_cells(class), |key| {
        let (side, k) = unpack(n, key);
        let inv_alpha = 1.0 / alpha[side.index()];
        let map = cell_map(tri, k)?;
        let signs = &tri.cell_edge_signs[k];
        let idx = flux_dofs(tri, dofs, side, k)?;
        let rule = region_rule(tri, class, k, side, degree);
        let mut local = [[0.0; 6]; 6];
        let mut divs = [0.0; 6];
        for (x, w) in rule.iter() {
            let (vals, d) = map.eval_oriented(x, signs);
            divs = d;
            for a in 0..6 {
                for b in 0..6 {
                    local[a][b] += w * vals[a].dot(&vals[b]);
                }
            }
        }
        let area = rule.measure();
        let mut out = Vec::with_capacity(36);
        for a in 0..6 {
            for b in 0..6 {
                out.push((idx[a], idx[b], inv_alpha * (local[a][b] + area * divs[a] * divs[b])));
            }
        }
        Ok(out)
    })
}

/// `Σ_{K ∈ G_h} weight(K) ∫_{Γ_K} [p·n][q·n]`.
pub fn assemble_flux_jump(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    weight: &(dyn Fn(usize) -> f64 + Sync),
) -> Result<Triplets> {
    collect(&class.cut_cells, |k| {
        let g = class.cut(k).expect("cut cell geometry");
        let weight = weight(k);
        let map = cell_map(tri, k)?;
        let signs = &tri.cell_edge_signs[k];
        let idx = [flux_dofs(tri, dofs, Side::One, k)?, flux_dofs(tri, dofs, Side::Two, k)?];
        let mut local = [[0.0; 6]; 6];
        for (x, w, nrm) in g.quad_gamma.iter() {
            let (vals, _) = map.eval_oriented(x, signs);
            let vn: [f64; 6] = std::array::from_fn(|a| vals[a].dot(&nrm));
            for a in 0..6 {
                for b in 0..6 {
                    local[a][b] += w * vn[a] * vn[b];
                }
            }
        }
        let mut out = Vec::with_capacity(144);
        for si in Side::BOTH {
            for sj in Side::BOTH {
                let s = si.jump_sign() * sj.jump_sign() * weight;
                for a in 0..6 {
                    for b in 0..6 {
                        out.push((idx[si.index()][a], idx[sj.index()][b], s * local[a][b]));
                    }
                }
            }
        }
        Ok(out)
    })
}

/// `b_h(q, u) = Σ_i ∫_{K∩Ω_i} u_i div q_i − ∫_Γ {u}[q·n]`, entries at
/// (flux row, potential column).
pub fn assemble_bh(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
) -> Result<Triplets> {
    let n = tri.num_cells();
    let mut t = collect(&side_cells(class), |key| {
        let (side, k) = unpack(n, key);
        let map = cell_map(tri, k)?;
        let idx = flux_dofs(tri, dofs, side, k)?;
        let u = cell_dof(dofs, side, k)?;
        let area = match class.cut(k) {
            Some(g) => g.area(side),
            None => tri.cell_area[k],
        };
        let (_, divs) = map.eval_oriented(tri.triangle(k)[0], &tri.cell_edge_signs[k]);
        Ok((0..6).map(|a| (idx[a], u, area * divs[a])).collect())
    })?;
    let _ = params;
    let iface = collect(&class.cut_cells, |k| {
        let g = class.cut(k).expect("cut cell geometry");
        let map = cell_map(tri, k)?;
        let signs = &tri.cell_edge_signs[k];
        let mut flux = [0.0; 6];
        for (x, w, nrm) in g.quad_gamma.iter() {
            let (vals, _) = map.eval_oriented(x, signs);
            for a in 0..6 {
                flux[a] += w * vals[a].dot(&nrm);
            }
        }
        let mut out = Vec::with_capacity(24);
        for si in Side::BOTH {
            let idx = flux_dofs(tri, dofs, si, k)?;
            for sj in Side::BOTH {
                let u = cell_dof(dofs, sj, k)?;
                let kj = g.fraction(sj);
                for a in 0..6 {
                    out.push((idx[a], u, -kj * si.jump_sign() * flux[a]));
                }
            }
        }
        Ok(out)
    })?;
    t.entries.extend(iface.entries);
    Ok(t)
}

/// Unscaled `J1(u, v) = Σ_i Σ_{e ∈ F^cut_i} α_min h ∫_{e_i} [u][v]`; on the
/// domain boundary the jump is the trace.
pub fn assemble_j1(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
) -> Result<Triplets> {
    let mut t = Triplets::new();
    for side in Side::BOTH {
        for ce in class.cut_edges(side) {
            let (c0, c1) = ce.cells;
            let h = j1_h(tri, params, c0, c1);
            let w = params.alpha_min() * h * ce.length();
            let u0 = cell_dof(dofs, side, c0)?;
            t.push(u0, u0, w);
            if let Some(c1) = c1 {
                let u1 = cell_dof(dofs, side, c1)?;
                t.push(u0, u1, -w);
                t.push(u1, u0, -w);
                t.push(u1, u1, w);
            }
        }
    }
    Ok(t)
}

pub(crate) fn j1_h(tri: &Triangulation, params: &AssemblyParams, c0: usize, c1: Option<usize>) -> f64 {
    let h0 = HPolicy::cell_h(params.h_policy.j1, tri, c0);
    c1.map_or(h0, |c| h0.max(HPolicy::cell_h(params.h_policy.j1, tri, c)))
}

/// Unscaled `J2(u, v) = Σ_{K ∈ G_h} α_min h_K ∫_{Γ_K} [u][v]`.
pub fn assemble_j2(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
) -> Result<Triplets> {
    let mut t = Triplets::new();
    for (g, &k) in class.cut_geometry.iter().zip(&class.cut_cells) {
        let h = HPolicy::cell_h(params.h_policy.j2, tri, k);
        let w = params.alpha_min() * h * g.quad_gamma.length();
        let (u1, u2) = (cell_dof(dofs, Side::One, k)?, cell_dof(dofs, Side::Two, k)?);
        t.push(u1, u1, w);
        t.push(u1, u2, -w);
        t.push(u2, u1, -w);
        t.push(u2, u2, w);
    }
    Ok(t)
}

/// `B_h(p, u; ψ_k)` for every basis function `ψ_k`, with `(p, u)` the exact
/// solution, evaluated by quadrature of the given orders.
pub fn exact_form_vector(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
    problem: &ProblemSpec,
    volume_degree: usize,
    interface_points: usize,
) -> Result<Vec<f64>> {
    let n = tri.num_cells();
    let mut out = vec![0.0; dofs.total_dofs()];
    let vol = collect(&side_cells(class), |key| {
        let (side, k) = unpack(n, key);
        let e = problem.fields(side);
        let inv_alpha = 1.0 / params.alpha(side);
        let map = cell_map(tri, k)?;
        let signs = &tri.cell_edge_signs[k];
        let idx = flux_dofs(tri, dofs, side, k)?;
        let u = cell_dof(dofs, side, k)?;
        let rule = region_rule(tri, class, k, side, volume_degree);
        let mut q = [0.0; 6];
        let mut v = 0.0;
        for (x, w) in rule.iter() {
            let (vals, divs) = map.eval_oriented(x, signs);
            let p = (e.p)(x);
            let dp = (e.div_p)(x);
            let ux = (e.u)(x);
            for a in 0..6 {
                q[a] += w * (inv_alpha * (p.dot(&vals[a]) + dp * divs[a]) + ux * divs[a]);
            }
            v -= w * dp;
        }
        let mut res: Entries = (0..6).map(|a| (idx[a], 0, q[a])).collect();
        res.push((u, 0, v));
        Ok(res)
    })?;
    for (r, _, v) in vol.entries {
        out[r] += v;
    }
    let iface = collect(&class.cut_cells, |k| {
        let g = class.cut(k).expect("cut cell geometry");
        let rule = g.interface_rule(interface_points);
        let map = cell_map(tri, k)?;
        let signs = &tri.cell_edge_signs[k];
        let (e1, e2) = (problem.fields(Side::One), problem.fields(Side::Two));
        let h = HPolicy::cell_h(params.h_policy.nitsche, tri, k);
        let nitsche = params.gamma / (h * params.alpha_min());
        let mut res = Vec::new();
        let idx = [flux_dofs(tri, dofs, Side::One, k)?, flux_dofs(tri, dofs, Side::Two, k)?];
        let cells = [cell_dof(dofs, Side::One, k)?, cell_dof(dofs, Side::Two, k)?];
        let mut q = [[0.0; 6]; 2];
        let mut flux_jump = 0.0;
        for (x, w, nrm) in rule.iter() {
            let (vals, _) = map.eval_oriented(x, signs);
            let avg_u = g.k1 * (e1.u)(x) + g.k2 * (e2.u)(x);
            let jump_pn = ((e1.p)(x) - (e2.p)(x)).dot(&nrm);
            for s in Side::BOTH {
                for a in 0..6 {
                    let j = s.jump_sign() * vals[a].dot(&nrm);
                    q[s.index()][a] += w * (-avg_u * j + nitsche * jump_pn * j);
                }
            }
            flux_jump += w * jump_pn;
        }
        for s in Side::BOTH {
            for a in 0..6 {
                res.push((idx[s.index()][a], 0, q[s.index()][a]));
            }
            res.push((cells[s.index()], 0, g.fraction(s) * flux_jump));
        }
        Ok(res)
    })?;
    for (r, _, v) in iface.entries {
        out[r] += v;
    }
    Ok(out)
}

/// `γ1 J1(u, ψ_k) + γ2 J2(u, ψ_k)` for the exact potential: interface jumps
/// `[u] = u1 − u2` and, on boundary cut edges, the trace `u_i`.
pub fn exact_stabilization_vector(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
    problem: &ProblemSpec,
    interface_points: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dofs.total_dofs()];
    let (e1, e2) = (problem.fields(Side::One), problem.fields(Side::Two));
    for (g, &k) in class.cut_geometry.iter().zip(&class.cut_cells) {
        let h = HPolicy::cell_h(params.h_policy.j2, tri, k);
        let rule = g.interface_rule(interface_points);
        let jump: f64 = rule.iter().map(|(x, w, _)| w * ((e1.u)(x) - (e2.u)(x))).sum();
        let wgt = params.gamma2 * params.alpha_min() * h * jump;
        out[cell_dof(dofs, Side::One, k)?] += wgt;
        out[cell_dof(dofs, Side::Two, k)?] -= wgt;
    }
    for side in Side::BOTH {
        let e = problem.fields(side);
        for ce in class.cut_edges(side) {
            if ce.cells.1.is_some() {
                continue;
            }
            let h = j1_h(tri, params, ce.cells.0, None);
            let (rule, _) = segment_quadrature(&ce.segment, interface_points);
            let trace = rule.integrate(|x| (e.u)(x));
            out[cell_dof(dofs, side, ce.cells.0)?] += params.gamma1 * params.alpha_min() * h * trace;
        }
    }
    Ok(out)
}
