//! Discrete stability and consistency checks of the assembled scheme.

use nalgebra::DMatrix;

use crate::assembly::{
    assemble_flux_jump, assemble_flux_volume, assemble_j1, assemble_j2, exact_form_vector,
    exact_stabilization_vector, AssemblyParams, Csr, SaddleSystem, Triplets,
};
use crate::fem::DofMap;
use crate::mesh::{MeshClassification, Triangulation};
use crate::problems::ProblemSpec;
use crate::solver::solve_csr;
use crate::{Error, Result, Side};

/// Largest system the dense inf-sup probe accepts.
pub const INFSUP_MAX_DOFS: usize = 4000;

/// Gram matrix of `‖(q, v)‖_h² = ‖q‖_h² + ‖α^{1/2} v‖² + J1(v, v) + J2(v, v)`.
pub fn gram_matrix(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
) -> Result<Csr> {
    let n = dofs.total_dofs();
    let mut t = assemble_flux_volume(tri, class, dofs, params.alpha, params.volume_degree)?;
    let h = tri.h;
    let am = params.alpha_min();
    let jump = assemble_flux_jump(tri, class, dofs, &|k| tri.cell_diameter[k] / (h * h * am))?;
    t.entries.extend(jump.entries);
    let mut mass = Triplets::new();
    for side in Side::BOTH {
        for &k in class.submesh(side) {
            let area = class.cut(k).map_or(tri.cell_area[k], |g| g.area(side));
            let u = dofs
                .cell_dof(side, k)
                .ok_or_else(|| Error::Internal(format!("cell {k} missing potential dof")))?;
            mass.push(u, u, params.alpha(side) * area);
        }
    }
    t.entries.extend(mass.entries);
    t.entries.extend(assemble_j1(tri, class, dofs, params)?.entries);
    t.entries.extend(assemble_j2(tri, class, dofs, params)?.entries);
    Csr::from_triplets(n, n, &t)
}

/// `min_x sup_y yᵀLx / (‖y‖_H ‖x‖_H)`: the smallest singular value of
/// `R^{-T} L R^{-1}` with `H = RᵀR`.
pub fn infsup_probe(matrix: &Csr, gram: &Csr) -> Result<f64> {
    let n = matrix.nrows;
    if n > INFSUP_MAX_DOFS {
        return Err(Error::Precondition(format!("inf-sup probe limited to {INFSUP_MAX_DOFS} dofs, got {n}")));
    }
    if gram.nrows != n || matrix.ncols != n {
        return Err(Error::Precondition("system and Gram matrix sizes differ".into()));
    }
    let h: DMatrix<f64> = gram.to_dense();
    let l: DMatrix<f64> = matrix.to_dense();
    let chol = h
        .cholesky()
        .ok_or_else(|| Error::Internal("Gram matrix of the discrete norm is not positive definite".into()))?;
    let r = chol.l();
    // M = R⁻¹ L R⁻ᵀ with R the lower Cholesky factor.
    let x = r
        .solve_lower_triangular(&l)
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let m = r
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let sv = m.singular_values();
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyReport {
    /// Dual norm `sup_y r(y) / ‖y‖_h` of the consistency residual.
    pub residual_dual: f64,
    /// `‖x_h‖_h` of the discrete solution.
    pub solution_norm: f64,
    pub relative: f64,
}

/// Residual `r(ψ) = B_h(p − p_h, u − u_h; ψ) − J(u_h − u, ψ)` of the weak
/// consistency relation, evaluated for every basis function and measured
/// in the dual of the discrete norm.
pub fn weak_consistency(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
    problem: &ProblemSpec,
    system: &SaddleSystem,
    solution: &[f64],
) -> Result<ConsistencyReport> {
    let exact = exact_form_vector(tri, class, dofs, params, problem, 6, 5)?;
    let stab = exact_stabilization_vector(tri, class, dofs, params, problem, 5)?;
    let lx = system.matrix.matvec(solution);
    let r: Vec<f64> = exact.iter().zip(&stab).zip(&lx).map(|((e, j), l)| e + j - l).collect();
    let gram = gram_matrix(tri, class, dofs, params)?;
    let riesz = solve_csr(&gram, &r)?;
    let residual_dual = r.iter().zip(&riesz.solution).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
    let solution_norm = gram.bilinear(solution, solution).max(0.0).sqrt();
    if !(solution_norm > 0.0) {
        return Err(Error::Precondition("zero discrete solution".into()));
    }
    Ok(ConsistencyReport { residual_dual, solution_norm, relative: residual_dual / solution_norm })
}
