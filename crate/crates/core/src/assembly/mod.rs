//! Saddle-point system of the stabilized extended mixed scheme.
//!
//! Rows are test functions and columns trial functions. With the block
//! layout `[p1 | p2 | u1 | u2]` the matrix reads
//! `[A, B; -B^T, γ1 J1 + γ2 J2]`, where `B` holds `b_h(q, u)`.

mod forms;
mod rhs;
mod sparse;

pub use forms::{
    assemble_ah, assemble_bh, assemble_flux_jump, assemble_flux_volume, assemble_j1, assemble_j2, exact_form_vector,
    exact_stabilization_vector,
};
pub(crate) use forms::{cell_map, region_rule};
pub use rhs::{assemble_rhs, RhsOptions, RhsParts};
pub use sparse::{Csr, Triplets};

use std::fmt;
use std::sync::Arc;

use crate::fem::DofMap;
use crate::mesh::{MeshClassification, Triangulation};
use crate::problems::ProblemSpec;
use crate::{Error, Result, Side, Vec2};

/// Prescribed interface jumps `[u] = g_D` and `[p·n] = g_N`.
#[derive(Clone)]
pub struct JumpData {
    pub g_d: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>,
    /// Evaluated at a point with the unit normal pointing into subdomain two.
    pub g_n: Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>,
}

impl JumpData {
    pub fn zero() -> Self {
        JumpData { g_d: Arc::new(|_| 0.0), g_n: Arc::new(|_, _| 0.0) }
    }
}

impl Default for JumpData {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Debug for JumpData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("JumpData { .. }")
    }
}

/// Which length scale weights a stabilization term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HWeight {
    /// Largest cell diameter of the mesh.
    Global,
    /// Diameter of the cell (largest adjacent diameter for edge terms).
    Cell,
}

/// Length scales of the cut-edge penalty, interface penalty and Nitsche
/// term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HPolicy {
    pub j1: HWeight,
    pub j2: HWeight,
    pub nitsche: HWeight,
}

impl Default for HPolicy {
    fn default() -> Self {
        HPolicy { j1: HWeight::Global, j2: HWeight::Cell, nitsche: HWeight::Cell }
    }
}

impl HPolicy {
    pub(crate) fn cell_h(weight: HWeight, tri: &Triangulation, cell: usize) -> f64 {
        match weight {
            HWeight::Global => tri.h,
            HWeight::Cell => tri.cell_diameter[cell],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyParams {
    pub alpha: [f64; 2],
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub h_policy: HPolicy,
    /// Polynomial degree of the volume rules.
    pub volume_degree: usize,
}

impl AssemblyParams {
    pub fn new(alpha1: f64, alpha2: f64) -> Self {
        AssemblyParams {
            alpha: [alpha1, alpha2],
            gamma: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            h_policy: HPolicy::default(),
            volume_degree: 4,
        }
    }

    pub fn with_gammas(mut self, gamma: f64, gamma1: f64, gamma2: f64) -> Self {
        self.gamma = gamma;
        self.gamma1 = gamma1;
        self.gamma2 = gamma2;
        self
    }

    pub fn alpha(&self, side: Side) -> f64 {
        self.alpha[side.index()]
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha[0].min(self.alpha[1])
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha[0], self.alpha[1], self.gamma, self.gamma1, self.gamma2];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "conductivities and penalties must be positive: alpha {:?}, gamma ({}, {}, {})",
                self.alpha, self.gamma, self.gamma1, self.gamma2
            )))
        }
    }
}

/// Individually assembled pieces, all `n x n` in global numbering.
#[derive(Clone, Debug)]
pub struct SystemParts {
    /// `a_h(p, q)`.
    pub a: Csr,
    /// `b_h(q, u)`: rows in the flux blocks, columns in the potential blocks.
    pub b: Csr,
    /// Unscaled cut-edge penalty `J1(u, v)`.
    pub j1: Csr,
    /// Unscaled interface penalty `J2(u, v)`.
    pub j2: Csr,
}

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub offsets: [usize; 5],
    pub parts: SystemParts,
    pub rhs_parts: RhsParts,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }
}

/// Assembles matrix and right-hand side.
pub fn assemble_system(
    tri: &Triangulation,
    class: &MeshClassification,
    dofs: &DofMap,
    params: &AssemblyParams,
    problem: &ProblemSpec,
    rhs_opts: &RhsOptions,
) -> Result<SaddleSystem> {
    params.validate()?;
    let n = dofs.total_dofs();
    let a_t = assemble_ah(tri, class, dofs, params)?;
    let b_t = assemble_bh(tri, class, dofs, params)?;
    let j1_t = assemble_j1(tri, class, dofs, params)?;
    let j2_t = assemble_j2(tri, class, dofs, params)?;
    let mut all = Triplets::new();
    all.extend_scaled(&a_t, 1.0);
    all.extend_scaled(&b_t, 1.0);
    all.extend_transposed(&b_t, -1.0);
    all.extend_scaled(&j1_t, params.gamma1);
    all.extend_scaled(&j2_t, params.gamma2);
    let matrix = Csr::from_triplets(n, n, &all)?;
    let parts = SystemParts {
        a: Csr::from_triplets(n, n, &a_t)?,
        b: Csr::from_triplets(n, n, &b_t)?,
        j1: Csr::from_triplets(n, n, &j1_t)?,
        j2: Csr::from_triplets(n, n, &j2_t)?,
    };
    let rhs_parts = assemble_rhs(tri, class, dofs, params, problem)?;
    let rhs = rhs_parts.total(rhs_opts);
    if rhs.len() != n {
        return Err(Error::Internal(format!("rhs length {} != {n}", rhs.len())));
    }
    Ok(SaddleSystem { matrix, rhs, offsets: dofs.offsets, parts, rhs_parts })
}

#[cfg(test)]
mod tests;
