//! BDM1 flux element, piecewise constants and doubled-space numbering.

mod bdm1;
mod dofmap;

pub use bdm1::{
    edge_moments, interpolate_bdm1, interpolate_cell, project_p0, reference_basis, CellMap,
    EDGE_INTERPOLATION_POINTS,
};
pub use dofmap::{build_dofmap, Block, DofMap};
