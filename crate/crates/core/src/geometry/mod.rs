//! Level sets, cut-cell geometry and quadrature.

pub mod cut;
pub mod level_set;
pub mod quadrature;

pub use cut::{
    classify_cell, cut_triangle, intersect_edge, CellClass, CutGeometry, CutOptions, InterfaceRule,
    EPS_GEO,
};
pub use level_set::LevelSet;
pub use quadrature::{
    gauss_legendre, gauss_legendre_unit, polygon_quadrature, reference_triangle_rule, segment_quadrature, triangle_rule,
    triangle_signed_area, QuadratureRule,
};
