//! Unfitted mixed finite elements for two-dimensional elliptic interface
//! problems.
//!
//! The discretization pairs lowest-order Brezzi-Douglas-Marini fluxes with
//! piecewise-constant potentials on two overlapping submeshes, one per
//! subdomain. Cut elements carry one copy of every degree of freedom per
//! side; the copies are coupled on the interface by a Nitsche penalty on the
//! normal-flux jump, a weighted-average consistency term, and two potential
//! jump stabilizations (one on cut edges, one on the interface itself).
//!
//! Pipeline: [`mesh::Triangulation`] → [`mesh::classify`] →
//! [`fem::DofMap`] → [`assembly::assemble_system`] →
//! [`solver::solve_direct`] → [`postprocess::compute_errors`].
//! The [`study`] module strings these together into refinement studies.

pub mod assembly;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod parallel;
pub mod postprocess;
pub mod problems;
pub mod solver;
pub mod study;

pub use error::{Error, Result};

/// Two-dimensional point or vector in physical coordinates.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Subdomain label: `Side::One` is the region where the level set is
/// negative, `Side::Two` where it is positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::One, Side::Two];

    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    /// Sign of this side's trace in a jump `[v] = v1 - v2`.
    pub fn jump_sign(self) -> f64 {
        match self {
            Side::One => 1.0,
            Side::Two => -1.0,
        }
    }
}
