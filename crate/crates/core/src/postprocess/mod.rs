//! Norms, errors, convergence orders, and stability probes.
//!
//! All quantities are integrated over the discrete subdomains `K ∩ Ω_i`
//! given by the interface polyline, with each side's exact field extended
//! analytically beyond the interface.

mod errors;
mod norms;
mod stability;

pub use errors::{
    compute_errors, convergence_orders, error_components, interpolant, interpolation_study, order,
    star_denominator, star_terms, ConvergenceRow, ConvergenceTable, DiscreteSolution, ErrorComponents, ErrorOptions,
    ErrorReport, InterpolationRow, StudyRow,
};
pub use norms::{norm_h, norm_h_components, norm_star, norm_star_components, FluxFn, NormContext, PotentialFn};
pub use stability::{gram_matrix, infsup_probe, weak_consistency, ConsistencyReport, INFSUP_MAX_DOFS};

#[cfg(test)]
mod tests;
