use super::*;
use crate::assembly::{assemble_system, AssemblyParams, RhsOptions};
use crate::fem::build_dofmap;
use crate::geometry::{CutOptions, LevelSet};
use crate::mesh::{build_structured, classify, Rect};
use crate::problems::{by_name, ProblemSpec};
use crate::solver::solve_direct;

struct Solved {
    tri: crate::mesh::Triangulation,
    class: crate::mesh::MeshClassification,
    dofs: crate::fem::DofMap,
    params: AssemblyParams,
    system: crate::assembly::SaddleSystem,
    x: Vec<f64>,
}

fn solve(problem: &ProblemSpec, n: usize, rhs: RhsOptions) -> Solved {
    let tri = build_structured(n, Rect::REFERENCE).unwrap();
    let class = classify(&tri, &problem.level_set, &CutOptions::default()).unwrap();
    let dofs = build_dofmap(&tri, &class);
    let params = AssemblyParams::new(problem.alpha[0], problem.alpha[1]);
    let system = assemble_system(&tri, &class, &dofs, &params, problem, &rhs).unwrap();
    let x = solve_direct(&system).unwrap().solution;
    Solved { tri, class, dofs, params, system, x }
}

#[test]
fn circle_system_solves_accurately() {
    let problem = by_name("example1", 1.0, 10.0, None).unwrap();
    let s = solve(&problem, 8, RhsOptions::default());
    let rep = solve_direct(&s.system).unwrap();
    assert!(rep.relative_residual < 1e-10, "{}", rep.relative_residual);
}

#[test]
fn weak_consistency_on_straight_interfaces() {
    for (name, alpha) in [("example3", [1.0, 1e3]), ("example4", [1.0, 10.0]), ("example5", [10.0, 1.0])] {
        let problem = by_name(name, alpha[0], alpha[1], Some(0.01)).unwrap();
        let s = solve(&problem, 8, RhsOptions::default());
        let rep = weak_consistency(&s.tri, &s.class, &s.dofs, &s.params, &problem, &s.system, &s.x).unwrap();
        assert!(rep.relative < 1e-8, "{name}: {rep:?}");
    }
}

#[test]
fn dropping_jump_corrections_breaks_consistency() {
    let problem = by_name("example4", 1.0, 10.0, None).unwrap();
    let off = RhsOptions { jump_corrections: false, ..RhsOptions::default() };
    let s = solve(&problem, 8, off);
    let rep = weak_consistency(&s.tri, &s.class, &s.dofs, &s.params, &problem, &s.system, &s.x).unwrap();
    assert!(rep.relative > 1e-2, "{rep:?}");
}

#[test]
fn gram_matrix_is_symmetric_positive() {
    let problem = by_name("example1", 1.0, 10.0, None).unwrap();
    let s = solve(&problem, 4, RhsOptions::default());
    let g = gram_matrix(&s.tri, &s.class, &s.dofs, &s.params).unwrap();
    let d = g.to_dense();
    assert!((&d - d.transpose()).amax() < 1e-12 * d.amax());
    assert!(d.clone().cholesky().is_some());
    // The Gram form reproduces the discrete norm of the solution.
    let sol = DiscreteSolution::new(&s.tri, &s.dofs, &s.x).unwrap();
    let ctx = NormContext { volume_degree: 4, interface_points: 3, ..NormContext::new(&s.tri, &s.class, problem.alpha) };
    let flux = norm_h(&ctx, &|side, k, x| sol.flux(side, k, x));
    let pot = ctx.integrate_regions(&|side, k, _| problem.alpha(side) * sol.potential(side, k).powi(2));
    let j = s.system.parts.j1.bilinear(&s.x, &s.x) + s.system.parts.j2.bilinear(&s.x, &s.x);
    let direct = flux * flux + pot + j;
    let via_gram = g.bilinear(&s.x, &s.x);
    assert!((direct - via_gram).abs() < 1e-10 * via_gram, "{direct} vs {via_gram}");
}

#[test]
fn infsup_probe_is_positive_on_a_coarse_circle() {
    let problem = ProblemSpec { level_set: LevelSet::circle(0.0, 0.0, 0.55), ..by_name("example1", 1.0, 10.0, None).unwrap() };
    let s = solve(&problem, 4, RhsOptions::default());
    let g = gram_matrix(&s.tri, &s.class, &s.dofs, &s.params).unwrap();
    let beta = infsup_probe(&s.system.matrix, &g).unwrap();
    assert!(beta > 1e-3 && beta.is_finite(), "{beta}");
}

#[test]
fn errors_are_stable_under_higher_quadrature() {
    let problem = by_name("example1", 1.0, 10.0, None).unwrap();
    let s = solve(&problem, 16, RhsOptions::default());
    let six = compute_errors(&s.tri, &s.class, &s.dofs, &problem, &s.x, &ErrorOptions::default()).unwrap();
    let eight = compute_errors(&s.tri, &s.class, &s.dofs, &problem, &s.x, &ErrorOptions { volume_degree: 8, interface_points: 7 })
        .unwrap();
    assert!((six.e_p - eight.e_p).abs() < 1e-4 * eight.e_p);
    assert!((six.e_up - eight.e_up).abs() < 1e-4 * eight.e_up);
}

#[test]
fn scaling_alpha_and_data_leaves_errors_unchanged() {
    // α → λα, p → λp, same u.
    let base = by_name("example2", 1.0, 10.0, None).unwrap();
    let scaled = base.scaled(10.0);
    let a = solve(&base, 8, RhsOptions::default());
    let b = solve(&scaled, 8, RhsOptions::default());
    let ea = compute_errors(&a.tri, &a.class, &a.dofs, &base, &a.x, &ErrorOptions::default()).unwrap();
    let eb = compute_errors(&b.tri, &b.class, &b.dofs, &scaled, &b.x, &ErrorOptions::default()).unwrap();
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs();
    assert!(rel(ea.e_p_unweighted, eb.e_p_unweighted) < 1e-9);
    assert!(rel(ea.e_up, eb.e_up) < 1e-9);
    assert!(rel(ea.e_up_rss, eb.e_up_rss) < 1e-9);
    // The weighted flux error carries α^{-1/2} against an unweighted
    // divergence norm.
    assert!(rel(ea.e_p, eb.e_p * 10f64.sqrt()) < 1e-9);
}
