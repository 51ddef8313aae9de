use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fem::{build_dofmap, interpolate_bdm1, Block};
use crate::geometry::{CutOptions, LevelSet};
use crate::mesh::{build_structured, classify, parse_mesh, Rect};
use crate::problems::{example1, ExactFields};

fn constant_problem(f: f64, level_set: LevelSet) -> ProblemSpec {
    let fields = ExactFields {
        u: Arc::new(|_| 0.0),
        grad_u: Arc::new(|_| Vec2::zeros()),
        p: Arc::new(|_| Vec2::zeros()),
        grad_p: Arc::new(|_| Matrix2::zeros()),
        hess_p: Arc::new(|_| [Matrix2::zeros(); 2]),
        div_p: Arc::new(move |_| -f),
        grad_div_p: Arc::new(|_| Vec2::zeros()),
        f: Arc::new(move |_| f),
    };
    ProblemSpec {
        name: "constant".into(),
        level_set,
        alpha: [1.0, 1.0],
        sides: [fields.clone(), fields],
        jump: JumpData::zero(),
        constitutive: true,
    }
}

struct Setup {
    tri: Triangulation,
    class: MeshClassification,
    dofs: DofMap,
}

fn setup(tri: Triangulation, phi: LevelSet) -> Setup {
    let class = classify(&tri, &phi, &CutOptions::default()).unwrap();
    let dofs = build_dofmap(&tri, &class);
    Setup { tri, class, dofs }
}

fn single_cell() -> Triangulation {
    parse_mesh("vertices 3 cells 1\n0 0\n1 0\n0 1\n0 1 2\n").unwrap()
}

fn dense(t: &Triplets, n: usize) -> DMatrix<f64> {
    Csr::from_triplets(n, n, t).unwrap().to_dense()
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn mass_of_constant_field() {
    let s = setup(single_cell(), LevelSet::circle(9.0, 9.0, 1.0));
    let params = AssemblyParams::new(1.0, 1.0);
    let a = dense(&assemble_ah(&s.tri, &s.class, &s.dofs, &params).unwrap(), s.dofs.total_dofs());
    let field = |_: Vec2| Vec2::new(1.0, 0.0);
    let c = interpolate_bdm1(&s.tri.triangle(0), &s.tri.cell_edge_signs[0], &field);
    let mut x = vec![0.0; s.dofs.total_dofs()];
    for (i, &d) in s.dofs.flux_dofs(&s.tri, Side::Two, 0).unwrap().iter().enumerate() {
        x[d] = c[i];
    }
    let x = nalgebra::DVector::from_vec(x);
    assert!(((x.transpose() * &a * &x)[0] - 0.5).abs() < 1e-14);
}

fn circle_setup(n: usize) -> Setup {
    setup(build_structured(n, Rect::REFERENCE).unwrap(), LevelSet::circle(0.02, -0.01, 0.6))
}

#[test]
fn nitsche_vanishes_for_equal_copies() {
    let s = circle_setup(4);
    let params = AssemblyParams::new(1.0, 10.0);
    let n = s.dofs.total_dofs();
    let full = dense(&assemble_ah(&s.tri, &s.class, &s.dofs, &params).unwrap(), n);
    // Same coefficient on both copies of each edge of each cut cell, zero
    // elsewhere: only cut cells contribute, and their normal jump is zero.
    let no_penalty = {
        let mut p = params;
        p.gamma = 1e-300;
        dense(&assemble_ah(&s.tri, &s.class, &s.dofs, &p).unwrap(), n)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut x = nalgebra::DVector::zeros(n);
    for (e, base) in s.dofs.edge_dofs[0].iter().enumerate() {
        if let (Some(b1), Some(b2)) = (base, s.dofs.edge_dofs[1][e]) {
            for m in 0..2 {
                let v: f64 = rng.random_range(-1.0..1.0);
                x[b1 + m] = v;
                x[b2 + m] = v;
            }
        }
    }
    let diff = (x.transpose() * (&full - &no_penalty) * &x)[0];
    assert!(diff.abs() < 1e-10, "{diff}");
}

#[test]
fn a_block_is_spd() {
    for n in [4, 6, 8] {
        let s = circle_setup(n);
        let params = AssemblyParams::new(1.0, 10.0);
        let full = dense(&assemble_ah(&s.tri, &s.class, &s.dofs, &params).unwrap(), s.dofs.total_dofs());
        let r = s.dofs.flux_range();
        let a = full.view((r.start, r.start), (r.len(), r.len())).into_owned();
        let asym = (&a - a.transpose()).abs().max();
        assert!(asym <= 1e-12 * a.abs().max());
        assert!(min_eig(&a) > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for _ in 0..100 {
            let q = nalgebra::DVector::from_fn(r.len(), |_, _| rng.random_range(-1.0..1.0));
            assert!((q.transpose() * &a * &q)[0] > 0.0);
        }
    }
}

#[test]
fn a_block_spd_with_tiny_cut() {
    // Vertical line leaving a fraction k1 ~ 1e-10 of the cells it cuts.
    let n = 4;
    let tri = build_structured(n, Rect::REFERENCE).unwrap();
    let spacing = 2.0 / n as f64;
    let x0 = -1.0 + spacing * (1.0 + 2e-5);
    let s = setup(tri, LevelSet::vertical_line(x0));
    let kmin = s.class.cut_geometry.iter().map(|g| g.k1.min(g.k2)).fold(1.0, f64::min);
    assert!(kmin < 1e-8 && kmin > 1e-12, "{kmin}");
    let params = AssemblyParams::new(1.0, 10.0);
    let full = dense(&assemble_ah(&s.tri, &s.class, &s.dofs, &params).unwrap(), s.dofs.total_dofs());
    let r = s.dofs.flux_range();
    let a = full.view((r.start, r.start), (r.len(), r.len())).into_owned();
    assert!(min_eig(&a) > 0.0);
}

#[test]
fn b_uncut_constant() {
    let s = setup(single_cell(), LevelSet::circle(9.0, 9.0, 1.0));
    let params = AssemblyParams::new(1.0, 1.0);
    let b = dense(&assemble_bh(&s.tri, &s.class, &s.dofs, &params).unwrap(), s.dofs.total_dofs());
    // q = (x, y)/2 has divergence 1.
    let field = |p: Vec2| p / 2.0;
    let c = interpolate_bdm1(&s.tri.triangle(0), &s.tri.cell_edge_signs[0], &field);
    let n = s.dofs.total_dofs();
    let mut q = nalgebra::DVector::zeros(n);
    for (i, &d) in s.dofs.flux_dofs(&s.tri, Side::Two, 0).unwrap().iter().enumerate() {
        q[d] = c[i];
    }
    let mut u = nalgebra::DVector::zeros(n);
    u[s.dofs.cell_dof(Side::Two, 0).unwrap()] = 1.0;
    assert!(((q.transpose() * &b * &u)[0] - 0.5).abs() < 1e-14);
}

#[test]
fn b_interface_weights() {
    let s = setup(single_cell(), LevelSet::vertical_line(0.5));
    let g = &s.class.cut_geometry[0];
    assert!((g.k1 - 0.75).abs() < 1e-15);
    let params = AssemblyParams::new(1.0, 1.0);
    let t = assemble_bh(&s.tri, &s.class, &s.dofs, &params).unwrap();
    let n = s.dofs.total_dofs();
    let b = dense(&t, n);
    let map = crate::fem::CellMap::new(&s.tri.triangle(0)).unwrap();
    let signs = s.tri.cell_edge_signs[0];
    let idx1 = s.dofs.flux_dofs(&s.tri, Side::One, 0).unwrap();
    let (u1, u2) = (s.dofs.cell_dof(Side::One, 0).unwrap(), s.dofs.cell_dof(Side::Two, 0).unwrap());
    for a in 0..6 {
        let (vals, divs) = map.eval_oriented(Vec2::new(0.5, 0.25), &signs);
        // Flux of ψ_a through the segment x = 0.5, y in [0, 0.5]: linear in y,
        // so the midpoint value times length.
        let flux = vals[a].x * 0.5;
        let expected_u1 = 0.375 * divs[a] - 0.75 * flux;
        let expected_u2 = -0.25 * flux;
        assert!((b[(idx1[a], u1)] - expected_u1).abs() < 1e-13);
        assert!((b[(idx1[a], u2)] - expected_u2).abs() < 1e-13);
    }
}

#[test]
fn j1_single_edge_closed_form() {
    let s = circle_setup(8);
    let params = AssemblyParams::new(2.0, 10.0);
    let t = assemble_j1(&s.tri, &s.class, &s.dofs, &params).unwrap();
    let n = s.dofs.total_dofs();
    let j = dense(&t, n);
    let ce = s.class.cut_edges(Side::Two).iter().find(|c| c.cells.1.is_some()).unwrap();
    // Contributions of just this edge: isolate via its local 2x2 matrix.
    let w = params.alpha_min() * s.tri.h * ce.length();
    let mut single = Triplets::new();
    let (c0, c1) = (ce.cells.0, ce.cells.1.unwrap());
    let (d0, d1) = (s.dofs.cell_dof(Side::Two, c0).unwrap(), s.dofs.cell_dof(Side::Two, c1).unwrap());
    single.push(d0, d0, w);
    single.push(d0, d1, -w);
    single.push(d1, d0, -w);
    single.push(d1, d1, w);
    let mut v = nalgebra::DVector::zeros(n);
    v[d0] = 1.0;
    let local = dense(&single, n);
    assert!(((v.transpose() * &local * &v)[0] - w).abs() < 1e-15);
    // Constant potential on side two: no jumps across interior cut edges,
    // only boundary traces (none here since the circle stays interior).
    let mut ones = nalgebra::DVector::zeros(n);
    for i in s.dofs.block_range(Block::Potential(Side::Two)) {
        ones[i] = 1.0;
    }
    assert!((ones.transpose() * &j * &ones)[0].abs() < 1e-14);
    assert!((&j - j.transpose()).abs().max() == 0.0);
    assert!(min_eig(&j) >= -1e-12);
}

#[test]
fn j2_closed_form() {
    let s = setup(single_cell(), LevelSet::vertical_line(0.5));
    let params = AssemblyParams::new(3.0, 7.0);
    let n = s.dofs.total_dofs();
    let j = dense(&assemble_j2(&s.tri, &s.class, &s.dofs, &params).unwrap(), n);
    let mut v = nalgebra::DVector::zeros(n);
    v[s.dofs.cell_dof(Side::One, 0).unwrap()] = 1.0;
    let expected = 3.0 * 2f64.sqrt() * 0.5;
    assert!(((v.transpose() * &j * &v)[0] - expected).abs() < 1e-14);
    v[s.dofs.cell_dof(Side::Two, 0).unwrap()] = 1.0;
    assert!((v.transpose() * &j * &v)[0].abs() < 1e-14);
    assert!(min_eig(&j) >= -1e-12);
}

#[test]
fn rhs_examples() {
    let s = setup(single_cell(), LevelSet::circle(9.0, 9.0, 1.0));
    let params = AssemblyParams::new(2.0, 2.0);
    let zero = constant_problem(0.0, LevelSet::circle(9.0, 9.0, 1.0));
    let r = assemble_rhs(&s.tri, &s.class, &s.dofs, &params, &zero).unwrap();
    assert!(r.total(&RhsOptions::default()).iter().all(|&v| v == 0.0));
    let one = constant_problem(1.0, LevelSet::circle(9.0, 9.0, 1.0));
    let r = assemble_rhs(&s.tri, &s.class, &s.dofs, &params, &one).unwrap();
    let u = s.dofs.cell_dof(Side::Two, 0).unwrap();
    assert!((r.load[u] - 0.5).abs() < 1e-15);
    let map = crate::fem::CellMap::new(&s.tri.triangle(0)).unwrap();
    let (_, divs) = map.eval_oriented(Vec2::zeros(), &s.tri.cell_edge_signs[0]);
    for (a, &d) in s.dofs.flux_dofs(&s.tri, Side::Two, 0).unwrap().iter().enumerate() {
        assert!((r.load[d] + 0.5 * divs[a] * 0.5).abs() < 1e-15);
    }
}

#[test]
fn system_block_structure() {
    let s = circle_setup(8);
    let params = AssemblyParams::new(1.0, 10.0);
    let problem = example1(1.0, 10.0).unwrap();
    let sys = assemble_system(&s.tri, &s.class, &s.dofs, &params, &problem, &RhsOptions::default()).unwrap();
    let n = s.dofs.total_dofs();
    assert_eq!(sys.dim(), n);
    let (pr, ur) = (s.dofs.flux_range(), s.dofs.potential_range());
    let up = sys.matrix.block(ur.clone(), pr.clone()).to_dense();
    let pu = sys.matrix.block(pr.clone(), ur.clone()).to_dense();
    assert_eq!(up, -pu.transpose());
    let uu = sys.matrix.block(ur.clone(), ur.clone()).to_dense();
    assert_eq!(&uu, &uu.transpose());
    assert!(min_eig(&uu) >= -1e-12);
    for m in [&sys.parts.j1, &sys.parts.j2] {
        let d = m.to_dense();
        assert!(min_eig(&d) >= -1e-12);
        assert_eq!(&d, &d.transpose());
    }
}

#[test]
fn reproducible_across_threads() {
    let s = circle_setup(12);
    let params = AssemblyParams::new(1.0, 10.0);
    let problem = example1(1.0, 10.0).unwrap();
    let a = assemble_system(&s.tri, &s.class, &s.dofs, &params, &problem, &RhsOptions::default()).unwrap();
    std::env::set_var(crate::parallel::THREADS_ENV, "4");
    let b = assemble_system(&s.tri, &s.class, &s.dofs, &params, &problem, &RhsOptions::default()).unwrap();
    std::env::remove_var(crate::parallel::THREADS_ENV);
    assert_eq!(a.matrix, b.matrix);
    assert_eq!(a.rhs, b.rhs);
}
