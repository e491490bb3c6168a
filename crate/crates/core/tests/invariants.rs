use std::sync::Arc;

use gibc_fem::experiments::{refinement_study, StudyConfig};
use gibc_fem::fem::{assemble_system, solve_problem, FeSpace, ProblemSpec, WeightKind};
use gibc_fem::mesh::{build_rect_mesh, BoundaryTag};
use gibc_fem::reduction::{
    algebraic_dtn, holder_modulus, spectral_dtn, x_alpha_norm, BoundaryGrid, DtnOperator, Reduced1dProblem,
};
use gibc_fem::sparse::{lu_factor, CsrMatrix};
use gibc_fem::C64;
use proptest::prelude::*;

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn weight_kind() -> impl Strategy<Value = WeightKind> {
    prop_oneof![
        Just(WeightKind::HalfPower),
        Just(WeightKind::SignChanging),
        Just(WeightKind::Bridge)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mesh_is_oriented_conforming_and_tagged(half_nx in 1usize..6, ny in 1usize..5, refine in 0usize..3) {
        let mesh = build_rect_mesh(2 * half_nx, ny).unwrap().refined_times(refine);
        for t in &mesh.triangles {
            let a = signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
            prop_assert!(a > 0.0);
        }
        let mut edge_count = std::collections::HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        prop_assert!(edge_count.values().all(|&c| c == 1 || c == 2));
        let boundary = edge_count.values().filter(|&&c| c == 1).count();
        prop_assert_eq!(boundary, mesh.boundary_edges.len());
        for e in &mesh.boundary_edges {
            let [a, b] = e.nodes;
            prop_assert_eq!(edge_count[&(a.min(b), a.max(b))], 1);
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            let xm = 0.5 * (p[0] + q[0]);
            let expected = if p[1] == 0.0 && q[1] == 0.0 {
                if xm < 0.0 { BoundaryTag::GammaMinus } else { BoundaryTag::GammaPlus }
            } else {
                BoundaryTag::Gamma0
            };
            prop_assert_eq!(e.tag, expected);
        }
        prop_assert!(mesh.nodes.iter().any(|p| p[0] == 0.0 && p[1] == 0.0));
    }

    #[test]
    fn dof_count_matches_degree(half_nx in 1usize..5, ny in 1usize..4, degree in 1usize..3) {
        let mesh = build_rect_mesh(2 * half_nx, ny).unwrap();
        let space = FeSpace::new(&mesh, degree).unwrap();
        let edges = mesh.nodes.len() + mesh.triangles.len() - 1;
        let expected = if degree == 1 { mesh.nodes.len() } else { mesh.nodes.len() + edges };
        prop_assert_eq!(space.ndof(), expected);
        for dofs in &space.elem_dofs {
            prop_assert_eq!(dofs.len(), space.dofs_per_element());
            prop_assert!(dofs.iter().all(|&d| d < space.ndof()));
        }
        for d in 0..space.ndof() {
            if space.is_boundary_dof(d) {
                let [x, y] = space.dof_coords[d];
                prop_assert!(x.abs() == 1.0 || y == 0.0 || y == 1.0);
            }
        }
    }

    #[test]
    fn csr_structure_is_canonical(
        n in 1usize..12,
        entries in prop::collection::vec((0usize..12, 0usize..12, -1.0f64..1.0), 0..60),
    ) {
        let trip: Vec<(usize, usize, C64)> = entries
            .iter()
            .filter(|e| e.0 < n && e.1 < n)
            .map(|&(i, j, v)| (i, j, C64::new(v, 0.0)))
            .collect();
        let a = CsrMatrix::from_triplets(n, n, &trip).unwrap();
        prop_assert_eq!(a.row_ptr[0], 0);
        prop_assert_eq!(a.row_ptr[n], a.nnz());
        for i in 0..n {
            let cols = &a.col_idx[a.row_ptr[i]..a.row_ptr[i + 1]];
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        let mut dense = vec![vec![C64::new(0.0, 0.0); n]; n];
        for &(i, j, v) in &trip {
            dense[i][j] += v;
        }
        for (i, row) in dense.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                prop_assert!((a.get(i, j) - v).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn lu_residual_within_bound(
        n in 2usize..30,
        entries in prop::collection::vec((0usize..30, 0usize..30, -1.0f64..1.0, -1.0f64..1.0), 0..120),
        rhs_seed in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let mut trip: Vec<(usize, usize, C64)> = entries
            .iter()
            .filter(|e| e.0 < n && e.1 < n)
            .map(|&(i, j, re, im)| (i, j, C64::new(re, im)))
            .collect();
        for i in 0..n {
            trip.push((i, i, C64::new(4.0 + i as f64 * 0.1, 0.5)));
        }
        let a = CsrMatrix::from_triplets(n, n, &trip).unwrap();
        let b: Vec<C64> = rhs_seed[..n].iter().map(|&v| C64::new(v, -v)).collect();
        let x = lu_factor(&a).unwrap().solve(&b);
        let ax = a.matvec(&x);
        let res = ax.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        let amax = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let xmax = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let bmax = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(res <= 1e-10 * (amax * xmax + bmax));
    }

    #[test]
    fn spectral_dtn_increasing_and_asymptotic(k in 1usize..300) {
        let DtnOperator::SpectralDiagonal { d, .. } = spectral_dtn(k).unwrap() else { unreachable!() };
        prop_assert_eq!(d.len(), k);
        prop_assert!(d.iter().all(|&v| v > 0.0));
        prop_assert!(d.windows(2).all(|w| w[1] > w[0]));
        let last = (k - 1) as f64 * std::f64::consts::FRAC_PI_2;
        if k > 20 {
            prop_assert!((d[k - 1] / last - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn holder_bound_on_random_traces(
        alpha in prop_oneof![Just(0.0), Just(0.3), Just(0.5), Just(0.9)],
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 33),
    ) {
        let mesh = build_rect_mesh(8, 4).unwrap().refined();
        let space = FeSpace::new(&mesh, 2).unwrap();
        let grid = BoundaryGrid::new(&space, &[BoundaryTag::GammaPlus]).unwrap();
        prop_assert_eq!(grid.len(), 17);
        let mut u = vec![C64::new(0.0, 0.0); space.ndof()];
        for (&d, &(re, im)) in grid.dofs.iter().zip(&values) {
            u[d] = C64::new(re, im);
        }
        let norm = x_alpha_norm(&space, alpha, &u).unwrap();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                let (x, y) = (grid.x[i], grid.x[j]);
                if 0.0 < x && x < y {
                    let lhs = (u[grid.dofs[j]] - u[grid.dofs[i]]).norm();
                    prop_assert!(lhs <= holder_modulus(alpha, x, y) * norm * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn valpha_norm_splits(alpha in 0.0f64..1.5, sign in prop_oneof![Just(1i8), Just(-1i8)], weight in weight_kind()) {
        let mesh = build_rect_mesh(4, 2).unwrap();
        let space = Arc::new(FeSpace::new(&mesh, 2).unwrap());
        let spec = ProblemSpec::new(alpha, sign, weight).unwrap().with_shift(C64::new(2.0, 0.0));
        let sol = solve_problem(&spec, space.clone()).unwrap();
        let sys = assemble_system(&space, &spec).unwrap();
        let b = sys.boundary_abs.form(&sol.values, &sol.values).re;
        let n = sol.norms;
        prop_assert!(n.l2 >= 0.0 && n.h1 >= n.l2 && n.valpha >= n.h1);
        prop_assert!((n.valpha.powi(2) - n.h1.powi(2) - b).abs() <= 1e-10 * n.valpha.powi(2));
    }

    #[test]
    fn algebraic_dtn_is_symmetric(alpha in 0.0f64..1.2, weight in weight_kind()) {
        let mesh = build_rect_mesh(4, 2).unwrap();
        let space = FeSpace::new(&mesh, 2).unwrap();
        let spec = ProblemSpec::new(alpha, -1, weight).unwrap();
        let DtnOperator::AlgebraicDense { matrix, .. } = algebraic_dtn(&spec, &space).unwrap() else { unreachable!() };
        let asym = (&matrix - matrix.transpose()).norm();
        prop_assert!(asym <= 1e-12 * matrix.norm());
    }
}

#[test]
fn sign_changing_reduction_shares_the_origin() {
    let mesh = build_rect_mesh(8, 4).unwrap();
    let space = FeSpace::new(&mesh, 2).unwrap();
    let spec = ProblemSpec::new(0.5, -1, WeightKind::SignChanging).unwrap();
    let prob = Reduced1dProblem::algebraic(&spec, &space).unwrap();
    assert_eq!(prob.grid.x.iter().filter(|&&x| x == 0.0).count(), 1);
    assert!(prob.grid.x.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(prob.grid.x[0], -1.0);
    assert_eq!(prob.grid.x[prob.grid.len() - 1], 1.0);
}

#[test]
fn refinement_halves_h_and_grows_ndof() {
    let spec = ProblemSpec::new(0.5, -1, WeightKind::HalfPower).unwrap();
    let mut cfg = StudyConfig::new(spec);
    cfg.levels = 4;
    let rep = refinement_study(&cfg).unwrap();
    for w in rep.records.windows(2) {
        assert!((w[1].h - 0.5 * w[0].h).abs() <= 1e-15);
        assert!(w[1].ndof > w[0].ndof);
    }
    assert!(rep.records.iter().all(|r| r.error.is_none()));
}

#[test]
fn negative_alpha_rejected() {
    assert!(ProblemSpec::new(-0.1, 1, WeightKind::HalfPower).is_err());
    assert!(ProblemSpec::new(f64::NAN, 1, WeightKind::HalfPower).is_err());
    assert!(ProblemSpec::new(0.5, 0, WeightKind::HalfPower).is_err());
}
