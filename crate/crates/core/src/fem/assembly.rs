//! Global matrices on one shared sparsity pattern.
//!
//! K, M and the boundary matrices all use the element-connectivity pattern of
//! the space, so sums of them are plain entrywise sums. Local matrices are
//! computed (optionally in parallel) and accumulated sequentially in element
//! order, which makes every entry bit-identical regardless of thread count and
//! keeps assembled matrices exactly symmetric.

use std::sync::Arc;

use crate::error::Result;
use crate::fem::problem::{ProblemSpec, WeightKind};
use crate::fem::space::{basis, basis_grad, edge_basis, edge_basis_dt, EdgeDofs, FeSpace};
use crate::mesh::BoundaryTag;
use crate::parallel;
use crate::quadrature::{default_triangle_rule, edge_rule, gauss_jacobi_unit, Rule1d, EDGE_POINTS};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Zero matrix carrying the connectivity pattern of `space`.
pub fn pattern(space: &FeSpace) -> CsrMatrix {
    let n = space.ndof();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for dofs in &space.elem_dofs {
        for &i in dofs {
            rows[i].extend_from_slice(dofs);
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
        col_idx.extend_from_slice(r);
        row_ptr.push(col_idx.len());
    }
    let mut m = CsrMatrix::zeros_with_pattern(n, n, row_ptr, col_idx);
    m.symmetric = true;
    m.coords = Some(Arc::new(space.dof_coords.clone()));
    m
}

fn scatter(target: &mut CsrMatrix, dofs: &[usize], local: &[f64]) {
    let nd = dofs.len();
    for (a, &i) in dofs.iter().enumerate() {
        for (b, &j) in dofs.iter().enumerate() {
            let p = target.position(i, j).expect("entry in connectivity pattern");
            target.values[p] += C64::new(local[a * nd + b], 0.0);
        }
    }
}

/// Local stiffness and mass of triangle `t`, row-major, mirrored for exact symmetry.
fn element_matrices(space: &FeSpace, t: usize) -> (Vec<f64>, Vec<f64>) {
    let mesh = &space.mesh;
    let [v0, v1, v2] = mesh.triangles[t].map(|i| mesh.nodes[i]);
    let j = [[v1[0] - v0[0], v2[0] - v0[0]], [v1[1] - v0[1], v2[1] - v0[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // inverse transpose maps reference gradients to physical ones
    let jit = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
    let nd = space.dofs_per_element();
    let mut k = vec![0.0; nd * nd];
    let mut m = vec![0.0; nd * nd];
    for q in default_triangle_rule() {
        let w = q.weight * det.abs();
        let phi = basis(space.degree, q.xi, q.eta);
        let g: Vec<[f64; 2]> = basis_grad(space.degree, q.xi, q.eta)
            .iter()
            .map(|r| [jit[0][0] * r[0] + jit[0][1] * r[1], jit[1][0] * r[0] + jit[1][1] * r[1]])
            .collect();
        for a in 0..nd {
            for b in a..nd {
                k[a * nd + b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                m[a * nd + b] += w * phi[a] * phi[b];
            }
        }
    }
    for a in 0..nd {
        for b in 0..a {
            k[a * nd + b] = k[b * nd + a];
            m[a * nd + b] = m[b * nd + a];
        }
    }
    (k, m)
}

/// Stiffness K = (∇u, ∇v) and mass M = (u, v).
pub fn assemble_volume(space: &FeSpace) -> (CsrMatrix, CsrMatrix) {
    let locals = parallel::map_range(space.mesh.triangles.len(), |t| element_matrices(space, t));
    let mut k = pattern(space);
    let mut m = pattern(space);
    for (dofs, (kl, ml)) in space.elem_dofs.iter().zip(&locals) {
        scatter(&mut k, dofs, kl);
        scatter(&mut m, dofs, ml);
    }
    (k, m)
}

/// Quadrature for ∫ over one bottom edge of w(x) g(t) dx, as (t_q, weight_q)
/// pairs that already include w and the length factor. Endpoint zeros of the
/// weight are absorbed into a Gauss–Jacobi rule.
fn weighted_edge_rule(spec: &ProblemSpec, edge: &EdgeDofs, absolute: bool) -> Option<Vec<(f64, f64)>> {
    let (sm, sp) = spec.side_signs();
    let mut sgn = match edge.tag {
        BoundaryTag::GammaMinus => sm,
        BoundaryTag::GammaPlus => sp,
        BoundaryTag::Gamma0 => 0.0,
    };
    if absolute {
        sgn = sgn.abs();
    }
    if sgn == 0.0 {
        return None;
    }
    let a = spec.alpha;
    let h = edge.length();
    let zero_left = edge.x_left == 0.0;
    let zero_right = edge.x_right == 0.0;
    let bridge = spec.weight == WeightKind::Bridge;
    let bridge_right = bridge && edge.x_right == 1.0;
    let left_exp = if zero_left { a } else { 0.0 };
    let right_exp = if zero_right || bridge_right { a } else { 0.0 };
    let owned: Rule1d;
    let rule = if left_exp == 0.0 && right_exp == 0.0 {
        edge_rule()
    } else {
        owned = gauss_jacobi_unit(EDGE_POINTS, left_exp, right_exp);
        &owned
    };
    let scale = sgn * h * h.powf(left_exp) * h.powf(right_exp);
    let pts = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| {
            let x = edge.x_left + t * h;
            let mut smooth = 1.0;
            if !(zero_left || zero_right) {
                smooth *= x.abs().powf(a);
            }
            if bridge && !bridge_right {
                smooth *= (1.0 - x).powf(a);
            }
            (t, w * scale * smooth)
        })
        .collect();
    Some(pts)
}

fn boundary_matrix(space: &FeSpace, spec: &ProblemSpec, absolute: bool) -> CsrMatrix {
    let mut b = pattern(space);
    let nd = space.degree + 1;
    for edge in &space.bottom_edges {
        let Some(rule) = weighted_edge_rule(spec, edge, absolute) else {
            continue;
        };
        let h = edge.length();
        let mut local = vec![0.0; nd * nd];
        for &(t, w) in &rule {
            // d/dx = (1/h) d/dt
            let d = edge_basis_dt(space.degree, t);
            for a in 0..nd {
                for c in a..nd {
                    local[a * nd + c] += w * d[a] * d[c] / (h * h);
                }
            }
        }
        for a in 0..nd {
            for c in 0..a {
                local[a * nd + c] = local[c * nd + a];
            }
        }
        scatter(&mut b, &edge.dofs, &local);
    }
    b
}

/// ∫_Γ w(x) ∂x u ∂x v̄ dx with the signed weight of `spec`.
pub fn assemble_boundary_weighted(space: &FeSpace, spec: &ProblemSpec) -> CsrMatrix {
    boundary_matrix(space, spec, false)
}

/// Same form with weight |w|: the boundary part of the Gram matrix.
pub fn assemble_boundary_abs(space: &FeSpace, spec: &ProblemSpec) -> CsrMatrix {
    boundary_matrix(space, spec, true)
}

/// 1D mass ∫ u v̄ dx over the bottom edges carrying one of `tags`.
pub fn assemble_boundary_mass(space: &FeSpace, tags: &[BoundaryTag]) -> CsrMatrix {
    let mut b = pattern(space);
    let nd = space.degree + 1;
    let rule = edge_rule();
    for edge in space.bottom_edges.iter().filter(|e| tags.contains(&e.tag)) {
        let h = edge.length();
        let mut local = vec![0.0; nd * nd];
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = edge_basis(space.degree, t);
            for a in 0..nd {
                for c in a..nd {
                    local[a * nd + c] += w * h * v[a] * v[c];
                }
            }
        }
        for a in 0..nd {
            for c in 0..a {
                local[a * nd + c] = local[c * nd + a];
            }
        }
        scatter(&mut b, &edge.dofs, &local);
    }
    b
}

/// Load vector (f, v).
pub fn assemble_rhs(space: &FeSpace, spec: &ProblemSpec) -> Vec<C64> {
    let mesh = &space.mesh;
    let locals = parallel::map_range(mesh.triangles.len(), |t| {
        let [v0, v1, v2] = mesh.triangles[t].map(|i| mesh.nodes[i]);
        let det = ((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1])).abs();
        let nd = space.dofs_per_element();
        let mut f = vec![0.0; nd];
        for q in default_triangle_rule() {
            let x = v0[0] + q.xi * (v1[0] - v0[0]) + q.eta * (v2[0] - v0[0]);
            let y = v0[1] + q.xi * (v1[1] - v0[1]) + q.eta * (v2[1] - v0[1]);
            let fv = spec.source.eval(x, y) * q.weight * det;
            for (fa, pa) in f.iter_mut().zip(basis(space.degree, q.xi, q.eta)) {
                *fa += fv * pa;
            }
        }
        f
    });
    let mut rhs = vec![C64::new(0.0, 0.0); space.ndof()];
    for (dofs, f) in space.elem_dofs.iter().zip(&locals) {
        for (&i, &v) in dofs.iter().zip(f) {
            rhs[i] += C64::new(v, 0.0);
        }
    }
    rhs
}

/// Every matrix of one problem on one space.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// Signed weighted boundary form.
    pub boundary: CsrMatrix,
    /// Boundary form with |w|.
    pub boundary_abs: CsrMatrix,
    /// S = K + shift·M + Bw
    pub system: CsrMatrix,
    /// G = K + M + B|w|, the Gram matrix of the weighted energy space.
    pub gram: CsrMatrix,
    pub rhs: Vec<C64>,
}

pub fn assemble_system(space: &FeSpace, spec: &ProblemSpec) -> Result<AssembledSystem> {
    spec.validate()?;
    let (stiffness, mass) = assemble_volume(space);
    let boundary = assemble_boundary_weighted(space, spec);
    let boundary_abs = assemble_boundary_abs(space, spec);
    let one = C64::new(1.0, 0.0);
    let system = stiffness.combine(one, &mass, spec.shift)?.add(&boundary)?;
    let gram = stiffness.combine(one, &mass, one)?.add(&boundary_abs)?;
    let rhs = assemble_rhs(space, spec);
    Ok(AssembledSystem {
        stiffness,
        mass,
        boundary,
        boundary_abs,
        system,
        gram,
        rhs,
    })
}
