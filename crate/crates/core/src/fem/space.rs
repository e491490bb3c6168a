use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// Dofs of one bottom boundary edge, ordered [left, right] (P1) or
/// [left, right, midpoint] (P2).
#[derive(Clone, Debug)]
pub struct EdgeDofs {
    pub tag: BoundaryTag,
    pub x_left: f64,
    pub x_right: f64,
    pub dofs: Vec<usize>,
}

impl EdgeDofs {
    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }
}

/// Continuous Lagrange space of degree 1 or 2 on a triangle mesh.
///
/// P2 dofs are numbered nodes first, then edges in order of first encounter.
/// Element dofs are [v0, v1, v2] or [v0, v1, v2, m01, m12, m20].
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub degree: usize,
    pub mesh: Mesh,
    pub dof_coords: Vec<[f64; 2]>,
    pub elem_dofs: Vec<Vec<usize>>,
    /// Edges on y = 0 (Γ− and Γ+), in mesh boundary order.
    pub bottom_edges: Vec<EdgeDofs>,
    on_boundary: Vec<bool>,
}

impl FeSpace {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<FeSpace> {
        if degree != 1 && degree != 2 {
            return Err(Error::invalid("degree must be 1 or 2"));
        }
        let mut dof_coords = mesh.nodes.clone();
        let mut edge_dof: HashMap<(usize, usize), usize> = HashMap::new();
        let mut elem_dofs = Vec::with_capacity(mesh.triangles.len());
        for &[v0, v1, v2] in &mesh.triangles {
            let mut dofs = vec![v0, v1, v2];
            if degree == 2 {
                for (a, b) in [(v0, v1), (v1, v2), (v2, v0)] {
                    let key = (a.min(b), a.max(b));
                    let d = *edge_dof.entry(key).or_insert_with(|| {
                        let (p, q) = (mesh.nodes[key.0], mesh.nodes[key.1]);
                        dof_coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                        dof_coords.len() - 1
                    });
                    dofs.push(d);
                }
            }
            elem_dofs.push(dofs);
        }
        let mut on_boundary = vec![false; dof_coords.len()];
        let mut bottom_edges = Vec::new();
        for e in &mesh.boundary_edges {
            let [a, b] = e.nodes;
            let mut dofs = vec![a, b];
            if degree == 2 {
                dofs.push(edge_dof[&(a.min(b), a.max(b))]);
            }
            for &d in &dofs {
                on_boundary[d] = true;
            }
            if e.tag != BoundaryTag::Gamma0 {
                let (xa, xb) = (mesh.nodes[a][0], mesh.nodes[b][0]);
                if xa > xb {
                    dofs.swap(0, 1);
                }
                bottom_edges.push(EdgeDofs {
                    tag: e.tag,
                    x_left: xa.min(xb),
                    x_right: xa.max(xb),
                    dofs,
                });
            }
        }
        Ok(FeSpace {
            degree,
            mesh: mesh.clone(),
            dof_coords,
            elem_dofs,
            bottom_edges,
            on_boundary,
        })
    }

    pub fn ndof(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn dofs_per_element(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    pub fn is_boundary_dof(&self, d: usize) -> bool {
        self.on_boundary[d]
    }
}

/// Dofs on the selected bottom boundary parts, sorted by x, with their x-coordinates.
pub fn boundary_dofs_ordered(space: &FeSpace, tags: &[BoundaryTag]) -> Result<Vec<(usize, f64)>> {
    if tags.is_empty() {
        return Err(Error::invalid("empty boundary tag set"));
    }
    if tags.contains(&BoundaryTag::Gamma0) {
        return Err(Error::invalid(
            "only GammaMinus and GammaPlus carry ordered boundary dofs",
        ));
    }
    let mut seen = vec![false; space.ndof()];
    let mut out = Vec::new();
    for e in space.bottom_edges.iter().filter(|e| tags.contains(&e.tag)) {
        for &d in &e.dofs {
            if !seen[d] {
                seen[d] = true;
                out.push((d, space.dof_coords[d][0]));
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}

/// Reference basis values at (ξ, η).
pub(crate) fn basis(degree: usize, xi: f64, eta: f64) -> Vec<f64> {
    let l = [1.0 - xi - eta, xi, eta];
    if degree == 1 {
        return l.to_vec();
    }
    vec![
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Reference basis gradients (∂ξ, ∂η) at (ξ, η).
pub(crate) fn basis_grad(degree: usize, xi: f64, eta: f64) -> Vec<[f64; 2]> {
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    if degree == 1 {
        return dl.to_vec();
    }
    let l = [1.0 - xi - eta, xi, eta];
    let scale = |g: [f64; 2], s: f64| [g[0] * s, g[1] * s];
    let pair = |i: usize, j: usize| {
        [
            4.0 * (l[i] * dl[j][0] + l[j] * dl[i][0]),
            4.0 * (l[i] * dl[j][1] + l[j] * dl[i][1]),
        ]
    };
    vec![
        scale(dl[0], 4.0 * l[0] - 1.0),
        scale(dl[1], 4.0 * l[1] - 1.0),
        scale(dl[2], 4.0 * l[2] - 1.0),
        pair(0, 1),
        pair(1, 2),
        pair(2, 0),
    ]
}

/// 1D edge basis derivatives d/dt at t ∈ [0, 1], ordered [left, right, mid].
pub(crate) fn edge_basis_dt(degree: usize, t: f64) -> Vec<f64> {
    if degree == 1 {
        vec![-1.0, 1.0]
    } else {
        vec![4.0 * t - 3.0, 4.0 * t - 1.0, 4.0 - 8.0 * t]
    }
}

/// 1D edge basis values at t ∈ [0, 1], ordered [left, right, mid].
pub(crate) fn edge_basis(degree: usize, t: f64) -> Vec<f64> {
    if degree == 1 {
        vec![1.0 - t, t]
    } else {
        vec![(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)]
    }
}
