use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_system, AssembledSystem};
use crate::fem::problem::ProblemSpec;
use crate::fem::space::{basis, FeSpace};
use crate::sparse::{lu_factor, CsrMatrix};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    H1,
    Valpha,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub valpha: f64,
}

impl Norms {
    /// Norms of `u` from assembled matrices: V_α² = H1² + ∫|w||∂x u|².
    pub fn compute(sys: &AssembledSystem, u: &[C64]) -> Norms {
        let m = sys.mass.form(u, u).re.max(0.0);
        let k = sys.stiffness.form(u, u).re.max(0.0);
        let b = sys.boundary_abs.form(u, u).re.max(0.0);
        Norms {
            l2: m.sqrt(),
            h1: (m + k).sqrt(),
            valpha: (m + k + b).sqrt(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub space: Arc<FeSpace>,
    pub values: Vec<C64>,
    pub norms: Norms,
}

pub fn compute_norm(u: &DiscreteSolution, which: NormKind) -> f64 {
    match which {
        NormKind::L2 => u.norms.l2,
        NormKind::H1 => u.norms.h1,
        NormKind::Valpha => u.norms.valpha,
    }
}

/// Solves (K + shift·M + Bw) u = F.
pub fn solve_problem(spec: &ProblemSpec, space: Arc<FeSpace>) -> Result<DiscreteSolution> {
    let sys = assemble_system(&space, spec)?;
    solve_assembled(&sys, space)
}

pub fn solve_assembled(sys: &AssembledSystem, space: Arc<FeSpace>) -> Result<DiscreteSolution> {
    let values = lu_factor(&sys.system)?.solve(&sys.rhs);
    if let Some(dof) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { dof });
    }
    let norms = Norms::compute(sys, &values);
    Ok(DiscreteSolution { space, values, norms })
}

/// Nodal interpolant of `fun` at the dof locations.
pub fn interpolate<F: Fn(f64, f64) -> C64>(fun: F, space: &FeSpace) -> Result<Vec<C64>> {
    space
        .dof_coords
        .iter()
        .enumerate()
        .map(|(d, p)| {
            let v = fun(p[0], p[1]);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { dof: d })
            }
        })
        .collect()
}

/// Exact embedding of a coarse function into the once-refined space.
///
/// Each fine dof is evaluated in the parent triangle of a fine triangle that
/// contains it.
pub fn prolongate(coarse: &FeSpace, fine: &FeSpace, u: &[C64]) -> Result<Vec<C64>> {
    if fine.mesh.level != coarse.mesh.level + 1 || fine.degree != coarse.degree {
        return Err(Error::invalid(
            "prolongation needs the once-refined space of the same degree",
        ));
    }
    let mut out = vec![C64::new(0.0, 0.0); fine.ndof()];
    let mut done = vec![false; fine.ndof()];
    for (t, dofs) in fine.elem_dofs.iter().enumerate() {
        let parent = fine
            .mesh
            .parent(t)
            .ok_or_else(|| Error::invalid("fine mesh has no parent map"))?;
        let [a, b, c] = coarse.mesh.triangles[parent].map(|i| coarse.mesh.nodes[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let cdofs = &coarse.elem_dofs[parent];
        for &d in dofs {
            if done[d] {
                continue;
            }
            let p = fine.dof_coords[d];
            let xi = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            let eta = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            out[d] = basis(coarse.degree, xi, eta)
                .iter()
                .zip(cdofs)
                .map(|(phi, &cd)| u[cd] * *phi)
                .sum();
            done[d] = true;
        }
    }
    Ok(out)
}

/// ‖u − v‖_M / ‖v‖_M for a mass matrix M.
pub fn relative_difference(mass: &CsrMatrix, u: &[C64], v: &[C64]) -> f64 {
    let diff: Vec<C64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let num = mass.form(&diff, &diff).re.max(0.0).sqrt();
    let den = mass.form(v, v).re.max(0.0).sqrt();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}
