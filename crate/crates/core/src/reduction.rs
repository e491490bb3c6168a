//! Reduction of the 2D problems to one-dimensional problems on the bottom side.
//!
//! The reduced unknown is the trace on Γ+ (half-power and bridge weights) or
//! on the whole of Γ (sign-changing weight). Eliminating every other dof of
//! K + c·M gives the discrete Dirichlet-to-Neumann map and the load g, so the
//! reduced solve reproduces the monolithic trace exactly.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_boundary_weighted, assemble_system, FeSpace, ProblemSpec, WeightKind,
};
use crate::io::{fmt_f64, Table};
use crate::mesh::BoundaryTag;
use crate::quadrature::{gauss_jacobi_unit, Rule1d};
use crate::sparse::{dense_solve, schur_reduce, SchurReduction};
use crate::C64;

pub const DEFAULT_MODES: usize = 64;

/// Trace dofs of a space on part of the bottom side, sorted by x.
#[derive(Clone, Debug)]
pub struct BoundaryGrid {
    pub degree: usize,
    pub tags: Vec<BoundaryTag>,
    /// Global dof index of each grid point.
    pub dofs: Vec<usize>,
    pub x: Vec<f64>,
    /// Per edge: endpoints and local indices ordered [left, right, (mid)].
    pub edges: Vec<(f64, f64, Vec<usize>)>,
}

impl BoundaryGrid {
    pub fn new(space: &FeSpace, tags: &[BoundaryTag]) -> Result<BoundaryGrid> {
        let ordered = crate::fem::boundary_dofs_ordered(space, tags)?;
        let mut local = HashMap::new();
        for (k, &(d, _)) in ordered.iter().enumerate() {
            local.insert(d, k);
        }
        let edges = space
            .bottom_edges
            .iter()
            .filter(|e| tags.contains(&e.tag))
            .map(|e| (e.x_left, e.x_right, e.dofs.iter().map(|d| local[d]).collect()))
            .collect();
        Ok(BoundaryGrid {
            degree: space.degree,
            tags: tags.to_vec(),
            dofs: ordered.iter().map(|p| p.0).collect(),
            x: ordered.iter().map(|p| p.1).collect(),
            edges,
        })
    }

    /// Γ+ for the half-power and bridge weights, Γ for the sign-changing one.
    pub fn for_spec(space: &FeSpace, spec: &ProblemSpec) -> Result<BoundaryGrid> {
        BoundaryGrid::new(space, reduction_tags(spec.weight))
    }

    pub fn full(space: &FeSpace) -> Result<BoundaryGrid> {
        BoundaryGrid::new(space, &[BoundaryTag::GammaMinus, BoundaryTag::GammaPlus])
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Local index of the grid point at x = 0.
    pub fn origin(&self) -> Option<usize> {
        self.x.iter().position(|&x| x == 0.0)
    }

    /// Restricts a global dof vector to the grid.
    pub fn restrict(&self, u: &[C64]) -> Vec<C64> {
        self.dofs.iter().map(|&d| u[d]).collect()
    }
}

pub fn reduction_tags(weight: WeightKind) -> &'static [BoundaryTag] {
    match weight {
        WeightKind::HalfPower | WeightKind::Bridge => &[BoundaryTag::GammaPlus],
        WeightKind::SignChanging => &[BoundaryTag::GammaMinus, BoundaryTag::GammaPlus],
    }
}

#[derive(Clone, Debug)]
pub enum DtnOperator {
    /// Exact map of the rectangle on the cosine modes of Γ: mode k has
    /// eigenvalue d_k = β_k tanh β_k with β_k = sqrt(1 + (kπ/2)²).
    SpectralDiagonal { beta: Vec<f64>, d: Vec<f64> },
    /// Schur complement of K + c·M on the trace dofs at `x`.
    AlgebraicDense { matrix: DMatrix<C64>, x: Vec<f64> },
}

pub fn spectral_dtn(modes: usize) -> Result<DtnOperator> {
    if modes == 0 {
        return Err(Error::invalid("mode count must be at least 1"));
    }
    let beta: Vec<f64> = (0..modes)
        .map(|k| (1.0 + (k as f64 * PI / 2.0).powi(2)).sqrt())
        .collect();
    let d = beta.iter().map(|b| b * b.tanh()).collect();
    Ok(DtnOperator::SpectralDiagonal { beta, d })
}

/// cos(kπ(x+1)/2): Neumann at x = ±1.
pub fn cosine_mode(k: usize, x: f64) -> f64 {
    (k as f64 * PI * (x + 1.0) / 2.0).cos()
}

pub fn algebraic_dtn(spec: &ProblemSpec, space: &FeSpace) -> Result<DtnOperator> {
    let grid = BoundaryGrid::for_spec(space, spec)?;
    algebraic_dtn_on(spec, space, &grid)
}

pub fn algebraic_dtn_on(spec: &ProblemSpec, space: &FeSpace, grid: &BoundaryGrid) -> Result<DtnOperator> {
    let red = volume_reduction(spec, space, grid)?;
    Ok(DtnOperator::AlgebraicDense {
        matrix: symmetrize(red.sd),
        x: grid.x.clone(),
    })
}

// exact symmetry is lost to rounding in the elimination
fn symmetrize(m: DMatrix<C64>) -> DMatrix<C64> {
    (&m + m.transpose()) * C64::new(0.5, 0.0)
}

/// Eliminates every non-grid dof of K + c·M with load F.
fn volume_reduction(spec: &ProblemSpec, space: &FeSpace, grid: &BoundaryGrid) -> Result<SchurReduction> {
    let sys = assemble_system(space, spec)?;
    let one = C64::new(1.0, 0.0);
    let a = sys.stiffness.combine(one, &sys.mass, spec.shift)?;
    schur_reduce(&a, &sys.rhs, &grid.dofs)
}

impl DtnOperator {
    pub fn len(&self) -> usize {
        match self {
            DtnOperator::SpectralDiagonal { d, .. } => d.len(),
            DtnOperator::AlgebraicDense { x, .. } => x.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The operator as a matrix on `grid`. Spectral modes are projected onto
    /// the trace space by Galerkin: D = Σ_k d_k p_k p_kᵀ / ‖c_k‖², with
    /// p_k[i] = ∫_Γ c_k ψ_i dx.
    pub fn matrix_on(&self, grid: &BoundaryGrid) -> Result<DMatrix<C64>> {
        match self {
            DtnOperator::AlgebraicDense { matrix, x } => {
                if x != &grid.x {
                    return Err(Error::invalid("DtN matrix was built on a different grid"));
                }
                Ok(matrix.clone())
            }
            DtnOperator::SpectralDiagonal { d, .. } => {
                if grid.tags.len() != 2 {
                    return Err(Error::invalid("the spectral DtN acts on the whole of Γ"));
                }
                let n = grid.len();
                let mut out = DMatrix::<C64>::zeros(n, n);
                let mut rules: HashMap<usize, Rule1d> = HashMap::new();
                for (k, &dk) in d.iter().enumerate() {
                    let p = mode_projection(grid, k, &mut rules);
                    let scale = dk / if k == 0 { 2.0 } else { 1.0 };
                    for i in 0..n {
                        if p[i] == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            out[(i, j)] += C64::new(scale * p[i] * p[j], 0.0);
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// ∫ c_k ψ_i dx for every grid basis function, by Gauss–Legendre with enough
/// points to resolve the mode on each edge.
fn mode_projection(grid: &BoundaryGrid, k: usize, rules: &mut HashMap<usize, Rule1d>) -> Vec<f64> {
    let omega = k as f64 * PI / 2.0;
    let mut p = vec![0.0; grid.len()];
    for (xl, xr, local) in &grid.edges {
        let h = xr - xl;
        let npts = 12 + (omega * h).ceil() as usize;
        let rule = rules.entry(npts).or_insert_with(|| gauss_jacobi_unit(npts, 0.0, 0.0));
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let c = cosine_mode(k, xl + t * h) * w * h;
            for (&li, b) in local.iter().zip(crate::fem::space::edge_basis(grid.degree, t)) {
                p[li] += c * b;
            }
        }
    }
    p
}

/// (weighted 1D stiffness + DtN) φ = g on a boundary grid.
#[derive(Clone, Debug)]
pub struct Reduced1dProblem {
    pub grid: BoundaryGrid,
    /// ∫ w d_xφ d_xψ̄ restricted to the grid.
    pub weighted: DMatrix<C64>,
    pub dtn: DMatrix<C64>,
    /// Discrete −∂_ν U: the load after eliminating the non-grid dofs.
    pub rhs: Vec<C64>,
    reduction: SchurReductionHandle,
}

// SchurReduction holds an LU factor; wrap it so the problem stays Clone.
#[derive(Clone)]
struct SchurReductionHandle(std::sync::Arc<SchurReduction>);

impl std::fmt::Debug for SchurReductionHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SchurReduction")
    }
}

impl Reduced1dProblem {
    /// A spectral DtN with fewer modes than grid points is rank deficient; where the
    /// weight vanishes the reduced matrix is then singular.
    pub fn new(spec: &ProblemSpec, space: &FeSpace, grid: BoundaryGrid, dtn: &DtnOperator) -> Result<Self> {
        if let DtnOperator::SpectralDiagonal { .. } = dtn {
            if spec.shift != C64::new(1.0, 0.0) {
                return Err(Error::invalid("the spectral DtN assumes a unit volume coefficient"));
            }
        }
        let red = volume_reduction(spec, space, &grid)?;
        let weighted = assemble_boundary_weighted(space, spec)
            .submatrix(&grid.dofs, &grid.dofs)
            .to_dense();
        let dtn = dtn.matrix_on(&grid)?;
        Ok(Reduced1dProblem {
            rhs: red.rd.clone(),
            grid,
            weighted,
            dtn,
            reduction: SchurReductionHandle(std::sync::Arc::new(red)),
        })
    }

    /// Problem on the natural grid of `spec` with the algebraic DtN.
    pub fn algebraic(spec: &ProblemSpec, space: &FeSpace) -> Result<Self> {
        let grid = BoundaryGrid::for_spec(space, spec)?;
        let dtn = algebraic_dtn_on(spec, space, &grid)?;
        Reduced1dProblem::new(spec, space, grid, &dtn)
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        &self.weighted + &self.dtn
    }

    /// The 2D solution u = u_φ + U with trace φ on the grid.
    pub fn extend(&self, phi: &[C64]) -> Vec<C64> {
        self.reduction.0.back_substitute(phi)
    }
}

pub fn solve_reduced(problem: &Reduced1dProblem) -> Result<Vec<C64>> {
    solve_reduced_with(problem, &problem.rhs)
}

/// Solves the reduced system with a different right-hand side.
pub fn solve_reduced_with(problem: &Reduced1dProblem, g: &[C64]) -> Result<Vec<C64>> {
    if g.len() != problem.grid.len() {
        return Err(Error::invalid("right-hand side length differs from the grid size"));
    }
    dense_solve(&problem.matrix(), g)
}

/// The test-function map 𝕋(φ−, φ+) = (−φ− + 2φ(0), φ+) on a grid containing x = 0.
pub fn apply_t(x: &[f64], phi: &[C64]) -> Result<Vec<C64>> {
    if x.len() != phi.len() {
        return Err(Error::invalid("grid and vector lengths differ"));
    }
    let o = x
        .iter()
        .position(|&v| v == 0.0)
        .ok_or_else(|| Error::invalid("grid has no point at x = 0"))?;
    let p0 = phi[o];
    Ok(x.iter()
        .zip(phi)
        .map(|(&xi, &v)| if xi < 0.0 { -v + p0 * 2.0 } else { v })
        .collect())
}

/// ‖u|Γ+‖ in X_α: sqrt(∫|φ|² + ∫ x^α |φ'|²) over Γ+.
pub fn x_alpha_norm(space: &FeSpace, alpha: f64, u: &[C64]) -> Result<f64> {
    let spec = ProblemSpec::new(alpha, 1, WeightKind::HalfPower)?;
    let m = assemble_boundary_mass(space, &[BoundaryTag::GammaPlus]);
    let b = assemble_boundary_weighted(space, &spec);
    Ok((m.form(u, u).re + b.form(u, u).re).max(0.0).sqrt())
}

/// (∫_x^y t^−α dt)^{1/2}, the Hölder modulus of X_α functions.
pub fn holder_modulus(alpha: f64, x: f64, y: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-14 {
        (y / x).ln().sqrt()
    } else {
        ((y.powf(1.0 - alpha) - x.powf(1.0 - alpha)) / (1.0 - alpha)).sqrt()
    }
}

/// (k, β_k, d_k) rows of a spectral DtN.
pub fn dtn_eigen_table(dtn: &DtnOperator) -> Result<Table> {
    let DtnOperator::SpectralDiagonal { beta, d } = dtn else {
        return Err(Error::invalid("eigenvalue table needs the spectral DtN"));
    };
    let mut t = Table::new(&["k", "beta_k", "d_k"]);
    for (k, (b, dk)) in beta.iter().zip(d).enumerate() {
        t.push(vec![k.to_string(), fmt_f64(*b), fmt_f64(*dk)]);
    }
    Ok(t)
}

/// (x, Re φ, Im φ) rows of a reduced solution.
pub fn trace_table(x: &[f64], phi: &[C64]) -> Table {
    let mut t = Table::new(&["x", "re", "im"]);
    for (xi, v) in x.iter().zip(phi) {
        t.push(vec![fmt_f64(*xi), fmt_f64(v.re), fmt_f64(v.im)]);
    }
    t
}
