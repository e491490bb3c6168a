//! Lagrange P1/P2 finite elements for the weighted Ventcel problems.

pub mod assembly;
pub mod problem;
pub mod solution;
pub mod space;

pub use assembly::{
    assemble_boundary_abs, assemble_boundary_mass, assemble_boundary_weighted, assemble_rhs, assemble_system,
    assemble_volume, AssembledSystem,
};
pub use problem::{ProblemSpec, Source, WeightKind};
pub use solution::{
    compute_norm, interpolate, prolongate, relative_difference, solve_assembled, solve_problem, DiscreteSolution,
    NormKind, Norms,
};
pub use space::{boundary_dofs_ordered, EdgeDofs, FeSpace};
