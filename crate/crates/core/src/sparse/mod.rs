//! Sparse matrices, direct solver, static condensation and eigenvalue estimates.

mod csr;
mod eigen;
mod lu;
mod ordering;
mod schur;

pub use csr::CsrMatrix;
pub use eigen::{
    largest_eigenvalue, smallest_generalized_eigenvalue, smallest_infsup, smallest_infsup_factored, EigenEstimate,
    EIG_MAX_ITER, EIG_TOL,
};
pub use lu::{lu_factor, lu_factor_ordered, lu_solve, LuFactor, PIVOT_TOL};
pub use ordering::{adjacency, coordinate_dissection, nested_dissection};
pub use schur::{dense_solve, schur_reduce, SchurReduction};
