use nalgebra::DMatrix;
use num_complex::Complex64;

use super::csr::CsrMatrix;
use super::lu::{lu_factor, LuFactor};
use crate::error::{Error, Result};

type C64 = Complex64;

/// Static condensation of a sparse system onto a set of boundary unknowns.
pub struct SchurReduction {
    /// S_bb − S_bi S_ii⁻¹ S_ib
    pub sd: DMatrix<C64>,
    /// r_b − S_bi S_ii⁻¹ r_i
    pub rd: Vec<C64>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    s_ib: CsrMatrix,
    lu_ii: Option<LuFactor>,
    rhs_i: Vec<C64>,
}

pub fn schur_reduce(s: &CsrMatrix, rhs: &[C64], boundary: &[usize]) -> Result<SchurReduction> {
    let n = s.nrows;
    if !s.is_square() || rhs.len() != n {
        return Err(Error::invalid("schur_reduce: dimension mismatch"));
    }
    let mut is_b = vec![false; n];
    for &b in boundary {
        if b >= n || is_b[b] {
            return Err(Error::invalid("boundary index out of range or repeated"));
        }
        is_b[b] = true;
    }
    let interior: Vec<usize> = (0..n).filter(|&i| !is_b[i]).collect();
    let s_bb = s.submatrix(boundary, boundary);
    let s_bi = s.submatrix(boundary, &interior);
    let s_ib = s.submatrix(&interior, boundary);
    let rhs_i: Vec<C64> = interior.iter().map(|&i| rhs[i]).collect();
    let mut sd = s_bb.to_dense();
    let mut rd: Vec<C64> = boundary.iter().map(|&i| rhs[i]).collect();
    let lu_ii = if interior.is_empty() {
        None
    } else {
        let lu = lu_factor(&s.submatrix(&interior, &interior)).map_err(|e| match e {
            Error::NumericallySingular { index } => Error::NumericallySingular { index: interior[index] },
            other => other,
        })?;
        let nb = boundary.len();
        // row j of the transpose is column j of S_ib
        let s_ib_t = s_ib.transpose();
        for j in 0..nb {
            let mut col = vec![C64::new(0.0, 0.0); interior.len()];
            for (i, v) in s_ib_t.row(j) {
                col[i] = v;
            }
            let z = lu.solve(&col);
            let y = s_bi.matvec(&z);
            for i in 0..nb {
                sd[(i, j)] -= y[i];
            }
        }
        let zr = s_bi.matvec(&lu.solve(&rhs_i));
        for (r, z) in rd.iter_mut().zip(&zr) {
            *r -= z;
        }
        Some(lu)
    };
    Ok(SchurReduction {
        sd,
        rd,
        boundary: boundary.to_vec(),
        interior,
        s_ib,
        lu_ii,
        rhs_i,
    })
}

impl SchurReduction {
    /// Full solution from boundary values: u_i = S_ii⁻¹ (r_i − S_ib φ).
    pub fn back_substitute(&self, phi: &[C64]) -> Vec<C64> {
        assert_eq!(phi.len(), self.boundary.len(), "boundary vector has wrong length");
        let n = self.boundary.len() + self.interior.len();
        let mut u = vec![C64::new(0.0, 0.0); n];
        for (&b, &v) in self.boundary.iter().zip(phi) {
            u[b] = v;
        }
        if let Some(lu) = &self.lu_ii {
            let sp = self.s_ib.matvec(phi);
            let r: Vec<C64> = self.rhs_i.iter().zip(&sp).map(|(a, b)| a - b).collect();
            for (&i, v) in self.interior.iter().zip(lu.solve(&r)) {
                u[i] = v;
            }
        }
        u
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }
}

/// Solves a dense system through the sparse LU (same pivot rules and singularity test).
pub fn dense_solve(a: &DMatrix<C64>, b: &[C64]) -> Result<Vec<C64>> {
    Ok(lu_factor(&CsrMatrix::from_dense(a))?.solve(b))
}
