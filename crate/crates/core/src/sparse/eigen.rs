//! Extremal generalized eigenvalues by block subspace iteration.
//!
//! Both routines iterate with an operator B that is self-adjoint in the inner
//! product of an SPD Gram matrix G and whose largest eigenvalue is the
//! reciprocal of the wanted smallest one.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::csr::CsrMatrix;
use super::lu::{lu_factor, LuFactor};
use crate::error::{Error, Result};

type C64 = Complex64;

pub const EIG_TOL: f64 = 1e-8;
pub const EIG_MAX_ITER: usize = 500;
const BLOCK: usize = 8;
const SEED: u64 = 0x0005_eed0_f1f5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
}

/// G-orthonormal basis of span(cols); drops numerically dependent directions.
fn g_orthonormalize(g: &CsrMatrix, cols: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let p = cols.len();
    let gcols: Vec<Vec<C64>> = cols.iter().map(|c| g.matvec(c)).collect();
    let mut c = DMatrix::<C64>::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v: C64 = cols[i].iter().zip(&gcols[j]).map(|(a, b)| a.conj() * b).sum();
            c[(i, j)] = v;
            c[(j, i)] = v.conj();
        }
    }
    let eig = SymmetricEigen::new(c);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let n = cols[0].len();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    for k in idx {
        let lam = eig.eigenvalues[k];
        if lam <= 1e-12 * top {
            continue;
        }
        let s = 1.0 / lam.sqrt();
        let mut v = vec![C64::new(0.0, 0.0); n];
        for (j, col) in cols.iter().enumerate() {
            let w = eig.eigenvectors[(j, k)] * s;
            for (vi, ci) in v.iter_mut().zip(col) {
                *vi += w * ci;
            }
        }
        out.push(v);
    }
    out
}

/// Largest eigenvalue of an operator B self-adjoint in the G inner product.
pub fn largest_eigenvalue<F>(apply: F, g: &CsrMatrix, tol: f64, max_iter: usize) -> Result<EigenEstimate>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let n = g.nrows;
    if n == 0 {
        return Err(Error::invalid("empty operator"));
    }
    let p = n.min(BLOCK);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start: Vec<Vec<C64>> = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let mut x = g_orthonormalize(g, &start);
    let mut prev: Option<f64> = None;
    for it in 1..=max_iter {
        let y: Vec<Vec<C64>> = x.iter().map(|v| apply(v)).collect();
        let gy: Vec<Vec<C64>> = y.iter().map(|v| g.matvec(v)).collect();
        let m = x.len();
        let mut h = DMatrix::<C64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] = x[i].iter().zip(&gy[j]).map(|(a, b)| a.conj() * b).sum();
            }
        }
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mu = eig.eigenvalues[order[0]];
        if !mu.is_finite() {
            return Err(Error::NonConvergence { iterations: it });
        }
        if let Some(old) = prev {
            if (mu - old).abs() <= tol * mu.abs() {
                return Ok(EigenEstimate {
                    value: mu,
                    iterations: it,
                });
            }
        }
        prev = Some(mu);
        // rotate the block onto the Ritz basis before re-orthonormalizing
        let rotated: Vec<Vec<C64>> = order
            .iter()
            .map(|&k| {
                let mut v = vec![C64::new(0.0, 0.0); n];
                for (j, col) in y.iter().enumerate() {
                    let w = eig.eigenvectors[(j, k)];
                    for (vi, ci) in v.iter_mut().zip(col) {
                        *vi += w * ci;
                    }
                }
                v
            })
            .collect();
        x = g_orthonormalize(g, &rotated);
        if x.is_empty() {
            return Err(Error::NonConvergence { iterations: it });
        }
    }
    Err(Error::NonConvergence { iterations: max_iter })
}

/// Discrete inf-sup constant β = sqrt(λ_min(Aᴴ G⁻¹ A, G)).
///
/// A numerically singular A yields β = 0.
pub fn smallest_infsup(a: &CsrMatrix, g: &CsrMatrix) -> Result<(f64, usize)> {
    if a.nrows != g.nrows || !a.is_square() || !g.is_square() {
        return Err(Error::invalid("smallest_infsup: dimension mismatch"));
    }
    match lu_factor(a) {
        Ok(lu) => smallest_infsup_factored(&lu, g),
        Err(Error::NumericallySingular { .. }) => Ok((0.0, 0)),
        Err(e) => Err(e),
    }
}

/// [`smallest_infsup`] with A given by its LU factors.
pub fn smallest_infsup_factored(lu: &LuFactor, g: &CsrMatrix) -> Result<(f64, usize)> {
    if lu.dim() != g.nrows {
        return Err(Error::invalid("smallest_infsup: dimension mismatch"));
    }
    // B = A⁻¹ G A⁻ᴴ G has eigenvalues 1/λ
    let apply = |v: &[C64]| {
        let w = lu.solve_adjoint(&g.matvec(v));
        lu.solve(&g.matvec(&w))
    };
    let est = largest_eigenvalue(apply, g, EIG_TOL, EIG_MAX_ITER)?;
    Ok((1.0 / est.value.sqrt(), est.iterations))
}

/// Smallest eigenvalue μ of K x = μ M x for Hermitian positive definite K, M.
pub fn smallest_generalized_eigenvalue(k: &CsrMatrix, m: &CsrMatrix) -> Result<EigenEstimate> {
    let lu = lu_factor(k)?;
    let apply = |v: &[C64]| lu.solve(&m.matvec(v));
    let est = largest_eigenvalue(apply, m, EIG_TOL, EIG_MAX_ITER)?;
    Ok(EigenEstimate {
        value: 1.0 / est.value,
        iterations: est.iterations,
    })
}
