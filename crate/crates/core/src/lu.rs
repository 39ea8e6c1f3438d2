//! Sparse LU with partial pivoting and a COLAMD fill-reducing column ordering,
//! backed by `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, NumericLu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut, Par};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Relative residual above which a factorization is declared numerically singular.
const SINGULARITY_RESIDUAL: f64 = 1e-6;

pub struct Factorization {
    n: usize,
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish_non_exhaustive()
    }
}

/// Factors a square sparse matrix. Runs single-threaded so that solves are
/// reproducible bit for bit.
pub fn sparse_lu_factor(matrix: &SparseMatrix) -> Result<Factorization> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "LU needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    let triplets: Vec<Triplet<usize, usize, f64>> =
        matrix.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidArgument(format!("sparse conversion failed: {e:?}")))?;
    let symbolic = factorize_symbolic_lu(csc.symbolic(), Default::default())
        .map_err(|e| Error::Singular(format!("symbolic factorization failed: {e:?}")))?;
    let mut numeric = NumericLu::new();
    {
        let par = Par::Seq;
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_lu_scratch::<f64>(par, Default::default()));
        symbolic
            .factorize_numeric_lu(&mut numeric, csc.as_ref(), par, MemStack::new(&mut mem), Default::default())
            .map_err(|e| Error::Singular(format!("structurally singular: {e:?}")))?;
    }
    let lu = Factorization { n, symbolic, numeric };
    lu.check_nonsingular(matrix)?;
    Ok(lu)
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `rhs` with the solution of `A x = rhs`.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.n, "rhs length does not match factorization");
        let par = Par::Seq;
        let lu = LuRef::new_unchecked(&self.symbolic, &self.numeric);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        let mat = MatMut::from_column_major_slice_mut(rhs, self.n, 1);
        lu.solve_in_place_with_conj(Conj::No, mat, par, MemStack::new(&mut mem));
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    // Partial pivoting never reports a tiny pivot, so probe with a fixed
    // right-hand side and reject the factorization if the solve blows up.
    fn check_nonsingular(&self, a: &SparseMatrix) -> Result<()> {
        if self.n == 0 {
            return Ok(());
        }
        let x: Vec<f64> = (0..self.n).map(|i| 1.0 + ((i * 7919) % 97) as f64 / 97.0).collect();
        let b = a.mul_vec(&x);
        let y = self.solve(&b);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !err.is_finite() || err > SINGULARITY_RESIDUAL * scale {
            return Err(Error::Singular(format!(
                "numerically singular pivot (probe solve error {err:e})"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let lu = sparse_lu_factor(&SparseMatrix::identity(4)).unwrap();
        assert_eq!(lu.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn zero_diagonal_needs_pivoting() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let lu = sparse_lu_factor(&a).unwrap();
        assert_eq!(lu.solve(&[3.0, 5.0]), vec![5.0, 3.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(sparse_lu_factor(&a), Err(Error::Singular(_))));
        let b = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(sparse_lu_factor(&b).is_err());
    }

    #[test]
    fn rectangular_rejected() {
        assert!(sparse_lu_factor(&SparseMatrix::zeros(2, 3)).is_err());
    }
}
