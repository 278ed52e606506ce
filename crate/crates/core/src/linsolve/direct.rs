//! Sparse direct factorizations backed by faer.

use std::collections::HashMap;
use std::sync::Mutex;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::{CsrMatrix, SolveError};

fn to_faer(a: &CsrMatrix) -> Result<SparseColMat<usize, f64>, SolveError> {
    let trips: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .into_iter()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    SparseColMat::try_new_from_triplets(a.nrows(), a.ncols(), &trips)
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))
}

fn solve_with<S: Solve<f64>>(f: &S, n: usize, b: &[f64]) -> Vec<f64> {
    assert_eq!(b.len(), n);
    let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    f.solve_in_place(rhs.as_mut());
    (0..n).map(|i| rhs[(i, 0)]).collect()
}

#[derive(Clone)]
enum Symbolic {
    Lu(SymbolicLu<usize>),
    Llt(SymbolicLlt<usize>),
}

struct Entry {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: Symbolic,
}

/// Symbolic factorizations (fill-reducing ordering and elimination
/// structure) by name. An entry is reused only for an identical sparsity
/// pattern of the same factorization kind.
#[derive(Default)]
pub struct SymbolicCache {
    entries: Mutex<HashMap<&'static str, Entry>>,
}

impl SymbolicCache {
    fn get(
        &self,
        key: &'static str,
        m: &SparseColMat<usize, f64>,
        lu: bool,
        analyse: impl Fn(&SparseColMat<usize, f64>) -> Result<Symbolic, SolveError>,
    ) -> Result<Symbolic, SolveError> {
        let (col_ptr, row_idx) = (m.symbolic().col_ptr(), m.symbolic().row_idx());
        let mut entries = self.entries.lock().expect("cache lock");
        if let Some(e) = entries.get(key) {
            let kind_matches = matches!((&e.symbolic, lu), (Symbolic::Lu(_), true) | (Symbolic::Llt(_), false));
            if kind_matches && e.col_ptr == col_ptr && e.row_idx == row_idx {
                return Ok(e.symbolic.clone());
            }
        }
        let symbolic = analyse(m)?;
        entries.insert(
            key,
            Entry {
                col_ptr: col_ptr.to_vec(),
                row_idx: row_idx.to_vec(),
                symbolic: symbolic.clone(),
            },
        );
        Ok(symbolic)
    }
}

/// LU factorization of a general square sparse matrix, reusable across
/// right-hand sides.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        Self::factor_cached(a, &SymbolicCache::default(), "")
    }

    /// Like [`SparseLu::factor`], reusing the symbolic analysis stored under
    /// `key` when the sparsity pattern is unchanged.
    pub fn factor_cached(a: &CsrMatrix, cache: &SymbolicCache, key: &'static str) -> Result<Self, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::NotSquare(a.nrows(), a.ncols()));
        }
        let m = to_faer(a)?;
        let sym = cache.get(key, &m, true, |m| match SymbolicLu::try_new(m.symbolic()) {
            Ok(s) => Ok(Symbolic::Lu(s)),
            Err(e) => Err(SolveError::Factorization(format!("{e:?}"))),
        })?;
        let Symbolic::Lu(sym) = sym else {
            unreachable!("cache returns the requested kind")
        };
        let lu = Lu::try_new_with_symbolic(sym, m.as_ref()).map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        Ok(SparseLu { n: a.nrows(), lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        solve_with(&self.lu, self.n, b)
    }
}

/// Cholesky factorization of a symmetric positive definite sparse matrix.
pub struct SparseCholesky {
    n: usize,
    llt: Llt<usize, f64>,
}

impl SparseCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        Self::factor_cached(a, &SymbolicCache::default(), "")
    }

    pub fn factor_cached(a: &CsrMatrix, cache: &SymbolicCache, key: &'static str) -> Result<Self, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::NotSquare(a.nrows(), a.ncols()));
        }
        let m = to_faer(a)?;
        let sym = cache.get(key, &m, false, |m| {
            match SymbolicLlt::try_new(m.symbolic(), Side::Lower) {
                Ok(s) => Ok(Symbolic::Llt(s)),
                Err(e) => Err(SolveError::Factorization(format!("{e:?}"))),
            }
        })?;
        let Symbolic::Llt(sym) = sym else {
            unreachable!("cache returns the requested kind")
        };
        let llt = Llt::try_new_with_symbolic(sym, m.as_ref(), Side::Lower)
            .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        Ok(SparseCholesky { n: a.nrows(), llt })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        solve_with(&self.llt, self.n, b)
    }
}
