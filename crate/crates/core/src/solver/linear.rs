//! Sparse direct solves over the free equations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::DVector;

use crate::error::{Error, Result};

/// Relative residual above which a computed solution is treated as garbage.
const SOLVE_CHECK: f64 = 1e-6;
/// Iterative refinement stops once the relative residual drops below this.
const REFINE_TOL: f64 = 1e-13;
const MAX_REFINEMENTS: usize = 4;

/// Sparse matrix assembled from duplicate-summing triplets.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub(crate) inner: SparseColMat<usize, f64>,
}

impl SparseMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let t: Vec<_> = triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let inner = SparseColMat::try_new_from_triplets(n, n, &t).expect("triplet indices in range");
        SparseMatrix { inner }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j).copied().unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        let a = self.inner.as_ref();
        for j in 0..a.ncols() {
            let xj = x[j];
            for (i, v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
                y[i] += v * xj;
            }
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut d = nalgebra::DMatrix::zeros(n, n);
        let a = self.inner.as_ref();
        for j in 0..n {
            for (i, v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
                d[(i, j)] += v;
            }
        }
        d
    }
}

/// Reuses symbolic factorizations while the sparsity pattern stays the same.
#[derive(Debug, Default)]
pub struct LinearSolver {
    pattern: Option<(Vec<usize>, Vec<usize>)>,
    llt: Option<SymbolicLlt<usize>>,
    lu: Option<SymbolicLu<usize>>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn refresh(&mut self, k: &SparseMatrix) {
        let s = k.inner.symbolic();
        let same = self
            .pattern
            .as_ref()
            .is_some_and(|(c, r)| c == s.col_ptr() && r == s.row_idx());
        if !same {
            self.pattern = Some((s.col_ptr().to_vec(), s.row_idx().to_vec()));
            self.llt = None;
            self.lu = None;
        }
    }

    /// Solves `k x = b`. Symmetric systems try a Cholesky factorization first and fall
    /// back to LU when it breaks down (indefinite tangents under softening). The system
    /// is equilibrated by its diagonal and the solution polished by iterative refinement,
    /// since drilling and translational rows can differ by many orders of magnitude.
    pub fn solve(&mut self, k: &SparseMatrix, b: &DVector<f64>, symmetric: bool) -> Result<DVector<f64>> {
        let n = k.dim();
        if n == 0 {
            return Ok(DVector::zeros(0));
        }
        self.refresh(k);
        let scale: Vec<f64> = (0..n)
            .map(|i| match k.get(i, i).abs() {
                d if d > 0.0 && d.is_finite() => 1.0 / d.sqrt(),
                _ => 1.0,
            })
            .collect();
        let mut scaled = k.inner.clone();
        {
            let (col_ptr, row_idx) = self.pattern.as_ref().expect("pattern cached");
            let val = scaled.val_mut();
            for j in 0..n {
                for p in col_ptr[j]..col_ptr[j + 1] {
                    val[p] *= scale[row_idx[p]] * scale[j];
                }
            }
        }
        let a = scaled.as_ref();

        let mut factor = None;
        if symmetric {
            if self.llt.is_none() {
                self.llt = SymbolicLlt::try_new(a.symbolic(), Side::Lower).ok();
            }
            if let Some(sym) = &self.llt {
                if let Ok(f) = Llt::try_new_with_symbolic(sym.clone(), a, Side::Lower) {
                    factor = Some(Factor::Llt(f));
                }
            }
        }
        let factor = match factor {
            Some(f) => f,
            None => {
                if self.lu.is_none() {
                    self.lu = Some(SymbolicLu::try_new(a.symbolic()).map_err(|_| Error::SingularSystem { equation: 0 })?);
                }
                let sym = self.lu.clone().expect("symbolic LU present");
                Factor::Lu(Lu::try_new_with_symbolic(sym, a).map_err(|_| Error::SingularSystem { equation: 0 })?)
            }
        };
        let apply = |r: &DVector<f64>| {
            let rhs = Mat::<f64>::from_fn(n, 1, |i, _| scale[i] * r[i]);
            let y = factor.solve(&rhs);
            DVector::from_fn(n, |i, _| scale[i] * y[(i, 0)])
        };

        let mut x = apply(b);
        let target = REFINE_TOL * b.norm();
        for _ in 0..MAX_REFINEMENTS {
            let r = b - k.mul_vec(&x);
            if !(r.norm() > target) {
                break;
            }
            x += apply(&r);
        }
        check_solution(k, &x, b)?;
        Ok(x)
    }
}

enum Factor {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

impl Factor {
    fn solve(&self, rhs: &Mat<f64>) -> Mat<f64> {
        match self {
            Factor::Llt(f) => f.solve(rhs),
            Factor::Lu(f) => f.solve(rhs),
        }
    }
}

/// Accepts `x` when its normwise backward error is below `SOLVE_CHECK`.
fn check_solution(k: &SparseMatrix, x: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if let Some(eq) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { equation: eq });
    }
    let r = k.mul_vec(x) - b;
    let k_norm = k.inner.val().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = (k_norm * x.norm() + b.norm()).max(f64::MIN_POSITIVE);
    if r.norm() > SOLVE_CHECK * scale {
        return Err(Error::SingularSystem { equation: r.iamax() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let k = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]);
        assert_eq!(k.get(0, 0), 3.0);
    }

    #[test]
    fn symmetric_and_general_paths_agree() {
        let k = laplacian(30);
        let b = DVector::from_fn(30, |i, _| (i as f64).sin());
        let mut s = LinearSolver::new();
        let x1 = s.solve(&k, &b, true).unwrap();
        let x2 = s.solve(&k, &b, false).unwrap();
        assert!((&x1 - &x2).norm() < 1e-12);
        assert!((k.mul_vec(&x1) - &b).norm() < 1e-12);
    }

    #[test]
    fn indefinite_falls_back_to_lu() {
        let k = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -2.0), (0, 1, 0.5), (1, 0, 0.5)]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let x = LinearSolver::new().solve(&k, &b, true).unwrap();
        assert!((k.mul_vec(&x) - b).norm() < 1e-12);
    }

    #[test]
    fn singular_is_reported() {
        let k = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 0.0)]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            LinearSolver::new().solve(&k, &b, true),
            Err(Error::SingularSystem { .. })
        ));
    }
}
