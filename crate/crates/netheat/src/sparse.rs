//! Sparse symmetric matrices in compressed row form, plus the dense
//! factorization bridge used by the solvers.
//!
//! Assembly accumulates into an ordered upper-triangle map so the result is
//! independent of element visit order; `freeze` expands to a full-pattern CSR
//! for cheap matvecs. Factorizations happen densely: problem sizes here stay
//! in the low thousands of unknowns, where a dense Cholesky is both fast and
//! exactly reproducible.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Accumulator for a symmetric matrix; stores the upper triangle (i <= j).
#[derive(Debug, Clone, Default)]
pub struct SymTriplets {
    n: usize,
    upper: BTreeMap<(usize, usize), f64>,
}

impl SymTriplets {
    pub fn new(n: usize) -> Self {
        SymTriplets {
            n,
            upper: BTreeMap::new(),
        }
    }

    /// Adds `v` at (i, j) and, implicitly, at (j, i).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index out of range");
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.upper.entry(key).or_insert(0.0) += v;
    }

    pub fn freeze(self) -> SymCsr {
        let n = self.n;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &v) in &self.upper {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in row.iter() {
                col_idx.push(j);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SymCsr {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

/// Symmetric sparse matrix, full pattern stored row-compressed.
#[derive(Debug, Clone)]
pub struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SymCsr {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut t = SymTriplets::new(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            t.add(i, i, d);
        }
        t.freeze()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&j, &v)| (j, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .find(|&(k, _)| k == j)
            .map(|(_, v)| v)
            .unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension mismatch");
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Largest asymmetry |a_ij - a_ji|; zero by construction, kept as a check
    /// for matrices read back from dumps.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Upper-triangle entries (i <= j) in row-major order.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if i <= j {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Cached dense Cholesky factor of an SPD combination `A + c B`.
pub struct DenseCholesky {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl DenseCholesky {
    pub fn new(a: &SymCsr, c: f64, b: &SymCsr) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::GridMismatch(format!(
                "cannot combine operators of size {} and {}",
                a.dim(),
                b.dim()
            )));
        }
        let mut dense = a.to_dense();
        dense += b.to_dense() * c;
        let chol = nalgebra::Cholesky::new(dense)
            .ok_or_else(|| Error::solver("matrix is not positive definite"))?;
        Ok(DenseCholesky { chol })
    }

    pub fn of(a: &SymCsr) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(a.to_dense())
            .ok_or_else(|| Error::solver("matrix is not positive definite"))?;
        Ok(DenseCholesky { chol })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

/// Eigenvalues of the pencil (K, M) with M symmetric positive definite,
/// sorted ascending. Reduces to a standard symmetric problem through the
/// Cholesky factor of M.
pub fn generalized_eigenvalues(k: &SymCsr, m: &SymCsr) -> Result<Vec<f64>> {
    let (_, eigs) = generalized_eigen(k, m)?;
    Ok(eigs)
}

/// Eigenpairs of (K, M): returns (eigenvectors as columns, eigenvalues),
/// eigenvalues ascending, eigenvectors M-orthonormal.
pub fn generalized_eigen(k: &SymCsr, m: &SymCsr) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if k.dim() != m.dim() {
        return Err(Error::GridMismatch(
            "eigenproblem operands differ in size".into(),
        ));
    }
    let n = k.dim();
    let md = m.to_dense();
    let chol = nalgebra::Cholesky::new(md).ok_or_else(|| {
        Error::solver("mass matrix is not positive definite in eigensolve")
    })?;
    let l = chol.l();
    // B = L^-1 K L^-T, symmetrized to absorb roundoff.
    let y = l
        .solve_lower_triangular(&k.to_dense())
        .ok_or_else(|| Error::solver("singular Cholesky factor"))?;
    let b = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::solver("singular Cholesky factor"))?;
    let b = (&b + b.transpose()) * 0.5;
    let se = nalgebra::SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigs: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    // Back-transform eigenvectors: x = L^-T q.
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let q = se.eigenvectors.column(i).into_owned();
        let x = l
            .transpose()
            .solve_upper_triangular(&q)
            .ok_or_else(|| Error::solver("singular Cholesky factor"))?;
        vecs.set_column(col, &x);
    }
    Ok((vecs, eigs))
}
