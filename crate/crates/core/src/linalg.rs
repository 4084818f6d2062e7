//! Sparse matrices with deterministic assembly, and the saddle-point factorization.
//!
//! Operators are assembled into [`CsrMatrix`] from triplets that are sorted by
//! `(row, col)` with a stable sort before summation, so entries are bitwise
//! reproducible regardless of how the triplets were produced. Linear systems
//! are factorized with the sparse LU of `faer`, run sequentially.

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Once;

/// Field of coefficients: `f64` or `Complex64`.
pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn conjugate(self) -> Self;
    fn modulus_sq(self) -> f64;
    fn real_part(self) -> f64;
    fn scaled(self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn conjugate(self) -> f64 {
        self
    }
    fn modulus_sq(self) -> f64 {
        self * self
    }
    fn real_part(self) -> f64 {
        self
    }
    fn scaled(self, s: f64) -> f64 {
        self * s
    }
}

impl Scalar for Complex64 {
    fn conjugate(self) -> Complex64 {
        self.conj()
    }
    fn modulus_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn real_part(self) -> f64 {
        self.re
    }
    fn scaled(self, s: f64) -> Complex64 {
        self * s
    }
}

/// Real sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> CsrMatrix {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    /// Sum duplicate triplets in canonical `(row, col)` order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> CsrMatrix {
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { nrows, ncols, indptr, indices, data }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        match self.indices[lo..hi].binary_search(&c) {
            Ok(k) => self.data[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                out.push((r, c, v));
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    /// `sum_k c_k A_k` over matrices of equal shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let (nr, nc) = (terms[0].1.nrows, terms[0].1.ncols);
        let mut trips = Vec::new();
        for (c, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nr, nc));
            trips.extend(m.triplets().into_iter().map(|(i, j, v)| (i, j, c * v)));
        }
        CsrMatrix::from_triplets(nr, nc, trips)
    }

    /// Replace by `(A + A^T) / 2`, making the matrix exactly symmetric.
    pub fn symmetrize(&self) -> CsrMatrix {
        let mut trips = self.triplets();
        trips.extend(self.triplets().into_iter().map(|(r, c, v)| (c, r, v)));
        let mut m = CsrMatrix::from_triplets(self.nrows, self.ncols, trips);
        for v in &mut m.data {
            *v *= 0.5;
        }
        m
    }

    /// Max-norm of `A - A^T`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn matvec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let mut acc = T::from(0.0);
                for (c, v) in self.row(r) {
                    acc += x[c].scaled(v);
                }
                acc
            })
            .collect()
    }

    /// `A^T x`.
    pub fn tmatvec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![T::from(0.0); self.ncols];
        for (r, xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += xr.scaled(v);
            }
        }
        out
    }

    /// Bilinear form `x^T A y` (no conjugation).
    pub fn form<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        let ay = self.matvec(y);
        x.iter().zip(&ay).fold(T::from(0.0), |acc, (a, b)| acc + *a * *b)
    }

    /// Sesquilinear energy `conj(x)^T A x`, real part (exact for symmetric A).
    pub fn energy<T: Scalar>(&self, x: &[T]) -> f64 {
        let ax = self.matvec(x);
        x.iter().zip(&ax).map(|(a, b)| (a.conjugate() * *b).real_part()).sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Coordinate-list text, one `row col value` line per stored entry.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for (r, c, v) in self.triplets() {
            out.push_str(&format!("{r} {c} {v:.16e}\n"));
        }
        out
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::from(0.0), |acc, (x, y)| acc + x.conjugate() * *y)
}

pub fn norm2<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_sq()).sum::<f64>().sqrt()
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Dense symmetric-definite generalized eigenproblem `A x = mu B x`, ascending,
/// with `B`-orthonormal eigenvectors as columns.
pub fn generalized_symmetric_eigen(
    a: &nalgebra::DMatrix<f64>,
    b: &nalgebra::DMatrix<f64>,
) -> Result<(Vec<f64>, nalgebra::DMatrix<f64>)> {
    let l = nalgebra::Cholesky::new(b.clone())
        .ok_or_else(|| Error::SingularOperator("Gram matrix is not positive definite".into()))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularOperator("singular Cholesky factor".into()))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = nalgebra::DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, linv.transpose() * y))
}

static SEQUENTIAL: Once = Once::new();

fn sequential_faer() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Saddle-point system
///
/// ```text
/// [ A    D^T  0   C^T ] [u ]   [f]
/// [ D    0    m   0   ] [p ] = [g]
/// [ 0    m^T  0   0   ] [mu]   [0]
/// [ C    0    0   0   ] [nu]   [0]
/// ```
///
/// with `A = sum_k c_k A_k`, the pressure-mean border `m` (optional) and
/// velocity constraint rows `C` (optional).
pub struct SaddleSpec<'a, T: Scalar> {
    pub blocks: Vec<(T, &'a CsrMatrix)>,
    pub divergence: &'a CsrMatrix,
    pub pressure_mean: Option<&'a [f64]>,
    pub velocity_constraints: Vec<Vec<f64>>,
}

/// Factorized saddle-point system with iterative refinement.
pub struct SaddleSolver<T: Scalar> {
    nv: usize,
    np: usize,
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, T>,
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SaddleSolver<T> {
    pub fn new(spec: &SaddleSpec<'_, T>) -> Result<SaddleSolver<T>> {
        sequential_faer();
        let nv = spec.blocks[0].1.nrows;
        let np = spec.divergence.nrows;
        if spec.divergence.ncols != nv {
            return Err(Error::DimensionMismatch("divergence block width".into()));
        }
        let has_mean = spec.pressure_mean.is_some();
        let nc = spec.velocity_constraints.len();
        let n = nv + np + usize::from(has_mean) + nc;
        let mut trips: Vec<(usize, usize, T)> = Vec::new();
        for (c, m) in &spec.blocks {
            assert_eq!((m.nrows, m.ncols), (nv, nv));
            for (r, cc, v) in m.triplets() {
                trips.push((r, cc, c.scaled(v)));
            }
        }
        for (r, c, v) in spec.divergence.triplets() {
            trips.push((nv + r, c, T::from(v)));
            trips.push((c, nv + r, T::from(v)));
        }
        if let Some(m) = spec.pressure_mean {
            for (i, &v) in m.iter().enumerate() {
                if v != 0.0 {
                    trips.push((nv + i, nv + np, T::from(v)));
                    trips.push((nv + np, nv + i, T::from(v)));
                }
            }
        }
        let off = nv + np + usize::from(has_mean);
        for (k, row) in spec.velocity_constraints.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trips.push((off + k, i, T::from(v)));
                    trips.push((i, off + k, T::from(v)));
                }
            }
        }
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, T)> = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for &(r, c, v) in &merged {
            rows[r].push((c, v));
        }
        let faer_trips: Vec<Triplet<usize, usize, T>> =
            merged.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, T>::try_new_from_triplets(n, n, &faer_trips)
            .map_err(|e| Error::SingularOperator(format!("sparse structure: {e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::SingularOperator(format!("LU failed: {e:?}")))?;
        Ok(SaddleSolver { nv, np, n, lu, rows })
    }

    pub fn velocity_len(&self) -> usize {
        self.nv
    }

    pub fn pressure_len(&self) -> usize {
        self.np
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(T::from(0.0), |acc, &(c, v)| acc + v * x[c]))
            .collect()
    }

    fn raw_solve(&self, b: &[T]) -> Vec<T> {
        let rhs = Mat::<T>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solve with velocity data `f` and divergence data `g` (zero when `None`).
    /// Returns `(u, p, relative residual)`.
    pub fn solve(&self, f: &[T], g: Option<&[T]>) -> Result<(Vec<T>, Vec<T>, f64)> {
        let mut b = vec![T::from(0.0); self.n];
        b[..self.nv].copy_from_slice(f);
        if let Some(g) = g {
            b[self.nv..self.nv + self.np].copy_from_slice(g);
        }
        let bnorm = norm2(&b);
        if bnorm == 0.0 {
            return Ok((vec![T::from(0.0); self.nv], vec![T::from(0.0); self.np], 0.0));
        }
        let mut x = self.raw_solve(&b);
        let mut rel = f64::INFINITY;
        for _ in 0..4 {
            let ax = self.apply(&x);
            let r: Vec<T> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
            rel = norm2(&r) / bnorm;
            if !rel.is_finite() {
                return Err(Error::Nonconvergence(format!("non-finite residual (n = {})", self.n)));
            }
            if rel <= 1e-13 {
                break;
            }
            let dx = self.raw_solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += *di;
            }
        }
        if rel > 1e-10 {
            return Err(Error::Nonconvergence(format!(
                "relative residual {rel:e} above 1e-10 after refinement (n = {})",
                self.n
            )));
        }
        let u = x[..self.nv].to_vec();
        let p = x[self.nv..self.nv + self.np].to_vec();
        Ok((u, p, rel))
    }
}
