//! Minimal dense linear algebra: row-major matrices, LU solve with partial
//! pivoting, and Jacobi symmetric eigendecomposition for the small d×d
//! covariance blocks. Sizes here are n_cells × n_cells at most.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<R> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<R>,
}

impl<R: Real> DenseMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![R::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x
    pub fn matvec(&self, x: &[R]) -> Vec<R> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut acc = R::zero();
                for (a, b) in row.iter().zip(x) {
                    acc += *a * *b;
                }
                acc
            })
            .collect()
    }

    /// y = A^T x
    pub fn matvec_transpose(&self, x: &[R]) -> Vec<R> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![R::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == R::zero() {
                continue;
            }
            for (j, a) in self.row(i).iter().enumerate() {
                out[j] += *a * xi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == R::zero() {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += aik * *b;
                }
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<R> {
        (0..self.rows)
            .map(|i| self.row(i).iter().copied().fold(R::zero(), |a, b| a + b))
            .collect()
    }
}

/// Solve A x = b in place via LU with partial pivoting. A is consumed.
pub fn lu_solve<R: Real>(mut a: DenseMatrix<R>, b: &[R]) -> Result<Vec<R>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let mut x: Vec<R> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut piv = col;
        let mut max = a.get(col, col).abs();
        for r in col + 1..n {
            let v = a.get(r, col).abs();
            if v > max {
                max = v;
                piv = r;
            }
        }
        if max == R::zero() {
            return Err(Error::SingularMatrix(col));
        }
        if piv != col {
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(piv, j));
                a.set(piv, j, tmp);
            }
            perm.swap(col, piv);
            x.swap(col, piv);
        }
        let d = a.get(col, col);
        for r in col + 1..n {
            let f = a.get(r, col) / d;
            if f == R::zero() {
                continue;
            }
            a.set(r, col, f);
            for j in col + 1..n {
                let v = a.get(r, j) - f * a.get(col, j);
                a.set(r, j, v);
            }
            x[r] = x[r] - f * x[col];
        }
    }
    // back substitution
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc = acc - a.get(i, j) * x[j];
        }
        x[i] = acc / a.get(i, i);
    }
    Ok(x)
}

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns).
pub fn sym_eigen<R: Real>(a: &DenseMatrix<R>, sweeps: usize) -> (Vec<R>, DenseMatrix<R>) {
    let n = a.rows;
    assert_eq!(a.cols, n);
    let mut m = a.clone();
    let mut v = DenseMatrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, R::one());
    }
    for _ in 0..sweeps {
        let mut off = R::zero();
        for i in 0..n {
            for j in i + 1..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off <= R::of(1e-30) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= R::of(1e-300) {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (R::of(2.0) * apq);
                let t = {
                    let s = if theta >= R::zero() { R::one() } else { -R::one() };
                    s / (theta.abs() + (theta * theta + R::one()).sqrt())
                };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eig = (0..n).map(|i| m.get(i, i)).collect();
    (eig, v)
}

/// Symmetric square root B with B B^T = A, for positive semidefinite A.
/// Eigenvalues slightly below zero (numerical noise) are clamped; genuinely
/// negative ones are an error.
pub fn sym_sqrt<R: Real>(a: &DenseMatrix<R>, tol: R) -> Result<DenseMatrix<R>> {
    let n = a.rows;
    let (eig, vecs) = sym_eigen(a, 50);
    let scale = eig.iter().fold(R::zero(), |m, e| m.max(e.abs()));
    let mut b = DenseMatrix::zeros(n, n);
    for (k, &lam) in eig.iter().enumerate() {
        if lam < -tol * (scale + R::one()) {
            return Err(Error::IndefiniteDiffusion(lam.as_f64()));
        }
        let s = lam.max(R::zero()).sqrt();
        for i in 0..n {
            for j in 0..n {
                let v = b.get(i, j) + s * vecs.get(i, k) * vecs.get(j, k);
                b.set(i, j, v);
            }
        }
    }
    Ok(b)
}
