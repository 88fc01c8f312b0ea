//! Small dense linear algebra, generic over the scalar.
//!
//! Deliberately hand-rolled: the matrices here are tiny (state spaces and
//! Euclidean dimensions at desk scale), and keeping the routines local means
//! the test oracles can use an unrelated linear-algebra stack.

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Option<Self> {
        let r = rows.len();
        if r == 0 {
            return None;
        }
        let c = rows[0].len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return None;
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend(row);
        }
        Some(Matrix { rows: r, cols: c, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = S::zero();
            for (a, b) in row.iter().zip(x.iter()) {
                acc += *a * *b;
            }
            out.push(acc);
        }
        out
    }

    pub fn transpose_matvec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for (j, a) in row.iter().enumerate() {
                out[j] += *a * xi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix<S> {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn is_symmetric(&self, tol: S) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Spectral norm (largest singular value) via power iteration on A^T A.
    ///
    /// Deterministic start vector; converges to the norm value even when the
    /// top singular value is multiple.
    pub fn operator_norm(&self) -> S {
        if self.data.iter().all(|v| *v == S::zero()) {
            return S::zero();
        }
        let mut v: Vec<S> = (0..self.cols)
            .map(|j| S::one() + S::of(0.3819660112501051) * S::of(((j + 1) as f64).sin()))
            .collect();
        normalize(&mut v);
        let mut sigma_sq = S::zero();
        for _ in 0..20_000 {
            let av = self.matvec(&v);
            let mut w = self.transpose_matvec(&av);
            let next = dot(&v, &w);
            normalize(&mut w);
            v = w;
            if (next - sigma_sq).abs() <= S::of(1e-14) * next.max(S::one()) {
                sigma_sq = next;
                break;
            }
            sigma_sq = next;
        }
        sigma_sq.max(S::zero()).sqrt()
    }

    /// Solve `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` when the matrix is (numerically) singular.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        if self.rows != self.cols || b.len() != self.rows {
            return None;
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x: Vec<S> = b.to_vec();
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].abs();
            for r in (col + 1)..n {
                let cand = a[r * n + col].abs();
                if cand > best {
                    best = cand;
                    pivot = r;
                }
            }
            if best <= S::of(1e-300) {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            let diag = a[col * n + col];
            for r in (col + 1)..n {
                let factor = a[r * n + col] / diag;
                if factor == S::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] = a[r * n + j] - factor * v;
                }
                let xc = x[col];
                x[r] = x[r] - factor * xc;
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for j in (col + 1)..n {
                acc = acc - a[col * n + j] * x[j];
            }
            x[col] = acc / a[col * n + col];
        }
        Some(x)
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += *x * *y;
    }
    acc
}

pub fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

fn normalize<S: Scalar>(v: &mut [S]) {
    let n = norm2(v);
    if n > S::zero() {
        for x in v.iter_mut() {
            *x = *x / n;
        }
    }
}
