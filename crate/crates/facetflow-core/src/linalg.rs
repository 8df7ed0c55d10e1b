//! Small direct solvers: tridiagonal elimination, banded LU with partial
//! pivoting, and dense LU. Sized for desk-scale grids; the iterative path for
//! 2D lives in `elliptic`.

use crate::{Error, Result, Scalar};

/// Solve a tridiagonal system by LU without pivoting. Intended for the
/// symmetric positive definite systems assembled from 1D elliptic operators,
/// which are strictly diagonally dominant.
pub(crate) fn tridiagonal_solve<S: Scalar>(
    lower: &[S],
    diag: &[S],
    upper: &[S],
    rhs: &[S],
) -> Result<Vec<S>> {
    let n = diag.len();
    debug_assert_eq!(lower.len(), n - 1);
    debug_assert_eq!(upper.len(), n - 1);
    debug_assert_eq!(rhs.len(), n);
    let mut c = vec![S::zero(); n];
    let mut d = vec![S::zero(); n];
    let mut pivot = diag[0];
    if pivot == S::zero() {
        return Err(Error::SingularSystem {
            column: 0,
            pivot: 0.0,
        });
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == S::zero() {
            return Err(Error::SingularSystem {
                column: i,
                pivot: 0.0,
            });
        }
        if i < n - 1 {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] = d[i] - c[i] * next;
    }
    Ok(d)
}

/// Band matrix in column-major LAPACK-style storage with room for pivoting
/// fill-in: entry (i, j) lives at `data[j * ld + (kl + ku + i - j)]`.
pub(crate) struct Banded<S> {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<S>,
}

impl<S: Scalar> Banded<S> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            ku,
            ld,
            data: vec![S::zero(); ld * n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + (self.kl + self.ku + i - j)
    }

    pub fn add(&mut self, i: usize, j: usize, v: S) {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j + self.kl >= i && i + self.ku >= j, "entry outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> S {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: S) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// Gaussian elimination with partial pivoting, consuming the matrix.
    /// Fill-in widens the upper band from `ku` to `ku + kl`.
    pub fn solve(mut self, mut b: Vec<S>) -> Result<Vec<S>> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let band_hi = self.ku + self.kl;
        for col in 0..n {
            let row_max = (col + self.kl).min(n - 1);
            let mut p = col;
            let mut best = self.get(col, col).abs();
            for r in col + 1..=row_max {
                let v = self.get(r, col).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == S::zero() || !best.is_finite() {
                return Err(Error::SingularSystem {
                    column: col,
                    pivot: best.as_f64(),
                });
            }
            if p != col {
                let col_max = (col + band_hi).min(n - 1);
                for j in col..=col_max {
                    let a = self.get(col, j);
                    let c = self.get(p, j);
                    self.set(col, j, c);
                    self.set(p, j, a);
                }
                b.swap(col, p);
            }
            let pivot = self.get(col, col);
            for r in col + 1..=row_max {
                let m = self.get(r, col) / pivot;
                if m == S::zero() {
                    continue;
                }
                let col_max = (col + band_hi).min(n - 1);
                for j in col + 1..=col_max {
                    let v = self.get(r, j) - m * self.get(col, j);
                    self.set(r, j, v);
                }
                let bc = b[col];
                b[r] = b[r] - m * bc;
                self.set(r, col, S::zero());
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            let col_max = (i + band_hi).min(n - 1);
            for j in i + 1..=col_max {
                acc = acc - self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
        Ok(b)
    }
}

/// Dense LU with partial pivoting on row-major storage; `a` and `b` are
/// consumed. Test-oracle sized.
pub(crate) fn dense_solve<S: Scalar>(n: usize, a: &mut [S], b: &mut [S]) -> Result<Vec<S>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut p = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best == S::zero() || !best.is_finite() {
            return Err(Error::SingularSystem {
                column: col,
                pivot: best.as_f64(),
            });
        }
        if p != col {
            for j in 0..n {
                a.swap(col * n + j, p * n + j);
            }
            b.swap(col, p);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let m = a[r * n + col] / pivot;
            if m == S::zero() {
                continue;
            }
            for j in col + 1..n {
                let v = a[col * n + j];
                a[r * n + j] = a[r * n + j] - m * v;
            }
            let bc = b[col];
            b[r] = b[r] - m * bc;
            a[r * n + col] = S::zero();
        }
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc = acc - a[i * n + j] * x[j];
        }
        x[i] = acc / a[i * n + i];
    }
    Ok(x)
}
