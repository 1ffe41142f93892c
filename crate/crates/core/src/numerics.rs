//! Dense real linear algebra for the cone and penalty kernels.
//!
//! Vectors are plain slices; symmetric matrices are stored in full row-major
//! form with symmetry enforced on every write.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_JACOBI_SWEEPS: usize = 100;
const MAX_EIG_ORDER: usize = 64;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

pub fn all_finite<T: Real>(a: &[T]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Real symmetric matrix of order `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat<T> {
    order: usize,
    data: Vec<T>,
}

impl<T: Real> SymMat<T> {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            data: vec![T::zero(); order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[i * order + i] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from row-major rows; rejects inputs that are not symmetric to
    /// within `1e-12` relative, then averages the two triangles.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        let scale = rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()));
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if !all_finite(row) {
                return Err(Error::NonFiniteEvaluation("matrix entry".into()));
            }
        }
        let tol = T::tol(1e-12) * (T::one() + scale);
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for j in i..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > tol {
                    return Err(Error::InvalidInput(format!("matrix not symmetric at ({i},{j})")));
                }
                m.set(i, j, (a + b) / T::lit(2.0));
            }
        }
        Ok(m)
    }

    /// Builds from the upper triangle (`j >= i`) of a generator.
    pub fn from_upper_fn(order: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in i..order {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    pub fn max_diag(&self) -> T {
        (0..self.order).fold(T::neg_infinity(), |acc, i| acc.max(self.get(i, i)))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.order)
            .map(|i| dot(&self.data[i * self.order..(i + 1) * self.order], x))
            .collect()
    }

    pub fn trace(&self) -> T {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        norm(&self.data)
    }

    /// `trace(A B)` for symmetric `A`, `B`; equals the Frobenius inner product.
    pub fn inner(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            order: self.order,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            order: self.order,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-T::one()))
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Upper-triangle entries in row-major order, `l(l+1)/2` values.
    pub fn upper(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.order * (self.order + 1) / 2);
        for i in 0..self.order {
            for j in i..self.order {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn from_upper(order: usize, upper: &[T]) -> Result<Self> {
        let want = order * (order + 1) / 2;
        if upper.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: upper.len(),
            });
        }
        let mut it = upper.iter();
        Ok(Self::from_upper_fn(order, |_, _| *it.next().unwrap()))
    }
}

/// Eigen-decomposition `A = V diag(values) Vᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomp<T> {
    pub values: Vec<T>,
    /// Row-major `l × l`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<T>,
}

impl<T: Real> EigenDecomp<T> {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        let n = self.order();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }

    /// `V diag(w(values)) Vᵀ`.
    pub fn rebuild_with(&self, w: impl Fn(T) -> T) -> SymMat<T> {
        let n = self.order();
        let wv: Vec<T> = self.values.iter().map(|&v| w(v)).collect();
        SymMat::from_upper_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors[i * n + k] * wv[k] * self.vectors[j * n + k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMat<T> {
        self.rebuild_with(|v| v)
    }

    /// `‖VᵀV − I‖_F`.
    pub fn orthonormality_error(&self) -> T {
        let n = self.order();
        let mut acc = T::zero();
        for a in 0..n {
            for b in 0..n {
                let g: T = (0..n).map(|i| self.vectors[i * n + a] * self.vectors[i * n + b]).sum();
                let e = if a == b { g - T::one() } else { g };
                acc += e * e;
            }
        }
        acc.sqrt()
    }
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky factorization.
///
/// A pivot below `1e-12 · max diag(A)` is reported as `NotPositiveDefinite`.
pub fn chol_solve<T: Real>(a: &SymMat<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.order();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let max_diag = a.max_diag();
    let threshold = T::lit(1e-12) * max_diag;
    if !(max_diag > T::zero()) {
        return Err(Error::NotPositiveDefinite {
            row: 0,
            pivot: max_diag.as_f64(),
        });
    }
    // Lower factor, row-major.
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d >= threshold) || d <= T::zero() {
            return Err(Error::NotPositiveDefinite {
                row: j,
                pivot: d.as_f64(),
            });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

fn off_diag_norm<T: Real>(a: &[T], n: usize) -> T {
    let mut s = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[i * n + j] * a[i * n + j];
        }
    }
    (s + s).sqrt()
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops to `1e-12 · ‖A‖_F`
/// (or a few ulps in single precision); 100 sweeps without convergence is an error.
pub fn eig_sym<T: Real>(m: &SymMat<T>) -> Result<EigenDecomp<T>> {
    let n = m.order();
    if n > MAX_EIG_ORDER {
        return Err(Error::InvalidInput(format!(
            "eigensolver order {n} exceeds {MAX_EIG_ORDER}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFiniteEvaluation("eig_sym input".into()));
    }
    let mut a = m.as_slice().to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let target = T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * m.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diag_norm(&a, n);
        if off <= target {
            break;
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off.as_f64(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let values = idx.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (new_k, &old_k) in idx.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    Ok(EigenDecomp { values, vectors })
}
