//! Second-order (Lorentz) cone and PSD cone geometry.
//!
//! A Lorentz vector is stored flat as `[y0, ybar...]`; the cone is
//! `Q_{l+1} = { y : y0 >= ‖ybar‖ }`. It is self-dual, so its polar is `-Q`.

use crate::error::{Error, Result};
use crate::numerics::{self, eig_sym, norm, SymMat};
use crate::scalar::Real;

/// A point `(y0, ybar)` of `R^{l+1}`, `l >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzVec<T>(Vec<T>);

impl<T: Real> LorentzVec<T> {
    pub fn new(y0: T, ybar: &[T]) -> Result<Self> {
        let mut v = Vec::with_capacity(ybar.len() + 1);
        v.push(y0);
        v.extend_from_slice(ybar);
        Self::from_vec(v)
    }

    pub fn from_vec(v: Vec<T>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: v.len(),
            });
        }
        Ok(Self(v))
    }

    pub fn y0(&self) -> T {
        self.0[0]
    }

    pub fn ybar(&self) -> &[T] {
        &self.0[1..]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn proj(&self) -> Self {
        Self(proj_lorentz(&self.0))
    }

    pub fn dist(&self) -> T {
        dist_lorentz(&self.0)
    }

    pub fn contains(&self) -> bool {
        in_lorentz(&self.0)
    }
}

/// Euclidean projection onto `Q_{l+1}`.
pub fn proj_lorentz<T: Real>(y: &[T]) -> Vec<T> {
    let y0 = y[0];
    let ybar = &y[1..];
    let nb = norm(ybar);
    if y0 >= nb {
        return y.to_vec();
    }
    // Polar side, inclusive of the ray y0 = -‖ybar‖ (covers ybar = 0, y0 < 0).
    if y0 <= -nb {
        return vec![T::zero(); y.len()];
    }
    let s = (y0 + nb) / T::lit(2.0);
    let mut out = Vec::with_capacity(y.len());
    out.push(s);
    out.extend(ybar.iter().map(|&v| s * v / nb));
    out
}

pub fn dist_lorentz<T: Real>(y: &[T]) -> T {
    numerics::dist(y, &proj_lorentz(y))
}

/// Membership with a `1e-12` slack.
pub fn in_lorentz<T: Real>(y: &[T]) -> bool {
    y[0] >= norm(&y[1..]) - T::tol(1e-12)
}

/// Projection onto the polar cone `-Q`.
pub fn proj_lorentz_polar<T: Real>(y: &[T]) -> Vec<T> {
    let neg: Vec<T> = y.iter().map(|&v| -v).collect();
    proj_lorentz(&neg).into_iter().map(|v| -v).collect()
}

/// Moreau decomposition residual `‖y − P_Q(y) − P_{-Q}(y)‖`.
pub fn moreau_check<T: Real>(y: &[T]) -> T {
    let p = proj_lorentz(y);
    let m = proj_lorentz_polar(y);
    let r: Vec<T> = y.iter().zip(p.iter().zip(&m)).map(|(&a, (&b, &c))| a - b - c).collect();
    norm(&r)
}

/// Projection `[A]_+` onto the PSD cone.
pub fn proj_psd<T: Real>(a: &SymMat<T>) -> Result<SymMat<T>> {
    let e = eig_sym(a)?;
    Ok(e.rebuild_with(|v| v.max(T::zero())))
}

/// Projection onto the negative semidefinite cone.
pub fn proj_nsd<T: Real>(a: &SymMat<T>) -> Result<SymMat<T>> {
    let e = eig_sym(a)?;
    Ok(e.rebuild_with(|v| v.min(T::zero())))
}

/// `dist(A, S_-) = ‖[A]_+‖_F`.
pub fn dist_nsd<T: Real>(a: &SymMat<T>) -> Result<T> {
    let e = eig_sym(a)?;
    Ok(e.values
        .iter()
        .map(|&v| {
            let p = v.max(T::zero());
            p * p
        })
        .sum::<T>()
        .sqrt())
}

/// Smallest eigenvalue.
pub fn min_eig<T: Real>(a: &SymMat<T>) -> Result<T> {
    let e = eig_sym(a)?;
    Ok(e.values.first().copied().unwrap_or(T::zero()))
}

/// Direct product `Q_{l_1+1} × … × Q_{l_r+1}` over a flat vector.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConeProduct {
    blocks: Vec<usize>,
}

impl ConeProduct {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if let Some(&b) = blocks.iter().find(|&&b| b < 2) {
            return Err(Error::InvalidInput(format!("Lorentz block dimension {b} < 2")));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Splits a flat vector into per-block slices.
    pub fn split<'a, T>(&self, y: &'a [T]) -> Vec<&'a [T]> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for &b in &self.blocks {
            out.push(&y[off..off + b]);
            off += b;
        }
        out
    }

    pub fn proj<T: Real>(&self, y: &[T]) -> Vec<T> {
        self.split(y).into_iter().flat_map(|b| proj_lorentz(b)).collect()
    }

    pub fn dist<T: Real>(&self, y: &[T]) -> T {
        numerics::dist(y, &self.proj(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force distance to `Q_2` over a polar grid of cone points.
    fn grid_dist_q2(y: &[f64]) -> (f64, [f64; 2]) {
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        let n = 2000;
        for i in 0..=n {
            let r = 4.0 * i as f64 / n as f64;
            for z1 in [-r, r] {
                // Boundary points (r, ±r) and the axis (r, 0) suffice near the answer.
                for z in [[r, z1], [r, 0.0]] {
                    let d = ((y[0] - z[0]).powi(2) + (y[1] - z[1]).powi(2)).sqrt();
                    if d < best.0 {
                        best = (d, z);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn interior_point_is_fixed() {
        assert_eq!(proj_lorentz(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(dist_lorentz(&[5.0, 3.0]), 0.0);
    }

    #[test]
    fn polar_point_maps_to_origin() {
        assert_eq!(proj_lorentz(&[-1.0, 0.0, 0.0]), vec![0.0; 3]);
        assert!((dist_lorentz(&[-1.0f64, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_case_matches_grid_oracle() {
        let y = [0.0, 2.0];
        let p: Vec<f64> = proj_lorentz(&y);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let (d_grid, z) = grid_dist_q2(&y);
        assert!((dist_lorentz(&y) - 2f64.sqrt()).abs() < 1e-14);
        assert!((d_grid - 2f64.sqrt()).abs() < 1e-9);
        assert!((z[0] - 1.0).abs() < 1e-9 && (z[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn moreau_examples() {
        for y in [vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, 0.0, 0.0]] {
            assert!(moreau_check(&y) <= 1e-10);
        }
        let y = [0.0, 2.0];
        let m: Vec<f64> = proj_lorentz_polar(&y);
        assert!((m[0] + 1.0).abs() < 1e-15 && (m[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ray_tie_break_is_polar() {
        assert_eq!(proj_lorentz(&[-2.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn psd_projection_examples() {
        let i3 = SymMat::<f64>::identity(3);
        assert!(proj_psd(&i3).unwrap().sub(&i3).frobenius_norm() < 1e-14);
        let p = proj_psd(&SymMat::from_diag(&[2.0, -3.0])).unwrap();
        assert!(p.sub(&SymMat::from_diag(&[2.0, 0.0])).frobenius_norm() < 1e-14);

        let a = SymMat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = proj_psd(&a).unwrap();
        let want = SymMat::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(p.sub(&want).frobenius_norm() < 1e-12);
        assert!((a.sub(&p).frobenius_norm() - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn psd_distance_beats_sampled_psd_matrices() {
        // PSD 2×2 matrices [[a, b], [b, c]] with a, c >= 0 and ac >= b².
        let a = SymMat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = a.sub(&proj_psd(&a).unwrap()).frobenius_norm();
        let mut best = f64::INFINITY;
        let n = 120;
        for i in 0..=n {
            for j in 0..=n {
                let da = 1.2 * i as f64 / n as f64;
                let dc = 1.2 * j as f64 / n as f64;
                let b = (da * dc).sqrt();
                let cand = SymMat::from_rows(&[vec![da, b], vec![b, dc]]).unwrap();
                best = best.min(a.sub(&cand).frobenius_norm());
            }
        }
        assert!(d <= best + 1e-12);
        assert!(best - d < 1e-3);
    }

    #[test]
    fn cone_product_splits_blocks() {
        let k = ConeProduct::new(vec![2, 3]).unwrap();
        let y = [0.0, 2.0, -1.0, 0.0, 0.0];
        let p = k.proj(&y);
        assert_eq!(p, vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!((k.dist(&y) - (2.0f64 + 1.0).sqrt()).abs() < 1e-14);
        assert!(ConeProduct::new(vec![1]).is_err());
    }

    #[test]
    fn lorentz_vec_invariant() {
        assert!(LorentzVec::new(1.0, &[]).is_err());
        let v = LorentzVec::new(0.0f32, &[2.0]).unwrap();
        let p = v.proj();
        assert!((p.y0() - 1.0).abs() < 1e-6 && (p.ybar()[0] - 1.0).abs() < 1e-6);
    }
}
