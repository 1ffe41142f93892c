//! Central finite differences.

use crate::error::{Error, Result};
use crate::numerics::norm;
use crate::scalar::Real;

/// Default step `1e-6 · (1 + ‖x‖)` in double precision; `cbrt(eps)` scaling
/// in single precision, where `1e-6` is below the rounding floor.
pub fn default_step<T: Real>(x: &[T]) -> T {
    let base = if T::epsilon() < T::lit(1e-10) {
        T::lit(1e-6)
    } else {
        T::epsilon().cbrt()
    };
    base * (T::one() + norm(x))
}

/// Gradient of a scalar map.
pub fn fd_gradient<T: Real>(f: impl Fn(&[T]) -> T, x: &[T], step: Option<T>) -> Result<Vec<T>> {
    let h = step.unwrap_or_else(|| default_step(x));
    if !(h > T::zero()) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let mut xp = x.to_vec();
    let two_h = h + h;
    (0..x.len())
        .map(|k| {
            xp[k] = x[k] + h;
            let fp = f(&xp);
            xp[k] = x[k] - h;
            let fm = f(&xp);
            xp[k] = x[k];
            if !fp.is_finite() || !fm.is_finite() {
                return Err(Error::NonFiniteEvaluation(format!(
                    "finite difference along coordinate {k}"
                )));
            }
            Ok((fp - fm) / two_h)
        })
        .collect()
}

/// Jacobian of a vector map; `jac[i][k] = ∂F_i/∂x_k`.
pub fn fd_jacobian<T: Real>(f: impl Fn(&[T]) -> Vec<T>, x: &[T], step: Option<T>) -> Result<Vec<Vec<T>>> {
    let h = step.unwrap_or_else(|| default_step(x));
    if !(h > T::zero()) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let m = f(x).len();
    let mut jac = vec![vec![T::zero(); x.len()]; m];
    let mut xp = x.to_vec();
    let two_h = h + h;
    for k in 0..x.len() {
        xp[k] = x[k] + h;
        let fp = f(&xp);
        xp[k] = x[k] - h;
        let fm = f(&xp);
        xp[k] = x[k];
        for i in 0..m {
            let d = (fp[i] - fm[i]) / two_h;
            if !d.is_finite() {
                return Err(Error::NonFiniteEvaluation(format!(
                    "finite difference of component {i} along coordinate {k}"
                )));
            }
            jac[i][k] = d;
        }
    }
    Ok(jac)
}
