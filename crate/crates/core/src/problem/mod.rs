//! Constrained problem model: minimize `f(x)` subject to `g_i(x) ∈ Q_{l_i+1}`,
//! optionally `G(x) ⪯ 0`, `h(x) = 0`, and `x` in a box.

use std::sync::Arc;

use crate::cones::{dist_lorentz, dist_nsd, proj_psd};
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, SymMat};
use crate::scalar::Real;

mod fd;
pub mod fixtures;
mod registry;

pub use fd::{default_step, fd_gradient, fd_jacobian};
pub use registry::{lookup, registry, REGISTRY_NAMES};

pub type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type VecFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
/// Row-major Jacobian: one row per output component.
pub type JacFn<T> = Arc<dyn Fn(&[T]) -> Vec<Vec<T>> + Send + Sync>;
pub type SymFn<T> = Arc<dyn Fn(&[T]) -> SymMat<T> + Send + Sync>;
/// Partial derivatives `∂G/∂x_k`, one matrix per coordinate.
pub type SymPartialsFn<T> = Arc<dyn Fn(&[T]) -> Vec<SymMat<T>> + Send + Sync>;

#[derive(Clone)]
pub struct SocBlock<T> {
    pub dim: usize,
    pub map: VecFn<T>,
    pub jacobian: Option<JacFn<T>>,
}

#[derive(Clone)]
pub struct SdpConstraint<T> {
    pub order: usize,
    pub map: SymFn<T>,
    pub partials: Option<SymPartialsFn<T>>,
}

#[derive(Clone)]
pub struct EqConstraint<T> {
    pub dim: usize,
    pub map: VecFn<T>,
    pub jacobian: Option<JacFn<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> BoxSet<T> {
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![T::neg_infinity(); dim],
            upper: vec![T::infinity(); dim],
        }
    }

    pub fn uniform(dim: usize, lo: T, hi: T) -> Self {
        Self {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn clip(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| v.max(lo).min(hi))
            .collect()
    }

    /// Euclidean distance from `x` to the box.
    pub fn gap(&self, x: &[T]) -> T {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| {
                let e = (lo - v).max(v - hi).max(T::zero());
                e * e
            })
            .sum::<T>()
            .sqrt()
    }

    /// Box scaled about its centre by `factor`; infinite sides stay infinite.
    pub fn expanded(&self, factor: T) -> Self {
        let two = T::lit(2.0);
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                if !(lo.is_finite() && hi.is_finite()) {
                    return (lo, hi);
                }
                let c = (lo + hi) / two;
                let r = (hi - lo) / two * factor;
                (c - r, c + r)
            })
            .unzip();
        Self { lower, upper }
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }
}

/// Lagrange multipliers `(λ, μ)` for every constraint kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers<T> {
    /// One vector per Lorentz block; dual feasibility is `λ_i ∈ -Q`.
    pub soc: Vec<Vec<T>>,
    /// Multiplier of `G(x) ⪯ 0`; dual feasibility is `λ ⪰ 0`.
    pub sdp: Option<SymMat<T>>,
    pub eq: Vec<T>,
}

impl<T: Real> Multipliers<T> {
    pub fn zeros_for(p: &ConstrainedProblem<T>) -> Self {
        Self {
            soc: p.soc_blocks.iter().map(|b| vec![T::zero(); b.dim]).collect(),
            sdp: p.sdp.as_ref().map(|s| SymMat::zeros(s.order)),
            eq: vec![T::zero(); p.eq_dim()],
        }
    }

    /// `‖λ‖² + ‖μ‖²` with the Frobenius norm on the matrix part.
    pub fn norm_sq(&self) -> T {
        let soc: T = self.soc.iter().map(|l| dot(l, l)).sum();
        let sdp = self.sdp.as_ref().map_or(T::zero(), |m| m.frobenius_norm().powi(2));
        soc + sdp + dot(&self.eq, &self.eq)
    }

    /// Flat layout: Lorentz blocks, then the matrix upper triangle, then `μ`.
    pub fn flatten(&self) -> Vec<T> {
        let mut v: Vec<T> = self.soc.iter().flatten().copied().collect();
        if let Some(m) = &self.sdp {
            v.extend(m.upper());
        }
        v.extend_from_slice(&self.eq);
        v
    }

    pub fn unflatten(p: &ConstrainedProblem<T>, flat: &[T]) -> Result<Self> {
        let want = p.multiplier_dim();
        if flat.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: flat.len(),
            });
        }
        let mut off = 0;
        let soc = p
            .soc_blocks
            .iter()
            .map(|b| {
                let v = flat[off..off + b.dim].to_vec();
                off += b.dim;
                v
            })
            .collect();
        let sdp = match &p.sdp {
            Some(s) => {
                let n = s.order * (s.order + 1) / 2;
                let m = SymMat::from_upper(s.order, &flat[off..off + n])?;
                off += n;
                Some(m)
            }
            None => None,
        };
        Ok(Self {
            soc,
            sdp,
            eq: flat[off..].to_vec(),
        })
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            soc: self.soc.iter().map(|l| l.iter().map(|&v| v * s).collect()).collect(),
            sdp: self.sdp.as_ref().map(|m| m.scaled(s)),
            eq: self.eq.iter().map(|&v| v * s).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownSolution<T> {
    pub x_star: Vec<T>,
    pub f_star: T,
    pub multipliers: Option<Multipliers<T>>,
}

/// Infeasibility components; `total` vanishes exactly on the feasible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityGap<T> {
    /// `Σ_i dist(g_i(x), Q_{l_i+1})`.
    pub soc_gap: T,
    /// `dist(G(x), S_-)`.
    pub sdp_gap: T,
    /// `‖h(x)‖`.
    pub eq_gap: T,
    pub box_gap: T,
}

impl<T: Real> FeasibilityGap<T> {
    pub fn total(&self) -> T {
        self.soc_gap + self.sdp_gap + self.eq_gap + self.box_gap
    }
}

#[derive(Clone)]
pub struct ConstrainedProblem<T> {
    pub name: String,
    pub dim: usize,
    pub objective: ScalarFn<T>,
    pub gradient: Option<VecFn<T>>,
    pub soc_blocks: Vec<SocBlock<T>>,
    pub sdp: Option<SdpConstraint<T>>,
    pub eq: Option<EqConstraint<T>>,
    pub bounds: BoxSet<T>,
    pub certificate: Option<KnownSolution<T>>,
    /// Projection onto the feasible set `Ω`, when known in closed form.
    pub omega_projection: Option<VecFn<T>>,
    /// `f >= 0` on the box, as required by the nonlinear penalty.
    pub objective_nonnegative: bool,
}

impl<T: Real> std::fmt::Debug for ConstrainedProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstrainedProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("soc_blocks", &self.soc_blocks.iter().map(|b| b.dim).collect::<Vec<_>>())
            .field("sdp_order", &self.sdp.as_ref().map(|s| s.order))
            .field("eq_dim", &self.eq_dim())
            .field("bounds", &self.bounds)
            .field("certificate", &self.certificate)
            .finish()
    }
}

impl<T: Real> ConstrainedProblem<T> {
    pub fn new(name: impl Into<String>, dim: usize, objective: ScalarFn<T>) -> Self {
        Self {
            name: name.into(),
            dim,
            objective,
            gradient: None,
            soc_blocks: Vec::new(),
            sdp: None,
            eq: None,
            bounds: BoxSet::unbounded(dim),
            certificate: None,
            omega_projection: None,
            objective_nonnegative: false,
        }
    }

    pub fn with_gradient(mut self, g: VecFn<T>) -> Self {
        self.gradient = Some(g);
        self
    }

    pub fn with_soc_block(mut self, dim: usize, map: VecFn<T>, jacobian: Option<JacFn<T>>) -> Self {
        self.soc_blocks.push(SocBlock { dim, map, jacobian });
        self
    }

    pub fn with_sdp(mut self, order: usize, map: SymFn<T>, partials: Option<SymPartialsFn<T>>) -> Self {
        self.sdp = Some(SdpConstraint { order, map, partials });
        self
    }

    pub fn with_eq(mut self, dim: usize, map: VecFn<T>, jacobian: Option<JacFn<T>>) -> Self {
        self.eq = Some(EqConstraint { dim, map, jacobian });
        self
    }

    pub fn with_bounds(mut self, bounds: BoxSet<T>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_certificate(mut self, cert: KnownSolution<T>) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn with_omega_projection(mut self, proj: VecFn<T>) -> Self {
        self.omega_projection = Some(proj);
        self
    }

    pub fn with_nonnegative_objective(mut self, nonneg: bool) -> Self {
        self.objective_nonnegative = nonneg;
        self
    }

    pub fn eq_dim(&self) -> usize {
        self.eq.as_ref().map_or(0, |e| e.dim)
    }

    /// Length of the flat multiplier vector (see [`Multipliers::flatten`]).
    pub fn multiplier_dim(&self) -> usize {
        let soc: usize = self.soc_blocks.iter().map(|b| b.dim).sum();
        let sdp = self.sdp.as_ref().map_or(0, |s| s.order * (s.order + 1) / 2);
        soc + sdp + self.eq_dim()
    }

    pub fn has_constraints(&self) -> bool {
        !self.soc_blocks.is_empty() || self.sdp.is_some() || self.eq_dim() > 0
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn f(&self, x: &[T]) -> T {
        (self.objective)(x)
    }

    pub fn grad_f(&self, x: &[T]) -> Result<Vec<T>> {
        match &self.gradient {
            Some(g) => Ok(g(x)),
            None => fd_gradient(|z| (self.objective)(z), x, None),
        }
    }

    pub fn soc_values(&self, x: &[T]) -> Vec<Vec<T>> {
        self.soc_blocks.iter().map(|b| (b.map)(x)).collect()
    }

    pub fn soc_jacobian(&self, i: usize, x: &[T]) -> Result<Vec<Vec<T>>> {
        let b = &self.soc_blocks[i];
        match &b.jacobian {
            Some(j) => Ok(j(x)),
            None => fd_jacobian(|z| (b.map)(z), x, None),
        }
    }

    pub fn eq_value(&self, x: &[T]) -> Vec<T> {
        self.eq.as_ref().map_or_else(Vec::new, |e| (e.map)(x))
    }

    pub fn eq_jacobian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        match &self.eq {
            None => Ok(Vec::new()),
            Some(e) => match &e.jacobian {
                Some(j) => Ok(j(x)),
                None => fd_jacobian(|z| (e.map)(z), x, None),
            },
        }
    }

    pub fn sdp_value(&self, x: &[T]) -> Option<SymMat<T>> {
        self.sdp.as_ref().map(|s| (s.map)(x))
    }

    pub fn sdp_partials(&self, x: &[T]) -> Result<Vec<SymMat<T>>> {
        let Some(s) = &self.sdp else {
            return Ok(Vec::new());
        };
        if let Some(p) = &s.partials {
            return Ok(p(x));
        }
        let jac = fd_jacobian(|z| (s.map)(z).upper(), x, None)?;
        (0..self.dim)
            .map(|k| {
                let col: Vec<T> = jac.iter().map(|row| row[k]).collect();
                SymMat::from_upper(s.order, &col)
            })
            .collect()
    }

    pub fn feasibility_gap(&self, x: &[T]) -> Result<FeasibilityGap<T>> {
        self.check_dim(x)?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteEvaluation("point".into()));
        }
        let soc_gap = self.soc_values(x).iter().map(|g| dist_lorentz(g)).sum();
        let sdp_gap = match self.sdp_value(x) {
            Some(g) => dist_nsd(&g)?,
            None => T::zero(),
        };
        Ok(FeasibilityGap {
            soc_gap,
            sdp_gap,
            eq_gap: norm(&self.eq_value(x)),
            box_gap: self.bounds.gap(x),
        })
    }

    /// `∇_x L(x, λ, μ)` with `L = f + Σ⟨λ_i, g_i⟩ + trace(λ G) + ⟨μ, h⟩`.
    pub fn lagrangian_gradient(&self, x: &[T], m: &Multipliers<T>) -> Result<Vec<T>> {
        self.check_dim(x)?;
        self.check_multipliers(m)?;
        let mut g = self.grad_f(x)?;
        for (i, lam) in m.soc.iter().enumerate() {
            let jac = self.soc_jacobian(i, x)?;
            for (row, &l) in jac.iter().zip(lam) {
                for (gk, &jk) in g.iter_mut().zip(row) {
                    *gk += l * jk;
                }
            }
        }
        if let Some(lam) = &m.sdp {
            for (gk, dg) in g.iter_mut().zip(self.sdp_partials(x)?) {
                *gk += lam.inner(&dg);
            }
        }
        let jac = self.eq_jacobian(x)?;
        for (row, &mu) in jac.iter().zip(&m.eq) {
            for (gk, &jk) in g.iter_mut().zip(row) {
                *gk += mu * jk;
            }
        }
        Ok(g)
    }

    fn check_multipliers(&self, m: &Multipliers<T>) -> Result<()> {
        if m.soc.len() != self.soc_blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.soc_blocks.len(),
                got: m.soc.len(),
            });
        }
        for (b, l) in self.soc_blocks.iter().zip(&m.soc) {
            if l.len() != b.dim {
                return Err(Error::DimensionMismatch {
                    expected: b.dim,
                    got: l.len(),
                });
            }
        }
        match (&self.sdp, &m.sdp) {
            (Some(s), Some(l)) if l.order() != s.order => {
                return Err(Error::DimensionMismatch {
                    expected: s.order,
                    got: l.order(),
                })
            }
            (Some(s), None) => {
                return Err(Error::DimensionMismatch {
                    expected: s.order,
                    got: 0,
                })
            }
            _ => {}
        }
        if m.eq.len() != self.eq_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.eq_dim(),
                got: m.eq.len(),
            });
        }
        Ok(())
    }

    /// Stationarity + complementarity + dual feasibility + primal feasibility.
    pub fn kkt_residual(&self, x: &[T], m: &Multipliers<T>) -> Result<T> {
        let mut r = norm(&self.lagrangian_gradient(x, m)?);
        for (g, lam) in self.soc_values(x).iter().zip(&m.soc) {
            let neg: Vec<T> = lam.iter().map(|&v| -v).collect();
            r += dot(lam, g).abs() + dist_lorentz(&neg) + dist_lorentz(g);
        }
        if let (Some(g), Some(lam)) = (self.sdp_value(x), &m.sdp) {
            // dist(λ, S_+) = ‖[-λ]_+‖.
            let dual = proj_psd(&lam.scaled(-T::one()))?.frobenius_norm();
            r += lam.inner(&g).abs() + dual + dist_nsd(&g)?;
        }
        r += norm(&self.eq_value(x));
        Ok(r)
    }

    /// `dist(x, Ω)` through the registered projection.
    pub fn dist_to_omega(&self, x: &[T]) -> Option<T> {
        self.omega_projection.as_ref().map(|p| crate::numerics::dist(x, &p(x)))
    }

    /// Distance to the certified optimum, when one is recorded.
    pub fn dist_to_optimum(&self, x: &[T]) -> Option<T> {
        self.certificate.as_ref().map(|c| crate::numerics::dist(x, &c.x_star))
    }

    /// Checks the certificate: feasibility and objective value to `1e-9`,
    /// KKT residual to `1e-6` when multipliers are recorded.
    pub fn validate_certificate(&self) -> Result<()> {
        let Some(c) = &self.certificate else {
            return Ok(());
        };
        let gap = self.feasibility_gap(&c.x_star)?.total();
        if gap > T::lit(1e-9) {
            return Err(Error::InvalidInput(format!(
                "{}: certified point infeasible (gap {gap:e})",
                self.name
            )));
        }
        let df = (self.f(&c.x_star) - c.f_star).abs();
        if df > T::tol(1e-9) * (T::one() + c.f_star.abs()) {
            return Err(Error::InvalidInput(format!(
                "{}: certified value off by {df:e}",
                self.name
            )));
        }
        if let Some(m) = &c.multipliers {
            let r = self.kkt_residual(&c.x_star, m)?;
            if r > T::tol(1e-6) {
                return Err(Error::InvalidInput(format!(
                    "{}: certified KKT residual {r:e}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Replaces `f` by `exp(f)`, which is positive and has the same minimizers.
    /// Certified multipliers scale by `exp(f*)`.
    pub fn exp_transformed(&self) -> Self {
        let f = self.objective.clone();
        let f2 = self.objective.clone();
        let mut out = self.clone();
        out.name = format!("{}+exp", self.name);
        out.objective = Arc::new(move |x| f(x).exp());
        out.gradient = self.gradient.clone().map(|g| {
            let gf: VecFn<T> = Arc::new(move |x: &[T]| {
                let e = f2(x).exp();
                g(x).into_iter().map(|v| v * e).collect()
            });
            gf
        });
        out.certificate = self.certificate.as_ref().map(|c| {
            let e = c.f_star.exp();
            KnownSolution {
                x_star: c.x_star.clone(),
                f_star: e,
                multipliers: c.multipliers.as_ref().map(|m| m.scaled(e)),
            }
        });
        out.objective_nonnegative = true;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_helpers() {
        let b = BoxSet::uniform(2, -1.0f64, 1.0);
        assert!(b.contains(&[0.5, -1.0]));
        assert!(!b.contains(&[1.5, 0.0]));
        assert_eq!(b.clip(&[2.0, -3.0]), vec![1.0, -1.0]);
        assert!((b.gap(&[4.0, 1.0]) - 3.0).abs() < 1e-15);
        assert_eq!(b.expanded(2.0).upper, vec![2.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = lookup::<f64>("toy-eq-1").unwrap();
        assert!(matches!(
            p.feasibility_gap(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let bad = Multipliers {
            soc: vec![],
            sdp: None,
            eq: vec![],
        };
        assert!(p.kkt_residual(&[1.0, 1.0], &bad).is_err());
    }

    #[test]
    fn multiplier_flat_layout() {
        let p = lookup::<f64>("toy-socp-2").unwrap();
        let m = p.certificate.as_ref().unwrap().multipliers.clone().unwrap();
        let flat = m.flatten();
        assert_eq!(flat.len(), p.multiplier_dim());
        assert_eq!(Multipliers::unflatten(&p, &flat).unwrap(), m);
        assert!(Multipliers::unflatten(&p, &flat[1..]).is_err());
    }

    #[test]
    fn exp_transform_keeps_certificate_valid() {
        let p = lookup::<f64>("toy-lin-1").unwrap().exp_transformed();
        p.validate_certificate().unwrap();
        assert!((p.certificate.as_ref().unwrap().f_star - 1.0).abs() < 1e-15);
        assert!(p.objective_nonnegative);
    }

    #[test]
    fn fd_fallback_matches_analytic_sdp_partials() {
        let mut p = lookup::<f64>("toy-sdp-1").unwrap();
        let analytic = p.sdp_partials(&[0.2, 0.7]).unwrap();
        p.sdp.as_mut().unwrap().partials = None;
        let numeric = p.sdp_partials(&[0.2, 0.7]).unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!(a.sub(n).frobenius_norm() < 1e-8);
        }
    }
}
