//! Continuously differentiable exact penalties for second-order cone and
//! semidefinite constraints, built on a least-squares multiplier estimate.
//!
//! The estimate `(λ(x), μ(x))` minimizes a convex quadratic in the flat
//! multiplier layout of [`Multipliers::flatten`]; positive definiteness of
//! its Hessian stands in for nondegeneracy of the constraints at `x`.

use crate::cones::{dist_lorentz, proj_lorentz, proj_nsd, proj_psd};
use crate::error::{Error, Result};
use crate::numerics::{chol_solve, dot, eig_sym, norm, norm_sq, SymMat};
use crate::problem::{fd_gradient, ConstrainedProblem, Multipliers};
use crate::scalar::Real;
use crate::separating::SeparatingFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig<T> {
    pub zeta1: T,
    pub zeta2: T,
}

impl<T: Real> EstimatorConfig<T> {
    pub fn new(zeta1: T, zeta2: T) -> Result<Self> {
        if !(zeta1 > T::zero() && zeta2 > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "estimator weights must be positive, got ({zeta1}, {zeta2})"
            )));
        }
        Ok(Self { zeta1, zeta2 })
    }
}

impl<T: Real> Default for EstimatorConfig<T> {
    fn default() -> Self {
        Self {
            zeta1: T::one(),
            zeta2: T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierEstimate<T> {
    pub multipliers: Multipliers<T>,
    /// Gradient norm of the quadratic objective at the returned solution.
    pub subproblem_residual: T,
    /// Smallest eigenvalue of the quadratic's Hessian; `+∞` when there are no multipliers.
    pub hessian_min_eig: T,
    /// `‖Bᵀ∇f‖`, the scale of the right-hand side of the normal equations.
    pub rhs_norm: T,
}

impl<T: Real> MultiplierEstimate<T> {
    /// `subproblem_residual ≤ 1e-8 (1 + ‖rhs‖)` and a positive-definite Hessian.
    pub fn is_reliable(&self) -> bool {
        self.subproblem_residual <= T::tol(1e-8) * (T::one() + self.rhs_norm) && self.hessian_min_eig > T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConeKind {
    Soc,
    Sdp,
}

fn cone_kind<T: Real>(p: &ConstrainedProblem<T>) -> ConeKind {
    if p.sdp.is_some() {
        ConeKind::Sdp
    } else {
        ConeKind::Soc
    }
}

fn require_kind<T: Real>(p: &ConstrainedProblem<T>, want: ConeKind) -> Result<()> {
    let ok = match want {
        ConeKind::Soc => p.sdp.is_none(),
        ConeKind::Sdp => p.sdp.is_some() && p.soc_blocks.is_empty(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{}: expected {} structure",
            p.name,
            match want {
                ConeKind::Soc => "second-order cone/equality",
                ConeKind::Sdp => "semidefinite/equality",
            }
        )))
    }
}

/// Squared constraint violation `‖h‖² + Σ dist²(g_i, Q) + dist²(G, S₋)`.
fn violation_sq<T: Real>(p: &ConstrainedProblem<T>, x: &[T]) -> Result<T> {
    let mut r = norm_sq(&p.eq_value(x));
    for g in p.soc_values(x) {
        r += dist_lorentz(&g).powi(2);
    }
    if let Some(g) = p.sdp_value(x) {
        r += proj_psd(&g)?.frobenius_norm().powi(2);
    }
    Ok(r)
}

/// Assembles `A = BᵀB + ζ₁CᵀC + (ζ₂/2) r W` and `Bᵀ∇f`, where `B` maps the
/// flat multipliers to `∇ₓL − ∇f`, `C` collects the complementarity terms and
/// `W` is the Gram matrix of the flat layout.
fn assemble<T: Real>(p: &ConstrainedProblem<T>, x: &[T], cfg: &EstimatorConfig<T>) -> Result<(SymMat<T>, Vec<T>)> {
    let n = p.multiplier_dim();
    let d = p.dim;
    let mut b = vec![vec![T::zero(); n]; d];
    let mut c_rows: Vec<Vec<T>> = Vec::new();
    let mut w = vec![T::one(); n];
    let mut off = 0;

    for (i, g) in p.soc_values(x).iter().enumerate() {
        let jac = p.soc_jacobian(i, x)?;
        for (j, row) in jac.iter().enumerate() {
            for k in 0..d {
                b[k][off + j] = row[k];
            }
        }
        // ⟨λ_i, g_i⟩ and (λ_i)₀ ḡ_i + (g_i)₀ λ̄_i.
        let mut r0 = vec![T::zero(); n];
        r0[off..off + g.len()].copy_from_slice(g);
        c_rows.push(r0);
        for j in 1..g.len() {
            let mut r = vec![T::zero(); n];
            r[off] = g[j];
            r[off + j] = g[0];
            c_rows.push(r);
        }
        off += g.len();
    }

    if let (Some(s), Some(gm)) = (&p.sdp, p.sdp_value(x)) {
        let l = s.order;
        let m = l * (l + 1) / 2;
        let partials = p.sdp_partials(x)?;
        let basis: Vec<SymMat<T>> = (0..m)
            .map(|k| {
                let mut e = vec![T::zero(); m];
                e[k] = T::one();
                SymMat::from_upper(l, &e)
            })
            .collect::<Result<_>>()?;
        for (k, e) in basis.iter().enumerate() {
            for (row, dg) in b.iter_mut().zip(&partials) {
                row[off + k] = e.inner(dg);
            }
            w[off + k] = e.inner(e);
        }
        // trace(λ²G²) = ‖λG‖_F², one row per entry of λG.
        for a in 0..l {
            for bb in 0..l {
                let mut r = vec![T::zero(); n];
                for (k, e) in basis.iter().enumerate() {
                    r[off + k] = (0..l).map(|t| e.get(a, t) * gm.get(t, bb)).sum();
                }
                c_rows.push(r);
            }
        }
        off += m;
    }

    for (j, row) in p.eq_jacobian(x)?.iter().enumerate() {
        for k in 0..d {
            b[k][off + j] = row[k];
        }
    }

    let grad = p.grad_f(x)?;
    let ridge = cfg.zeta2 / T::lit(2.0) * violation_sq(p, x)?;
    let a = SymMat::from_upper_fn(n, |i, j| {
        let bb: T = b.iter().map(|row| row[i] * row[j]).sum();
        let cc: T = c_rows.iter().map(|row| row[i] * row[j]).sum();
        let diag = if i == j { ridge * w[i] } else { T::zero() };
        bb + cfg.zeta1 * cc + diag
    });
    let btg: Vec<T> = (0..n)
        .map(|i| b.iter().zip(&grad).map(|(row, &g)| row[i] * g).sum())
        .collect();
    Ok((a, btg))
}

fn estimate<T: Real>(p: &ConstrainedProblem<T>, x: &[T], cfg: &EstimatorConfig<T>) -> Result<MultiplierEstimate<T>> {
    if x.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: x.len(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteEvaluation("estimate point".into()));
    }
    let (a, btg) = assemble(p, x, cfg)?;
    if a.order() == 0 {
        return Ok(MultiplierEstimate {
            multipliers: Multipliers::zeros_for(p),
            subproblem_residual: T::zero(),
            hessian_min_eig: T::infinity(),
            rhs_norm: T::zero(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteEvaluation("multiplier estimate system".into()));
    }
    let rhs: Vec<T> = btg.iter().map(|&v| -v).collect();
    let z = chol_solve(&a, &rhs)?;
    let az = a.mul_vec(&z);
    let two = T::lit(2.0);
    let grad: Vec<T> = az.iter().zip(&rhs).map(|(&u, &v)| two * (u - v)).collect();
    let hessian_min_eig = two * eig_sym(&a)?.values[0];
    Ok(MultiplierEstimate {
        multipliers: Multipliers::unflatten(p, &z)?,
        subproblem_residual: norm(&grad),
        hessian_min_eig,
        rhs_norm: norm(&rhs),
    })
}

/// Multiplier estimate for a problem with Lorentz-cone and equality constraints.
pub fn estimate_multipliers_soc<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    cfg: &EstimatorConfig<T>,
) -> Result<MultiplierEstimate<T>> {
    require_kind(p, ConeKind::Soc)?;
    estimate(p, x, cfg)
}

/// Multiplier estimate for a problem with one matrix inequality `G(x) ⪯ 0`
/// and equality constraints.
pub fn estimate_multipliers_sdp<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    cfg: &EstimatorConfig<T>,
) -> Result<MultiplierEstimate<T>> {
    require_kind(p, ConeKind::Sdp)?;
    estimate(p, x, cfg)
}

/// Barrier terms `a, b, p, q` and membership of `Ω_α = {a > 0, b > 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierState<T> {
    pub alpha: T,
    pub kappa: T,
    pub a_val: T,
    pub b_val: T,
    pub p_val: T,
    pub q_val: T,
    pub inside_domain: bool,
}

fn check_barrier_params<T: Real>(alpha: T, kappa: T, kappa_min: f64) -> Result<()> {
    if !(alpha > T::zero()) || !(kappa >= T::lit(kappa_min)) || !kappa.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need alpha > 0 and kappa >= {kappa_min}, got ({alpha}, {kappa})"
        )));
    }
    Ok(())
}

fn barrier_from<T: Real>(alpha: T, kappa: T, cone_violation: T, lambda_sq: T, h_sq: T, mu_sq: T) -> BarrierState<T> {
    let a_val = alpha - cone_violation;
    let b_val = alpha - h_sq;
    BarrierState {
        alpha,
        kappa,
        a_val,
        b_val,
        p_val: a_val / (T::one() + lambda_sq),
        q_val: b_val / (T::one() + mu_sq),
        inside_domain: a_val > T::zero() && b_val > T::zero(),
    }
}

/// `a = α − Σ dist^ϰ(g_i, Q)`, `b = α − ‖h‖²`, `p = a / (1 + Σ‖λ_i‖²)`,
/// `q = b / (1 + ‖μ‖²)`.
pub fn barrier_state_soc<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    alpha: T,
    kappa: T,
    est: &MultiplierEstimate<T>,
) -> Result<BarrierState<T>> {
    check_barrier_params(alpha, kappa, 2.0)?;
    let viol: T = p.soc_values(x).iter().map(|g| dist_lorentz(g).powf(kappa)).sum();
    let lam: T = est.multipliers.soc.iter().map(|l| norm_sq(l)).sum();
    Ok(barrier_from(
        alpha,
        kappa,
        viol,
        lam,
        norm_sq(&p.eq_value(x)),
        norm_sq(&est.multipliers.eq),
    ))
}

/// SDP analogue: `a = α − trace([G]₊²)^ϰ`, `p = a / (1 + trace(λ²))`.
pub fn barrier_state_sdp<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    alpha: T,
    kappa: T,
    est: &MultiplierEstimate<T>,
) -> Result<BarrierState<T>> {
    check_barrier_params(alpha, kappa, 1.0)?;
    let g = p
        .sdp_value(x)
        .ok_or_else(|| Error::InvalidInput("problem has no matrix constraint".into()))?;
    let viol = proj_psd(&g)?.frobenius_norm().powi(2).powf(kappa);
    let lam = est
        .multipliers
        .sdp
        .as_ref()
        .map_or(T::zero(), |l| l.frobenius_norm().powi(2));
    Ok(barrier_from(
        alpha,
        kappa,
        viol,
        lam,
        norm_sq(&p.eq_value(x)),
        norm_sq(&est.multipliers.eq),
    ))
}

/// Parameters shared by the SOC and SDP penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothPenaltyParams<T> {
    pub alpha: T,
    pub kappa: T,
    pub estimator: EstimatorConfig<T>,
}

impl<T: Real> SmoothPenaltyParams<T> {
    pub fn soc_default() -> Self {
        Self {
            alpha: T::one(),
            kappa: T::lit(2.0),
            estimator: EstimatorConfig::default(),
        }
    }

    pub fn sdp_default() -> Self {
        Self {
            alpha: T::one(),
            kappa: T::one(),
            estimator: EstimatorConfig::default(),
        }
    }
}

struct Evaluated<T> {
    est: MultiplierEstimate<T>,
    bs: BarrierState<T>,
}

fn evaluate_state<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    kind: ConeKind,
    prm: &SmoothPenaltyParams<T>,
) -> Result<Evaluated<T>> {
    let est = estimate(p, x, &prm.estimator)?;
    let bs = match kind {
        ConeKind::Soc => barrier_state_soc(p, x, prm.alpha, prm.kappa, &est)?,
        ConeKind::Sdp => barrier_state_sdp(p, x, prm.alpha, prm.kappa, &est)?,
    };
    Ok(Evaluated { est, bs })
}

fn check_c<T: Real>(c: T) -> Result<()> {
    if !(c > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "penalty parameter must be positive, got {c}"
        )));
    }
    Ok(())
}

/// `⟨μ, h⟩ + (c / 2q) ‖h‖²`.
fn equality_terms<T: Real>(h: &[T], mu: &[T], q: T, c: T) -> T {
    dot(mu, h) + c / (T::lit(2.0) * q) * norm_sq(h)
}

fn c1_value<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    c: T,
    kind: ConeKind,
    prm: &SmoothPenaltyParams<T>,
) -> Result<T> {
    check_c(c)?;
    let Evaluated { est, bs } = evaluate_state(p, x, kind, prm)?;
    if !bs.inside_domain {
        return Ok(T::infinity());
    }
    let pv = bs.p_val;
    let two = T::lit(2.0);
    let m = &est.multipliers;
    let cone = match kind {
        ConeKind::Soc => {
            let s = pv / c;
            let sum: T = p
                .soc_values(x)
                .iter()
                .zip(&m.soc)
                .map(|(g, l)| {
                    let shifted: Vec<T> = g.iter().zip(l).map(|(&gi, &li)| gi + s * li).collect();
                    dist_lorentz(&shifted).powi(2) - s * s * norm_sq(l)
                })
                .sum();
            c / (two * pv) * sum
        }
        ConeKind::Sdp => {
            let g = p.sdp_value(x).expect("checked kind");
            let l = m.sdp.as_ref().expect("estimate has matrix part");
            let shifted = g.scaled(c).add(&l.scaled(pv));
            let t = proj_psd(&shifted)?.frobenius_norm().powi(2);
            (t - pv * pv * l.frobenius_norm().powi(2)) / (two * c * pv)
        }
    };
    let v = p.f(x) + cone + equality_terms(&p.eq_value(x), &m.eq, bs.q_val, c);
    if v.is_nan() {
        return Err(Error::NonFiniteEvaluation("smooth penalty".into()));
    }
    Ok(v)
}

/// `F(x, c)` for Lorentz-cone constraints; `+∞` outside `Ω_α`.
pub fn c1_penalty_soc<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    c: T,
    alpha: T,
    kappa: T,
    cfg: &EstimatorConfig<T>,
) -> Result<T> {
    require_kind(p, ConeKind::Soc)?;
    let prm = SmoothPenaltyParams {
        alpha,
        kappa,
        estimator: *cfg,
    };
    c1_value(p, x, c, ConeKind::Soc, &prm)
}

/// `F(x, c)` for a matrix inequality `G(x) ⪯ 0`; `+∞` outside `Ω_α`.
pub fn c1_penalty_sdp<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    c: T,
    alpha: T,
    kappa: T,
    cfg: &EstimatorConfig<T>,
) -> Result<T> {
    require_kind(p, ConeKind::Sdp)?;
    let prm = SmoothPenaltyParams {
        alpha,
        kappa,
        estimator: *cfg,
    };
    c1_value(p, x, c, ConeKind::Sdp, &prm)
}

/// `Φ(x, c) = min over y ∈ K − G(x) of −p⟨λ, y⟩ + (c/2)‖y‖²`, evaluated at its
/// minimizer `y = P_K(G + (p/c)λ) − G`. Works for either cone type.
pub fn phi_aux<T: Real>(p: &ConstrainedProblem<T>, x: &[T], c: T, prm: &SmoothPenaltyParams<T>) -> Result<T> {
    check_c(c)?;
    let kind = cone_kind(p);
    require_kind(p, kind)?;
    let Evaluated { est, bs } = evaluate_state(p, x, kind, prm)?;
    if !bs.inside_domain {
        return Err(Error::OutsideDomain);
    }
    let (pv, half) = (bs.p_val, T::lit(0.5));
    let s = pv / c;
    let m = &est.multipliers;
    let mut phi = T::zero();
    match kind {
        ConeKind::Soc => {
            for (g, l) in p.soc_values(x).iter().zip(&m.soc) {
                let shifted: Vec<T> = g.iter().zip(l).map(|(&gi, &li)| gi + s * li).collect();
                let y: Vec<T> = proj_lorentz(&shifted).iter().zip(g).map(|(&z, &gi)| z - gi).collect();
                phi += -pv * dot(l, &y) + half * c * norm_sq(&y);
            }
        }
        ConeKind::Sdp => {
            let g = p.sdp_value(x).expect("checked kind");
            let l = m.sdp.as_ref().expect("estimate has matrix part");
            let y = proj_nsd(&g.add(&l.scaled(s)))?.sub(&g);
            phi = -pv * l.inner(&y) + half * c * y.frobenius_norm().powi(2);
        }
    }
    Ok(phi)
}

/// `f + Φ/p + ⟨μ, h⟩ + (c/2q)‖h‖²`, a second route to `F(x, c)` inside `Ω_α`.
pub fn c1_penalty_via_phi<T: Real>(
    p: &ConstrainedProblem<T>,
    x: &[T],
    c: T,
    prm: &SmoothPenaltyParams<T>,
) -> Result<T> {
    let phi = phi_aux(p, x, c, prm)?;
    let Evaluated { est, bs } = evaluate_state(p, x, cone_kind(p), prm)?;
    Ok(p.f(x) + phi / bs.p_val + equality_terms(&p.eq_value(x), &est.multipliers.eq, bs.q_val, c))
}

/// The smooth penalty as a [`SeparatingFunction`].
#[derive(Clone)]
pub struct C1Penalty<T> {
    problem: ConstrainedProblem<T>,
    params: SmoothPenaltyParams<T>,
    kind: ConeKind,
}

impl<T: Real> C1Penalty<T> {
    /// Lorentz-cone variant with `α = 1`, `ϰ = 2`, `ζ₁ = ζ₂ = 1`.
    pub fn soc(problem: ConstrainedProblem<T>) -> Result<Self> {
        Self::soc_with(problem, SmoothPenaltyParams::soc_default())
    }

    pub fn soc_with(problem: ConstrainedProblem<T>, params: SmoothPenaltyParams<T>) -> Result<Self> {
        require_kind(&problem, ConeKind::Soc)?;
        check_barrier_params(params.alpha, params.kappa, 2.0)?;
        EstimatorConfig::new(params.estimator.zeta1, params.estimator.zeta2)?;
        Ok(Self {
            problem,
            params,
            kind: ConeKind::Soc,
        })
    }

    /// Semidefinite variant with `α = 1`, `ϰ = 1`, `ζ₁ = ζ₂ = 1`.
    pub fn sdp(problem: ConstrainedProblem<T>) -> Result<Self> {
        Self::sdp_with(problem, SmoothPenaltyParams::sdp_default())
    }

    pub fn sdp_with(problem: ConstrainedProblem<T>, params: SmoothPenaltyParams<T>) -> Result<Self> {
        require_kind(&problem, ConeKind::Sdp)?;
        check_barrier_params(params.alpha, params.kappa, 1.0)?;
        EstimatorConfig::new(params.estimator.zeta1, params.estimator.zeta2)?;
        Ok(Self {
            problem,
            params,
            kind: ConeKind::Sdp,
        })
    }

    pub fn params(&self) -> &SmoothPenaltyParams<T> {
        &self.params
    }

    pub fn estimate(&self, x: &[T]) -> Result<MultiplierEstimate<T>> {
        estimate(&self.problem, x, &self.params.estimator)
    }

    pub fn barrier(&self, x: &[T]) -> Result<BarrierState<T>> {
        Ok(evaluate_state(&self.problem, x, self.kind, &self.params)?.bs)
    }
}

impl<T: Real> SeparatingFunction<T> for C1Penalty<T> {
    fn label(&self) -> String {
        match self.kind {
            ConeKind::Soc => "c1-socp".into(),
            ConeKind::Sdp => "c1-sdp".into(),
        }
    }

    fn problem(&self) -> &ConstrainedProblem<T> {
        &self.problem
    }

    fn eval(&self, x: &[T], c: T) -> Result<T> {
        c1_value(&self.problem, x, c, self.kind, &self.params)
    }
}

/// Outcome of [`continuity_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// Largest change of the finite-difference gradient between adjacent grid points.
    pub max_jump: f64,
    /// Median of those changes.
    pub median_jump: f64,
    pub points_used: usize,
    pub passed: bool,
}

/// Walks `2n + 1` points at spacing `h` along each coordinate axis through
/// `center`, takes central-difference gradients of `F(·, c)` and flags a
/// jump when one adjacent change exceeds ten times the median change (plus a
/// small absolute floor). Points with non-finite `F` nearby are skipped.
pub fn continuity_probe<T: Real>(
    sf: &dyn SeparatingFunction<T>,
    center: &[T],
    c: T,
    h: f64,
    n: usize,
) -> Result<ContinuityReport> {
    let mut jumps = Vec::new();
    let mut gmax: f64 = 0.0;
    let mut used = 0;
    for axis in 0..center.len() {
        let mut prev: Option<Vec<f64>> = None;
        for k in -(n as i64)..=(n as i64) {
            let mut x = center.to_vec();
            x[axis] += T::lit(k as f64 * h);
            let g = fd_gradient(|z: &[T]| sf.eval(z, c).unwrap_or(T::nan()), &x, Some(T::lit(h * 1e-2)))
                .ok()
                .map(|g| g.iter().map(|v| v.as_f64()).collect::<Vec<f64>>())
                .filter(|g| g.iter().all(|v| v.is_finite()));
            match g {
                Some(g) => {
                    used += 1;
                    gmax = gmax.max(g.iter().map(|v| v.abs()).fold(0.0, f64::max));
                    if let Some(p) = &prev {
                        let d: f64 = p.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                        jumps.push(d);
                    }
                    prev = Some(g);
                }
                None => prev = None,
            }
        }
    }
    if jumps.is_empty() {
        return Err(Error::OutsideDomain);
    }
    let mut sorted = jumps.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median_jump = sorted[sorted.len() / 2];
    let max_jump = sorted[sorted.len() - 1];
    let floor = 1e-5 * (1.0 + gmax);
    Ok(ContinuityReport {
        max_jump,
        median_jump,
        points_used: used,
        passed: max_jump <= 10.0 * median_jump + floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::lookup;

    fn cfg() -> EstimatorConfig<f64> {
        EstimatorConfig::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eq1_estimate_matches_least_squares() {
        let p = lookup::<f64>("toy-eq-1").unwrap();
        let e = estimate_multipliers_soc(&p, &[1.0, 1.0], &cfg()).unwrap();
        // ‖(2, 2) + μ(1, 1)‖² is minimized at μ = −2.
        assert!(close(e.multipliers.eq[0], -2.0, 1e-12));
        assert!(e.is_reliable());
        assert!(close(e.hessian_min_eig, 4.0, 1e-12));
    }

    #[test]
    fn socp1_estimate_recovers_kkt_multiplier() {
        let p = lookup::<f64>("toy-socp-1").unwrap();
        let e = estimate_multipliers_soc(&p, &[1.0, 1.0], &cfg()).unwrap();
        let l = &e.multipliers.soc[0];
        assert!(close(l[0], -2.0, 1e-10) && close(l[1], 2.0, 1e-10), "{l:?}");
        assert!(p.kkt_residual(&[1.0, 1.0], &e.multipliers).unwrap() < 1e-6);
    }

    #[test]
    fn estimate_solves_its_normal_equations() {
        // Compare against a brute-force descent on the quadratic objective.
        let p = lookup::<f64>("toy-socp-2").unwrap();
        let x = [0.3, -0.7];
        let e = estimate_multipliers_soc(&p, &x, &cfg()).unwrap();
        let (a, btg) = assemble(&p, &x, &cfg()).unwrap();
        let q = |z: &[f64]| {
            let az = a.mul_vec(z);
            dot(z, &az) + 2.0 * dot(&btg, z)
        };
        let z = e.multipliers.flatten();
        let base = q(&z);
        for k in 0..z.len() {
            for s in [-1e-3, 1e-3] {
                let mut w = z.clone();
                w[k] += s;
                assert!(q(&w) > base);
            }
        }
        assert!(e.is_reliable());
    }

    #[test]
    fn unconstrained_problem_has_empty_estimate() {
        let p = ConstrainedProblem::new("free", 2, std::sync::Arc::new(|x: &[f64]| dot(x, x)));
        let e = estimate_multipliers_soc(&p, &[1.0, 2.0], &cfg()).unwrap();
        assert!(e.multipliers.flatten().is_empty());
        assert_eq!(e.subproblem_residual, 0.0);
    }

    #[test]
    fn sdp1_estimate() {
        let p = lookup::<f64>("toy-sdp-1").unwrap();
        let e = estimate_multipliers_sdp(&p, &[0.5, 1.0], &cfg()).unwrap();
        let l = e.multipliers.sdp.as_ref().unwrap();
        assert!(l.sub(&SymMat::from_diag(&[1.0, 0.0])).frobenius_norm() < 1e-10);
        assert!(e.is_reliable());
        assert!(estimate_multipliers_soc(&p, &[0.5, 1.0], &cfg()).is_err());
    }

    #[test]
    fn sdp_estimate_vanishes_at_stationary_interior_point() {
        // (x1 − 1)² + (x2 − 1)² with G = diag(x1 − 2, −x2): x = (1, 1) is interior and stationary.
        let mut p = lookup::<f64>("toy-sdp-1").unwrap();
        p.sdp.as_mut().unwrap().map = std::sync::Arc::new(|x: &[f64]| SymMat::from_diag(&[x[0] - 2.0, -x[1]]));
        let e = estimate_multipliers_sdp(&p, &[1.0, 1.0], &cfg()).unwrap();
        assert!(e.multipliers.sdp.unwrap().frobenius_norm() < 1e-14);
        assert!(e.multipliers.eq.is_empty());
    }

    #[test]
    fn ridge_term_shrinks_multipliers() {
        let p = lookup::<f64>("toy-socp-2").unwrap();
        let x = [2.5, 2.0];
        let small = estimate_multipliers_soc(&p, &x, &EstimatorConfig::new(1.0, 0.5).unwrap()).unwrap();
        let big = estimate_multipliers_soc(&p, &x, &EstimatorConfig::new(1.0, 50.0).unwrap()).unwrap();
        assert!(big.multipliers.norm_sq() < small.multipliers.norm_sq());
    }

    #[test]
    fn degenerate_point_is_reported() {
        let p = crate::problem::fixtures::degenerate_socp::<f64>();
        assert!(matches!(
            estimate_multipliers_soc(&p, &[1.0, 1.0], &cfg()),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let lin = lookup::<f64>("toy-lin-1").unwrap();
        assert!(estimate_multipliers_soc(&lin, &[0.0], &cfg()).is_err());
    }

    #[test]
    fn barrier_examples() {
        let p = lookup::<f64>("toy-socp-1").unwrap();
        let zero = MultiplierEstimate {
            multipliers: Multipliers::zeros_for(&p),
            subproblem_residual: 0.0,
            hessian_min_eig: 1.0,
            rhs_norm: 0.0,
        };
        let b = barrier_state_soc(&p, &[2.0, 0.0], 1.0, 2.0, &zero).unwrap();
        assert_eq!((b.a_val, b.b_val, b.p_val, b.q_val), (1.0, 1.0, 1.0, 1.0));
        assert!(b.inside_domain);

        let e = estimate_multipliers_soc(&p, &[1.0, 1.0], &cfg()).unwrap();
        let b = barrier_state_soc(&p, &[1.0, 1.0], 1.0, 2.0, &e).unwrap();
        assert!(close(b.p_val, 1.0 / 9.0, 1e-12));

        let q = lookup::<f64>("toy-eq-1").unwrap();
        let e = estimate_multipliers_soc(&q, &[0.0, 0.0], &cfg()).unwrap();
        let b = barrier_state_soc(&q, &[0.0, 0.0], 1.0, 2.0, &e).unwrap();
        assert!(close(b.b_val, -3.0, 1e-15) && !b.inside_domain);
        assert!(barrier_state_soc(&q, &[0.0, 0.0], 1.0, 1.5, &e).is_err());
    }

    #[test]
    fn kkt_fixed_value() {
        let p = lookup::<f64>("toy-socp-1").unwrap();
        for c in [0.5, 1.0, 10.0] {
            let v = c1_penalty_soc(&p, &[1.0, 1.0], c, 1.0, 2.0, &cfg()).unwrap();
            assert!(close(v, 2.0, 1e-8), "c = {c}: {v}");
        }
        let q = lookup::<f64>("toy-eq-1").unwrap();
        assert!(close(
            c1_penalty_soc(&q, &[1.0, 1.0], 3.0, 1.0, 2.0, &cfg()).unwrap(),
            2.0,
            1e-8
        ));
        let s = lookup::<f64>("toy-sdp-1").unwrap();
        for c in [1.0, 10.0] {
            let v = c1_penalty_sdp(&s, &[0.5, 1.0], c, 1.0, 1.0, &cfg()).unwrap();
            assert!(close(v, 0.25, 1e-8), "c = {c}: {v}");
        }
    }

    #[test]
    fn feasible_points_stay_below_objective() {
        let p = lookup::<f64>("toy-socp-1").unwrap();
        for c in [1.0, 100.0, 1e4] {
            assert!(c1_penalty_soc(&p, &[2.0, 0.0], c, 1.0, 2.0, &cfg()).unwrap() <= 8.0 + 1e-10);
        }
        let s = lookup::<f64>("toy-sdp-1").unwrap();
        let v = c1_penalty_sdp(&s, &[-1.0, 2.0], 5.0, 1.0, 1.0, &cfg()).unwrap();
        assert!(v <= s.f(&[-1.0, 2.0]) + 1e-10);
    }

    #[test]
    fn outside_domain_is_infinite() {
        let q = lookup::<f64>("toy-eq-1").unwrap();
        assert_eq!(
            c1_penalty_soc(&q, &[0.0, 0.0], 1.0, 1.0, 2.0, &cfg()).unwrap(),
            f64::INFINITY
        );
        let s = lookup::<f64>("toy-sdp-1").unwrap();
        assert_eq!(
            c1_penalty_sdp(&s, &[3.0, 1.0], 1.0, 1.0, 1.0, &cfg()).unwrap(),
            f64::INFINITY
        );
        let prm = SmoothPenaltyParams::soc_default();
        assert_eq!(phi_aux(&q, &[0.0, 0.0], 1.0, &prm), Err(Error::OutsideDomain));
    }

    #[test]
    fn phi_aux_representation() {
        let prm = SmoothPenaltyParams::soc_default();
        let p = lookup::<f64>("toy-socp-2").unwrap();
        assert!(phi_aux(&p, &[1.0, 1.0], 2.0, &prm).unwrap().abs() < 1e-12);
        assert!(phi_aux(&p, &[2.0, 0.0], 2.0, &prm).unwrap() <= 1e-15);
        for x in [[0.9, 1.3], [1.2, 0.5], [0.6, 0.9]] {
            let direct = c1_penalty_soc(&p, &x, 3.0, 1.0, 2.0, &cfg()).unwrap();
            let via = c1_penalty_via_phi(&p, &x, 3.0, &prm).unwrap();
            assert!(close(direct, via, 1e-9), "{x:?}: {direct} vs {via}");
        }
        let s = lookup::<f64>("toy-sdp-1").unwrap();
        let prm = SmoothPenaltyParams::sdp_default();
        let direct = c1_penalty_sdp(&s, &[0.7, 0.8], 2.0, 1.0, 1.0, &cfg()).unwrap();
        assert!(close(
            direct,
            c1_penalty_via_phi(&s, &[0.7, 0.8], 2.0, &prm).unwrap(),
            1e-9
        ));
    }

    #[test]
    fn phi_aux_matches_direct_minimization() {
        // y ∈ K − g with K = Q_2: parameterize z = g + y = (u + v, u − v), u, v ≥ 0.
        let p = lookup::<f64>("toy-socp-1").unwrap();
        let x = [1.2, 1.5];
        let c = 2.0;
        let prm = SmoothPenaltyParams::soc_default();
        let closed = phi_aux(&p, &x, c, &prm).unwrap();
        let pen = C1Penalty::soc(p.clone()).unwrap();
        let est = pen.estimate(&x).unwrap();
        let pv = pen.barrier(&x).unwrap().p_val;
        let lam = &est.multipliers.soc[0];
        let g = p.soc_values(&x).remove(0);
        let obj = |u: f64, v: f64| {
            let y = [u + v - g[0], u - v - g[1]];
            -pv * dot(lam, &y) + 0.5 * c * norm_sq(&y)
        };
        let (mut lo, mut hi) = ([0.0, 0.0], [5.0, 5.0]);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for _ in 0..30 {
            let n = 40;
            for i in 0..=n {
                for j in 0..=n {
                    let u = lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64;
                    let v = lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64;
                    let val = obj(u, v);
                    if val < best.0 {
                        best = (val, u, v);
                    }
                }
            }
            let w = [(hi[0] - lo[0]) / 8.0, (hi[1] - lo[1]) / 8.0];
            lo = [(best.1 - w[0]).max(0.0), (best.2 - w[1]).max(0.0)];
            hi = [best.1 + w[0], best.2 + w[1]];
        }
        assert!((closed - best.0).abs() <= 1e-6, "{closed} vs {}", best.0);
    }

    #[test]
    fn monotone_in_c_and_lower_bound() {
        let p = lookup::<f64>("toy-socp-2").unwrap();
        let x = [1.4, 0.9];
        let mut prev = f64::NEG_INFINITY;
        for c in [0.1, 0.5, 1.0, 5.0, 50.0] {
            let v = c1_penalty_soc(&p, &x, c, 1.0, 2.0, &cfg()).unwrap();
            assert!(v >= prev - 1e-10);
            assert!(v >= p.f(&x) - 1.0 / c - 1e-10);
            prev = v;
        }
    }

    #[test]
    fn separating_function_wrapper() {
        let pen = C1Penalty::soc(lookup::<f64>("toy-socp-1").unwrap()).unwrap();
        assert_eq!(pen.label(), "c1-socp");
        assert!(close(pen.eval(&[1.0, 1.0], 4.0).unwrap(), 2.0, 1e-8));
        assert!(C1Penalty::sdp(lookup::<f64>("toy-socp-1").unwrap()).is_err());
        let sdp = C1Penalty::sdp(lookup::<f64>("toy-sdp-1").unwrap()).unwrap();
        assert_eq!(sdp.label(), "c1-sdp");
    }

    #[test]
    fn f32_kkt_fixed_value() {
        let p = lookup::<f32>("toy-socp-1").unwrap();
        let v = c1_penalty_soc(&p, &[1.0, 1.0], 1.0, 1.0, 2.0, &EstimatorConfig::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-4);
    }

    #[test]
    fn continuity_probe_separates_smooth_from_kinked() {
        let pen = C1Penalty::soc(lookup::<f64>("toy-socp-1").unwrap()).unwrap();
        let r = continuity_probe(&pen, &[1.0, 1.0], 2.0, 1e-3, 5).unwrap();
        assert!(r.passed, "{r:?}");
        let lin = crate::penalties::LinearPenalty::new(lookup::<f64>("toy-socp-1").unwrap());
        let r = continuity_probe(&lin, &[1.0, 1.0], 2.0, 1e-3, 5).unwrap();
        assert!(!r.passed, "{r:?}");
    }
}
